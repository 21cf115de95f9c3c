use std::fmt::Write as _;
use std::path::Path;

use super::{read_file, write_file};
use crate::error::{Error, Result};
use crate::model::{Point, Rgba, Stroke, StrokeSet};

fn num(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

/// `#RRGGBB` when every channel is an exact multiple of 1/255, otherwise
/// percentages precise enough that re-rendering is unaffected.
fn color_attr(c: Rgba) -> String {
    let rgb = c.rgb();
    let bytes = rgb.map(|v| (v * 255.0).round());
    if rgb.iter().zip(&bytes).all(|(v, b)| (0.0..=255.0).contains(b) && b / 255.0 == *v) {
        format!("#{:02X}{:02X}{:02X}", bytes[0] as u8, bytes[1] as u8, bytes[2] as u8)
    } else {
        format!("rgb({:.4}%,{:.4}%,{:.4}%)", rgb[0] * 100.0, rgb[1] * 100.0, rgb[2] * 100.0)
    }
}

pub fn to_svg_string(s: &StrokeSet) -> String {
    let (w, h) = (s.canvas_width, s.canvas_height);
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
    );
    for st in &s.strokes {
        let [p1, p2, p3] = st.points;
        let _ = writeln!(
            out,
            "  <path d=\"M {} {} Q {} {} {} {}\" fill=\"none\" stroke=\"{}\" stroke-opacity=\"{}\" stroke-width=\"{}\" stroke-linecap=\"round\"/>",
            num(p1.x),
            num(p1.y),
            num(p2.x),
            num(p2.y),
            num(p3.x),
            num(p3.y),
            color_attr(st.color),
            num(st.color.a),
            num(st.width),
        );
    }
    out.push_str("</svg>\n");
    out
}

pub fn export_svg(s: &StrokeSet, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), to_svg_string(s).as_bytes())
}

pub fn import_svg(path: impl AsRef<Path>) -> Result<StrokeSet> {
    let bytes = read_file(path.as_ref())?;
    let text = String::from_utf8(bytes).map_err(|e| Error::Svg(e.to_string()))?;
    parse_svg(&text)
}

fn canvas_size(root: roxmltree::Node, name: &str) -> Result<usize> {
    let raw = root
        .attribute(name)
        .ok_or_else(|| Error::Svg(format!("<svg> lacks a {name} attribute")))?;
    let v: f64 = raw
        .trim()
        .trim_end_matches("px")
        .parse()
        .map_err(|_| Error::Svg(format!("bad {name} '{raw}'")))?;
    if !(v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64) {
        return Err(Error::Svg(format!("{name} must be a whole number of pixels, got '{raw}'")));
    }
    Ok(v as usize)
}

/// Parses the SVG subset written by [`to_svg_string`].
pub fn parse_svg(text: &str) -> Result<StrokeSet> {
    let doc = roxmltree::Document::parse(text).map_err(|e| Error::Svg(e.to_string()))?;
    let root = doc.root_element();
    if root.tag_name().name() != "svg" {
        return Err(Error::UnsupportedElement(root.tag_name().name().into()));
    }
    let (w, h) = (canvas_size(root, "width")?, canvas_size(root, "height")?);
    let mut strokes = Vec::new();
    for node in root.children().filter(|n| n.is_element()) {
        let name = node.tag_name().name();
        if name != "path" {
            return Err(Error::UnsupportedElement(name.into()));
        }
        strokes.push(parse_path_element(node)?);
    }
    Ok(StrokeSet::with_strokes(w, h, strokes))
}

fn number_attr(node: roxmltree::Node, name: &str, default: f64) -> Result<f64> {
    match node.attribute(name) {
        None => Ok(default),
        Some(raw) => raw
            .trim()
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| Error::Svg(format!("bad {name} '{raw}'"))),
    }
}

fn parse_path_element(node: roxmltree::Node) -> Result<Stroke> {
    let d = node
        .attribute("d")
        .ok_or_else(|| Error::Svg("<path> lacks a d attribute".into()))?;
    let points = parse_path_data(d)?;
    let [r, g, b] = match node.attribute("stroke") {
        Some(raw) => parse_color(raw)?,
        None => [0.0; 3],
    };
    let a = number_attr(node, "stroke-opacity", 1.0)?;
    let width = number_attr(node, "stroke-width", 1.0)?;
    Ok(Stroke {
        points,
        color: Rgba::new(r, g, b, a),
        width,
    })
}

fn parse_color(raw: &str) -> Result<[f64; 3]> {
    let bad = || Error::Svg(format!("unsupported stroke color '{raw}'"));
    let s = raw.trim();
    if let Some(hex) = s.strip_prefix('#') {
        let digits: Vec<u8> = hex
            .chars()
            .map(|c| c.to_digit(16).map(|d| d as u8))
            .collect::<Option<_>>()
            .ok_or_else(bad)?;
        let bytes = match digits.len() {
            6 => [0, 2, 4].map(|i| digits[i] * 16 + digits[i + 1]),
            3 => [0, 1, 2].map(|i| digits[i] * 17),
            _ => return Err(bad()),
        };
        return Ok(bytes.map(|b| b as f64 / 255.0));
    }
    let inner = s
        .strip_prefix("rgb(")
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(bad)?;
    let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let mut out = [0.0; 3];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = match p.strip_suffix('%') {
            Some(pct) => pct.trim().parse::<f64>().map_err(|_| bad())? / 100.0,
            None => p.parse::<f64>().map_err(|_| bad())? / 255.0,
        };
        if !o.is_finite() {
            return Err(bad());
        }
    }
    Ok(out)
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Lexer<'_> {
    fn skip_separators(&mut self) {
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_whitespace() || self.src[self.pos] == b',') {
            self.pos += 1;
        }
    }

    fn at_end(&mut self) -> bool {
        self.skip_separators();
        self.pos >= self.src.len()
    }

    fn command(&mut self, want: u8) -> Result<()> {
        self.skip_separators();
        let offset = self.pos;
        match self.src.get(offset) {
            Some(&c) if c == want => {
                self.pos += 1;
                Ok(())
            }
            Some(&c) if c.is_ascii_alphabetic() => Err(Error::UnsupportedCommand {
                command: c as char,
                offset,
            }),
            Some(_) => Err(Error::PathSyntax {
                offset,
                message: format!("expected command '{}'", want as char),
            }),
            None => Err(Error::PathSyntax {
                offset,
                message: format!("unexpected end, expected command '{}'", want as char),
            }),
        }
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_separators();
        let start = self.pos;
        let src = self.src;
        let mut i = start;
        let digits = |i: &mut usize| {
            let from = *i;
            while *i < src.len() && src[*i].is_ascii_digit() {
                *i += 1;
            }
            *i > from
        };
        if i < src.len() && (src[i] == b'+' || src[i] == b'-') {
            i += 1;
        }
        let mut any = digits(&mut i);
        if i < src.len() && src[i] == b'.' {
            i += 1;
            any |= digits(&mut i);
        }
        if !any {
            return Err(match src.get(start) {
                Some(&c) if c.is_ascii_alphabetic() => Error::UnsupportedCommand {
                    command: c as char,
                    offset: start,
                },
                Some(_) => Error::PathSyntax {
                    offset: start,
                    message: "expected a number".into(),
                },
                None => Error::PathSyntax {
                    offset: start,
                    message: "unexpected end, expected a number".into(),
                },
            });
        }
        if i < src.len() && (src[i] == b'e' || src[i] == b'E') {
            let mut j = i + 1;
            if j < src.len() && (src[j] == b'+' || src[j] == b'-') {
                j += 1;
            }
            if digits(&mut j) {
                i = j;
            }
        }
        self.pos = i;
        let text = std::str::from_utf8(&src[start..i]).expect("ascii");
        text.parse().map_err(|_| Error::PathSyntax {
            offset: start,
            message: format!("invalid number '{text}'"),
        })
    }

    fn point(&mut self) -> Result<Point> {
        let x = self.number()?;
        let y = self.number()?;
        Ok(Point::new(x, y))
    }
}

/// Parses exactly `M x y Q x y x y` (absolute).
fn parse_path_data(d: &str) -> Result<[Point; 3]> {
    let mut lx = Lexer { src: d.as_bytes(), pos: 0 };
    lx.command(b'M')?;
    let p1 = lx.point()?;
    lx.command(b'Q')?;
    let p2 = lx.point()?;
    let p3 = lx.point()?;
    if !lx.at_end() {
        let offset = lx.pos;
        return Err(match d.as_bytes()[offset] {
            c if c.is_ascii_alphabetic() => Error::UnsupportedCommand {
                command: c as char,
                offset,
            },
            _ => Error::PathSyntax {
                offset,
                message: "expected end of path data".into(),
            },
        });
    }
    Ok([p1, p2, p3])
}
