use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{read_file, write_file};
use crate::error::{Error, Result};
use crate::model::{Point, Rgba, Stroke, StrokeSet};

pub const FORMAT_VERSION: u64 = 1;

#[derive(Serialize, Deserialize)]
struct Canvas {
    width: usize,
    height: usize,
}

#[derive(Serialize, Deserialize)]
struct StrokeRecord {
    points: Vec<[f64; 2]>,
    color: [f64; 4],
    width: f64,
}

#[derive(Serialize, Deserialize)]
struct Document {
    version: u64,
    canvas: Canvas,
    strokes: Vec<StrokeRecord>,
}

pub fn to_json_string(s: &StrokeSet) -> Result<String> {
    let doc = Document {
        version: FORMAT_VERSION,
        canvas: Canvas {
            width: s.canvas_width,
            height: s.canvas_height,
        },
        strokes: s
            .strokes
            .iter()
            .map(|st| StrokeRecord {
                points: st.points.iter().map(|p| [p.x, p.y]).collect(),
                color: st.color.to_array(),
                width: st.width,
            })
            .collect(),
    };
    Ok(serde_json::to_string(&doc)?)
}

pub fn parse_json(text: &str) -> Result<StrokeSet> {
    let value: Value = serde_json::from_str(text)?;
    match value.get("version") {
        Some(Value::Number(n)) if n.as_u64() == Some(FORMAT_VERSION) => {}
        Some(Value::Number(n)) => match n.as_u64() {
            Some(v) => return Err(Error::Version(v)),
            None => return Err(Error::Schema(format!("version must be an integer, got {n}"))),
        },
        Some(other) => return Err(Error::Schema(format!("version must be an integer, got {other}"))),
        None => return Err(Error::Schema("missing \"version\"".into())),
    }
    let doc: Document = serde_json::from_value(value).map_err(|e| Error::Schema(e.to_string()))?;
    let strokes = doc
        .strokes
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let [p1, p2, p3]: [[f64; 2]; 3] = r.points.as_slice().try_into().map_err(|_| {
                Error::Schema(format!("stroke {i} has {} control points, expected 3", r.points.len()))
            })?;
            Ok(Stroke {
                points: [p1, p2, p3].map(|[x, y]| Point::new(x, y)),
                color: Rgba::from_array(r.color),
                width: r.width,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StrokeSet::with_strokes(doc.canvas.width, doc.canvas.height, strokes))
}

pub fn export_json(s: &StrokeSet, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), to_json_string(s)?.as_bytes())
}

pub fn import_json(path: impl AsRef<Path>) -> Result<StrokeSet> {
    let bytes = read_file(path.as_ref())?;
    let text = String::from_utf8(bytes).map_err(|e| Error::Schema(e.to_string()))?;
    parse_json(&text)
}
