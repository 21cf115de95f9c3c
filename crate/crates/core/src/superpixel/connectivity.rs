use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use super::LabelMap;

/// 4-connected components of equal labels: component id per pixel (ids in
/// row-major order of first pixel) and the component count.
pub(crate) fn components(lm: &LabelMap) -> (Vec<usize>, usize) {
    let (w, h) = (lm.width, lm.height);
    let mut comp = vec![usize::MAX; w * h];
    let mut count = 0;
    let mut stack = Vec::new();
    for start in 0..w * h {
        if comp[start] != usize::MAX {
            continue;
        }
        let label = lm.labels[start];
        comp[start] = count;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            let mut visit = |j: usize| {
                if comp[j] == usize::MAX && lm.labels[j] == label {
                    comp[j] = count;
                    stack.push(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        count += 1;
    }
    (comp, count)
}

/// Keeps the largest 4-connected component of every label (lowest
/// component id on ties) and merges every other component into its largest
/// neighbor, smallest first. Labels are renumbered densely by first pixel in
/// row-major order, so the region count equals the number of non-empty
/// labels.
pub fn enforce_connectivity(lm: &LabelMap) -> LabelMap {
    let (w, h) = (lm.width, lm.height);
    let n = w * h;
    if n == 0 {
        return lm.clone();
    }
    let (comp, count) = components(lm);

    let mut size = vec![0usize; count];
    let mut label_of = vec![0usize; count];
    for (&c, &l) in comp.iter().zip(&lm.labels) {
        size[c] += 1;
        label_of[c] = l;
    }
    let mut main: BTreeMap<usize, usize> = BTreeMap::new();
    for c in 0..count {
        let best = main.entry(label_of[c]).or_insert(c);
        if size[c] > size[*best] {
            *best = c;
        }
    }
    let mut orphan = vec![true; count];
    for &c in main.values() {
        orphan[c] = false;
    }
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); count];
    for y in 0..h {
        for x in 0..w {
            let a = comp[y * w + x];
            if x + 1 < w {
                let b = comp[y * w + x + 1];
                if a != b {
                    adj[a].insert(b);
                    adj[b].insert(a);
                }
            }
            if y + 1 < h {
                let b = comp[(y + 1) * w + x];
                if a != b {
                    adj[a].insert(b);
                    adj[b].insert(a);
                }
            }
        }
    }

    let mut parent: Vec<usize> = (0..count).collect();
    let mut alive = vec![true; count];
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> = (0..count)
        .filter(|&c| orphan[c])
        .map(|c| Reverse((size[c], c)))
        .collect();
    while let Some(Reverse((s, c))) = heap.pop() {
        if !alive[c] || size[c] != s {
            continue;
        }
        // largest neighbor, lowest id on ties
        let Some(&target) = adj[c]
            .iter()
            .max_by(|&&a, &&b| size[a].cmp(&size[b]).then(b.cmp(&a)))
        else {
            continue;
        };
        alive[c] = false;
        parent[c] = target;
        size[target] += s;
        let neighbors = std::mem::take(&mut adj[c]);
        for nb in neighbors {
            adj[nb].remove(&c);
            if nb != target {
                adj[nb].insert(target);
                adj[target].insert(nb);
            }
        }
        if orphan[target] {
            heap.push(Reverse((size[target], target)));
        }
    }

    let root = |mut c: usize| {
        while parent[c] != c {
            c = parent[c];
        }
        c
    };
    let mut relabel = vec![usize::MAX; count];
    let mut next = 0;
    let labels = comp
        .iter()
        .map(|&c| {
            let r = root(c);
            if relabel[r] == usize::MAX {
                relabel[r] = next;
                next += 1;
            }
            relabel[r]
        })
        .collect();
    LabelMap {
        width: w,
        height: h,
        labels,
        region_count: next,
    }
}
