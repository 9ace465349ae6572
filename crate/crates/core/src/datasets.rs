//! Synthetic trajectory data on a triangulated map with holes, and the
//! JSON-lines dataset format.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::complex::{build_complex, ComplexRecord, SimplicialComplex2};
use crate::error::{dim_mismatch, Error, Result};
use crate::hodge::EdgeFlow;
use crate::rng;

/// A rectangle of grid cells; `row`/`col` address its lower-left cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HoleRect {
    pub row: usize,
    pub col: usize,
    #[serde(default = "one")]
    pub height: usize,
    #[serde(default = "one")]
    pub width: usize,
}

fn one() -> usize {
    1
}

impl HoleRect {
    pub fn cell(row: usize, col: usize) -> Self {
        Self {
            row,
            col,
            height: 1,
            width: 1,
        }
    }

    fn contains_cell(&self, r: usize, c: usize) -> bool {
        (self.row..self.row + self.height).contains(&r) && (self.col..self.col + self.width).contains(&c)
    }

    /// Vertex strictly inside the rectangle.
    fn interior_vertex(&self, r: usize, c: usize) -> bool {
        r > self.row && r < self.row + self.height && c > self.col && c < self.col + self.width
    }

    fn overlaps(&self, o: &HoleRect) -> bool {
        self.row < o.row + o.height
            && o.row < self.row + self.height
            && self.col < o.col + o.width
            && o.col < self.col + self.width
    }
}

/// A `rows × cols` lattice of vertices, right-triangulated, with holes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriangularGridSpec {
    pub rows: usize,
    pub cols: usize,
    pub holes: Vec<HoleRect>,
    /// When set, each cell's diagonal direction is drawn from this seed;
    /// otherwise every diagonal runs from lower left to upper right.
    #[serde(default)]
    pub diagonal_seed: Option<u64>,
}

impl TriangularGridSpec {
    /// 8×8 vertices with two single-cell holes side by side.
    ///
    /// Diagonals are randomized: with uniform diagonals the half-turn about
    /// the grid center maps the map onto itself and swaps the two classes.
    pub fn desk_default() -> Self {
        Self {
            rows: 8,
            cols: 8,
            holes: vec![HoleRect::cell(3, 2), HoleRect::cell(3, 4)],
            diagonal_seed: Some(7),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.rows < 2 || self.cols < 2 {
            return Err(Error::InvalidHolePlacement(format!(
                "grid {}x{} is too small",
                self.rows, self.cols
            )));
        }
        let (cell_rows, cell_cols) = (self.rows - 1, self.cols - 1);
        for (k, h) in self.holes.iter().enumerate() {
            if h.height == 0
                || h.width == 0
                || h.row == 0
                || h.col == 0
                || h.row + h.height >= cell_rows
                || h.col + h.width >= cell_cols
            {
                return Err(Error::InvalidHolePlacement(format!(
                    "hole {h:?} is not strictly inside the {cell_rows}x{cell_cols} cell grid"
                )));
            }
            if self.holes[..k].iter().any(|o| o.overlaps(h)) {
                return Err(Error::InvalidHolePlacement(format!("hole {h:?} overlaps another")));
            }
        }
        Ok(())
    }
}

/// The triangulated map plus the geometry needed to route trajectories.
#[derive(Clone, Debug)]
pub struct TrajectoryMap {
    pub spec: TriangularGridSpec,
    pub complex: SimplicialComplex2,
    /// `(row, col)` of each vertex.
    pub coords: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

/// Right-triangulated grid with the hole rectangles cut out.
///
/// Triangles inside a hole are removed together with the edges and
/// vertices strictly inside it; the hole boundary stays.
pub fn build_two_hole_map(spec: &TriangularGridSpec) -> Result<TrajectoryMap> {
    spec.validate()?;
    let in_hole_cell = |r: usize, c: usize| spec.holes.iter().any(|h| h.contains_cell(r, c));
    let interior = |r: usize, c: usize| spec.holes.iter().any(|h| h.interior_vertex(r, c));

    let mut id = vec![usize::MAX; spec.rows * spec.cols];
    let mut coords = Vec::new();
    for r in 0..spec.rows {
        for c in 0..spec.cols {
            if !interior(r, c) {
                id[r * spec.cols + c] = coords.len();
                coords.push((r, c));
            }
        }
    }
    let v = |r: usize, c: usize| id[r * spec.cols + c];

    let mut edges = Vec::new();
    let mut triangles = Vec::new();
    // an axis edge survives if at least one adjacent cell is not a hole cell
    let cell_ok = |r: isize, c: isize| -> bool {
        r >= 0
            && c >= 0
            && (r as usize) < spec.rows - 1
            && (c as usize) < spec.cols - 1
            && !in_hole_cell(r as usize, c as usize)
    };
    for r in 0..spec.rows {
        for c in 0..spec.cols {
            let (ri, ci) = (r as isize, c as isize);
            if c + 1 < spec.cols && (cell_ok(ri, ci) || cell_ok(ri - 1, ci)) {
                edges.push([v(r, c), v(r, c + 1)]);
            }
            if r + 1 < spec.rows && (cell_ok(ri, ci) || cell_ok(ri, ci - 1)) {
                edges.push([v(r, c), v(r + 1, c)]);
            }
            if r + 1 < spec.rows && c + 1 < spec.cols && cell_ok(ri, ci) {
                let flip = spec
                    .diagonal_seed
                    .is_some_and(|s| rng::derive_seed(s, &[r as u64, c as u64]) & 1 == 1);
                let (a, b, cc, d) = (v(r, c), v(r, c + 1), v(r + 1, c), v(r + 1, c + 1));
                if flip {
                    edges.push([b, cc]);
                    triangles.push([a, b, cc]);
                    triangles.push([b, cc, d]);
                } else {
                    edges.push([a, d]);
                    triangles.push([a, b, d]);
                    triangles.push([a, cc, d]);
                }
            }
        }
    }
    let complex = build_complex(coords.len(), &edges, &triangles)?;
    let adjacency = complex.adjacency();
    Ok(TrajectoryMap {
        spec: spec.clone(),
        complex,
        coords,
        adjacency,
    })
}

/// Dataset split a flow belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledFlow {
    pub flow: EdgeFlow,
    pub label: usize,
    pub split: Split,
}

impl TrajectoryMap {
    fn vertices_where(&self, pred: impl Fn(usize, usize) -> bool) -> Vec<usize> {
        self.coords
            .iter()
            .enumerate()
            .filter(|(_, &(r, c))| pred(r, c))
            .map(|(i, _)| i)
            .collect()
    }

    fn hole_span(&self) -> Option<(usize, usize, usize, usize)> {
        let h = &self.spec.holes;
        if h.is_empty() {
            return None;
        }
        let lo_r = h.iter().map(|h| h.row).min()?;
        let hi_r = h.iter().map(|h| h.row + h.height).max()?;
        let lo_c = h.iter().map(|h| h.col).min()?;
        let hi_c = h.iter().map(|h| h.col + h.width).max()?;
        Some((lo_r, hi_r, lo_c, hi_c))
    }

    /// Shortest path with ties broken at random.
    fn random_shortest_path<R: Rng + ?Sized>(&self, from: usize, to: usize, rng: &mut R) -> Result<Vec<usize>> {
        let n = self.coords.len();
        let mut parent = vec![usize::MAX; n];
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([from]);
        seen[from] = true;
        while let Some(u) = queue.pop_front() {
            if u == to {
                break;
            }
            let mut nbrs = self.adjacency[u].clone();
            nbrs.shuffle(rng);
            for w in nbrs {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = u;
                    queue.push_back(w);
                }
            }
        }
        if !seen[to] {
            return Err(Error::NoPath { from, to });
        }
        let mut path = vec![to];
        while *path.last().unwrap() != from {
            path.push(parent[*path.last().unwrap()]);
        }
        path.reverse();
        Ok(path)
    }

    /// Edge flow of a vertex walk: `+1` along an edge's orientation, `-1` against.
    pub fn path_flow(&self, path: &[usize]) -> Result<EdgeFlow> {
        let mut x = vec![0.0; self.complex.num_edges()];
        for w in path.windows(2) {
            let e = self
                .complex
                .edge_index(w[0], w[1])
                .ok_or(Error::NoPath { from: w[0], to: w[1] })?;
            x[e] += if w[0] < w[1] { 1.0 } else { -1.0 };
        }
        Ok(EdgeFlow(x))
    }
}

/// Removes cycles from a walk, keeping a simple path with the same ends.
fn loop_erase(walk: &[usize]) -> Vec<usize> {
    let mut path: Vec<usize> = Vec::with_capacity(walk.len());
    for &v in walk {
        if let Some(pos) = path.iter().position(|&u| u == v) {
            path.truncate(pos + 1);
        } else {
            path.push(v);
        }
    }
    path
}

/// One trajectory from the region below the holes to the region above them.
///
/// Class 0 climbs along the left side of the hole block, class 1 along its
/// right side: the walk goes from a random start to the bottom corner of
/// that side, straight up the side, then to a random end.
pub fn generate_trajectory<R: Rng + ?Sized>(map: &TrajectoryMap, class_id: usize, rng: &mut R) -> Result<LabeledFlow> {
    let (lo_r, hi_r, lo_c, hi_c) = map
        .hole_span()
        .ok_or_else(|| Error::InvalidHolePlacement("trajectories need at least one hole".into()))?;
    let side = match class_id {
        0 => lo_c,
        1 => hi_c,
        other => return Err(Error::UnknownLabel(other as i64)),
    };
    let starts = map.vertices_where(|r, _| r < lo_r);
    let ends = map.vertices_where(|r, _| r > hi_r);
    let entry = map.vertices_where(|r, c| r == lo_r && c == side);
    let exit = map.vertices_where(|r, c| r == hi_r && c == side);
    if starts.is_empty() || ends.is_empty() || entry.is_empty() || exit.is_empty() {
        return Err(Error::InvalidHolePlacement("no room for start, side or end".into()));
    }
    let start = *starts.choose(rng).unwrap();
    let end = *ends.choose(rng).unwrap();

    let mut stops = vec![start];
    // occasional detour through a random neighbor of the start
    if rng.gen_bool(0.5) {
        let nb = &map.adjacency[start];
        stops.push(*nb.choose(rng).unwrap());
    }
    stops.extend([entry[0], exit[0], end]);

    let mut walk = vec![start];
    for leg in stops.windows(2) {
        let p = map.random_shortest_path(leg[0], leg[1], rng)?;
        walk.extend_from_slice(&p[1..]);
    }
    let path = loop_erase(&walk);
    Ok(LabeledFlow {
        flow: map.path_flow(&path)?,
        label: class_id,
        split: Split::Train,
    })
}

/// A complex and labeled flows on it.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub complex: SimplicialComplex2,
    pub flows: Vec<LabeledFlow>,
}

impl Dataset {
    pub fn split(&self, s: Split) -> Vec<&LabeledFlow> {
        self.flows.iter().filter(|f| f.split == s).collect()
    }

    pub fn count(&self, s: Split) -> usize {
        self.flows.iter().filter(|f| f.split == s).count()
    }
}

/// Class-balanced train/val/test splits, each from its own random stream.
pub fn generate_dataset(
    map: &TrajectoryMap,
    n_train: usize,
    n_val: usize,
    n_test: usize,
    seed: u64,
) -> Result<Dataset> {
    let mut flows = Vec::with_capacity(n_train + n_val + n_test);
    for (split, n) in [(Split::Train, n_train), (Split::Val, n_val), (Split::Test, n_test)] {
        if n == 0 {
            continue;
        }
        if n < 2 || n % 2 != 0 {
            return Err(Error::InvalidConfig(format!(
                "split {} size {n} must be even and at least 2",
                split.name()
            )));
        }
        let mut r = rng::stream(seed, &[rng::tag("dataset"), rng::tag(split.name())]);
        let mut labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
        labels.shuffle(&mut r);
        for label in labels {
            let mut f = generate_trajectory(map, label, &mut r)?;
            f.split = split;
            flows.push(f);
        }
    }
    Ok(Dataset {
        complex: map.complex.clone(),
        flows,
    })
}

/// 17 significant digits, which round-trips every finite `f64`.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn format_f64_array(values: &[f64]) -> String {
    let mut s = String::with_capacity(values.len() * 24 + 2);
    s.push('[');
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        s.push_str(&format_f64(*v));
    }
    s.push(']');
    s
}

/// JSON-lines: the complex first, then one `{"flow","label","split"}` per flow.
pub fn dataset_to_jsonl(ds: &Dataset) -> String {
    let mut out = ds.complex.to_json();
    out.push('\n');
    for f in &ds.flows {
        let _ = writeln!(
            out,
            "{{\"flow\":{},\"label\":{},\"split\":\"{}\"}}",
            format_f64_array(&f.flow),
            f.label,
            f.split.name()
        );
    }
    out
}

#[derive(Deserialize)]
struct FlowRecord {
    flow: Vec<f64>,
    label: i64,
    split: Split,
}

pub fn dataset_from_jsonl(text: &str) -> Result<Dataset> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (first, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty dataset file".into(),
    })?;
    let rec: ComplexRecord = serde_json::from_str(header).map_err(|e| Error::Parse {
        line: first + 1,
        message: e.to_string(),
    })?;
    let complex: SimplicialComplex2 = rec.try_into()?;
    let mut flows = Vec::new();
    for (i, line) in lines {
        let rec: FlowRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        if rec.flow.len() != complex.num_edges() {
            return Err(dim_mismatch(format!(
                "line {}: flow of length {} on {} edges",
                i + 1,
                rec.flow.len(),
                complex.num_edges()
            )));
        }
        if !(0..=1).contains(&rec.label) {
            return Err(Error::UnknownLabel(rec.label));
        }
        flows.push(LabeledFlow {
            flow: EdgeFlow(rec.flow),
            label: rec.label as usize,
            split: rec.split,
        });
    }
    Ok(Dataset { complex, flows })
}

/// Reads a dataset file in the JSON-lines format above.
pub fn load_external_flows(path: impl AsRef<Path>) -> Result<Dataset> {
    dataset_from_jsonl(&std::fs::read_to_string(path)?)
}

pub fn save_dataset(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, dataset_to_jsonl(ds))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loop_erasure_keeps_ends() {
        assert_eq!(loop_erase(&[0, 1, 2, 1, 3]), vec![0, 1, 3]);
        assert_eq!(loop_erase(&[0, 1, 2, 0, 4]), vec![0, 4]);
    }

    #[test]
    fn hole_validation() {
        let bad = TriangularGridSpec {
            rows: 6,
            cols: 6,
            holes: vec![HoleRect::cell(0, 2)],
            diagonal_seed: None,
        };
        assert!(matches!(build_two_hole_map(&bad), Err(Error::InvalidHolePlacement(_))));
        let overlap = TriangularGridSpec {
            rows: 8,
            cols: 8,
            holes: vec![
                HoleRect {
                    row: 2,
                    col: 2,
                    height: 2,
                    width: 2,
                },
                HoleRect::cell(3, 3),
            ],
            diagonal_seed: None,
        };
        assert!(matches!(
            build_two_hole_map(&overlap),
            Err(Error::InvalidHolePlacement(_))
        ));
    }

    #[test]
    fn grid_counts() {
        let map = build_two_hole_map(&TriangularGridSpec {
            rows: 3,
            cols: 3,
            holes: vec![],
            diagonal_seed: None,
        })
        .unwrap();
        assert_eq!(map.complex.num_vertices(), 9);
        assert_eq!(map.complex.num_edges(), 6 + 6 + 4);
        assert_eq!(map.complex.num_triangles(), 8);
    }

    #[test]
    fn larger_hole_drops_interior() {
        let map = build_two_hole_map(&TriangularGridSpec {
            rows: 6,
            cols: 6,
            holes: vec![HoleRect {
                row: 1,
                col: 1,
                height: 2,
                width: 2,
            }],
            diagonal_seed: None,
        })
        .unwrap();
        assert_eq!(map.complex.num_vertices(), 35);
        // 60 axis edges minus 4 interior, 25 diagonals minus 4 hole cells
        assert_eq!(map.complex.num_edges(), 56 + 21);
    }

    #[test]
    fn f64_formatting_round_trips() {
        for v in [0.0, -1.0, 1.0 / 3.0, 1e-300, 123456.789] {
            let s = format_f64(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
        assert_eq!(format_f64(-1.0), "-1.0000000000000000e0");
    }

    #[test]
    fn malformed_records() {
        let header = r#"{"num_vertices":3,"edges":[[0,1],[0,2],[1,2]],"triangles":[]}"#;
        let text = format!("{header}\n{{\"flow\":[1,0,0],\"label\":0,\"split\":\"train\"}}\nnot json\n");
        assert!(matches!(dataset_from_jsonl(&text), Err(Error::Parse { line: 3, .. })));
        let text = format!("{header}\n{{\"flow\":[1,0],\"label\":0,\"split\":\"train\"}}\n");
        assert!(matches!(dataset_from_jsonl(&text), Err(Error::DimensionMismatch(_))));
        let text = format!("{header}\n{{\"flow\":[1,0,0],\"label\":4,\"split\":\"test\"}}\n");
        assert!(matches!(dataset_from_jsonl(&text), Err(Error::UnknownLabel(4))));
    }
}
