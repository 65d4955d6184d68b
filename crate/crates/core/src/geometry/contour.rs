//! Marching squares with linear edge interpolation.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{Point, Window};

/// `nx × ny` sample nodes spanning a window, corners included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub window: Window,
    pub nx: usize,
    pub ny: usize,
}

impl Grid {
    pub fn new(window: Window, nx: usize, ny: usize) -> Self {
        assert!(nx >= 2 && ny >= 2, "grid needs at least 2×2 nodes");
        Self { window, nx, ny }
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.window.x_max / (self.nx - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        2.0 * self.window.y_max / (self.ny - 1) as f64
    }

    pub fn cell_diagonal(&self) -> f64 {
        self.dx().hypot(self.dy())
    }

    pub fn node(&self, i: usize, j: usize) -> Point {
        // symmetric formula so that mirrored nodes are exact negatives
        let x = self.window.x_max * (2.0 * i as f64 - (self.nx - 1) as f64) / (self.nx - 1) as f64;
        let y = self.window.y_max * (2.0 * j as f64 - (self.ny - 1) as f64) / (self.ny - 1) as f64;
        [x, y]
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major (`j` outer) node values, evaluated in parallel.
    pub fn sample<F>(&self, f: F) -> Result<Vec<f64>>
    where
        F: Fn(Point) -> Result<f64> + Sync,
    {
        let nodes: Vec<Point> = (0..self.len()).map(|k| self.node(k % self.nx, k / self.nx)).collect();
        par_eval(&nodes, f)
    }

    /// Whether the closed cell with lower-left node `(i, j)` contains `p`.
    pub fn cell_contains(&self, i: usize, j: usize, p: Point) -> bool {
        let a = self.node(i, j);
        let b = self.node(i + 1, j + 1);
        a[0] <= p[0] && p[0] <= b[0] && a[1] <= p[1] && p[1] <= b[1]
    }
}

/// Parallel map that reports the first error in input order.
pub(crate) fn par_eval<T, F>(points: &[Point], f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(Point) -> Result<T> + Sync,
{
    let out: Vec<Result<T>> = points.par_iter().map(|&p| f(p)).collect();
    out.into_iter().collect()
}

/// Zero-level polylines of a sampled field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourSet {
    pub polylines: Vec<Vec<Point>>,
    pub grid: Grid,
    pub level: f64,
}

impl ContourSet {
    pub fn is_empty(&self) -> bool {
        self.polylines.is_empty()
    }

    pub fn vertices(&self) -> impl Iterator<Item = Point> + '_ {
        self.polylines.iter().flatten().copied()
    }

    pub fn segments(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.polylines.iter().flat_map(|l| l.windows(2).map(|w| (w[0], w[1])))
    }
}

// Edge keys: 2·node index for the edge to the right of a node, +1 for the edge above it.
fn h_edge(grid: &Grid, i: usize, j: usize) -> usize {
    2 * (j * grid.nx + i)
}

fn v_edge(grid: &Grid, i: usize, j: usize) -> usize {
    2 * (j * grid.nx + i) + 1
}

fn lerp(a: Point, b: Point, va: f64, vb: f64, level: f64) -> Point {
    let t = if va == vb { 0.5 } else { ((level - va) / (vb - va)).clamp(0.0, 1.0) };
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

/// Traces `{f = level}` from node values in [`Grid::sample`] order. Cells
/// for which `skip(i, j)` holds, or with a non-finite corner, are left out.
pub fn march<S>(grid: Grid, values: &[f64], level: f64, skip: S) -> ContourSet
where
    S: Fn(usize, usize) -> bool,
{
    assert_eq!(values.len(), grid.len());
    let val = |i: usize, j: usize| values[j * grid.nx + i];
    let mut points: HashMap<usize, Point> = HashMap::new();
    let mut segments: Vec<[usize; 2]> = Vec::new();

    for j in 0..grid.ny - 1 {
        for i in 0..grid.nx - 1 {
            if skip(i, j) {
                continue;
            }
            // corners counter-clockwise from lower-left
            let idx = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let v = idx.map(|(a, b)| val(a, b));
            if v.iter().any(|x| !x.is_finite()) {
                continue;
            }
            let above = v.map(|x| x >= level);
            // edges: bottom 0–1, right 1–2, top 3–2, left 0–3
            let ends = [(0, 1), (1, 2), (3, 2), (0, 3)];
            let keys = [h_edge(&grid, i, j), v_edge(&grid, i + 1, j), h_edge(&grid, i, j + 1), v_edge(&grid, i, j)];
            let mut crossed = Vec::with_capacity(4);
            for (e, &(a, b)) in ends.iter().enumerate() {
                if above[a] != above[b] {
                    let (pa, pb) = (grid.node(idx[a].0, idx[a].1), grid.node(idx[b].0, idx[b].1));
                    points.entry(keys[e]).or_insert_with(|| lerp(pa, pb, v[a], v[b], level));
                    crossed.push(e);
                }
            }
            match crossed.len() {
                2 => segments.push([keys[crossed[0]], keys[crossed[1]]]),
                4 => {
                    let center = v.iter().sum::<f64>() / 4.0 >= level;
                    if center == above[0] {
                        // 0 and 2 joined through the centre: cut off corners 1 and 3
                        segments.push([keys[0], keys[1]]);
                        segments.push([keys[2], keys[3]]);
                    } else {
                        segments.push([keys[3], keys[0]]);
                        segments.push([keys[1], keys[2]]);
                    }
                }
                _ => {}
            }
        }
    }

    let polylines = stitch(&segments)
        .into_iter()
        .map(|chain| chain.into_iter().map(|k| points[&k]).collect())
        .collect();
    ContourSet { polylines, grid, level }
}

/// Joins segments sharing an edge key into maximal chains; open chains
/// first, then closed loops (which repeat their first key at the end).
fn stitch(segments: &[[usize; 2]]) -> Vec<Vec<usize>> {
    let mut incident: HashMap<usize, Vec<usize>> = HashMap::new();
    for (s, seg) in segments.iter().enumerate() {
        for &k in seg {
            incident.entry(k).or_default().push(s);
        }
    }
    let mut used = vec![false; segments.len()];
    let mut chains = Vec::new();

    let walk = |start_seg: usize, start_key: usize, used: &mut Vec<bool>| {
        let mut chain = vec![start_key];
        let (mut seg, mut key) = (start_seg, start_key);
        loop {
            used[seg] = true;
            let [a, b] = segments[seg];
            key = if a == key { b } else { a };
            chain.push(key);
            match incident[&key].iter().find(|&&s| !used[s]) {
                Some(&next) => seg = next,
                None => break,
            }
        }
        chain
    };

    // deterministic order: walk from smallest keys first
    let mut open: Vec<usize> = incident.iter().filter(|(_, s)| s.len() == 1).map(|(k, _)| *k).collect();
    open.sort_unstable();
    for k in open {
        let s = incident[&k][0];
        if !used[s] {
            chains.push(walk(s, k, &mut used));
        }
    }
    for s in 0..segments.len() {
        if !used[s] {
            chains.push(walk(s, segments[s][0], &mut used));
        }
    }
    chains
}
