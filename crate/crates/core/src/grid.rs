//! Lattice discretizations of bounded domains.
//!
//! A [`Grid`] is a uniform lattice of spacing `h` over an axis-aligned box,
//! restricted to the closure of a domain. Lattice points strictly inside the
//! domain are *interior* nodes; lattice points outside it but within one
//! lattice step (Chebyshev distance, so diagonals count) of an interior node
//! are *boundary* nodes and carry Dirichlet data. Everything else is exterior
//! and is not a node at all.
//!
//! Node indices enumerate interior and boundary nodes together in row-major
//! order (x fastest, then y), so every loop and every export has one
//! reproducible ordering.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Relative slack used for "is this lattice point inside" and "is this
/// offset inside the ball" decisions, so that exactly representable
/// boundaries are classified the same way on every platform.
const GEOM_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    /// The open box itself (a segment in 1D).
    Rectangle,
    /// `r1 < |x - center| < r2`.
    Annulus { r1: f64, r2: f64, center: [f64; 2] },
    /// The box minus its closed upper-right quadrant.
    LShape,
    /// Explicit 0/1 mask over the lattice; `rows[j][i]` is lattice point
    /// `(i, j)` with `j = 0` the row of smallest y.
    Mask { rows: Vec<Vec<bool>> },
}

impl Shape {
    pub fn name(&self) -> String {
        match self {
            Shape::Rectangle => "rectangle".into(),
            Shape::Annulus { r1, r2, .. } => format!("annulus({r1}, {r2})"),
            Shape::LShape => "l-shape".into(),
            Shape::Mask { rows } => format!(
                "mask({}x{})",
                rows.first().map_or(0, |r| r.len()),
                rows.len()
            ),
        }
    }

    /// Parses a mask file: one row per line, characters `0`/`1`, first line
    /// is the lowest row. Blank lines are ignored.
    pub fn mask_from_text(text: &str) -> Result<Shape> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .chars()
                .map(|c| match c {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    other => Err(Error::invalid(
                        "mask",
                        format!("line {}: unexpected character {other:?}", lineno + 1),
                    )),
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::invalid("mask", "mask file has no rows"));
        }
        let width = rows[0].len();
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::invalid("mask", "rows have different lengths"));
        }
        Ok(Shape::Mask { rows })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Interior,
    Boundary,
    Exterior,
}

#[derive(Clone, Debug)]
pub struct Grid {
    dim: usize,
    h: f64,
    lo: [f64; 2],
    hi: [f64; 2],
    /// Lattice points per axis (the second is 1 in 1D).
    extent: [usize; 2],
    shape: Shape,
    lattice: Vec<Option<u32>>,
    coords: Vec<[f64; 2]>,
    cells: Vec<[usize; 2]>,
    kinds: Vec<NodeKind>,
    interior: Vec<usize>,
    boundary: Vec<usize>,
    slot: Vec<usize>,
}

impl Grid {
    /// Builds the lattice over the box `[lo, hi]` (1 or 2 dimensions) with
    /// spacing `h`, keeping the closure of `shape`.
    pub fn build(lo: &[f64], hi: &[f64], h: f64, shape: Shape) -> Result<Grid> {
        let dim = lo.len();
        if !(1..=2).contains(&dim) || hi.len() != dim {
            return Err(Error::invalid(
                "box",
                format!(
                    "corners must both have 1 or 2 coordinates, got {} and {}",
                    lo.len(),
                    hi.len()
                ),
            ));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::invalid(
                "h",
                format!("must be positive and finite, got {h}"),
            ));
        }
        let mut extent = [1usize; 2];
        let mut lo2 = [0.0; 2];
        let mut hi2 = [0.0; 2];
        for d in 0..dim {
            let width = hi[d] - lo[d];
            if !(width.is_finite() && width > 0.0) {
                return Err(Error::invalid(
                    "box",
                    format!("degenerate extent along axis {d}"),
                ));
            }
            let steps = (width / h).round();
            if steps < 2.0 || (steps * h - width).abs() > 1e-9 * width {
                return Err(Error::invalid(
                    "h",
                    format!("box width {width} along axis {d} is not a multiple of h = {h} with at least 2 steps"),
                ));
            }
            extent[d] = steps as usize + 1;
            lo2[d] = lo[d];
            hi2[d] = hi[d];
        }
        if dim == 1 && !matches!(shape, Shape::Rectangle | Shape::Mask { .. }) {
            return Err(Error::invalid(
                "shape",
                format!("{} is not available in 1D", shape.name()),
            ));
        }
        match &shape {
            Shape::Annulus { r1, r2, center } => {
                if !(*r1 >= 0.0 && r2 > r1) {
                    return Err(Error::invalid(
                        "shape",
                        format!("annulus needs 0 <= r1 < r2, got ({r1}, {r2})"),
                    ));
                }
                for d in 0..2 {
                    if center[d] - r2 < lo2[d] - GEOM_TOL || center[d] + r2 > hi2[d] + GEOM_TOL {
                        return Err(Error::invalid(
                            "shape",
                            "annulus does not fit inside the box",
                        ));
                    }
                }
            }
            Shape::Mask { rows }
                if (rows.len() != extent[1] || rows.iter().any(|r| r.len() != extent[0])) =>
            {
                return Err(Error::invalid(
                    "shape",
                    format!(
                        "mask is {}x{} but the lattice is {}x{}",
                        rows.first().map_or(0, |r| r.len()),
                        rows.len(),
                        extent[0],
                        extent[1]
                    ),
                ));
            }
            _ => {}
        }

        let n_lattice = extent[0] * extent[1];
        let point = |i: usize, j: usize| -> [f64; 2] {
            let x = lo2[0] + i as f64 * h;
            let y = if dim == 2 { lo2[1] + j as f64 * h } else { 0.0 };
            [x, y]
        };
        let scale = (hi2[0] - lo2[0]).max(hi2[1] - lo2[1]).max(1.0);
        let tol = GEOM_TOL * scale;
        let inside = |i: usize, j: usize| -> bool {
            // the outer lattice frame is never interior
            if i == 0 || i + 1 == extent[0] || (dim == 2 && (j == 0 || j + 1 == extent[1])) {
                return false;
            }
            let p = point(i, j);
            match &shape {
                Shape::Rectangle => true,
                Shape::Annulus { r1, r2, center } => {
                    let r = ((p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2)).sqrt();
                    r > r1 + tol && r < r2 - tol
                }
                Shape::LShape => {
                    let mx = 0.5 * (lo2[0] + hi2[0]);
                    let my = 0.5 * (lo2[1] + hi2[1]);
                    !(p[0] >= mx - tol && p[1] >= my - tol)
                }
                Shape::Mask { rows } => rows[j][i],
            }
        };

        let mut class = vec![NodeKind::Exterior; n_lattice];
        for j in 0..extent[1] {
            for i in 0..extent[0] {
                if inside(i, j) {
                    class[j * extent[0] + i] = NodeKind::Interior;
                }
            }
        }
        if !class.contains(&NodeKind::Interior) {
            return Err(Error::EmptyInterior {
                shape: shape.name(),
                h,
            });
        }
        let dj_range: &[isize] = if dim == 2 { &[-1, 0, 1] } else { &[0] };
        for j in 0..extent[1] {
            for i in 0..extent[0] {
                let li = j * extent[0] + i;
                if class[li] != NodeKind::Exterior {
                    continue;
                }
                let touches = dj_range.iter().any(|&dj| {
                    [-1isize, 0, 1].iter().any(|&di| {
                        let (ni, nj) = (i as isize + di, j as isize + dj);
                        ni >= 0
                            && nj >= 0
                            && (ni as usize) < extent[0]
                            && (nj as usize) < extent[1]
                            && class[nj as usize * extent[0] + ni as usize] == NodeKind::Interior
                    })
                });
                if touches {
                    class[li] = NodeKind::Boundary;
                }
            }
        }

        let mut grid = Grid {
            dim,
            h,
            lo: lo2,
            hi: hi2,
            extent,
            shape,
            lattice: vec![None; n_lattice],
            coords: Vec::new(),
            cells: Vec::new(),
            kinds: Vec::new(),
            interior: Vec::new(),
            boundary: Vec::new(),
            slot: Vec::new(),
        };
        for j in 0..extent[1] {
            for i in 0..extent[0] {
                let li = j * extent[0] + i;
                let kind = class[li];
                if kind == NodeKind::Exterior {
                    continue;
                }
                let id = grid.coords.len();
                grid.lattice[li] = Some(id as u32);
                grid.coords.push(point(i, j));
                grid.cells.push([i, j]);
                grid.kinds.push(kind);
                match kind {
                    NodeKind::Interior => {
                        grid.slot.push(grid.interior.len());
                        grid.interior.push(id);
                    }
                    _ => {
                        grid.slot.push(grid.boundary.len());
                        grid.boundary.push(id);
                    }
                }
            }
        }
        let components = grid.interior_components();
        if components != 1 {
            return Err(Error::DisconnectedInterior {
                shape: grid.shape.name(),
                h,
                components,
            });
        }
        Ok(grid)
    }

    fn interior_components(&self) -> usize {
        let mut seen = vec![false; self.len()];
        let mut components = 0;
        for &start in &self.interior {
            if seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            let mut queue = VecDeque::from([start]);
            while let Some(n) = queue.pop_front() {
                for m in self.axis_neighbors(n).into_iter().flatten() {
                    if self.kinds[m] == NodeKind::Interior && !seen[m] {
                        seen[m] = true;
                        queue.push_back(m);
                    }
                }
            }
        }
        components
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// Lower and upper box corners (only the first `dim` entries are used).
    pub fn bounds(&self) -> ([f64; 2], [f64; 2]) {
        (self.lo, self.hi)
    }

    pub fn extent(&self) -> [usize; 2] {
        self.extent
    }

    /// Number of nodes (interior plus boundary).
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coord(&self, node: usize) -> &[f64] {
        &self.coords[node][..self.dim]
    }

    pub fn lattice_position(&self, node: usize) -> [usize; 2] {
        self.cells[node]
    }

    pub fn kind(&self, node: usize) -> NodeKind {
        self.kinds[node]
    }

    pub fn is_interior(&self, node: usize) -> bool {
        self.kinds[node] == NodeKind::Interior
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    /// Position of a node within [`Grid::interior`] or [`Grid::boundary`].
    pub fn slot(&self, node: usize) -> usize {
        self.slot[node]
    }

    /// Node at lattice position `(i, j)`, if that point belongs to the closed domain.
    pub fn node_at(&self, i: isize, j: isize) -> Option<usize> {
        if i < 0 || j < 0 || i as usize >= self.extent[0] || j as usize >= self.extent[1] {
            return None;
        }
        self.lattice[j as usize * self.extent[0] + i as usize].map(|n| n as usize)
    }

    /// Classification of an arbitrary lattice position, exterior included.
    pub fn lattice_kind(&self, i: isize, j: isize) -> NodeKind {
        self.node_at(i, j)
            .map_or(NodeKind::Exterior, |n| self.kinds[n])
    }

    /// Nodes at distance exactly `h` along the lattice axes (2 in 1D, 4 in
    /// 2D); `None` where that lattice point is exterior or off the lattice.
    pub fn axis_neighbors(&self, node: usize) -> Vec<Option<usize>> {
        let [i, j] = self.cells[node];
        let (i, j) = (i as isize, j as isize);
        let mut out = vec![self.node_at(i - 1, j), self.node_at(i + 1, j)];
        if self.dim == 2 {
            out.push(self.node_at(i, j - 1));
            out.push(self.node_at(i, j + 1));
        }
        out
    }

    /// Nearest node to `point` (ties resolved by smallest index).
    pub fn nearest_node(&self, point: &[f64]) -> Option<usize> {
        let mut best: Option<(f64, usize)> = None;
        for n in 0..self.len() {
            let d = distance(self.coord(n), point);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, n));
            }
        }
        best.map(|(_, n)| n)
    }

    /// Euclidean distance between two nodes.
    pub fn dist(&self, a: usize, b: usize) -> f64 {
        distance(self.coord(a), self.coord(b))
    }

    /// Largest distance between any two nodes.
    pub fn diameter(&self) -> f64 {
        let mut best = 0.0f64;
        for &a in &self.boundary {
            for &b in &self.boundary {
                best = best.max(self.dist(a, b));
            }
        }
        best
    }

    /// Discrete closed ball `{y in closure : |y - x| <= eps}` around an
    /// interior node, in ascending node order. Includes the node itself.
    pub fn ball_stencil(&self, node: usize, eps: f64) -> Result<Vec<usize>> {
        if node >= self.len() || !self.is_interior(node) {
            return Err(Error::NotInterior { node });
        }
        let offsets = ball_offsets(self.dim, self.h, eps)?;
        Ok(self.apply_offsets(node, &offsets))
    }

    fn apply_offsets(&self, node: usize, offsets: &[[isize; 2]]) -> Vec<usize> {
        let [i, j] = self.cells[node];
        offsets
            .iter()
            .filter_map(|[di, dj]| self.node_at(i as isize + di, j as isize + dj))
            .collect()
    }
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Lattice offsets inside the closed ball of radius `eps`, sorted in
/// row-major order so that applying them to a node yields ascending indices.
fn ball_offsets(dim: usize, h: f64, eps: f64) -> Result<Vec<[isize; 2]>> {
    if !eps.is_finite() || eps < h * (1.0 - GEOM_TOL) {
        return Err(Error::StencilTooSmall { eps, h });
    }
    let reach = (eps / h * (1.0 + GEOM_TOL)).floor() as isize;
    let limit = (eps / h).powi(2) * (1.0 + GEOM_TOL);
    let dj_reach = if dim == 2 { reach } else { 0 };
    let mut out = Vec::new();
    for dj in -dj_reach..=dj_reach {
        for di in -reach..=reach {
            if ((di * di + dj * dj) as f64) <= limit {
                out.push([di, dj]);
            }
        }
    }
    Ok(out)
}

/// Precomputed ball stencils of every interior node, stored contiguously.
#[derive(Clone, Debug)]
pub struct StencilTable {
    eps: f64,
    starts: Vec<usize>,
    nodes: Vec<u32>,
}

impl StencilTable {
    pub fn new(grid: &Grid, eps: f64) -> Result<Self> {
        let offsets = ball_offsets(grid.dim, grid.h, eps)?;
        let mut starts = Vec::with_capacity(grid.interior.len() + 1);
        let mut nodes = Vec::new();
        starts.push(0);
        for &n in &grid.interior {
            nodes.extend(
                grid.apply_offsets(n, &offsets)
                    .into_iter()
                    .map(|m| m as u32),
            );
            starts.push(nodes.len());
        }
        Ok(StencilTable { eps, starts, nodes })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Stencil of the interior node with interior slot `slot`.
    pub fn of_slot(&self, slot: usize) -> &[u32] {
        &self.nodes[self.starts[slot]..self.starts[slot + 1]]
    }

    pub fn len(&self) -> usize {
        self.starts.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Dirichlet values on the boundary nodes of one grid, with their discrete
/// Lipschitz constant.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryData {
    values: Vec<f64>,
    lipschitz: f64,
}

impl BoundaryData {
    /// Values are given in [`Grid::boundary`] order.
    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.boundary.len() {
            return Err(Error::invalid(
                "boundary",
                format!(
                    "{} values for {} boundary nodes",
                    values.len(),
                    grid.boundary.len()
                ),
            ));
        }
        for (k, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    what: "boundary value",
                    location: format!(
                        "node {} at {:?}",
                        grid.boundary[k],
                        grid.coord(grid.boundary[k])
                    ),
                    value: *v,
                });
            }
        }
        let lipschitz = pairwise_lipschitz(grid, &grid.boundary, |k| values[k]);
        Ok(BoundaryData { values, lipschitz })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at boundary slot `slot`.
    pub fn value(&self, slot: usize) -> f64 {
        self.values[slot]
    }

    /// Discrete Lipschitz constant: max over boundary pairs of
    /// `|g(a) - g(b)| / |a - b|`, distances measured straight through space.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Evaluates `g` at every boundary node.
pub fn boundary_trace<F>(grid: &Grid, g: F) -> Result<BoundaryData>
where
    F: Fn(&[f64]) -> f64,
{
    let values = grid.boundary.iter().map(|&n| g(grid.coord(n))).collect();
    BoundaryData::from_values(grid, values)
}

/// Max of `|v(a) - v(b)| / |a - b|` over pairs of `nodes`; `value(k)` is the
/// value of `nodes[k]`.
pub(crate) fn pairwise_lipschitz<V>(grid: &Grid, nodes: &[usize], value: V) -> f64
where
    V: Fn(usize) -> f64,
{
    let mut best = 0.0f64;
    for a in 0..nodes.len() {
        let va = value(a);
        for b in (a + 1)..nodes.len() {
            let d = grid.dist(nodes[a], nodes[b]);
            best = best.max((va - value(b)).abs() / d);
        }
    }
    best
}

/// One value per node of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(values: Vec<f64>) -> Self {
        ScalarField { values }
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        ScalarField {
            values: vec![c; grid.len()],
        }
    }

    pub fn from_fn<F: Fn(&[f64]) -> f64>(grid: &Grid, f: F) -> Self {
        ScalarField {
            values: (0..grid.len()).map(|n| f(grid.coord(n))).collect(),
        }
    }

    /// Boundary values from `g`, interior nodes set to `fill`.
    pub fn with_boundary(grid: &Grid, g: &BoundaryData, fill: f64) -> Self {
        let mut values = vec![fill; grid.len()];
        for (k, &n) in grid.boundary().iter().enumerate() {
            values[n] = g.value(k);
        }
        ScalarField { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, node: usize) -> f64 {
        self.values[node]
    }

    pub fn set(&mut self, node: usize, v: f64) {
        self.values[node] = v;
    }

    /// Pointwise `self <= other`.
    pub fn le(&self, other: &ScalarField) -> bool {
        self.values.iter().zip(&other.values).all(|(a, b)| a <= b)
    }

    pub fn sup_distance(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Boundary values of this field, in [`Grid::boundary`] order.
    pub fn trace(&self, grid: &Grid) -> Vec<f64> {
        grid.boundary().iter().map(|&n| self.values[n]).collect()
    }
}
