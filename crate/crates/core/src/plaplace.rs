//! Finite-p Dirichlet problems by direct minimization of the discrete energy
//!
//! ```text
//! I_p(u) = h^d sum_cells |∇u_cell|^p
//! ```
//!
//! where `∇u_cell` is the forward-difference gradient of the lattice cell
//! anchored at a node (the cell needs its corner, east and, in 2D, north
//! nodes in the closed domain). The energy is a smooth convex function of
//! the nodal values for `p >= 2`, so cyclic coordinate descent with an exact
//! scalar minimization per node decreases it monotonically.
//!
//! Exponents above 64 are rejected: `|∇u|^p` leaves the double range for
//! moderate gradients, and the mean-value solver is the right tool for the
//! infinity limit anyway.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{BoundaryData, Grid, ScalarField};
use crate::lipschitz::{mcshane_whitney, Side};
use crate::mv::{solve_mv, MvConfig};

pub const MAX_EXPONENT: f64 = 64.0;

#[derive(Clone, Copy, Debug)]
pub struct LineSearch {
    pub max_iterations: usize,
    /// Relative step size at which the scalar solve stops.
    pub relative_tolerance: f64,
}

impl Default for LineSearch {
    fn default() -> Self {
        LineSearch {
            max_iterations: 100,
            relative_tolerance: 1e-15,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PSolveConfig {
    pub p: f64,
    /// Stop once the largest nodal update of a pass is at most this.
    pub tolerance: f64,
    pub max_passes: usize,
    /// Coefficient of the linear term: minimizes
    /// `h^d sum (1/p)|∇u|^p - eps_hat^(p-1) h^d sum u`. Zero gives `I_p`.
    pub poisson_eps: f64,
    /// Over-relaxation factor in `[1, 2)`; a relaxed update is kept only if
    /// it does not raise the local energy, otherwise the exact minimizer is used.
    pub relaxation: f64,
    pub line_search: LineSearch,
}

impl PSolveConfig {
    pub fn new(p: f64) -> Self {
        PSolveConfig {
            p,
            tolerance: 1e-10,
            max_passes: 200_000,
            poisson_eps: 0.0,
            relaxation: 1.9,
            line_search: LineSearch::default(),
        }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_max_passes(mut self, max_passes: usize) -> Self {
        self.max_passes = max_passes;
        self
    }

    pub fn with_poisson_eps(mut self, poisson_eps: f64) -> Self {
        self.poisson_eps = poisson_eps;
        self
    }

    pub fn with_relaxation(mut self, relaxation: f64) -> Self {
        self.relaxation = relaxation;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_exponent(self.p)?;
        if !(1.0..2.0).contains(&self.relaxation) {
            return Err(Error::invalid(
                "relaxation",
                format!("must lie in [1, 2), got {}", self.relaxation),
            ));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::invalid(
                "tolerance",
                format!("must be positive, got {}", self.tolerance),
            ));
        }
        if self.max_passes < 1 {
            return Err(Error::invalid("max_passes", "must be at least 1"));
        }
        if !(self.poisson_eps.is_finite() && self.poisson_eps >= 0.0) {
            return Err(Error::invalid(
                "poisson_eps",
                "must be finite and non-negative",
            ));
        }
        Ok(())
    }
}

fn check_exponent(p: f64) -> Result<()> {
    if !(p.is_finite() && p >= 2.0) {
        return Err(Error::invalid(
            "p",
            format!("exponent must satisfy p >= 2, got {p}"),
        ));
    }
    if p > MAX_EXPONENT {
        return Err(Error::Overflow { p });
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct EnergyReport {
    pub p: f64,
    /// `I_p` of the returned field.
    pub energy: f64,
    /// The minimized functional (equals `I_p / p` when `poisson_eps = 0`).
    pub functional: f64,
    pub passes: usize,
    pub last_max_update: f64,
    /// Max over interior nodes of `|dJ/du_i| / h^d`.
    pub first_variation: f64,
    pub converged: bool,
    /// Functional value after each pass.
    pub history: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Role {
    Corner,
    East,
    North,
}

/// Lattice cells with all of their nodes in the closed domain.
pub(crate) struct CellMesh {
    dim: usize,
    h: f64,
    /// corner, east, north (north unused in 1D)
    cells: Vec<[usize; 3]>,
    starts: Vec<usize>,
    incidence: Vec<(usize, Role)>,
}

impl CellMesh {
    pub(crate) fn new(grid: &Grid) -> Self {
        let mut cells = Vec::new();
        for n in 0..grid.len() {
            let [i, j] = grid.lattice_position(n);
            let (i, j) = (i as isize, j as isize);
            let Some(east) = grid.node_at(i + 1, j) else {
                continue;
            };
            if grid.dim() == 1 {
                cells.push([n, east, usize::MAX]);
            } else if let Some(north) = grid.node_at(i, j + 1) {
                cells.push([n, east, north]);
            }
        }
        let mut per_node: Vec<Vec<(usize, Role)>> = vec![Vec::new(); grid.len()];
        for (c, cell) in cells.iter().enumerate() {
            per_node[cell[0]].push((c, Role::Corner));
            per_node[cell[1]].push((c, Role::East));
            if grid.dim() == 2 {
                per_node[cell[2]].push((c, Role::North));
            }
        }
        let mut starts = vec![0];
        let mut incidence = Vec::new();
        for list in per_node {
            incidence.extend(list);
            starts.push(incidence.len());
        }
        CellMesh {
            dim: grid.dim(),
            h: grid.h(),
            cells,
            starts,
            incidence,
        }
    }

    fn measure(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    pub(crate) fn gradient(&self, u: &[f64], c: usize) -> [f64; 2] {
        let [corner, east, north] = self.cells[c];
        let gx = (u[east] - u[corner]) / self.h;
        let gy = if self.dim == 2 {
            (u[north] - u[corner]) / self.h
        } else {
            0.0
        };
        [gx, gy]
    }

    pub(crate) fn len(&self) -> usize {
        self.cells.len()
    }

    fn energy(&self, u: &[f64], p: f64) -> f64 {
        self.measure()
            * (0..self.cells.len())
                .map(|c| {
                    let [gx, gy] = self.gradient(u, c);
                    (gx * gx + gy * gy).powf(0.5 * p)
                })
                .sum::<f64>()
    }

    /// The cell gradients touching `node` as affine functions `a + b t` of
    /// the node's value `t`.
    fn local_terms(&self, u: &[f64], node: usize, out: &mut Vec<([f64; 2], [f64; 2])>) {
        out.clear();
        let inv_h = 1.0 / self.h;
        for &(c, role) in &self.incidence[self.starts[node]..self.starts[node + 1]] {
            let [corner, east, north] = self.cells[c];
            let term = match role {
                Role::Corner => {
                    let ay = if self.dim == 2 { u[north] * inv_h } else { 0.0 };
                    let by = if self.dim == 2 { -inv_h } else { 0.0 };
                    ([u[east] * inv_h, ay], [-inv_h, by])
                }
                Role::East => {
                    let gy = if self.dim == 2 {
                        (u[north] - u[corner]) * inv_h
                    } else {
                        0.0
                    };
                    ([-u[corner] * inv_h, gy], [inv_h, 0.0])
                }
                Role::North => (
                    [(u[east] - u[corner]) * inv_h, -u[corner] * inv_h],
                    [0.0, inv_h],
                ),
            };
            out.push(term);
        }
    }

    /// Values of the other nodes in the cells touching `node`; the scalar
    /// minimizer without a linear term lies within their range.
    fn neighbour_range(&self, u: &[f64], node: usize) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &(c, _) in &self.incidence[self.starts[node]..self.starts[node + 1]] {
            let cell = self.cells[c];
            let used = if self.dim == 2 { &cell[..] } else { &cell[..2] };
            for &m in used {
                if m != node {
                    lo = lo.min(u[m]);
                    hi = hi.max(u[m]);
                }
            }
        }
        (lo, hi)
    }
}

struct LocalProblem<'a> {
    terms: &'a [([f64; 2], [f64; 2])],
    p: f64,
    source: f64,
}

impl LocalProblem<'_> {
    fn value(&self, t: f64) -> f64 {
        let mut total = 0.0;
        for (a, b) in self.terms {
            let gx = a[0] + b[0] * t;
            let gy = a[1] + b[1] * t;
            total += (gx * gx + gy * gy).powf(0.5 * self.p) / self.p;
        }
        total - self.source * t
    }

    fn derivatives(&self, t: f64) -> (f64, f64) {
        let (mut d1, mut d2) = (0.0, 0.0);
        for (a, b) in self.terms {
            let gx = a[0] + b[0] * t;
            let gy = a[1] + b[1] * t;
            let n2 = gx * gx + gy * gy;
            let gb = gx * b[0] + gy * b[1];
            let bb = b[0] * b[0] + b[1] * b[1];
            if self.p == 2.0 {
                d1 += gb;
                d2 += bb;
            } else if n2 > 0.0 {
                let w = n2.powf(0.5 * self.p - 1.0);
                d1 += w * gb;
                d2 += w * bb + (self.p - 2.0) * w / n2 * gb * gb;
            }
        }
        (d1 - self.source, d2)
    }

    /// Safeguarded Newton on the (increasing) derivative within `[lo, hi]`.
    fn minimize(&self, start: f64, mut lo: f64, mut hi: f64, ls: &LineSearch) -> f64 {
        if self.source > 0.0 {
            let mut width = (hi - lo).max(1.0);
            while self.derivatives(hi).0 < 0.0 {
                lo = hi;
                hi += width;
                width *= 2.0;
            }
        }
        if hi <= lo {
            return lo;
        }
        let mut t = start.clamp(lo, hi);
        for _ in 0..ls.max_iterations {
            let (d1, d2) = self.derivatives(t);
            if d1 == 0.0 {
                break;
            }
            if d1 > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let newton = t - d1 / d2;
            let next = if d2 > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            let step = (next - t).abs();
            t = next;
            if step <= ls.relative_tolerance * (1.0 + t.abs())
                || hi - lo <= ls.relative_tolerance * (1.0 + t.abs())
            {
                break;
            }
        }
        t
    }
}

/// Discrete Dirichlet energy `h^d sum_cells |∇u_cell|^p`.
pub fn energy_p(u: &ScalarField, grid: &Grid, p: f64) -> Result<f64> {
    check_exponent(p)?;
    if u.len() != grid.len() {
        return Err(Error::invalid("field", "field does not match the grid"));
    }
    let e = CellMesh::new(grid).energy(u.values(), p);
    if e.is_finite() {
        Ok(e)
    } else {
        Err(Error::Overflow { p })
    }
}

/// Minimizes the discrete energy with boundary values `g`, starting from the
/// midpoint of the McShane–Whitney envelopes.
pub fn solve_p(
    grid: &Grid,
    g: &BoundaryData,
    config: &PSolveConfig,
) -> Result<(ScalarField, EnergyReport)> {
    let upper = mcshane_whitney(grid, g, Side::Upper);
    let lower = mcshane_whitney(grid, g, Side::Lower);
    let start = ScalarField::new(
        upper
            .values()
            .iter()
            .zip(lower.values())
            .map(|(a, b)| 0.5 * (a + b))
            .collect(),
    );
    solve_p_from(grid, g, config, &start)
}

/// Like [`solve_p`] from a caller-provided start (boundary values reset to `g`).
pub fn solve_p_from(
    grid: &Grid,
    g: &BoundaryData,
    config: &PSolveConfig,
    start: &ScalarField,
) -> Result<(ScalarField, EnergyReport)> {
    config.validate()?;
    if start.len() != grid.len() {
        return Err(Error::invalid(
            "field",
            "start field does not match the grid",
        ));
    }
    let mesh = CellMesh::new(grid);
    let mut u = start.values().to_vec();
    for (k, &b) in grid.boundary().iter().enumerate() {
        u[b] = g.value(k);
    }
    let p = config.p;
    let source = config.poisson_eps.powf(p - 1.0);
    let functional = |u: &[f64]| -> Result<f64> {
        let sum_u: f64 = grid.interior().iter().map(|&n| u[n]).sum();
        let j = mesh.energy(u, p) / p - source * mesh.measure() * sum_u;
        if j.is_finite() {
            Ok(j)
        } else {
            Err(Error::Overflow { p })
        }
    };
    let mut history = vec![functional(&u)?];
    let mut terms = Vec::new();
    let mut passes = 0;
    let mut last_max_update = f64::INFINITY;
    while passes < config.max_passes {
        passes += 1;
        let mut max_update = 0.0f64;
        for &n in grid.interior() {
            mesh.local_terms(&u, n, &mut terms);
            let local = LocalProblem {
                terms: &terms,
                p,
                source,
            };
            let (lo, hi) = mesh.neighbour_range(&u, n);
            let current = u[n];
            let exact = local.minimize(current, lo, hi, &config.line_search);
            let mut t = exact;
            if config.relaxation != 1.0 {
                let relaxed = current + config.relaxation * (exact - current);
                if local.value(relaxed) <= local.value(current) {
                    t = relaxed;
                }
            }
            if t != current && local.value(t) <= local.value(current) {
                max_update = max_update.max((t - current).abs());
                u[n] = t;
            }
        }
        history.push(functional(&u)?);
        last_max_update = max_update;
        if max_update <= config.tolerance {
            break;
        }
    }
    let mut first_variation = 0.0f64;
    for &n in grid.interior() {
        mesh.local_terms(&u, n, &mut terms);
        let local = LocalProblem {
            terms: &terms,
            p,
            source,
        };
        first_variation = first_variation.max(local.derivatives(u[n]).0.abs());
    }
    let energy = mesh.energy(&u, p);
    if !energy.is_finite() {
        return Err(Error::Overflow { p });
    }
    let report = EnergyReport {
        p,
        energy,
        functional: *history.last().unwrap(),
        passes,
        last_max_update,
        first_variation,
        converged: last_max_update <= config.tolerance,
        history,
    };
    Ok((ScalarField::new(u), report))
}

/// `(mean over cells of |∇u_cell|^s)^(1/s)`.
pub fn gradient_mean_norm(u: &ScalarField, grid: &Grid, s: f64) -> f64 {
    let mesh = CellMesh::new(grid);
    if mesh.len() == 0 {
        return 0.0;
    }
    let total: f64 = (0..mesh.len())
        .map(|c| {
            let [gx, gy] = mesh.gradient(u.values(), c);
            (gx * gx + gy * gy).powf(0.5 * s)
        })
        .sum();
    (total / mesh.len() as f64).powf(1.0 / s)
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepEntry {
    pub p: f64,
    #[serde(skip)]
    pub field: ScalarField,
    pub report: EnergyReport,
    /// `(s, (mean |∇u|^s)^(1/s))` for `s` in {2, 4, 8}.
    pub gradient_norms: Vec<(f64, f64)>,
    pub distance_to_mv: f64,
}

/// Solves for every exponent in `ps` (ascending, at most 64) and compares
/// each solution with the plain mean-value solution on the same grid.
///
/// With `warm_start` each solve starts from the previous exponent's
/// solution; otherwise the solves are independent and run in parallel.
pub fn p_sweep(
    grid: &Grid,
    g: &BoundaryData,
    ps: &[f64],
    config: &PSolveConfig,
    mv_config: &MvConfig,
    warm_start: bool,
) -> Result<(Vec<SweepEntry>, ScalarField)> {
    if ps.is_empty() {
        return Err(Error::invalid("ps", "need at least one exponent"));
    }
    if ps.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("ps", "exponents must be strictly ascending"));
    }
    for &p in ps {
        check_exponent(p)?;
    }
    let (mv_field, _) = solve_mv(grid, g, mv_config)?;
    let entry = |p: f64, field: ScalarField, report: EnergyReport| SweepEntry {
        p,
        gradient_norms: [2.0, 4.0, 8.0]
            .iter()
            .map(|&s| (s, gradient_mean_norm(&field, grid, s)))
            .collect(),
        distance_to_mv: field.sup_distance(&mv_field),
        field,
        report,
    };
    let entries = if warm_start {
        let mut out = Vec::with_capacity(ps.len());
        let mut previous: Option<ScalarField> = None;
        for &p in ps {
            let cfg = PSolveConfig {
                p,
                ..config.clone()
            };
            let (field, report) = match &previous {
                Some(start) => solve_p_from(grid, g, &cfg, start)?,
                None => solve_p(grid, g, &cfg)?,
            };
            previous = Some(field.clone());
            out.push(entry(p, field, report));
        }
        out
    } else {
        ps.par_iter()
            .map(|&p| {
                let cfg = PSolveConfig {
                    p,
                    ..config.clone()
                };
                solve_p(grid, g, &cfg).map(|(field, report)| entry(p, field, report))
            })
            .collect::<Result<Vec<_>>>()?
    };
    Ok((entries, mv_field))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{boundary_trace, Shape};

    fn segment(h: f64) -> Grid {
        Grid::build(&[0.0], &[1.0], h, Shape::Rectangle).unwrap()
    }

    #[test]
    fn energy_examples() {
        let g = segment(0.25);
        let lin = ScalarField::from_fn(&g, |x| x[0]);
        for p in [2.0, 3.0, 8.0, 64.0] {
            assert!((energy_p(&lin, &g, p).unwrap() - 1.0).abs() < 1e-12);
        }
        assert_eq!(
            energy_p(&ScalarField::constant(&g, 4.0), &g, 5.0).unwrap(),
            0.0
        );
        let sq = ScalarField::from_fn(&g, |x| x[0] * x[0]);
        assert!((energy_p(&sq, &g, 2.0).unwrap() - 1.3125).abs() < 1e-14);
    }

    #[test]
    fn energy_exact_for_affine_2d() {
        let grid = Grid::build(&[0.0, 0.0], &[1.0, 1.0], 0.125, Shape::Rectangle).unwrap();
        let u = ScalarField::from_fn(&grid, |x| 3.0 * x[0] - 4.0 * x[1]);
        // 64 cells of area h^2 with |∇u| = 5
        let e = energy_p(&u, &grid, 3.0).unwrap();
        assert!((e - 125.0).abs() < 1e-9, "{e}");
    }

    #[test]
    fn exponent_limits() {
        let g = segment(0.25);
        let u = ScalarField::constant(&g, 0.0);
        assert!(matches!(
            energy_p(&u, &g, 1.5),
            Err(Error::InvalidParameter { name: "p", .. })
        ));
        assert!(matches!(
            energy_p(&u, &g, 65.0),
            Err(Error::Overflow { .. })
        ));
        let data = boundary_trace(&g, |x| x[0]).unwrap();
        assert!(solve_p(&g, &data, &PSolveConfig::new(1.0)).is_err());
    }

    #[test]
    fn one_dimensional_minimizer_is_affine() {
        let g = segment(1.0 / 16.0);
        let data = boundary_trace(&g, |x| x[0]).unwrap();
        for p in [2.0, 4.0, 16.0, 64.0] {
            let (u, report) =
                solve_p(&g, &data, &PSolveConfig::new(p).with_tolerance(1e-13)).unwrap();
            assert!(report.converged);
            for n in 0..g.len() {
                assert!((u.get(n) - g.coord(n)[0]).abs() < 1e-9, "p={p}");
            }
        }
    }

    #[test]
    fn harmonic_polynomial_at_p2() {
        let grid = Grid::build(&[0.0, 0.0], &[1.0, 1.0], 1.0 / 16.0, Shape::Rectangle).unwrap();
        let data = boundary_trace(&grid, |x| x[0] * x[1]).unwrap();
        let (u, report) =
            solve_p(&grid, &data, &PSolveConfig::new(2.0).with_tolerance(1e-12)).unwrap();
        assert!(report.converged);
        let err = (0..grid.len())
            .map(|n| (u.get(n) - grid.coord(n)[0] * grid.coord(n)[1]).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-3, "{err}");
        assert!(report
            .history
            .windows(2)
            .all(|w| w[1] <= w[0] + 1e-12 * w[0].abs()));
    }

    #[test]
    fn poisson_term_lifts_solution() {
        let g = segment(1.0 / 8.0);
        let data = boundary_trace(&g, |_| 0.0).unwrap();
        let cfg = PSolveConfig::new(2.0)
            .with_poisson_eps(2.0)
            .with_tolerance(1e-13);
        let (u, _) = solve_p(&g, &data, &cfg).unwrap();
        // p = 2: -u'' = eps_hat, u = eps_hat x (1 - x) / 2, exact on the lattice
        for n in 0..g.len() {
            let x = g.coord(n)[0];
            assert!(
                (u.get(n) - x * (1.0 - x)).abs() < 1e-9,
                "{} vs {}",
                u.get(n),
                x * (1.0 - x)
            );
        }
    }

    #[test]
    fn sweep_rejects_unsorted_exponents() {
        let g = segment(0.25);
        let data = boundary_trace(&g, |x| x[0]).unwrap();
        let cfg = PSolveConfig::new(2.0);
        let mv = MvConfig::new(0.25);
        assert!(p_sweep(&g, &data, &[4.0, 2.0], &cfg, &mv, true).is_err());
        assert!(p_sweep(&g, &data, &[2.0, 128.0], &cfg, &mv, true).is_err());
    }
}
