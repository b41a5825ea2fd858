//! Monotone fixed-point iteration for the discrete mean-value scheme
//!
//! ```text
//! u(x) = (max_{B(x,eps)} u + min_{B(x,eps)} u) / 2 + correction(x)
//! ```
//!
//! over the lattice ball stencil of every interior node. The plain scheme
//! (zero correction) is the dynamic programming principle of eps-step
//! tug-of-war. The `Poisson(F)` variant targets the normalized equation
//! `|∇u|^-2 Δ∞u = F` (so `Δ∞u = |∇u|^2 F` where `u` is smooth and
//! non-critical); `Upper(δ)` and `Lower(δ)` are the Poisson variant with the
//! constant right-hand sides `-δ` and `+δ`, giving strict discrete super- and
//! subsolutions that bracket the plain solution.
//!
//! Sweeps are Jacobi updates: every interior value is computed from the
//! previous field only, in parallel, so results do not depend on the thread
//! schedule. Convergence is geometric but slow (the contraction factor
//! approaches 1 like `1 - c (eps / diam)^2`), so expect thousands of sweeps
//! on fine grids.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BoundaryData, Grid, NodeKind, ScalarField, StencilTable};

type RhsFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// Right-hand side of the Poisson variant.
#[derive(Clone)]
pub struct RightHandSide(Arc<RhsFn>);

impl RightHandSide {
    pub fn new<F: Fn(&[f64]) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        RightHandSide(Arc::new(f))
    }

    pub fn constant(c: f64) -> Self {
        RightHandSide::new(move |_| c)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.0)(x)
    }
}

impl fmt::Debug for RightHandSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("RightHandSide(..)")
    }
}

#[derive(Clone, Debug)]
pub enum SchemeVariant {
    Plain,
    Upper { delta: f64 },
    Lower { delta: f64 },
    Poisson(RightHandSide),
}

impl SchemeVariant {
    pub fn name(&self) -> &'static str {
        match self {
            SchemeVariant::Plain => "plain",
            SchemeVariant::Upper { .. } => "upper",
            SchemeVariant::Lower { .. } => "lower",
            SchemeVariant::Poisson(_) => "poisson",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Initialization {
    /// Discrete McShane–Whitney majorant (see [`stencil_envelope`]).
    MwUpper,
    /// Discrete McShane–Whitney minorant.
    MwLower,
    /// Interior filled with the mean of the boundary data.
    BoundaryMean,
}

#[derive(Clone, Debug)]
pub struct MvConfig {
    pub eps: f64,
    pub tolerance: f64,
    pub max_sweeps: usize,
    pub initialization: Initialization,
    pub variant: SchemeVariant,
}

impl MvConfig {
    pub const DEFAULT_TOLERANCE: f64 = 1e-8;
    pub const DEFAULT_MAX_SWEEPS: usize = 1_000_000;

    pub fn new(eps: f64) -> Self {
        MvConfig {
            eps,
            tolerance: Self::DEFAULT_TOLERANCE,
            max_sweeps: Self::DEFAULT_MAX_SWEEPS,
            initialization: Initialization::MwUpper,
            variant: SchemeVariant::Plain,
        }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_max_sweeps(mut self, max_sweeps: usize) -> Self {
        self.max_sweeps = max_sweeps;
        self
    }

    pub fn with_initialization(mut self, initialization: Initialization) -> Self {
        self.initialization = initialization;
        self
    }

    pub fn with_variant(mut self, variant: SchemeVariant) -> Self {
        self.variant = variant;
        self
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if !self.eps.is_finite() || self.eps < grid.h() * (1.0 - 1e-12) {
            return Err(Error::StencilTooSmall {
                eps: self.eps,
                h: grid.h(),
            });
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::invalid(
                "tolerance",
                format!("must be positive, got {}", self.tolerance),
            ));
        }
        if self.max_sweeps < 1 {
            return Err(Error::invalid("max_sweeps", "must be at least 1"));
        }
        match &self.variant {
            SchemeVariant::Upper { delta } | SchemeVariant::Lower { delta }
                if !(delta.is_finite() && *delta > 0.0) =>
            {
                return Err(Error::invalid(
                    "delta",
                    format!("must be finite and positive, got {delta}"),
                ));
            }
            _ => {}
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub variant: String,
    pub sweeps: usize,
    /// Sup-norm of the last sweep's update.
    pub final_update: f64,
    /// Ratio of the last two update norms.
    pub contraction: f64,
    /// `final_update * q / (1 - q)` with `q` the contraction estimate: a
    /// geometric-tail estimate of the distance to the fixed point.
    pub error_estimate: f64,
    /// Whether the iterates moved monotonically in the direction implied by
    /// the initialization (up to rounding).
    pub monotone: bool,
    pub truncated: bool,
    pub min: f64,
    pub max: f64,
    #[serde(skip)]
    pub wall_time: Duration,
}

/// Compiled scheme: stencils plus per-node correction.
pub(crate) struct Scheme<'g> {
    grid: &'g Grid,
    stencil: StencilTable,
    correction: Vec<f64>,
}

impl<'g> Scheme<'g> {
    pub(crate) fn new(grid: &'g Grid, config: &MvConfig) -> Result<Self> {
        config.validate(grid)?;
        let stencil = StencilTable::new(grid, config.eps)?;
        let half_eps2 = 0.5 * config.eps * config.eps;
        let correction = grid
            .interior()
            .iter()
            .map(|&n| match &config.variant {
                SchemeVariant::Plain => Ok(0.0),
                SchemeVariant::Upper { delta } => Ok(half_eps2 * delta),
                SchemeVariant::Lower { delta } => Ok(-half_eps2 * delta),
                SchemeVariant::Poisson(f) => {
                    let v = f.eval(grid.coord(n));
                    if v.is_finite() {
                        Ok(-half_eps2 * v)
                    } else {
                        Err(Error::NonFinite {
                            what: "right-hand side",
                            location: format!("node {n} at {:?}", grid.coord(n)),
                            value: v,
                        })
                    }
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Scheme {
            grid,
            stencil,
            correction,
        })
    }

    pub(crate) fn stencil(&self) -> &StencilTable {
        &self.stencil
    }

    fn extremes(&self, u: &[f64], slot: usize) -> (f64, f64) {
        let mut hi = f64::NEG_INFINITY;
        let mut lo = f64::INFINITY;
        for &m in self.stencil.of_slot(slot) {
            let v = u[m as usize];
            if v > hi {
                hi = v;
            }
            if v < lo {
                lo = v;
            }
        }
        (hi, lo)
    }

    /// One Jacobi sweep from `input` into `output` (boundary copied).
    pub(crate) fn sweep(&self, input: &[f64], output: &mut [f64], scratch: &mut Vec<f64>) {
        scratch.resize(self.grid.interior().len(), 0.0);
        scratch.par_iter_mut().enumerate().for_each(|(slot, out)| {
            let (hi, lo) = self.extremes(input, slot);
            *out = 0.5 * (hi + lo) + self.correction[slot];
        });
        output.copy_from_slice(input);
        for (slot, &n) in self.grid.interior().iter().enumerate() {
            output[n] = scratch[slot];
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnvelopeSide {
    Upper,
    Lower,
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on value, then on node index
        other
            .0
            .total_cmp(&self.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// McShane–Whitney envelope measured in the stencil graph metric: with
/// `k(x, ξ)` the number of eps-ball hops from `x` to the boundary node `ξ`,
///
/// ```text
/// upper(x) = min_ξ { g(ξ) + L eps k(x, ξ) },   lower(x) = max_ξ { g(ξ) - L eps k(x, ξ) }
/// ```
///
/// with `L` the Euclidean Lipschitz constant of `g`. Since `eps k >= |x - ξ|`
/// both equal `g` on the boundary, and every interior node has a stencil
/// neighbour one hop closer to its minimizing `ξ`, which makes the upper
/// envelope a discrete supersolution of the plain scheme (and the lower one
/// a subsolution). Iterating from them is therefore monotone.
pub fn stencil_envelope(
    grid: &Grid,
    g: &BoundaryData,
    eps: f64,
    side: EnvelopeSide,
) -> Result<ScalarField> {
    let stencil = StencilTable::new(grid, eps)?;
    Ok(envelope_from_stencil(grid, g, &stencil, side))
}

fn envelope_from_stencil(
    grid: &Grid,
    g: &BoundaryData,
    stencil: &StencilTable,
    side: EnvelopeSide,
) -> ScalarField {
    let sign = match side {
        EnvelopeSide::Upper => 1.0,
        EnvelopeSide::Lower => -1.0,
    };
    let step = g.lipschitz() * stencil.eps();
    // interior neighbours of boundary nodes, by symmetry of the ball
    let mut from_boundary: Vec<Vec<u32>> = vec![Vec::new(); grid.boundary().len()];
    for (slot, &x) in grid.interior().iter().enumerate() {
        for &y in stencil.of_slot(slot) {
            let y = y as usize;
            if grid.kind(y) == NodeKind::Boundary {
                from_boundary[grid.slot(y)].push(x as u32);
            }
        }
    }
    let mut best = vec![f64::INFINITY; grid.len()];
    let mut done = vec![false; grid.len()];
    let mut heap = BinaryHeap::new();
    for (k, &b) in grid.boundary().iter().enumerate() {
        best[b] = sign * g.value(k);
        heap.push(HeapItem(best[b], b));
    }
    while let Some(HeapItem(value, node)) = heap.pop() {
        if done[node] {
            continue;
        }
        done[node] = true;
        let neighbours: &[u32] = match grid.kind(node) {
            NodeKind::Interior => stencil.of_slot(grid.slot(node)),
            _ => &from_boundary[grid.slot(node)],
        };
        let candidate = value + step;
        for &m in neighbours {
            let m = m as usize;
            if grid.is_interior(m) && !done[m] && candidate < best[m] {
                best[m] = candidate;
                heap.push(HeapItem(candidate, m));
            }
        }
    }
    let mut field = ScalarField::with_boundary(grid, g, 0.0);
    for &n in grid.interior() {
        field.set(n, sign * best[n]);
    }
    field
}

pub(crate) fn initial_field(
    grid: &Grid,
    g: &BoundaryData,
    stencil: &StencilTable,
    init: Initialization,
) -> ScalarField {
    match init {
        Initialization::MwUpper => envelope_from_stencil(grid, g, stencil, EnvelopeSide::Upper),
        Initialization::MwLower => envelope_from_stencil(grid, g, stencil, EnvelopeSide::Lower),
        Initialization::BoundaryMean => {
            let mean = g.values().iter().sum::<f64>() / g.values().len() as f64;
            ScalarField::with_boundary(grid, g, mean)
        }
    }
}

/// A single Jacobi sweep of the configured scheme.
pub fn mv_sweep(u: &ScalarField, grid: &Grid, config: &MvConfig) -> Result<ScalarField> {
    check_field(u, grid)?;
    let scheme = Scheme::new(grid, config)?;
    let mut out = vec![0.0; grid.len()];
    scheme.sweep(u.values(), &mut out, &mut Vec::new());
    Ok(ScalarField::new(out))
}

fn check_field(u: &ScalarField, grid: &Grid) -> Result<()> {
    if u.len() != grid.len() {
        return Err(Error::invalid(
            "field",
            format!("field has {} values for {} nodes", u.len(), grid.len()),
        ));
    }
    Ok(())
}

/// Iterates the scheme from the configured initialization to a fixed point.
///
/// Non-convergence is not an error: the report's `truncated` flag is set and
/// the last iterate is returned.
pub fn solve_mv(
    grid: &Grid,
    g: &BoundaryData,
    config: &MvConfig,
) -> Result<(ScalarField, SolveReport)> {
    let scheme = Scheme::new(grid, config)?;
    let init = initial_field(grid, g, scheme.stencil(), config.initialization);
    Ok(iterate(&scheme, init, config))
}

/// Like [`solve_mv`] but starting from a caller-provided field, whose
/// boundary values are overwritten with `g`.
pub fn solve_mv_from(
    grid: &Grid,
    g: &BoundaryData,
    config: &MvConfig,
    start: &ScalarField,
) -> Result<(ScalarField, SolveReport)> {
    check_field(start, grid)?;
    let scheme = Scheme::new(grid, config)?;
    let mut init = start.clone();
    for (k, &b) in grid.boundary().iter().enumerate() {
        init.set(b, g.value(k));
    }
    Ok(iterate(&scheme, init, config))
}

fn iterate(
    scheme: &Scheme<'_>,
    init: ScalarField,
    config: &MvConfig,
) -> (ScalarField, SolveReport) {
    let started = Instant::now();
    let grid = scheme.grid;
    let mut u = init.into_values();
    let mut next = vec![0.0; u.len()];
    let mut scratch = Vec::new();
    let scale = u.iter().map(|v| v.abs()).fold(1.0, f64::max);
    let slack = 1e-13 * scale;
    let (mut non_increasing, mut non_decreasing) = (true, true);
    let mut update = f64::INFINITY;
    let mut previous = f64::INFINITY;
    let mut sweeps = 0;
    while sweeps < config.max_sweeps {
        scheme.sweep(&u, &mut next, &mut scratch);
        sweeps += 1;
        previous = update;
        update = 0.0;
        for &n in grid.interior() {
            let d = next[n] - u[n];
            update = update.max(d.abs());
            non_increasing &= d <= slack;
            non_decreasing &= d >= -slack;
        }
        std::mem::swap(&mut u, &mut next);
        if update <= config.tolerance {
            break;
        }
    }
    let contraction = if previous.is_finite() && previous > 0.0 {
        update / previous
    } else {
        0.0
    };
    let error_estimate = if contraction < 1.0 {
        update * contraction / (1.0 - contraction)
    } else {
        f64::INFINITY
    };
    let monotone = match config.initialization {
        Initialization::MwUpper => non_increasing,
        Initialization::MwLower => non_decreasing,
        Initialization::BoundaryMean => non_increasing || non_decreasing,
    };
    let field = ScalarField::new(u);
    let report = SolveReport {
        variant: config.variant.name().to_string(),
        sweeps,
        final_update: update,
        contraction,
        error_estimate,
        monotone,
        truncated: update > config.tolerance,
        min: field.min(),
        max: field.max(),
        wall_time: started.elapsed(),
    };
    (field, report)
}

/// `u(x) - (max + min) / 2` over the eps-ball at interior nodes, zero on
/// the boundary.
pub fn residual_field(u: &ScalarField, grid: &Grid, eps: f64) -> Result<ScalarField> {
    check_field(u, grid)?;
    let stencil = StencilTable::new(grid, eps)?;
    let mut r = vec![0.0; grid.len()];
    for (slot, &n) in grid.interior().iter().enumerate() {
        let mut hi = f64::NEG_INFINITY;
        let mut lo = f64::INFINITY;
        for &m in stencil.of_slot(slot) {
            hi = hi.max(u.get(m as usize));
            lo = lo.min(u.get(m as usize));
        }
        r[n] = u.get(n) - 0.5 * (hi + lo);
    }
    Ok(ScalarField::new(r))
}

#[derive(Clone, Debug)]
pub struct Sandwich {
    pub lower: ScalarField,
    pub plain: ScalarField,
    pub upper: ScalarField,
    /// `max |upper - lower|`.
    pub gap: f64,
    /// `gap / (delta diam^2 / 2)`, the measured discrete constant.
    pub constant: f64,
    pub reports: [SolveReport; 3],
}

/// Solves the lower, plain and upper schemes with shared data and verifies
/// `lower <= plain <= upper` at every node.
///
/// `delta = 0` is accepted as the degenerate case: all three solves are the
/// plain scheme from the same start and coincide exactly.
pub fn solve_sandwich(
    grid: &Grid,
    g: &BoundaryData,
    eps: f64,
    delta: f64,
    tolerance: f64,
    max_sweeps: usize,
) -> Result<Sandwich> {
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(Error::invalid(
            "delta",
            format!("must be finite and non-negative, got {delta}"),
        ));
    }
    let base = MvConfig::new(eps)
        .with_tolerance(tolerance)
        .with_max_sweeps(max_sweeps);
    let (lower_cfg, upper_cfg) = if delta == 0.0 {
        (base.clone(), base.clone())
    } else {
        (
            base.clone()
                .with_variant(SchemeVariant::Lower { delta })
                .with_initialization(Initialization::MwLower),
            base.clone().with_variant(SchemeVariant::Upper { delta }),
        )
    };
    let (lower, r_lower) = solve_mv(grid, g, &lower_cfg)?;
    let (plain, r_plain) = solve_mv(grid, g, &base)?;
    let (upper, r_upper) = solve_mv(grid, g, &upper_cfg)?;
    for n in 0..grid.len() {
        let (a, b, c) = (lower.get(n), plain.get(n), upper.get(n));
        if !(a <= b && b <= c) {
            return Err(Error::OrderingViolation(format!(
                "node {n} at {:?}: lower {a}, plain {b}, upper {c}",
                grid.coord(n)
            )));
        }
    }
    let gap = upper.sup_distance(&lower);
    let diam = grid.diameter();
    let constant = if delta > 0.0 {
        gap / (0.5 * delta * diam * diam)
    } else {
        0.0
    };
    Ok(Sandwich {
        lower,
        plain,
        upper,
        gap,
        constant,
        reports: [r_lower, r_plain, r_upper],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{boundary_trace, Shape};

    fn segment(h: f64) -> Grid {
        Grid::build(&[0.0], &[1.0], h, Shape::Rectangle).unwrap()
    }

    #[test]
    fn linear_is_fixed_point_in_1d() {
        let g = segment(0.25);
        let u = ScalarField::from_fn(&g, |x| x[0]);
        let out = mv_sweep(&u, &g, &MvConfig::new(0.25)).unwrap();
        assert_eq!(out, u);
    }

    #[test]
    fn constant_is_fixed_point() {
        let g = Grid::build(&[0.0, 0.0], &[1.0, 1.0], 0.125, Shape::LShape).unwrap();
        let u = ScalarField::constant(&g, 2.5);
        assert_eq!(mv_sweep(&u, &g, &MvConfig::new(0.3)).unwrap(), u);
    }

    #[test]
    fn hand_applied_sweep() {
        let g = segment(0.25);
        let u = ScalarField::new(vec![0.0, 0.0, 0.0, 0.0, 1.0]);
        let out = mv_sweep(&u, &g, &MvConfig::new(0.25)).unwrap();
        assert_eq!(out.values(), &[0.0, 0.0, 0.0, 0.5, 1.0]);
    }

    #[test]
    fn variant_corrections() {
        let g = segment(0.25);
        let u = ScalarField::from_fn(&g, |x| x[0]);
        let eps = 0.25;
        let q = 0.5 * eps * eps;
        let up = mv_sweep(
            &u,
            &g,
            &MvConfig::new(eps).with_variant(SchemeVariant::Upper { delta: 2.0 }),
        )
        .unwrap();
        let lo = mv_sweep(
            &u,
            &g,
            &MvConfig::new(eps).with_variant(SchemeVariant::Lower { delta: 2.0 }),
        )
        .unwrap();
        let po = mv_sweep(
            &u,
            &g,
            &MvConfig::new(eps).with_variant(SchemeVariant::Poisson(RightHandSide::constant(3.0))),
        )
        .unwrap();
        for &n in g.interior() {
            assert!((up.get(n) - (u.get(n) + 2.0 * q)).abs() < 1e-15);
            assert!((lo.get(n) - (u.get(n) - 2.0 * q)).abs() < 1e-15);
            assert!((po.get(n) - (u.get(n) - 3.0 * q)).abs() < 1e-15);
        }
        assert_eq!(up.get(0), 0.0);
        assert_eq!(up.get(4), 1.0);
    }

    #[test]
    fn config_validation() {
        let g = segment(0.25);
        let u = ScalarField::constant(&g, 0.0);
        assert!(matches!(
            mv_sweep(&u, &g, &MvConfig::new(0.2)),
            Err(Error::StencilTooSmall { .. })
        ));
        assert!(mv_sweep(&u, &g, &MvConfig::new(0.25).with_tolerance(0.0)).is_err());
        assert!(mv_sweep(&u, &g, &MvConfig::new(0.25).with_max_sweeps(0)).is_err());
        assert!(mv_sweep(
            &u,
            &g,
            &MvConfig::new(0.25).with_variant(SchemeVariant::Upper { delta: -1.0 })
        )
        .is_err());
    }

    #[test]
    fn solve_1d_linear() {
        let g = segment(1.0 / 16.0);
        let data = boundary_trace(&g, |x| x[0]).unwrap();
        for init in [
            Initialization::MwUpper,
            Initialization::MwLower,
            Initialization::BoundaryMean,
        ] {
            let cfg = MvConfig::new(1.0 / 16.0)
                .with_tolerance(1e-12)
                .with_initialization(init);
            let (u, report) = solve_mv(&g, &data, &cfg).unwrap();
            assert!(!report.truncated);
            if init != Initialization::BoundaryMean {
                assert!(report.monotone, "{init:?}");
            }
            for n in 0..g.len() {
                assert!((u.get(n) - g.coord(n)[0]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn truncation_flagged() {
        let g = segment(1.0 / 16.0);
        let data = boundary_trace(&g, |x| x[0]).unwrap();
        let cfg = MvConfig::new(1.0 / 16.0)
            .with_initialization(Initialization::BoundaryMean)
            .with_max_sweeps(3);
        let (_, report) = solve_mv(&g, &data, &cfg).unwrap();
        assert!(report.truncated);
        assert_eq!(report.sweeps, 3);
    }

    #[test]
    fn stencil_envelopes_are_super_and_subsolutions() {
        let shape = Shape::Annulus {
            r1: 0.3,
            r2: 1.0,
            center: [0.0, 0.0],
        };
        let grid = Grid::build(&[-1.0, -1.0], &[1.0, 1.0], 0.0625, shape).unwrap();
        let data = boundary_trace(&grid, |x| (3.0 * x[0]).sin() + x[1] * x[1]).unwrap();
        let eps = 0.2;
        let cfg = MvConfig::new(eps);
        let upper = stencil_envelope(&grid, &data, eps, EnvelopeSide::Upper).unwrap();
        let lower = stencil_envelope(&grid, &data, eps, EnvelopeSide::Lower).unwrap();
        assert!(lower.le(&upper));
        assert_eq!(upper.trace(&grid), data.values());
        let up = mv_sweep(&upper, &grid, &cfg).unwrap();
        let lo = mv_sweep(&lower, &grid, &cfg).unwrap();
        for n in 0..grid.len() {
            assert!(
                up.get(n) <= upper.get(n) + 1e-14,
                "{} > {}",
                up.get(n),
                upper.get(n)
            );
            assert!(
                lo.get(n) >= lower.get(n) - 1e-14,
                "{} < {}",
                lo.get(n),
                lower.get(n)
            );
        }
    }

    #[test]
    fn residual_of_cone_and_parabola_1d() {
        let h = 0.0625;
        let g = segment(h);
        let cone = ScalarField::from_fn(&g, |x| (x[0] + 0.5).abs());
        let r = residual_field(&cone, &g, h).unwrap();
        assert!(r.values().iter().all(|v| v.abs() < 1e-15));
        let q = ScalarField::from_fn(&g, |x| 0.5 * x[0] * x[0]);
        let r = residual_field(&q, &g, h).unwrap();
        for &n in g.interior() {
            assert!((r.get(n) + 0.5 * h * h).abs() < 1e-15, "{}", r.get(n));
        }
    }

    #[test]
    fn sandwich_zero_delta_coincides() {
        let g = segment(1.0 / 8.0);
        let data = boundary_trace(&g, |x| x[0] * x[0]).unwrap();
        let s = solve_sandwich(&g, &data, 1.0 / 8.0, 0.0, 1e-12, 100_000).unwrap();
        assert_eq!(s.gap, 0.0);
        assert_eq!(s.lower, s.upper);
    }
}
