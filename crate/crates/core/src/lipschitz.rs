//! Lipschitz extensions and discrete checks of the comparison properties
//! enjoyed by infinity-harmonic functions.
//!
//! Every check returns a [`ComparisonReport`]; a check fails exactly when
//! its worst violation exceeds the tolerance recorded in the report. The
//! tolerances are `c * h` (plus a small multiple of `‖u‖∞` where rounding
//! matters) with `c` supplied by the caller.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{distance, pairwise_lipschitz, BoundaryData, Grid, NodeKind, ScalarField, Shape};
use crate::mv::{solve_mv, MvConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Upper,
    Lower,
}

/// `min_ξ g(ξ) + L|x - ξ|` (upper) or `max_ξ g(ξ) - L|x - ξ|` (lower) over
/// boundary nodes, with `L` the Lipschitz constant of `g`.
pub fn mcshane_whitney(grid: &Grid, g: &BoundaryData, side: Side) -> ScalarField {
    let l = g.lipschitz();
    let boundary = grid.boundary();
    let values: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|n| {
            if !grid.is_interior(n) {
                return g.value(grid.slot(n));
            }
            let x = grid.coord(n);
            let cones = boundary
                .iter()
                .enumerate()
                .map(|(k, &b)| (g.value(k), distance(x, grid.coord(b))));
            match side {
                Side::Upper => cones.map(|(v, d)| v + l * d).fold(f64::INFINITY, f64::min),
                Side::Lower => cones
                    .map(|(v, d)| v - l * d)
                    .fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect();
    ScalarField::new(values)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LipschitzConstant {
    pub value: f64,
    /// The region had a single node, so no pair was available.
    pub singleton: bool,
}

/// Max of `|u(x) - u(y)| / |x - y|` over pairs of nodes in `region`.
pub fn lipschitz_constant(
    u: &ScalarField,
    grid: &Grid,
    region: &[usize],
) -> Result<LipschitzConstant> {
    if region.is_empty() {
        return Err(Error::invalid("region", "region has no nodes"));
    }
    if u.len() != grid.len() || region.iter().any(|&n| n >= grid.len()) {
        return Err(Error::invalid(
            "region",
            "region or field does not match the grid",
        ));
    }
    Ok(LipschitzConstant {
        value: pairwise_lipschitz(grid, region, |k| u.get(region[k])),
        singleton: region.len() == 1,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ComparisonReport {
    pub property: String,
    pub passed: bool,
    /// Amount by which the inequality is broken, zero if it holds.
    pub violation: f64,
    pub tolerance: f64,
    /// Property-specific extreme value (slack, ratio, Lipschitz gap, ...).
    pub worst: f64,
    pub worst_locations: Vec<Vec<f64>>,
    pub parameters: BTreeMap<String, f64>,
}

impl ComparisonReport {
    fn new(property: &str, violation: f64, tolerance: f64, worst: f64) -> Self {
        let violation = violation.max(0.0);
        ComparisonReport {
            property: property.to_string(),
            passed: violation <= tolerance,
            violation,
            tolerance,
            worst,
            worst_locations: Vec::new(),
            parameters: BTreeMap::new(),
        }
    }

    fn at(mut self, grid: &Grid, nodes: &[usize]) -> Self {
        self.worst_locations = nodes.iter().map(|&n| grid.coord(n).to_vec()).collect();
        self
    }

    fn param(mut self, name: &str, value: f64) -> Self {
        self.parameters.insert(name.to_string(), value);
        self
    }
}

/// Membership mask for a node set; rejects empty sets and foreign nodes.
fn region_mask(grid: &Grid, nodes: &[usize]) -> Result<Vec<bool>> {
    if nodes.is_empty() {
        return Err(Error::invalid("subdomain", "subdomain has no nodes"));
    }
    let mut mask = vec![false; grid.len()];
    for &n in nodes {
        if n >= grid.len() {
            return Err(Error::invalid(
                "subdomain",
                format!("node {n} is not on the grid"),
            ));
        }
        mask[n] = true;
    }
    Ok(mask)
}

/// Nodes of the set having an axis neighbour (distance `h`) outside it.
pub fn subdomain_boundary(grid: &Grid, nodes: &[usize]) -> Result<Vec<usize>> {
    let mask = region_mask(grid, nodes)?;
    let mut out: Vec<usize> = nodes
        .iter()
        .copied()
        .filter(|&n| {
            grid.axis_neighbors(n)
                .iter()
                .any(|m| !m.is_some_and(|m| mask[m]))
        })
        .collect();
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Nodes within distance `radius` of `center` (closed ball), ascending.
pub fn nodes_in_ball(grid: &Grid, center: &[f64], radius: f64) -> Vec<usize> {
    (0..grid.len())
        .filter(|&n| distance(grid.coord(n), center) <= radius)
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConeSide {
    /// `u - b|x - x0|` is bounded above by its boundary maximum.
    Above,
    /// `u - b|x - x0|` is bounded below by its boundary minimum.
    Below,
}

/// Checks `u(x) - b|x - x0| <= max_{∂D}(u - b|· - x0|)` (above) or the
/// reversed inequality with the minimum (below) at every node of `D`.
/// Tolerance `1e-6 ‖u‖∞ + c h`.
pub fn check_cone_comparison(
    u: &ScalarField,
    grid: &Grid,
    subdomain: &[usize],
    apex: &[f64],
    b: f64,
    side: ConeSide,
    c: f64,
) -> Result<ComparisonReport> {
    if apex.len() != grid.dim() {
        return Err(Error::invalid(
            "apex",
            "apex dimension does not match the grid",
        ));
    }
    let h = grid.h();
    for &n in subdomain {
        let cheb = grid
            .coord(n)
            .iter()
            .zip(apex)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if cheb < 0.5 * h {
            return Err(Error::Precondition(format!(
                "cone apex {apex:?} lies inside the subdomain (next to node {n})"
            )));
        }
    }
    cone_comparison(u, grid, subdomain, apex, b, side, c)
}

fn cone_comparison(
    u: &ScalarField,
    grid: &Grid,
    subdomain: &[usize],
    apex: &[f64],
    b: f64,
    side: ConeSide,
    c: f64,
) -> Result<ComparisonReport> {
    let edge = subdomain_boundary(grid, subdomain)?;
    if edge.is_empty() {
        return Err(Error::Precondition(
            "subdomain has no discrete boundary".into(),
        ));
    }
    let shifted = |n: usize| u.get(n) - b * distance(grid.coord(n), apex);
    let (bound, bound_node) = edge
        .iter()
        .map(|&n| (shifted(n), n))
        .reduce(|a, x| match side {
            ConeSide::Above if x.0 > a.0 => x,
            ConeSide::Below if x.0 < a.0 => x,
            _ => a,
        })
        .unwrap();
    // slack >= 0 where the inequality holds
    let (slack, worst_node) = subdomain
        .iter()
        .map(|&n| {
            let s = match side {
                ConeSide::Above => bound - shifted(n),
                ConeSide::Below => shifted(n) - bound,
            };
            (s, n)
        })
        .reduce(|a, x| if x.0 < a.0 { x } else { a })
        .unwrap();
    let tolerance = 1e-6 * u.sup_norm() + c * grid.h();
    let name = match side {
        ConeSide::Above => "cone_comparison_above",
        ConeSide::Below => "cone_comparison_below",
    };
    Ok(ComparisonReport::new(name, -slack, tolerance, slack)
        .at(grid, &[worst_node, bound_node])
        .param("b", b)
        .param("c", c))
}

/// Maximum and minimum principle on `D`: the `b = 0` cone checks on both
/// sides, merged into one report.
pub fn check_max_principle(
    u: &ScalarField,
    grid: &Grid,
    subdomain: &[usize],
    c: f64,
) -> Result<ComparisonReport> {
    let origin = vec![0.0; grid.dim()];
    let above = cone_comparison(u, grid, subdomain, &origin, 0.0, ConeSide::Above, c)?;
    let below = cone_comparison(u, grid, subdomain, &origin, 0.0, ConeSide::Below, c)?;
    let worse = if above.worst <= below.worst {
        above
    } else {
        below
    };
    let mut report = ComparisonReport::new(
        "max_principle",
        worse.violation,
        worse.tolerance,
        worse.worst,
    );
    report.worst_locations = worse.worst_locations;
    Ok(report.param("c", c))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HarnackForm {
    /// `u(y) <= 3 u(x)` for `x, y` in `B(x0, r)`, `4r < R`.
    Factor3,
    /// `u(x) <= u(y) exp(|x - y| / (R - r))`, `r < R`.
    Exponential,
}

/// Harnack inequality for a nonnegative field on `B(x0, R)`, checked over
/// all node pairs of the closed ball `B(x0, r)`. Tolerance `c h` on the ratio.
pub fn check_harnack(
    u: &ScalarField,
    grid: &Grid,
    x0: &[f64],
    r: f64,
    big_r: f64,
    form: HarnackForm,
    c: f64,
) -> Result<ComparisonReport> {
    if x0.len() != grid.dim() {
        return Err(Error::invalid(
            "x0",
            "centre dimension does not match the grid",
        ));
    }
    if !(r > 0.0 && big_r.is_finite()) {
        return Err(Error::invalid("r", "radii must be positive and finite"));
    }
    match form {
        HarnackForm::Factor3 if 4.0 * r >= big_r => {
            return Err(Error::invalid(
                "r",
                format!("factor-3 form needs 4r < R, got r = {r}, R = {big_r}"),
            ))
        }
        HarnackForm::Exponential if r >= big_r => {
            return Err(Error::invalid(
                "r",
                format!("exponential form needs r < R, got r = {r}, R = {big_r}"),
            ))
        }
        _ => {}
    }
    let to_boundary = grid
        .boundary()
        .iter()
        .map(|&b| distance(grid.coord(b), x0))
        .fold(f64::INFINITY, f64::min);
    if to_boundary < big_r * (1.0 - 1e-12) {
        return Err(Error::Precondition(format!(
            "B(x0, {big_r}) is not inside the domain (boundary at distance {to_boundary})"
        )));
    }
    for n in nodes_in_ball(grid, x0, big_r) {
        if u.get(n) < 0.0 {
            return Err(Error::Precondition(format!(
                "u is negative at node {n} ({:?}): {}",
                grid.coord(n),
                u.get(n)
            )));
        }
    }
    let inner: Vec<usize> = (0..grid.len())
        .filter(|&n| distance(grid.coord(n), x0) <= r * (1.0 + 1e-12))
        .collect();
    if inner.is_empty() {
        return Err(Error::Precondition(format!(
            "no node in B(x0, {r}); refine h"
        )));
    }
    // worst = max over pairs of u(x) / bound(x, y); the inequality is worst <= 1
    let mut worst = 0.0f64;
    let mut pair = (inner[0], inner[0]);
    for &x in &inner {
        for &y in &inner {
            let bound = match form {
                HarnackForm::Factor3 => 3.0 * u.get(y),
                HarnackForm::Exponential => u.get(y) * (grid.dist(x, y) / (big_r - r)).exp(),
            };
            let ratio = if u.get(x) == 0.0 {
                0.0
            } else if bound == 0.0 {
                f64::INFINITY
            } else {
                u.get(x) / bound
            };
            if ratio > worst {
                worst = ratio;
                pair = (x, y);
            }
        }
    }
    let name = match form {
        HarnackForm::Factor3 => "harnack_factor3",
        HarnackForm::Exponential => "harnack_exponential",
    };
    let spread = {
        let vals = inner.iter().map(|&n| u.get(n));
        let max = vals.clone().fold(f64::NEG_INFINITY, f64::max);
        let min = vals.fold(f64::INFINITY, f64::min);
        max / min
    };
    Ok(
        ComparisonReport::new(name, worst - 1.0, c * grid.h(), worst)
            .at(grid, &[pair.0, pair.1])
            .param("r", r)
            .param("R", big_r)
            .param("max_over_min", spread)
            .param("c", c),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileMode {
    /// `r ↦ max_{|x - x0| = r} u`, convex for subsolutions.
    Max,
    /// `r ↦ min_{|x - x0| = r} u`, concave for supersolutions.
    Min,
}

#[derive(Clone, Debug, Serialize)]
pub struct SphereProfile {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    /// Divided second differences at the inner radii.
    pub second_differences: Vec<f64>,
    pub report: ComparisonReport,
}

/// Max (or min) of `u` over the shells `||x - x0| - r| <= h/2` and a chord
/// test of convexity (concavity). Tolerance `1e-3 ‖u‖∞ + c h`.
pub fn sphere_profile(
    u: &ScalarField,
    grid: &Grid,
    x0: &[f64],
    radii: &[f64],
    mode: ProfileMode,
    c: f64,
) -> Result<SphereProfile> {
    if radii.windows(2).any(|w| w[0] >= w[1]) || radii.iter().any(|&r| r.is_nan() || r <= 0.0) {
        return Err(Error::invalid(
            "radii",
            "radii must be positive and strictly ascending",
        ));
    }
    let half = 0.5 * grid.h() * (1.0 + 1e-12);
    let mut values = Vec::with_capacity(radii.len());
    for &r in radii {
        let shell = (0..grid.len())
            .filter(|&n| (distance(grid.coord(n), x0) - r).abs() <= half)
            .map(|n| u.get(n));
        let v = match mode {
            ProfileMode::Max => shell.fold(f64::NEG_INFINITY, f64::max),
            ProfileMode::Min => shell.fold(f64::INFINITY, f64::min),
        };
        if !v.is_finite() {
            return Err(Error::Precondition(format!(
                "no node within h/2 of the sphere of radius {r}; refine h"
            )));
        }
        values.push(v);
    }
    let mut second = Vec::new();
    let mut worst = 0.0f64;
    let mut worst_at = None;
    for k in 1..radii.len().saturating_sub(1) {
        let (r0, r1, r2) = (radii[k - 1], radii[k], radii[k + 1]);
        let (v0, v1, v2) = (values[k - 1], values[k], values[k + 1]);
        second.push(2.0 * ((v2 - v1) / (r2 - r1) - (v1 - v0) / (r1 - r0)) / (r2 - r0));
        let chord = ((r2 - r1) * v0 + (r1 - r0) * v2) / (r2 - r0);
        let excess = match mode {
            ProfileMode::Max => v1 - chord,
            ProfileMode::Min => chord - v1,
        };
        if excess > worst {
            worst = excess;
            worst_at = Some(r1);
        }
    }
    let tolerance = 1e-3 * u.sup_norm() + c * grid.h();
    let name = match mode {
        ProfileMode::Max => "sphere_profile_max_convex",
        ProfileMode::Min => "sphere_profile_min_concave",
    };
    let mut report = ComparisonReport::new(name, worst, tolerance, worst).param("c", c);
    if let Some(r) = worst_at {
        report = report.param("worst_radius", r);
    }
    Ok(SphereProfile {
        radii: radii.to_vec(),
        values,
        second_differences: second,
        report,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct AmleOptions {
    pub competitors: usize,
    pub seed: u64,
    pub c: f64,
}

impl Default for AmleOptions {
    fn default() -> Self {
        AmleOptions {
            competitors: 20,
            seed: 0x5eed,
            c: 1.0,
        }
    }
}

/// Absolute minimality on `D`: the Lipschitz constant of `u` over `D` is
/// compared with that of the mean-value solution re-solved on `D` (with
/// `u` as boundary data), the McShane–Whitney extension of the trace on
/// `∂D`, and random perturbations of `u` sharing its trace. Passes if `L(u) <= L(competitor) + c h` for every competitor.
pub fn check_amle(
    u: &ScalarField,
    grid: &Grid,
    subdomain: &[usize],
    mv_config: &MvConfig,
    options: &AmleOptions,
) -> Result<ComparisonReport> {
    let mask = region_mask(grid, subdomain)?;
    if let Some(&n) = subdomain
        .iter()
        .find(|&&n| grid.kind(n) != NodeKind::Interior)
    {
        return Err(Error::Precondition(format!(
            "subdomain touches the domain boundary at node {n} ({:?})",
            grid.coord(n)
        )));
    }
    let nodes: Vec<usize> = (0..grid.len()).filter(|&n| mask[n]).collect();
    let edge = subdomain_boundary(grid, &nodes)?;
    let mut inner_mask = mask.clone();
    for &n in &edge {
        inner_mask[n] = false;
    }
    let inner: Vec<usize> = nodes.iter().copied().filter(|&n| inner_mask[n]).collect();
    if inner.is_empty() {
        return Err(Error::Precondition(
            "subdomain has no interior nodes".into(),
        ));
    }

    let resolved = resolve_on(u, grid, &inner_mask, mv_config)?;
    let own = pairwise_lipschitz(grid, &nodes, |k| u.get(nodes[k]));
    let mut competitors = vec![(
        "resolved".to_string(),
        pairwise_lipschitz(grid, &nodes, |k| resolved.get(nodes[k])),
    )];

    // McShane–Whitney extension of the trace on ∂D: its Lipschitz constant
    // is that of the trace, the least any competitor can have
    let trace_l = pairwise_lipschitz(grid, &edge, |k| u.get(edge[k]));
    let mut envelope = u.clone();
    for &n in &inner {
        let x = grid.coord(n);
        let v = edge
            .iter()
            .map(|&e| u.get(e) + trace_l * distance(x, grid.coord(e)))
            .fold(f64::INFINITY, f64::min);
        envelope.set(n, v);
    }
    competitors.push((
        "trace_extension".to_string(),
        pairwise_lipschitz(grid, &nodes, |k| envelope.get(nodes[k])),
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let scale = (u.max() - u.min()).abs().max(1e-3);
    for k in 0..options.competitors {
        let amplitude = scale * 0.05 * (k + 1) as f64 / options.competitors.max(1) as f64;
        let mut v = u.clone();
        for &n in &inner {
            v.set(n, u.get(n) + amplitude * rng.gen_range(-1.0..=1.0));
        }
        competitors.push((
            format!("perturbed_{k}"),
            pairwise_lipschitz(grid, &nodes, |i| v.get(nodes[i])),
        ));
    }
    let (best_name, best) = competitors
        .iter()
        .cloned()
        .reduce(|a, x| if x.1 < a.1 { x } else { a })
        .unwrap();
    let tolerance = options.c * grid.h();
    let mut report = ComparisonReport::new("amle", own - best, tolerance, own - best)
        .param("lipschitz_u", own)
        .param("lipschitz_resolved", competitors[0].1)
        .param("lipschitz_trace", trace_l)
        .param("lipschitz_best_competitor", best)
        .param("competitors", competitors.len() as f64)
        .param("c", options.c);
    report.property = format!("amle (tightest competitor: {best_name})");
    Ok(report)
}

/// Mean-value solution on the lattice sub-domain whose interior is
/// `inner_mask`, with boundary values taken from `u`; values outside the
/// sub-grid are copied from `u`.
fn resolve_on(
    u: &ScalarField,
    grid: &Grid,
    inner_mask: &[bool],
    mv_config: &MvConfig,
) -> Result<ScalarField> {
    let [nx, ny] = grid.extent();
    let mut rows = vec![vec![false; nx]; ny];
    for (n, &inside) in inner_mask.iter().enumerate() {
        if inside {
            let [i, j] = grid.lattice_position(n);
            rows[j][i] = true;
        }
    }
    let (lo, hi) = grid.bounds();
    let d = grid.dim();
    let sub = Grid::build(&lo[..d], &hi[..d], grid.h(), Shape::Mask { rows })?;
    let to_parent = |m: usize| -> usize {
        let [i, j] = sub.lattice_position(m);
        grid.node_at(i as isize, j as isize)
            .expect("sub-grid nodes neighbour interior nodes of the parent grid")
    };
    let data = BoundaryData::from_values(
        &sub,
        sub.boundary()
            .iter()
            .map(|&m| u.get(to_parent(m)))
            .collect(),
    )?;
    let (w, _) = solve_mv(&sub, &data, mv_config)?;
    let mut out = u.clone();
    for m in 0..sub.len() {
        out.set(to_parent(m), w.get(m));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::boundary_trace;

    fn square(h: f64) -> Grid {
        Grid::build(&[0.0, 0.0], &[1.0, 1.0], h, Shape::Rectangle).unwrap()
    }

    #[test]
    fn envelopes_of_linear_segment_data() {
        let g = Grid::build(&[0.0], &[1.0], 0.125, Shape::Rectangle).unwrap();
        let data = boundary_trace(&g, |x| x[0]).unwrap();
        let up = mcshane_whitney(&g, &data, Side::Upper);
        let lo = mcshane_whitney(&g, &data, Side::Lower);
        for n in 0..g.len() {
            assert!((up.get(n) - g.coord(n)[0]).abs() < 1e-15);
            assert!((lo.get(n) - g.coord(n)[0]).abs() < 1e-15);
        }
    }

    #[test]
    fn envelopes_of_constant_data() {
        let grid = square(0.125);
        let data = boundary_trace(&grid, |_| 2.5).unwrap();
        for side in [Side::Upper, Side::Lower] {
            assert!(mcshane_whitney(&grid, &data, side)
                .values()
                .iter()
                .all(|&v| v == 2.5));
        }
    }

    #[test]
    fn lipschitz_constant_examples() {
        let g = Grid::build(&[0.0], &[1.0], 0.125, Shape::Rectangle).unwrap();
        let all: Vec<usize> = (0..g.len()).collect();
        let lin = ScalarField::from_fn(&g, |x| x[0]);
        assert!((lipschitz_constant(&lin, &g, &all).unwrap().value - 1.0).abs() < 1e-12);
        let flat = ScalarField::constant(&g, 3.0);
        assert_eq!(lipschitz_constant(&flat, &g, &all).unwrap().value, 0.0);
        let single = lipschitz_constant(&lin, &g, &[2]).unwrap();
        assert!(single.singleton && single.value == 0.0);
        assert!(lipschitz_constant(&lin, &g, &[]).is_err());
    }

    #[test]
    fn subdomain_boundary_of_block() {
        let grid = square(0.125);
        let block: Vec<usize> = (0..grid.len())
            .filter(|&n| {
                let [i, j] = grid.lattice_position(n);
                (2..=5).contains(&i) && (2..=5).contains(&j)
            })
            .collect();
        let edge = subdomain_boundary(&grid, &block).unwrap();
        assert_eq!(block.len(), 16);
        assert_eq!(edge.len(), 12);
    }

    #[test]
    fn cone_equality_case() {
        let grid = square(0.0625);
        let apex = [-0.3, 0.4];
        let u = ScalarField::from_fn(&grid, |x| 0.7 + 1.5 * distance(x, &apex));
        let all: Vec<usize> = (0..grid.len()).collect();
        for side in [ConeSide::Above, ConeSide::Below] {
            let r = check_cone_comparison(&u, &grid, &all, &apex, 1.5, side, 0.0).unwrap();
            assert!(r.passed);
            assert!(r.worst.abs() < 1e-12, "{}", r.worst);
        }
    }

    #[test]
    fn cone_apex_inside_is_rejected() {
        let grid = square(0.125);
        let u = ScalarField::constant(&grid, 0.0);
        let all: Vec<usize> = (0..grid.len()).collect();
        let err = check_cone_comparison(&u, &grid, &all, &[0.5, 0.5], 1.0, ConeSide::Above, 0.0);
        assert!(matches!(err, Err(Error::Precondition(_))));
    }

    #[test]
    fn harnack_constant_and_affine() {
        let grid = Grid::build(&[-1.5, -1.5], &[1.5, 1.5], 0.05, Shape::Rectangle).unwrap();
        let c = ScalarField::constant(&grid, 2.0);
        for form in [HarnackForm::Factor3, HarnackForm::Exponential] {
            let r = check_harnack(&c, &grid, &[0.0, 0.0], 0.2, 1.0, form, 0.0).unwrap();
            assert!(
                r.passed
                    && (r.worst
                        - 1.0
                            / if form == HarnackForm::Factor3 {
                                3.0
                            } else {
                                1.0
                            })
                    .abs()
                        < 1e-12
            );
        }
        let affine = ScalarField::from_fn(&grid, |x| x[0] + 2.0);
        let r = check_harnack(
            &affine,
            &grid,
            &[0.0, 0.0],
            0.2,
            1.0,
            HarnackForm::Factor3,
            0.0,
        )
        .unwrap();
        assert!(r.passed);
        assert!((r.parameters["max_over_min"] - 2.2 / 1.8).abs() < 1e-9);
    }

    #[test]
    fn harnack_preconditions() {
        let grid = Grid::build(&[-1.5, -1.5], &[1.5, 1.5], 0.1, Shape::Rectangle).unwrap();
        let u = ScalarField::from_fn(&grid, |x| x[0]);
        let err =
            check_harnack(&u, &grid, &[0.0, 0.0], 0.2, 1.0, HarnackForm::Factor3, 0.0).unwrap_err();
        assert!(matches!(err, Error::Precondition(ref m) if m.contains("negative at node")));
        let pos = ScalarField::constant(&grid, 1.0);
        assert!(check_harnack(
            &pos,
            &grid,
            &[0.0, 0.0],
            0.3,
            1.0,
            HarnackForm::Factor3,
            0.0
        )
        .is_err());
        assert!(check_harnack(
            &pos,
            &grid,
            &[0.0, 0.0],
            0.2,
            2.0,
            HarnackForm::Exponential,
            0.0
        )
        .is_err());
    }

    #[test]
    fn sphere_profile_of_cone_and_plane() {
        let h = 0.02;
        let grid = Grid::build(&[-2.0, -2.0], &[2.0, 2.0], h, Shape::Rectangle).unwrap();
        let radii = [0.6, 0.8, 1.0, 1.2, 1.4];
        let cone = ScalarField::from_fn(&grid, |x| (x[0] * x[0] + x[1] * x[1]).sqrt());
        let prof =
            sphere_profile(&cone, &grid, &[0.0, 0.0], &radii, ProfileMode::Max, 1.0).unwrap();
        for (v, r) in prof.values.iter().zip(radii) {
            assert!((v - r).abs() <= 0.5 * h + 1e-12);
        }
        assert!(prof.report.passed);
        let plane = ScalarField::from_fn(&grid, |x| x[0]);
        let prof =
            sphere_profile(&plane, &grid, &[0.0, 0.0], &radii, ProfileMode::Max, 0.0).unwrap();
        assert!(prof.report.passed);
        for (v, r) in prof.values.iter().zip(radii) {
            assert!((v - r).abs() <= 0.5 * h + 1e-12);
        }
        assert!(sphere_profile(
            &plane,
            &grid,
            &[0.0, 0.0],
            &[1.0, 0.5],
            ProfileMode::Max,
            0.0
        )
        .is_err());
    }

    #[test]
    fn amle_affine_passes_and_boundary_subdomain_is_rejected() {
        let grid = square(0.0625);
        let u = ScalarField::from_fn(&grid, |x| 0.3 * x[0] - 0.8 * x[1]);
        let disc: Vec<usize> = nodes_in_ball(&grid, &[0.5, 0.5], 0.3);
        let cfg = MvConfig::new(2.0 * grid.h());
        let r = check_amle(&u, &grid, &disc, &cfg, &AmleOptions::default()).unwrap();
        assert!(r.passed, "{r:?}");
        let all: Vec<usize> = (0..grid.len()).collect();
        assert!(matches!(
            check_amle(&u, &grid, &all, &cfg, &AmleOptions::default()),
            Err(Error::Precondition(_))
        ));
    }
}
