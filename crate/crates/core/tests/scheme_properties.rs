use inflap::grid::{boundary_trace, BoundaryData, Grid, ScalarField, Shape};
use inflap::lipschitz::{check_max_principle, mcshane_whitney, Side};
use inflap::mv::{mv_sweep, residual_field, solve_mv, solve_sandwich, MvConfig};
use proptest::prelude::*;

fn square(h: f64) -> Grid {
    Grid::build(&[0.0, 0.0], &[1.0, 1.0], h, Shape::Rectangle).unwrap()
}

fn field(values: &[f64]) -> ScalarField {
    ScalarField::new(values.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sweep_preserves_order(
        base in prop::collection::vec(-1.0f64..1.0, 81),
        lift in prop::collection::vec(0.0f64..0.5, 81),
        k in 1usize..4,
    ) {
        let grid = square(0.125);
        let cfg = MvConfig::new(k as f64 * 0.125);
        let u = field(&base);
        let v = ScalarField::new(base.iter().zip(&lift).map(|(a, b)| a + b).collect());
        let su = mv_sweep(&u, &grid, &cfg).unwrap();
        let sv = mv_sweep(&v, &grid, &cfg).unwrap();
        prop_assert!(su.le(&sv));
    }

    #[test]
    fn sweep_is_non_expansive(
        a in prop::collection::vec(-1.0f64..1.0, 81),
        b in prop::collection::vec(-1.0f64..1.0, 81),
    ) {
        let grid = square(0.125);
        let cfg = MvConfig::new(0.25);
        let (u, v) = (field(&a), field(&b));
        let d0 = u.sup_distance(&v);
        let d1 = mv_sweep(&u, &grid, &cfg).unwrap().sup_distance(&mv_sweep(&v, &grid, &cfg).unwrap());
        prop_assert!(d1 <= d0 + 1e-15);
    }

    #[test]
    fn solutions_obey_max_principle(data in prop::collection::vec(-2.0f64..2.0, 32)) {
        let grid = square(0.125);
        let g = BoundaryData::from_values(&grid, data).unwrap();
        let (u, report) = solve_mv(&grid, &g, &MvConfig::new(0.25).with_tolerance(1e-10)).unwrap();
        prop_assert!(!report.truncated);
        let all: Vec<usize> = (0..grid.len()).collect();
        let check = check_max_principle(&u, &grid, &all, 0.0).unwrap();
        prop_assert!(check.passed, "{:?}", check);
        prop_assert!(u.min() >= g.min() - 1e-12 && u.max() <= g.max() + 1e-12);
    }

    #[test]
    fn solutions_lie_between_envelopes(data in prop::collection::vec(-2.0f64..2.0, 32)) {
        let grid = square(0.125);
        let g = BoundaryData::from_values(&grid, data).unwrap();
        let (u, _) = solve_mv(&grid, &g, &MvConfig::new(0.25).with_tolerance(1e-10)).unwrap();
        let up = mcshane_whitney(&grid, &g, Side::Upper);
        let lo = mcshane_whitney(&grid, &g, Side::Lower);
        let slack = 1e-9;
        for n in 0..grid.len() {
            prop_assert!(lo.get(n) <= u.get(n) + slack && u.get(n) <= up.get(n) + slack);
        }
    }
}

#[test]
fn fixed_point_has_small_residual() {
    let grid = square(1.0 / 32.0);
    let g = boundary_trace(&grid, |x| x[0] * x[0] - x[1]).unwrap();
    let eps = 3.0 / 32.0;
    let (u, report) = solve_mv(&grid, &g, &MvConfig::new(eps).with_tolerance(1e-12)).unwrap();
    let r = residual_field(&u, &grid, eps).unwrap();
    assert!(
        r.sup_norm() <= 10.0 * report.final_update,
        "{} vs {}",
        r.sup_norm(),
        report.final_update
    );
}

#[test]
fn sandwich_is_ordered_and_gap_shrinks_with_delta() {
    let grid = square(1.0 / 16.0);
    let g = boundary_trace(&grid, |x| (3.0 * x[0]).sin() + x[1]).unwrap();
    let mut gaps = Vec::new();
    for delta in [0.5, 0.25, 0.125] {
        let s = solve_sandwich(&grid, &g, 2.0 / 16.0, delta, 1e-11, 1_000_000).unwrap();
        assert!(s.lower.le(&s.plain) && s.plain.le(&s.upper));
        gaps.push(s.gap);
    }
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2]);
}

#[test]
fn poisson_variant_matches_monotone_parabola_in_1d() {
    use inflap::mv::{RightHandSide, SchemeVariant};
    // along a monotone profile the ball max/min are the two neighbours, so
    // the scheme is the 3-point Laplacian: u'' = -1 with u = 2.5x - x^2/2
    let grid = Grid::build(&[0.0], &[1.0], 1.0 / 16.0, Shape::Rectangle).unwrap();
    let g = boundary_trace(&grid, |x| 2.0 * x[0]).unwrap();
    let cfg = MvConfig::new(1.0 / 16.0)
        .with_tolerance(1e-14)
        .with_variant(SchemeVariant::Poisson(RightHandSide::constant(-1.0)));
    let (u, _) = solve_mv(&grid, &g, &cfg).unwrap();
    let exact = ScalarField::from_fn(&grid, |x| 2.5 * x[0] - 0.5 * x[0] * x[0]);
    assert!(u.sup_distance(&exact) < 1e-9, "{}", u.sup_distance(&exact));
}
