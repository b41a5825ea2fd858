use inflap::analytic::{gradient_fd, infinity_laplacian_fd, CatalogEntry};
use inflap::grid::norm;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_point(rng: &mut ChaCha8Rng, dim: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(lo..hi)).collect()
}

#[test]
fn speed_is_constant_along_stream_lines() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let entries = [
        CatalogEntry::cone(&[0.3, -0.2], 0.5, 2.0),
        CatalogEntry::Affine {
            coef: vec![1.5, -0.5],
            offset: 3.0,
        },
    ];
    for entry in &entries {
        for _ in 0..50 {
            let x = random_point(&mut rng, 2, 1.0, 3.0);
            let f = |y: &[f64]| entry.eval(y).unwrap();
            let g = gradient_fd(f, &x, 1e-3).unwrap();
            let speed = norm(&g);
            let t = rng.gen_range(0.01..0.5);
            let y: Vec<f64> = x.iter().zip(&g).map(|(a, d)| a + t * d / speed).collect();
            let later = norm(&gradient_fd(f, &y, 1e-3).unwrap());
            assert!(
                (speed - later).abs() <= 1e-4,
                "{} at {x:?}: {speed} vs {later}",
                entry.id()
            );
        }
    }
}

#[test]
fn disjoint_variable_sum_is_infinity_harmonic() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let entry = CatalogEntry::DisjointSum;
    // the truncation error scales with 7^3 / r^3 in the (x3, x4) pair, so
    // generic points keep both radii of order one
    for _ in 0..50 {
        let x = random_point(&mut rng, 5, 1.0, 2.0);
        let d = infinity_laplacian_fd(|y| entry.eval(y).unwrap(), &x, 1e-3).unwrap();
        assert!(d.abs() <= 1e-4, "{x:?}: {d}");
    }
}

#[test]
fn finite_difference_error_is_second_order() {
    // compare against the exact operator so the order is visible even where
    // the operator itself vanishes
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let entries = [
        CatalogEntry::cone(&[0.0, 0.0], 0.0, 1.0),
        CatalogEntry::Aronsson,
        CatalogEntry::Arctan2,
        CatalogEntry::RadialP {
            p: 4.0,
            n: 2,
            center: None,
        },
    ];
    let h = 2e-2;
    for entry in &entries {
        let mut orders = Vec::new();
        for _ in 0..20 {
            let x = random_point(&mut rng, 2, 0.5, 2.0);
            assert!(entry.is_regular(&x));
            let exact = entry.exact_infinity_laplacian(&x);
            let f = |y: &[f64]| entry.eval(y).unwrap();
            let e1 = (infinity_laplacian_fd(f, &x, h).unwrap() - exact).abs();
            let e2 = (infinity_laplacian_fd(f, &x, h / 2.0).unwrap() - exact).abs();
            if e2 > 1e-11 {
                orders.push((e1 / e2).log2());
            }
        }
        orders.sort_by(f64::total_cmp);
        if let Some(median) = orders.get(orders.len() / 2) {
            assert!(*median >= 1.9, "{}: median order {median}", entry.id());
        }
    }
}
