use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regiofit::torczon::{initial_simplex, minimize, Bounds, MdsConfig, StopReason};

/// Rank of a dense matrix by Gaussian elimination with partial pivoting.
fn rank(mut rows: Vec<Vec<f64>>, tol: f64) -> usize {
    let cols = rows.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows.len()).max_by(|&i, &j| rows[i][c].abs().total_cmp(&rows[j][c].abs())) else {
            break;
        };
        if rows[p][c].abs() <= tol {
            continue;
        }
        rows.swap(r, p);
        for i in r + 1..rows.len() {
            let factor = rows[i][c] / rows[r][c];
            for k in c..cols {
                rows[i][k] -= factor * rows[r][k];
            }
        }
        r += 1;
    }
    r
}

#[test]
fn simplex_28_is_full_affine_rank() {
    let mut rng = ChaCha8Rng::seed_from_u64(28);
    for _ in 0..20 {
        let x0: Vec<f64> = (0..28).map(|_| rng.random_range(-50.0..50.0)).collect();
        let steps: Vec<f64> = (0..28).map(|_| rng.random_range(1e-3..5.0)).collect();
        let simplex = initial_simplex(&x0, &steps).unwrap();
        assert_eq!(simplex.len(), 29);
        let diffs: Vec<Vec<f64>> = simplex[1..]
            .iter()
            .map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| a - b).collect())
            .collect();
        assert_eq!(rank(diffs, 1e-12), 28);
    }
}

#[test]
fn rank_helper_sees_degeneracy() {
    let rows = vec![vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0], vec![0.0, 1.0, 1.0]];
    assert_eq!(rank(rows, 1e-12), 2);
}

fn quadratic(center: &[f64]) -> impl Fn(&[f64]) -> f64 + Sync + '_ {
    move |x: &[f64]| x.iter().zip(center).map(|(a, b)| (a - b).powi(2)).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn best_cost_never_increases(
        center in prop::collection::vec(-3.0f64..3.0, 2..6),
        tilt in 0.0f64..2.0,
        parallel: bool,
    ) {
        let n = center.len();
        let f = |x: &[f64]| {
            let q: f64 = quadratic(&center)(x);
            q + tilt * (x[0] * 3.0).sin().powi(2)
        };
        let cfg = MdsConfig { max_evals: 4_000, parallel, ..MdsConfig::default() };
        let r = minimize(f, &vec![0.5; n], &Bounds::unbounded(n), &cfg).unwrap();
        for pair in r.trace.windows(2) {
            prop_assert!(pair[1].best_cost <= pair[0].best_cost);
        }
        prop_assert!(r.evals <= cfg.max_evals);
        prop_assert_eq!(r.cost_best, f(&r.x_best));
    }

    #[test]
    fn best_point_stays_in_box(lo in -2.0f64..0.0, width in 0.5f64..3.0) {
        let b = Bounds::new(vec![lo, lo], vec![lo + width, lo + width]).unwrap();
        let start = vec![lo + width / 2.0; 2];
        let f = quadratic(&[10.0, -10.0]);
        let r = minimize(f, &start, &b, &MdsConfig { max_evals: 3_000, ..MdsConfig::default() }).unwrap();
        prop_assert!(b.contains(&r.x_best));
    }
}

#[test]
fn quadratic_reaches_optimum() {
    let f = quadratic(&[1.0, 1.0]);
    let r = minimize(f, &[0.0, 0.0], &Bounds::unbounded(2), &MdsConfig::default()).unwrap();
    assert_eq!(r.stop_reason, StopReason::SizeTol);
    assert!(r.x_best.iter().all(|v| (v - 1.0).abs() < 1e-4));
    assert!(r.cost_best < 1e-6);
}
