use empirical_likelihood::el::{self, Sample};
use empirical_likelihood::maxent;
use empirical_likelihood::multi::{self, VectorSample};
use empirical_likelihood::sim::{self, OracleObjective, SeededStream};
use proptest::prelude::*;
use rand::Rng;

const TOL: f64 = 1e-12;

/// Samples with values of both signs.
fn feasible_h(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    (
        prop::collection::vec(-10.0f64..-1e-3, 1..max_len / 2 + 1),
        prop::collection::vec(1e-3f64..10.0, 1..max_len / 2 + 1),
        prop::collection::vec(-10.0f64..10.0, 0..max_len / 2 + 1),
        any::<u64>(),
    )
        .prop_map(|(neg, pos, rest, key)| {
            let mut h: Vec<f64> = neg.into_iter().chain(pos).chain(rest).collect();
            // deterministic shuffle so signs are interleaved
            let n = h.len();
            for i in (1..n).rev() {
                let j = (key.wrapping_mul(i as u64 + 0x9e37_79b9) >> 7) as usize % (i + 1);
                h.swap(i, j);
            }
            h
        })
}

fn points_2d(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, 8..2 * max_len).prop_map(|mut v| {
        v.truncate(v.len() / 2 * 2);
        v
    })
}

fn assert_primal_feasible(h: &[f64], w: &[f64]) {
    let sum: f64 = w.iter().sum();
    let moment: f64 = w.iter().zip(h).map(|(a, b)| a * b).sum();
    let scale = 1.0 + h.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!((sum - 1.0).abs() <= 1e-12, "sum {sum}");
    assert!(moment.abs() <= 1e-10 * scale, "moment {moment}");
    assert!(w.iter().all(|&x| x > 0.0 && x < 1.0), "weights {w:?}");
}

/// A random strictly positive point of the feasible set.
fn random_feasible_point<R: Rng>(rng: &mut R, h: &[f64]) -> Vec<f64> {
    let u: Vec<f64> = h.iter().map(|_| 0.05 + rng.random::<f64>()).collect();
    let pos: f64 = u.iter().zip(h).filter(|(_, &v)| v > 0.0).map(|(a, b)| a * b).sum();
    let neg: f64 = u.iter().zip(h).filter(|(_, &v)| v < 0.0).map(|(a, b)| a * b).sum();
    let t = -neg / pos;
    let w: Vec<f64> = u.iter().zip(h).map(|(a, &v)| if v > 0.0 { a * t } else { *a }).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn feasible_solves_satisfy_the_constraints(h in feasible_h(60)) {
        let s = Sample::new(h.clone()).unwrap();
        let sol = el::solve(&s, TOL).unwrap();
        prop_assert!(sol.feasible);
        assert_primal_feasible(&h, &sol.weights);
        for &v in &h {
            prop_assert!(1.0 + sol.lambda_hat * v > 0.0);
        }
    }

    #[test]
    fn g_is_decreasing_and_changes_sign(h in feasible_h(30), seed in any::<u64>()) {
        let s = Sample::new(h).unwrap();
        let (lo, hi) = el::feasible_interval(&s).unwrap();
        let lambda = el::solve_lambda(&s, TOL).unwrap();
        let mut rng = SeededStream::new(seed, 0).rng();
        let mut pts: Vec<f64> = (0..100)
            .map(|_| lo + (hi - lo) * (0.001 + 0.998 * rng.random::<f64>()))
            .collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let g: Vec<f64> = pts.iter().map(|&l| el::g(&s, l).unwrap()).collect();
        for w in g.windows(2) {
            prop_assert!(w[1] < w[0]);
        }
        let span = hi - lo;
        let left = (lambda - 1e-3 * span).max(lo + 1e-6 * span);
        let right = (lambda + 1e-3 * span).min(hi - 1e-6 * span);
        prop_assert!(el::g(&s, left).unwrap() > 0.0);
        prop_assert!(el::g(&s, right).unwrap() < 0.0);
    }

    #[test]
    fn scale_equivariance(h in feasible_h(40), c in 1e-3f64..1e3) {
        let a = el::solve(&Sample::new(h.clone()).unwrap(), TOL).unwrap();
        let b = el::solve(&Sample::new(h.iter().map(|v| c * v).collect()).unwrap(), TOL).unwrap();
        prop_assert!((b.lambda_hat * c - a.lambda_hat).abs() <= 1e-9 * a.lambda_hat.abs().max(1e-3));
        for (x, y) in a.weights.iter().zip(&b.weights) {
            prop_assert!((x - y).abs() <= 1e-10 * x, "{x} vs {y}");
        }
    }

    #[test]
    fn permutation_equivariance(h in feasible_h(40), rot in 0usize..40) {
        let n = h.len();
        let perm: Vec<usize> = (0..n).map(|i| (i * 7 + rot) % n).collect();
        let mut seen = vec![false; n];
        for &p in &perm { seen[p] = true; }
        prop_assume!(seen.iter().all(|&s| s));
        let permuted: Vec<f64> = perm.iter().map(|&p| h[p]).collect();
        let a = el::solve(&Sample::new(h.clone()).unwrap(), TOL).unwrap();
        let b = el::solve(&Sample::new(permuted).unwrap(), TOL).unwrap();
        prop_assert!((a.lambda_hat - b.lambda_hat).abs() <= 1e-12 * (1.0 + a.lambda_hat.abs()));
        prop_assert!((a.wilks.unwrap() - b.wilks.unwrap()).abs() <= 1e-9 * (1.0 + a.wilks.unwrap()));
        for (i, &p) in perm.iter().enumerate() {
            prop_assert!((b.weights[i] - a.weights[p]).abs() <= 1e-12);
        }
    }

    #[test]
    fn sign_antisymmetry(h in feasible_h(40)) {
        let a = el::solve(&Sample::new(h.clone()).unwrap(), TOL).unwrap();
        let b = el::solve(&Sample::new(h.iter().map(|v| -v).collect()).unwrap(), TOL).unwrap();
        prop_assert!((a.lambda_hat + b.lambda_hat).abs() <= 1e-12 * (1.0 + a.lambda_hat.abs()));
        for (x, y) in a.weights.iter().zip(&b.weights) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn dual_objective_matches_log_likelihood(h in feasible_h(60)) {
        let s = Sample::new(h.clone()).unwrap();
        let sol = el::solve(&s, TOL).unwrap();
        let n = h.len() as f64;
        let dual = el::dual_objective(&s, sol.lambda_hat).unwrap();
        prop_assert!((dual - (sol.log_likelihood + n * n.ln())).abs() <= 1e-8);
    }

    #[test]
    fn one_dimensional_vector_solve_matches(h in feasible_h(60)) {
        let s = Sample::new(h).unwrap();
        let a = el::solve(&s, TOL).unwrap();
        let b = multi::solve_multi(&VectorSample::from(&s), TOL).unwrap();
        prop_assert!((a.lambda_hat - b.lambda_hat[0]).abs() <= 1e-10 * (1.0 + a.lambda_hat.abs()));
        for (x, y) in a.weights.iter().zip(&b.weights) {
            prop_assert!((x - y).abs() <= 1e-10);
        }
    }

    #[test]
    fn vector_solves_are_feasible_and_ascend(data in points_2d(40), shift in (-1.0f64..1.0, -1.0f64..1.0)) {
        let data: Vec<f64> = data.chunks(2).flat_map(|p| [p[0] + shift.0, p[1] + shift.1]).collect();
        let s = VectorSample::from_flat(2, data.clone()).unwrap();
        prop_assume!(multi::check_feasibility_multi(&s));
        let sol = multi::solve_multi(&s, TOL).unwrap();
        let sum: f64 = sol.weights.iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-12);
        let scale = 1.0 + s.max_norm();
        for k in 0..2 {
            let m: f64 = sol.weights.iter().zip(s.rows()).map(|(w, h)| w * h[k]).sum();
            prop_assert!(m.abs() <= 1e-10 * scale, "moment {k}: {m}");
        }
        prop_assert!(sol.weights.iter().all(|&w| w > 0.0 && w < 1.0));
        prop_assert_eq!(sol.objective_trace[0], 0.0);
        for w in sol.objective_trace.windows(2) {
            prop_assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn linear_maps_preserve_weights(
        data in points_2d(40),
        m in prop::array::uniform4(-2.0f64..2.0),
    ) {
        let det = m[0] * m[3] - m[1] * m[2];
        prop_assume!(det.abs() > 0.2);
        let s = VectorSample::from_flat(2, data).unwrap();
        prop_assume!(multi::check_feasibility_multi(&s));
        let a = multi::solve_multi(&s, TOL).unwrap();
        let b = multi::solve_multi(&s.transform(&m).unwrap(), TOL).unwrap();
        for (x, y) in a.weights.iter().zip(&b.weights) {
            prop_assert!((x - y).abs() <= 1e-8);
        }
        // lambda(Ah) = A^{-T} lambda(h)
        let inv_t = [m[3] / det, -m[2] / det, -m[1] / det, m[0] / det];
        let expected = [
            inv_t[0] * a.lambda_hat[0] + inv_t[1] * a.lambda_hat[1],
            inv_t[2] * a.lambda_hat[0] + inv_t[3] * a.lambda_hat[1],
        ];
        for (got, want) in b.lambda_hat.iter().zip(expected) {
            prop_assert!((got - want).abs() <= 1e-8 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn maxent_constraints_and_shift_invariance(h in feasible_h(40), c in -50.0f64..50.0) {
        let s = Sample::new(h.clone()).unwrap();
        let a = maxent::solve_maxent(&s, 0.0, TOL).unwrap();
        assert_primal_feasible(&h, &a.weights);
        let shifted = Sample::new(h.iter().map(|v| v + c).collect()).unwrap();
        let b = maxent::solve_maxent(&shifted, c, TOL).unwrap();
        prop_assert!((a.kappa - b.kappa).abs() <= 1e-8 * (1.0 + a.kappa.abs()));
        for (x, y) in a.weights.iter().zip(&b.weights) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn maxent_phi_is_increasing(h in feasible_h(20), k1 in -3.0f64..3.0, dk in 1e-3f64..3.0) {
        let s = Sample::new(h).unwrap();
        prop_assert!(maxent::phi(&s, 0.0, k1 + dk) > maxent::phi(&s, 0.0, k1));
    }

    #[test]
    fn two_point_maxent_equals_el(lo in -10.0f64..-1e-2, hi in 1e-2f64..10.0) {
        let s = Sample::new(vec![lo, hi]).unwrap();
        let a = maxent::solve_maxent(&s, 0.0, TOL).unwrap();
        let b = el::solve(&s, TOL).unwrap();
        for (x, y) in a.weights.iter().zip(&b.weights) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn oracle_beats_random_feasible_points(h in feasible_h(6), seed in any::<u64>()) {
        let h: Vec<f64> = h.into_iter().take(6).collect();
        prop_assume!(h.iter().any(|&v| v > 0.0) && h.iter().any(|&v| v < 0.0));
        let s = Sample::new(h.clone()).unwrap();
        let v = VectorSample::from(&s);
        let mut rng = SeededStream::new(seed, 1).rng();
        for objective in [OracleObjective::LogLikelihood, OracleObjective::Entropy] {
            let w = sim::primal_oracle(&v, objective, 1e-13).unwrap();
            assert_primal_feasible(&h, &w);
            let best = objective.value(&w);
            for _ in 0..20 {
                let p = random_feasible_point(&mut rng, &h);
                prop_assert!(objective.value(&p) <= best + 1e-12);
            }
        }
    }
}

#[test]
fn maxent_shift_is_exact_for_dyadic_data() {
    let h = [-1.5, 0.25, 2.0, -0.75, 3.5];
    let a = maxent::solve_maxent(&Sample::new(h.to_vec()).unwrap(), 0.0, TOL).unwrap();
    let shifted: Vec<f64> = h.iter().map(|v| v + 8.0).collect();
    let b = maxent::solve_maxent(&Sample::new(shifted).unwrap(), 8.0, TOL).unwrap();
    assert_eq!(a, b);
}
