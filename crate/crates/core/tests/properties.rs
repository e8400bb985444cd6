use mteq_core::linalg::{is_nonsingular_m_matrix, lu_solve};
use mteq_core::problems::{gen_problem1, gen_problem4, zero_out_rhs};
use mteq_core::solver::solve_positive;
use mteq_core::tensor::DEFAULT_DENSE_CAP;
use mteq_core::{MTeqProblem, Matrix, SolverConfig, Tensor};
use proptest::prelude::*;

/// All index tuples of length `m` over `0..n`, built by repeated extension.
fn all_tuples(m: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..m {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..n).map(move |j| {
                    let mut t = t.clone();
                    t.push(j);
                    t
                })
            })
            .collect();
    }
    out
}

fn naive_apply(t: &Tensor, x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; t.dim()];
    for idx in all_tuples(t.order(), t.dim()) {
        out[idx[0]] += t.get(&idx) * idx[1..].iter().map(|&j| x[j]).product::<f64>();
    }
    out
}

fn tensor_strategy() -> impl Strategy<Value = Tensor> {
    (2usize..=4, 1usize..=4).prop_flat_map(|(m, n)| {
        let len = n.pow(m as u32);
        prop::collection::vec(-2.0f64..2.0, len).prop_map(move |v| Tensor::dense(m, n, v).unwrap())
    })
}

fn tensor_and_point() -> impl Strategy<Value = (Tensor, Vec<f64>)> {
    tensor_strategy().prop_flat_map(|t| {
        let n = t.dim();
        (Just(t), prop::collection::vec(0.1f64..3.0, n))
    })
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter()
        .zip(b)
        .all(|(x, y)| (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs())))
}

proptest! {
    #[test]
    fn apply_matches_naive_sum((t, x) in tensor_and_point()) {
        let fast = t.apply(&x).unwrap();
        prop_assert!(close(&fast, &naive_apply(&t, &x), 1e-12));
        prop_assert!(close(&t.to_coo().apply(&x).unwrap(), &fast, 1e-12));
    }

    #[test]
    fn dense_coo_round_trip(t in tensor_strategy()) {
        let back = t.to_coo().to_dense(DEFAULT_DENSE_CAP).unwrap();
        prop_assert_eq!(back.storage(), t.storage());
    }

    #[test]
    fn homogeneity((t, x) in tensor_and_point(), s in 0.1f64..5.0) {
        let sx: Vec<f64> = x.iter().map(|v| s * v).collect();
        let lhs = t.apply(&sx).unwrap();
        let k = s.powi(t.order() as i32 - 1);
        let rhs: Vec<f64> = t.apply(&x).unwrap().iter().map(|v| k * v).collect();
        prop_assert!(close(&lhs, &rhs, 1e-12));
    }

    #[test]
    fn semi_symmetrize_keeps_apply((t, x) in tensor_and_point()) {
        let s = t.semi_symmetrize();
        prop_assert!(s.is_semi_symmetric());
        prop_assert!(close(&s.apply(&x).unwrap(), &t.apply(&x).unwrap(), 1e-12));
        let twice = s.semi_symmetrize();
        for (a, b) in dense(&twice).iter().zip(dense(&s)) {
            prop_assert!((a - b).abs() <= 1e-14);
        }
        // invariant under swapping two trailing indices
        if t.order() >= 3 && t.dim() >= 2 {
            let mut idx = vec![0; t.order()];
            idx[1] = 1;
            let mut swapped = idx.clone();
            swapped.swap(1, 2);
            prop_assert!((s.get(&idx) - s.get(&swapped)).abs() <= 1e-14);
        }
    }

    #[test]
    fn jacobian_matches_central_differences((t, x) in tensor_and_point()) {
        let jac = t.jacobian(&x).unwrap();
        let n = t.dim();
        for j in 0..n {
            let h = 1e-6 * (1.0 + x[j].abs());
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let fp = t.apply(&xp).unwrap();
            let fm = t.apply(&xm).unwrap();
            for i in 0..n {
                let fd = (fp[i] - fm[i]) / (2.0 * h);
                prop_assert!((jac[(i, j)] - fd).abs() <= 1e-6 * (1.0 + fd.abs()), "({i},{j})");
            }
        }
    }

    #[test]
    fn lu_solves_diagonally_dominant_systems(
        n in 1usize..12,
        seed in prop::collection::vec(-1.0f64..1.0, 144),
        rhs in prop::collection::vec(-10.0f64..10.0, 12),
    ) {
        let mut data: Vec<f64> = seed[..n * n].to_vec();
        for i in 0..n {
            let off: f64 = (0..n).filter(|&j| j != i).map(|j| data[i * n + j].abs()).sum();
            data[i * n + i] = off + 1.0;
        }
        let m = Matrix::from_row_major(n, n, data).unwrap();
        let x = lu_solve(&m, &rhs[..n]).unwrap();
        let r = m.mul_vec(&x).unwrap();
        for (ri, bi) in r.iter().zip(&rhs[..n]) {
            prop_assert!((ri - bi).abs() <= 1e-12 * (1.0 + bi.abs()));
        }
    }

    #[test]
    fn zeroing_keeps_survivors(seed in any::<u64>(), frac in 0.0f64..=1.0, n in 2usize..30) {
        let b: Vec<f64> = (1..=n).map(|i| i as f64).collect();
        let z = zero_out_rhs(&b, seed, &[0], frac).unwrap();
        prop_assert!(z[0] > 0.0);
        let zeros = z.iter().filter(|&&v| v == 0.0).count();
        prop_assert!(zeros >= 1 && zeros < n);
        for (zi, bi) in z.iter().zip(&b) {
            prop_assert!(*zi == 0.0 || zi == bi);
        }
    }
}

fn dense(t: &Tensor) -> Vec<f64> {
    let n = t.dim();
    all_tuples(t.order(), n).iter().map(|i| t.get(i)).collect()
}

/// `f'(y) y = f(y) + b`, since `f + b` is homogeneous of degree one in `y`.
#[test]
fn fprime_times_y_identity() {
    let mut draws = mteq_core::problems::UniformStream::new(99);
    for seed in 0..5 {
        for p in [
            gen_problem1(3, 8, seed, DEFAULT_DENSE_CAP).unwrap(),
            gen_problem4(4, 5, seed, DEFAULT_DENSE_CAP).unwrap(),
        ] {
            let bnorm = p.rhs().iter().map(|v| v * v).sum::<f64>().sqrt();
            for _ in 0..10 {
                let y: Vec<f64> = (0..p.dim())
                    .map(|_| 0.05 + 4.0 * draws.next_open01())
                    .collect();
                let f = p.f_eval(&y).unwrap();
                let fy = p.fprime_eval(&y).unwrap().mul_vec(&y).unwrap();
                for i in 0..p.dim() {
                    assert!((fy[i] - f[i] - p.rhs()[i]).abs() <= 1e-12 * (1.0 + bnorm));
                }
            }
        }
    }
}

/// Along every accepted iterate the Jacobian `f'(y_k)` stays a nonsingular M-matrix,
/// the iterates stay in `F_eps`, and the residual decreases.
#[test]
fn iterates_keep_m_matrix_jacobian() {
    let cfg = SolverConfig {
        keep_iterates: true,
        ..SolverConfig::default()
    };
    for seed in 0..5 {
        let p = gen_problem1(3, 12, seed, DEFAULT_DENSE_CAP).unwrap();
        let ip = mteq_core::initializer::initial_point(&p, &cfg).unwrap();
        let r = solve_positive(&p, &ip.x0, &cfg).unwrap();
        assert!(r.converged());
        for y in &r.iterates {
            assert!(is_nonsingular_m_matrix(&p.fprime_eval(y).unwrap()));
            assert!(p.in_f_eps(y, cfg.eps).unwrap());
        }
        for w in r.trace.windows(2) {
            assert!(w[1].residual_norm < w[0].residual_norm);
        }
        // loose envelope on the iterates
        let lo = ip
            .y0
            .iter()
            .chain(&r.y)
            .copied()
            .fold(f64::INFINITY, f64::min)
            / 1e3;
        let hi = ip.y0.iter().chain(&r.y).copied().fold(0.0, f64::max) * 1e3;
        assert!(r.iterates.iter().flatten().all(|&v| v >= lo && v <= hi));
    }
}

/// Two feasible starts reach the same positive solution.
#[test]
fn solution_is_unique() {
    let cfg = SolverConfig::default();
    for seed in 0..5 {
        let p = gen_problem4(3, 10, seed, DEFAULT_DENSE_CAP).unwrap();
        let ip = mteq_core::initializer::initial_point(&p, &cfg).unwrap();
        let far: Vec<f64> = ip.x0.iter().map(|v| 7.0 * v).collect();
        let a = solve_positive(&p, &ip.x0, &cfg).unwrap();
        let b = solve_positive(&p, &far, &cfg).unwrap();
        assert!(a.converged() && b.converged());
        for (u, v) in a.x.iter().zip(&b.x) {
            assert!((u - v).abs() < 1e-8, "{u} vs {v}");
        }
    }
}

/// A scaled problem keeps its solution.
#[test]
fn scaling_preserves_solution() {
    let ones = Tensor::ones(3, 2, DEFAULT_DENSE_CAP).unwrap();
    let a = Tensor::scaled_identity_minus(4.04, &ones).scaled(10.0);
    let raw = MTeqProblem::new(a.clone(), vec![10.0, 10.0]).unwrap();
    let scaled = MTeqProblem::scaled(a, vec![10.0, 10.0]).unwrap();
    assert!((scaled.omega() - 30.4).abs() < 1e-12);
    let cfg = SolverConfig::default();
    let x0 = [10.0, 10.05];
    let r1 = solve_positive(&raw, &x0, &cfg).unwrap();
    let r2 = solve_positive(&scaled, &x0, &cfg).unwrap();
    assert!(r1.converged() && r2.converged());
    for (u, v) in r1.x.iter().zip(&r2.x) {
        assert!((u - 5.0).abs() < 1e-9 && (v - 5.0).abs() < 1e-9);
    }
}

/// Scaling a generated (already scaled) problem again is the identity.
#[test]
fn rescaling_is_exact() {
    for seed in 0..10 {
        let p = gen_problem4(3, 6, seed, DEFAULT_DENSE_CAP).unwrap();
        let q = MTeqProblem::scaled(p.tensor().clone(), p.rhs().to_vec()).unwrap();
        assert_eq!(q.omega(), 1.0);
        assert_eq!(q.tensor(), p.tensor());
        assert_eq!(q.rhs(), p.rhs());
    }
}
