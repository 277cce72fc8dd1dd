use approx::assert_abs_diff_eq;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use seminorm_bounds::linalg::{lambda_max, lambda_min};
use seminorm_bounds::random::M_SIGMA_RANGE;
use seminorm_bounds::{
    assemble, complexity_g, critical_radius, dual_oracle, fourier_exact, l_func, m_sigma, mu, nu,
    tail_lambda_max_bound, translate_to_lower_t, two_by_two_f, BoundConfig, BoundEngine, DecayModel, EigenSystem,
    Error, QcqpInstance, SamplingOperator, TailMethod, ZetaSequence,
};

fn system(kind: u8, a: f64, b: f64) -> EigenSystem<f64> {
    match kind % 5 {
        0 => EigenSystem::sobolev(),
        1 => EigenSystem::polynomial(0.5 + b, 1.2 + 3.0 * a).unwrap(),
        2 => EigenSystem::exponential(0.5 + b, 0.1 + 0.8 * a).unwrap(),
        3 => EigenSystem::fourier_zeta(ZetaSequence::geometric(0.1 + 0.8 * a)).unwrap(),
        _ => EigenSystem::fourier_zeta(ZetaSequence {
            prefix: vec![1.0, 0.5 * b],
            decay: DecayModel::Polynomial { c: 0.5 * b, alpha: 1.5 + 2.0 * a },
        })
        .unwrap(),
    }
}

fn concrete_system(kind: u8, a: f64) -> EigenSystem<f64> {
    if kind.is_multiple_of(2) {
        EigenSystem::sobolev()
    } else {
        EigenSystem::fourier_zeta(ZetaSequence::geometric(0.1 + 0.8 * a)).unwrap()
    }
}

fn operator(variant: u8, n: usize, seed: u64) -> SamplingOperator<f64> {
    match variant % 4 {
        0 => SamplingOperator::uniform_grid(n).unwrap(),
        1 => SamplingOperator::random_iid(n, seed).unwrap(),
        2 => {
            let w: Vec<f64> = (0..n).map(|i| 1.0 + (i % 3) as f64).collect();
            let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            let points = seminorm_bounds::uniform_points(n, seed);
            SamplingOperator::weighted(points, w.iter().map(|v| v / norm).collect()).unwrap()
        }
        _ => SamplingOperator::fourier_truncation(n).unwrap(),
    }
}

fn psd(entries: &[f64], n: usize) -> DMatrix<f64> {
    let b = DMatrix::from_fn(n, n, |i, j| entries[(i * n + j) % entries.len()]);
    &b * b.transpose()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sigma_is_nonincreasing(kind in 0u8..5, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let sys = system(kind, a, b);
        let s = sys.sigmas(500);
        for w in s.windows(2) {
            prop_assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn partial_tails_stay_below_tail_sum(kind in 0u8..5, a in 0.0f64..1.0, b in 0.0f64..1.0, p in 1usize..40) {
        let sys = system(kind, a, b);
        prop_assume!(sys.sigma_l1().is_ok());
        let tail = sys.tail_sum(p).unwrap().value;
        let mut partial = 0.0;
        for k in p + 1..=p + 4000 {
            partial += sys.sigma(k).unwrap();
        }
        prop_assert!(partial <= tail * (1.0 + 1e-12));
    }

    #[test]
    fn closed_form_gram_matches_direct_sum(kind in 0u8..2, a in 0.0f64..1.0, n in 1usize..=16) {
        let sys = concrete_system(kind, a);
        let op = SamplingOperator::uniform_grid(n).unwrap();
        for j in 1..=6 * n {
            for k in 1..=6 * n {
                let fast = op.psi_entry(&sys, j, k).unwrap();
                let direct = op.psi_entry_direct(&sys, j, k).unwrap();
                prop_assert!((fast - direct).abs() <= 1e-10, "({j},{k}): {fast} vs {direct}");
                prop_assert_eq!(fast, op.psi_entry(&sys, k, j).unwrap());
            }
        }
    }

    #[test]
    fn sobolev_grid_is_periodic(n in 1usize..=16, j in 1usize..40, k in 1usize..40) {
        let sys = EigenSystem::<f64>::sobolev();
        let op = SamplingOperator::uniform_grid(n).unwrap();
        let v = op.psi_entry(&sys, j, k).unwrap();
        prop_assert_eq!(v, op.psi_entry(&sys, j, k + 2 * n).unwrap());
    }

    #[test]
    fn seminorm_matches_gram_form(
        kind in 0u8..2,
        a in 0.0f64..1.0,
        variant in 0u8..4,
        n in 1usize..10,
        seed in any::<u64>(),
        alpha in prop::collection::vec(-1.0f64..1.0, 1..12),
    ) {
        let sys = concrete_system(kind, a);
        let op = operator(variant, n, seed);
        let phi = op.phi_seminorm(&sys, &alpha).unwrap();
        let len = alpha.len();
        let block = assemble(&op, &sys, 1, len, 4096).unwrap();
        let x = DVector::from_fn(len, |i, _| alpha[i] * sys.sigma(i + 1).unwrap().sqrt());
        let quad = x.dot(&(block.matrix.clone() * &x));
        prop_assert!((phi * phi - quad).abs() <= 1e-8, "{} vs {quad}", phi * phi);
    }

    #[test]
    fn tail_bounds_dominate_truncated_blocks(
        kind in 0u8..2,
        a in 0.0f64..1.0,
        variant in 0u8..4,
        n in 1usize..8,
        seed in any::<u64>(),
        p in 1usize..12,
    ) {
        let sys = concrete_system(kind, a);
        let op = operator(variant, n, seed);
        let block = assemble(&op, &sys, p + 1, p + 60, 4096).unwrap();
        let lmax = block.lambda_max_weighted(&sys);
        prop_assert!(block.lambda_min() >= -1e-8 * block.lambda_max().max(1.0));
        for method in [TailMethod::Trace, TailMethod::Linf, TailMethod::Block { size: 7 }, TailMethod::TruncatedEig] {
            let r = tail_lambda_max_bound(&op, &sys, p, method, 400).unwrap();
            if r.certified {
                prop_assert!(r.value >= lmax - 1e-10, "{}: {} < {lmax}", method.name(), r.value);
            }
        }
        let trace: f64 = block.weighted(&sys).diagonal().sum();
        prop_assert!(trace >= lmax - 1e-12);
    }

    #[test]
    fn bounds_nondecreasing_in_eps(
        kind in 0u8..2,
        a in 0.0f64..1.0,
        variant in 0u8..4,
        n in 1usize..6,
        seed in any::<u64>(),
    ) {
        let sys = concrete_system(kind, a);
        let op = operator(variant, n, seed);
        let cfg = BoundConfig::for_dim(n).with_p((1..=2 * n).collect());
        let engine = BoundEngine::new(&sys, &op, &cfg).unwrap();
        let top = sys.sigma(1).unwrap().sqrt() * 1.1;
        let mut last_strong = 0.0;
        let mut last_weak = 0.0;
        for i in 0..12 {
            let eps = top * i as f64 / 11.0;
            let s = engine.strong(eps).unwrap().value;
            prop_assert!(s >= last_strong - 1e-9, "strong {s} < {last_strong}");
            last_strong = s;
            match engine.weak(eps, n) {
                Ok(w) => {
                    prop_assert!(w.value >= last_weak - 1e-12);
                    last_weak = w.value;
                }
                Err(Error::Precondition(_)) => {}
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            }
        }
    }

    #[test]
    fn l_func_is_convex(
        n in 1usize..=8,
        entries in prop::collection::vec(-1.0f64..1.0, 64),
        d in prop::collection::vec(0.0f64..2.0, 8),
        t0 in 0.0f64..5.0,
        t1 in 0.0f64..5.0,
    ) {
        let m = psd(&entries, n);
        let d = DVector::from_fn(n, |i, _| d[i]);
        let mid = l_func(0.5 * (t0 + t1), &m, &d).unwrap();
        let avg = 0.5 * (l_func(t0, &m, &d).unwrap() + l_func(t1, &m, &d).unwrap());
        prop_assert!(mid <= avg + 1e-9);
    }

    #[test]
    fn translation_inverts_fourier_bound(n in 1usize..20, frac in 0.0f64..1.0, alpha in 1.2f64..4.0) {
        let sys = EigenSystem::polynomial(1.0, alpha).unwrap();
        let s1 = sys.sigma(1).unwrap();
        let next = sys.sigma(n + 1).unwrap();
        let a = fourier_exact(1.0, &sys, n).unwrap() - fourier_exact(0.0, &sys, n).unwrap();
        let b = fourier_exact(0.0, &sys, n).unwrap();
        let delta2 = frac * s1;
        // Exact infimum: mass on coordinates 1 and n+1.
        let exact = if delta2 <= next { 0.0 } else { s1 * (delta2 - next) / (s1 - next) };
        let lower = translate_to_lower_t(a, b, delta2.sqrt()).unwrap().value;
        prop_assert!((lower - exact).abs() <= 1e-12 * s1, "{lower} vs {exact}");
    }

    #[test]
    fn diagonal_dual_equals_best_pair(
        m in prop::collection::vec(0.01f64..1.0, 1..=6),
        s in prop::collection::vec(0.0f64..1.0, 6),
        frac in 0.0f64..1.2,
    ) {
        let mut m = m;
        m.sort_by(|a, b| b.total_cmp(a));
        let n = m.len();
        let sdiag: Vec<f64> = s[..n].to_vec();
        let eps2 = frac * sdiag.iter().cloned().fold(0.0, f64::max);
        let inst = QcqpInstance::new(DVector::from_vec(m.clone()), DMatrix::from_diagonal(&DVector::from_vec(sdiag.clone())), eps2).unwrap();
        let dual = dual_oracle(&inst, 1e-13);
        let mut best = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                best = best.max(two_by_two_f(m[i], m[j], sdiag[i], sdiag[j], eps2).unwrap());
            }
        }
        prop_assert!((dual - best).abs() <= 1e-7, "dual {dual} vs pairs {best}");
    }

    #[test]
    fn two_by_two_is_monotone_and_concave(
        u2 in 0.05f64..1.0,
        vf in 0.0f64..1.0,
        a2 in 0.0f64..1.5,
        d2 in 0.0f64..1.5,
    ) {
        let v2 = u2 * vf;
        let f = |e2: f64| two_by_two_f(u2, v2, a2, d2, e2).unwrap();
        let pts: Vec<f64> = (0..=40).map(|i| f(u2 * i as f64 / 40.0)).collect();
        for w in pts.windows(3) {
            prop_assert!(w[1] >= w[0] - 1e-12);
            prop_assert!(w[1] >= 0.5 * (w[0] + w[2]) - 1e-12);
        }
    }

    #[test]
    fn dual_is_nondecreasing_in_truncation(
        kind in 0u8..2,
        a in 0.0f64..1.0,
        variant in 0u8..3,
        n in 1usize..6,
        seed in any::<u64>(),
        frac in 0.0f64..1.0,
    ) {
        let sys = concrete_system(kind, a);
        let op = operator(variant, n, seed);
        let eps2 = frac * sys.sigma(1).unwrap();
        let mut last = 0.0;
        let mut truncs = vec![1, 2, 4, n + 2, n + 6, n + 12];
        truncs.sort_unstable();
        for trunc in truncs {
            let inst = QcqpInstance::from_operator(&op, &sys, trunc, eps2).unwrap();
            let v = dual_oracle(&inst, 1e-13);
            prop_assert!(v >= last - 1e-9, "N={trunc}: {v} < {last}");
            last = last.max(v);
        }
    }

    #[test]
    fn complexity_over_eps_is_nonincreasing(kind in 0u8..5, a in 0.0f64..1.0, b in 0.0f64..1.0, n in 1usize..10_000) {
        let sys = system(kind, a, b);
        prop_assume!(sys.sigma_l1().is_ok());
        let mut last = f64::INFINITY;
        for i in 1..=30 {
            let eps = 0.05 * i as f64;
            let v = complexity_g(n, &sys, eps).unwrap() / eps;
            prop_assert!(v <= last * (1.0 + 1e-12));
            last = v;
        }
        let r = critical_radius(n, &sys, 1e-12).unwrap();
        let g = complexity_g(n, &sys, r).unwrap();
        prop_assert!((g - r * r).abs() <= 1e-10, "G(r) = {g}, r^2 = {}", r * r);
    }

    #[test]
    fn nu_at_m_sigma_is_at_most_mu(kind in 1u8..4, a in 0.0f64..1.0, b in 0.0f64..1.0, frac in 0.001f64..0.99) {
        let sys = system(kind, a, b);
        let m = m_sigma(&sys, M_SIGMA_RANGE).unwrap();
        let eps = (frac * sys.sigma(1).unwrap()).sqrt();
        let mu_v = mu(eps, &sys).unwrap();
        prop_assume!(M_SIGMA_RANGE.contains(&mu_v));
        prop_assert!(nu(eps, m, &sys).unwrap() <= mu_v);
    }

    #[test]
    fn mu_is_at_most_twice_n_r2(n in 2usize..100_000, scale in 1.0f64..3.0) {
        let sys = EigenSystem::polynomial(1.0, 2.0).unwrap();
        let r = critical_radius(n, &sys, 1e-12).unwrap();
        let eps = r * scale;
        prop_assume!(eps * eps < 1.0);
        let m = mu(eps, &sys).unwrap();
        prop_assert!(m as f64 <= 2.0 * n as f64 * r * r, "mu = {m}, 2 n r^2 = {}", 2.0 * n as f64 * r * r);
    }
}

#[test]
fn eigenfunctions_are_orthonormal_under_quadrature() {
    let q = 10_000;
    for sys in [EigenSystem::<f64>::sobolev(), EigenSystem::fourier_zeta(ZetaSequence::geometric(0.5)).unwrap()] {
        let k = 20;
        let mut gram = DMatrix::<f64>::zeros(k, k);
        for i in 0..q {
            let x = (i as f64 + 0.5) / q as f64;
            let v: Vec<f64> = (1..=k).map(|j| sys.eval_psi(j, x).unwrap()).collect();
            for a in 0..k {
                for b in 0..k {
                    gram[(a, b)] += v[a] * v[b] / q as f64;
                }
            }
        }
        let err = (gram - DMatrix::identity(k, k)).abs().max();
        assert!(err <= 1e-4, "{}: {err}", sys.kind_name());
    }
}

#[test]
fn sobolev_mercer_series_converges_to_min() {
    let sys = EigenSystem::<f64>::sobolev();
    let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let mut last = f64::INFINITY;
    for k in [4, 16, 64, 256, 1024] {
        let mut err = 0.0f64;
        for &x in &grid {
            for &y in &grid {
                err = err.max((sys.mercer_eval(x, y, k).unwrap() - x.min(y)).abs());
            }
        }
        assert!(err < last, "K = {k}: {err} >= {last}");
        last = err;
    }
    assert!(last < 1e-3);
}

#[test]
fn psd_blocks_for_fixed_cases() {
    let sys = EigenSystem::<f64>::sobolev();
    let op = SamplingOperator::uniform_grid(9).unwrap();
    let block = assemble(&op, &sys, 1, 54, 4096).unwrap();
    assert!(lambda_min(&block.matrix) >= -1e-8 * lambda_max(&block.matrix));
    assert_abs_diff_eq!(block.get(1, 1), 1.0 + 1.0 / 9.0, epsilon = 1e-12);
}
