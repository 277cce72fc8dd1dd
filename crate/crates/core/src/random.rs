//! Random domain sampling: complexity function, critical radius, the index
//! functions `ν` and `μ`, and a Monte-Carlo check of `Ψ_p` concentration.

use std::ops::RangeInclusive;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::eigen::EigenSystem;
use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Scalar;

/// Terms summed explicitly past `μ(ε)` before switching to the tail bound.
const EXPLICIT_TERMS: usize = 16384;

/// Smallest `p ≥ 1` with `σ_p ≤ e2`.
fn mu_index<T: Scalar>(sys: &EigenSystem<T>, e2: T) -> Result<usize> {
    if sys.sigma_at(1) <= e2 {
        return Ok(1);
    }
    let mut hi = 1usize;
    while sys.sigma_at(hi) > e2 {
        hi = hi
            .checked_mul(2)
            .filter(|h| *h <= 1 << 62)
            .ok_or_else(|| Error::Resource(format!("no index with sigma_p <= {:e}", e2.as_f64())))?;
    }
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if sys.sigma_at(mid) <= e2 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `G_n(ε) = n^{−1/2} √(Σ_j min{σ_j, ε²})`.
pub fn complexity_g<T: Scalar>(n: usize, sys: &EigenSystem<T>, eps: T) -> Result<T> {
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    if !(eps >= T::zero()) {
        return Err(Error::Domain("epsilon must be nonnegative".into()));
    }
    sys.sigma_l1()?;
    let e2 = eps * eps;
    if e2 == T::zero() {
        return Ok(T::zero());
    }
    let mu = mu_index(sys, e2)?;
    let mut sum = T::from_index(mu - 1) * e2;
    let last = mu + EXPLICIT_TERMS;
    // Smallest terms first.
    let mut explicit = T::zero();
    for j in (mu..=last).rev() {
        explicit += sys.sigma_at(j);
    }
    sum += explicit + sys.tail_after(last, true).value;
    Ok((sum / T::from_index(n)).sqrt())
}

/// `r_n = inf{ε > 0 : G_n(ε) ≤ ε²}` to absolute tolerance `tol`, by bisection
/// on the decreasing function `G_n(ε)/ε − ε`.
pub fn critical_radius<T: Scalar>(n: usize, sys: &EigenSystem<T>, tol: T) -> Result<T> {
    if !(tol > T::zero()) {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    let l1 = sys.sigma_l1()?.value;
    let h = |e: T| -> Result<T> { Ok(complexity_g(n, sys, e)? / e - e) };
    let quarter = (l1 / T::from_index(n.max(1))).sqrt().sqrt();
    let mut hi = T::lit(2.0) * sys.sigma_at(1).sqrt().max(quarter);
    let mut lo = hi;
    let mut k = 0;
    while h(lo)? <= T::zero() {
        lo *= T::lit(0.5);
        k += 1;
        if k > 400 {
            return Ok(T::zero());
        }
    }
    for _ in 0..400 {
        if hi - lo <= tol {
            let g = complexity_g(n, sys, hi)?;
            if (g - hi * hi).abs() <= tol {
                break;
            }
        }
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid)? > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

fn check_below_top<T: Scalar>(sys: &EigenSystem<T>, eps: T) -> Result<T> {
    let e2 = eps * eps;
    if !(eps >= T::zero()) || e2 >= sys.sigma_at(1) {
        return Err(Error::Precondition(format!(
            "need 0 <= eps^2 < sigma_1 = {:e}, got eps^2 = {:e}",
            sys.sigma_at(1).as_f64(),
            e2.as_f64()
        )));
    }
    Ok(e2)
}

/// `μ(ε) = inf{p : σ_p ≤ ε²}`.
pub fn mu<T: Scalar>(eps: T, sys: &EigenSystem<T>) -> Result<usize> {
    let e2 = check_below_top(sys, eps)?;
    mu_index(sys, e2)
}

/// Certified tail `Σ_{k > p^m} σ_k`, with `0`-size overflow mapped to the
/// largest representable index.
fn tail_past_power<T: Scalar>(sys: &EigenSystem<T>, p: usize, m: u32) -> T {
    let q = p.checked_pow(m).unwrap_or(usize::MAX);
    sys.tail_after(q, false).value
}

/// `ν(ε; m) = inf{p ≥ 1 : Σ_{k > p^m} σ_k ≤ ε²}`.
pub fn nu<T: Scalar>(eps: T, m: u32, sys: &EigenSystem<T>) -> Result<usize> {
    let e2 = check_below_top(sys, eps)?;
    if m == 0 {
        return Err(Error::InvalidInput("m must be at least 1".into()));
    }
    sys.sigma_l1()?;
    let ok = |p: usize| tail_past_power(sys, p, m) <= e2;
    if ok(1) {
        return Ok(1);
    }
    let mut hi = 1usize;
    while !ok(hi) {
        if hi.checked_pow(m).is_none() || hi >= 1 << 62 {
            return Err(Error::Resource("nu search overflowed the index range".into()));
        }
        hi *= 2;
    }
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Default range of `p` over which tail domination is checked.
pub const M_SIGMA_RANGE: RangeInclusive<usize> = 8..=256;

/// Largest exponent tried by [`m_sigma`].
const M_SIGMA_MAX: u32 = 64;

/// Smallest `m` with `Σ_{k > p^m} σ_k ≤ σ_p` for every `p` in `p_range`.
///
/// Comparisons carry a `10⁻¹²` relative slack so that the boundary case of
/// exact equality (e.g. `σ_k = k^{−2}`, `m = 2`) is not lost to rounding.
pub fn m_sigma<T: Scalar>(sys: &EigenSystem<T>, p_range: RangeInclusive<usize>) -> Result<u32> {
    if p_range.is_empty() || *p_range.start() == 0 {
        return Err(Error::InvalidInput("p range must be nonempty and start at 1 or later".into()));
    }
    sys.sigma_l1()?;
    let slack = T::one() + T::lit(1e-12);
    for m in 1..=M_SIGMA_MAX {
        if p_range.clone().all(|p| tail_past_power(sys, p, m) <= sys.sigma_at(p) * slack) {
            return Ok(m);
        }
    }
    Err(Error::Precondition(format!("tail domination fails for every m <= {M_SIGMA_MAX}")))
}

/// Grid size used for [`c_sigma_estimate`] by default.
pub const C_SIGMA_GRID: usize = 256;

/// `sup_{p,k ≤ grid} σ_{pk} / (σ_p σ_k)`.
pub fn c_sigma_estimate<T: Scalar>(sys: &EigenSystem<T>, grid: usize) -> Result<T> {
    if grid == 0 {
        return Err(Error::InvalidInput("grid must be at least 1".into()));
    }
    let sig = sys.sigmas(grid);
    let mut best = T::zero();
    for p in 1..=grid {
        for k in p..=grid {
            let v = sys.sigma_at(p * k) / (sig[p - 1] * sig[k - 1]);
            best = best.max(v);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomSamplingReport<T> {
    pub n: usize,
    pub epsilon: T,
    pub r_n2: T,
    pub mu: usize,
    pub nu: usize,
    pub m_sigma: u32,
    pub c_sigma: T,
    /// `(p, k)` grid size behind `c_sigma`.
    pub c_sigma_grid: usize,
    pub c_psi_tilde: T,
    pub c_sigma_tilde: T,
    /// `Ĉ_ψ + Ĉ_σ`.
    pub coefficient: T,
    /// `(Ĉ_ψ + Ĉ_σ) ε²`.
    pub threshold: T,
    /// `2 exp(−1/(64 C_ψ² r_n²))`.
    pub prob_bound: T,
    /// `r_n > 0` and `64 C_ψ² m_σ r_n² log(2n r_n²) ≤ 1`.
    pub precondition_ok: bool,
}

/// Constants and probability bound for random sampling at radius `eps`,
/// valid for `ε² ∈ [r_n², σ_1)`.
pub fn corollary_bound<T: Scalar>(n: usize, sys: &EigenSystem<T>, c_psi: T, eps: T) -> Result<RandomSamplingReport<T>> {
    if !(c_psi > T::zero()) {
        return Err(Error::InvalidInput("C_psi must be positive".into()));
    }
    let r = critical_radius(n, sys, T::lit(1e-12))?;
    let r2 = r * r;
    let e2 = eps * eps;
    if !(e2 >= r2 && e2 < sys.sigma_at(1)) {
        return Err(Error::Precondition(format!(
            "eps^2 = {:e} outside [r_n^2, sigma_1) = [{:e}, {:e})",
            e2.as_f64(),
            r2.as_f64(),
            sys.sigma_at(1).as_f64()
        )));
    }
    let m = m_sigma(sys, M_SIGMA_RANGE)?;
    let c_sigma = c_sigma_estimate(sys, C_SIGMA_GRID)?;
    let l1 = sys.sigma_l1()?.value;
    let one = T::one();
    let two = T::lit(2.0);
    let c_psi_tilde = two * (one + c_psi) * (one + c_psi);
    let c_sigma_tilde = T::lit(3.0) * (one + one / c_psi) * c_sigma * l1 + one;
    let coefficient = c_psi_tilde + c_sigma_tilde;
    let c2 = c_psi * c_psi;
    let sixty_four = T::lit(64.0);
    let prob_bound = two * (-(one / (sixty_four * c2 * r2))).exp();
    let cond = sixty_four * c2 * T::from_index(m as usize) * r2 * (two * T::from_index(n) * r2).ln();
    Ok(RandomSamplingReport {
        n,
        epsilon: eps,
        r_n2: r2,
        mu: mu(eps, sys)?,
        nu: nu(eps, m, sys)?,
        m_sigma: m,
        c_sigma,
        c_sigma_grid: C_SIGMA_GRID,
        c_psi_tilde,
        c_sigma_tilde,
        coefficient,
        threshold: coefficient * e2,
        prob_bound,
        precondition_ok: r > T::zero() && cond <= one,
    })
}

/// Compute budget `p · n · trials` for [`mc_psi_concentration`].
pub const MC_BUDGET: f64 = 1e10;
pub const MC_MAX_P: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationReport<T> {
    pub p: usize,
    pub n: usize,
    pub delta: T,
    pub trials: usize,
    pub seed: u64,
    pub exceed: usize,
    pub empirical_freq: T,
    /// `p · exp(−nδ²/(4 p C_ψ²))`.
    pub lemma_bound: T,
    /// Binomial standard error at `q = min(lemma_bound, 1)`.
    pub std_err: T,
    /// `‖Ψ_p − I_p‖₂` per trial, in trial order.
    pub norms: Vec<T>,
}

impl<T: Scalar> ConcentrationReport<T> {
    /// `empirical_freq ≤ lemma_bound + 3·std_err`.
    pub fn within_bound(&self) -> bool {
        self.empirical_freq <= self.lemma_bound + T::lit(3.0) * self.std_err
    }
}

/// Draws `trials` independent uniform sample sets of size `n` and records how
/// often `‖Ψ_p − I_p‖₂ > δ`.
///
/// Trial `i` uses `ChaCha8Rng::seed_from_u64(seed)` on stream `i`, so results
/// do not depend on scheduling.
pub fn mc_psi_concentration<T: Scalar>(
    sys: &EigenSystem<T>,
    p: usize,
    n: usize,
    delta: T,
    trials: usize,
    seed: u64,
) -> Result<ConcentrationReport<T>> {
    let c_psi =
        sys.c_psi().ok_or_else(|| Error::Unsupported(format!("{} has no bounded eigenfunctions", sys.kind_name())))?;
    if n == 0 || p == 0 || trials == 0 {
        return Err(Error::Precondition("p, n and trials must be at least 1".into()));
    }
    if p > MC_MAX_P {
        return Err(Error::Resource(format!("p = {p} exceeds the Monte-Carlo cap {MC_MAX_P}")));
    }
    if (p as f64) * (n as f64) * (trials as f64) > MC_BUDGET {
        return Err(Error::Resource(format!("p*n*trials exceeds the budget {MC_BUDGET:e}")));
    }
    if !(delta > T::zero()) {
        return Err(Error::Domain("delta must be positive".into()));
    }
    let norms: Vec<T> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial as u64);
            let mut gram = DMatrix::<T>::zeros(p, p);
            let mut row = vec![T::zero(); p];
            for _ in 0..n {
                let x = T::lit(rng.random::<f64>());
                for (k, r) in row.iter_mut().enumerate() {
                    *r = sys.psi_at(k + 1, x);
                }
                for a in 0..p {
                    for b in 0..=a {
                        gram[(a, b)] += row[a] * row[b];
                    }
                }
            }
            let inv_n = T::one() / T::from_index(n);
            let dev = DMatrix::from_fn(p, p, |a, b| {
                let g = if a >= b { gram[(a, b)] } else { gram[(b, a)] } * inv_n;
                if a == b {
                    g - T::one()
                } else {
                    g
                }
            });
            linalg::sym_spectral_norm(&dev)
        })
        .collect();
    let exceed = norms.iter().filter(|v| **v > delta).count();
    let tf = T::from_index(trials);
    let empirical_freq = T::from_index(exceed) / tf;
    let pf = T::from_index(p);
    let lemma_bound = pf * (-(T::from_index(n) * delta * delta) / (T::lit(4.0) * pf * c_psi * c_psi)).exp();
    let q = lemma_bound.min(T::one());
    let std_err = (q * (T::one() - q) / tf).sqrt();
    Ok(ConcentrationReport { p, n, delta, trials, seed, exceed, empirical_freq, lemma_bound, std_err, norms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::ZetaSequence;
    use approx::assert_abs_diff_eq;

    fn poly2() -> EigenSystem<f64> {
        EigenSystem::polynomial(1.0, 2.0).unwrap()
    }

    #[test]
    fn complexity_examples() {
        let sys = poly2();
        assert_eq!(complexity_g(4, &sys, 0.0).unwrap(), 0.0);
        let g = complexity_g(4, &sys, 0.5).unwrap();
        let direct = 0.5 * (0.25 + std::f64::consts::PI.powi(2) / 6.0 - 1.0).sqrt();
        assert_abs_diff_eq!(g, direct, epsilon = 1e-6);
        assert_abs_diff_eq!(g, 0.473, epsilon = 5e-4);
        let s = EigenSystem::<f64>::sobolev();
        let l1 = s.sigma_l1().unwrap().value;
        assert_abs_diff_eq!(complexity_g(3, &s, 1.0).unwrap(), (l1 / 3.0).sqrt(), epsilon = 1e-12);
        let bad = EigenSystem::polynomial(1.0, 1.0).unwrap();
        assert!(complexity_g(3, &bad, 0.1).is_err());
    }

    #[test]
    fn critical_radius_decreases_in_n() {
        let sys = poly2();
        let mut prev = f64::INFINITY;
        for n in [10, 100, 1000] {
            let r = critical_radius(n, &sys, 1e-12).unwrap();
            let g = complexity_g(n, &sys, r).unwrap();
            assert!((g - r * r).abs() <= 1e-10);
            assert!(r < prev);
            prev = r;
        }
    }

    #[test]
    fn index_functions() {
        let sys = poly2();
        assert_eq!(mu(0.3f64.sqrt(), &sys).unwrap(), 2);
        assert!(matches!(mu(1.0, &sys), Err(Error::Precondition(_))));
        assert!(matches!(nu(1.5, 1, &sys), Err(Error::Precondition(_))));
        // Σ_{k>p²} k^{-2} ≤ 1/p² ≤ 0.01 first at p = 10.
        assert_eq!(nu(0.1, 2, &sys).unwrap(), 10);
    }

    #[test]
    fn m_sigma_examples() {
        let e = EigenSystem::exponential(1.0, 1.0 / 3.0).unwrap();
        assert_eq!(m_sigma(&e, M_SIGMA_RANGE).unwrap(), 1);
        let e = EigenSystem::exponential(1.0, 0.7).unwrap();
        assert_eq!(m_sigma(&e, M_SIGMA_RANGE).unwrap(), 2);
        for alpha in [2.0f64, 2.5, 3.0, 4.0] {
            let sys = EigenSystem::polynomial(1.0, alpha).unwrap();
            assert_eq!(m_sigma(&sys, M_SIGMA_RANGE).unwrap(), (alpha / (alpha - 1.0)).ceil() as u32, "alpha={alpha}");
        }
    }

    #[test]
    fn corollary_constants() {
        let sys = EigenSystem::<f64>::fourier_zeta(ZetaSequence::geometric(0.5)).unwrap();
        let c = sys.c_psi().unwrap();
        let n = 1000;
        let r2 = critical_radius(n, &sys, 1e-12).unwrap().powi(2);
        let rep = corollary_bound(n, &sys, c, (2.0 * r2).sqrt()).unwrap();
        assert_abs_diff_eq!(rep.c_psi_tilde, 2.0 * (1.0 + 2f64.sqrt()).powi(2), epsilon = 1e-12);
        assert_abs_diff_eq!(rep.c_psi_tilde, 11.657, epsilon = 1e-3);
        assert!(rep.prob_bound > 0.0 && rep.prob_bound <= 2.0);
        assert!(rep.mu >= rep.nu);
        assert!(matches!(corollary_bound(n, &sys, c, (0.5 * r2).sqrt()), Err(Error::Precondition(_))));
    }

    #[test]
    fn constant_eigenfunction_never_deviates() {
        let sys = EigenSystem::fourier_zeta(ZetaSequence::geometric(0.5)).unwrap();
        let rep = mc_psi_concentration(&sys, 1, 50, 1e-6, 200, 7).unwrap();
        assert_eq!(rep.exceed, 0);
        assert!(rep.norms.iter().all(|v| *v < 1e-12));
    }

    #[test]
    fn monte_carlo_is_deterministic_and_guarded() {
        let sys = EigenSystem::sobolev();
        let a = mc_psi_concentration(&sys, 3, 100, 0.5, 64, 11).unwrap();
        let b = mc_psi_concentration(&sys, 3, 100, 0.5, 64, 11).unwrap();
        assert_eq!(a, b);
        assert!(a.within_bound());
        assert!(mc_psi_concentration(&sys, 2, 0, 0.5, 10, 1).is_err());
        assert!(matches!(mc_psi_concentration(&sys, 65, 10, 0.5, 10, 1), Err(Error::Resource(_))));
        assert!(matches!(mc_psi_concentration(&poly2(), 2, 10, 0.5, 10, 1), Err(Error::Unsupported(_))));
    }
}
