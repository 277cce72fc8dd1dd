//! Linear operators `Φ: H → Rⁿ` and the Gram matrix `Ψ_{jk} = ⟨ψ_j, ψ_k⟩_Φ`
//! they induce on the eigenbasis.
//!
//! A function `f = Σ_k √σ_k α_k ψ_k` of the Hilbert ball is represented by its
//! coefficient sequence `α` (finite support).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eigen::{EigenSequence, EigenSystem};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Generator used to materialize `random_iid` sample points.
pub const RANDOM_POINTS_GENERATOR: &str = "chacha8/seed_from_u64/v1";

/// Draws `n` i.i.d. uniform points on `[0, 1)` from `seed`.
pub fn uniform_points<T: Scalar>(n: usize, seed: u64) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| T::lit(rng.random::<f64>())).collect()
}

/// The operator variants.
#[derive(Debug, Clone, PartialEq)]
pub enum SamplingOperator<T> {
    /// `[Φf]_i = ⟨f, ψ_i⟩`-type truncation, `[Φf]_i = √σ_i α_i` for `i ≤ n`.
    FourierTruncation { n: usize },
    /// `Φf = n^{−1/2} (f(x_1), …, f(x_n))`.
    DomainSampling { points: Vec<T> },
    /// `Φf = n^{−1/2} (w_1 f(x_1), …, w_n f(x_n))` with `Σ w_i² = 1`.
    WeightedDomainSampling { points: Vec<T>, weights: Vec<T> },
    /// Domain sampling at `x_i = i/n`.
    UniformGrid { n: usize },
    /// Domain sampling at points drawn once from `seed`.
    RandomIid { n: usize, seed: u64, points: Vec<T> },
}

impl<T: Scalar> SamplingOperator<T> {
    pub fn fourier_truncation(n: usize) -> Result<Self> {
        check_dim(n)?;
        Ok(SamplingOperator::FourierTruncation { n })
    }

    pub fn uniform_grid(n: usize) -> Result<Self> {
        check_dim(n)?;
        Ok(SamplingOperator::UniformGrid { n })
    }

    pub fn domain_sampling(points: Vec<T>) -> Result<Self> {
        check_dim(points.len())?;
        check_points(&points)?;
        Ok(SamplingOperator::DomainSampling { points })
    }

    pub fn weighted(points: Vec<T>, weights: Vec<T>) -> Result<Self> {
        check_dim(points.len())?;
        check_points(&points)?;
        if weights.len() != points.len() {
            return Err(Error::DimensionMismatch(format!("{} weights for {} points", weights.len(), points.len())));
        }
        let total: f64 = weights.iter().map(|w| w.as_f64() * w.as_f64()).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("squared weights sum to {total}, expected 1")));
        }
        Ok(SamplingOperator::WeightedDomainSampling { points, weights })
    }

    /// Materializes `n` uniform points from `seed`; afterwards the operator
    /// behaves exactly like domain sampling at those points.
    pub fn random_iid(n: usize, seed: u64) -> Result<Self> {
        check_dim(n)?;
        Ok(SamplingOperator::RandomIid { n, seed, points: uniform_points(n, seed) })
    }

    /// Output dimension `n`.
    pub fn dim(&self) -> usize {
        match self {
            SamplingOperator::FourierTruncation { n }
            | SamplingOperator::UniformGrid { n }
            | SamplingOperator::RandomIid { n, .. } => *n,
            SamplingOperator::DomainSampling { points } | SamplingOperator::WeightedDomainSampling { points, .. } => {
                points.len()
            }
        }
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            SamplingOperator::FourierTruncation { .. } => "fourier_truncation",
            SamplingOperator::DomainSampling { .. } => "domain_sampling",
            SamplingOperator::WeightedDomainSampling { .. } => "weighted_domain_sampling",
            SamplingOperator::UniformGrid { .. } => "uniform_grid",
            SamplingOperator::RandomIid { .. } => "random_iid",
        }
    }

    pub fn is_domain_variant(&self) -> bool {
        !matches!(self, SamplingOperator::FourierTruncation { .. })
    }

    /// Sample points for domain variants, `None` for Fourier truncation.
    pub fn points(&self) -> Option<Vec<T>> {
        match self {
            SamplingOperator::FourierTruncation { .. } => None,
            SamplingOperator::UniformGrid { n } => {
                let nf = T::from_index(*n);
                Some((1..=*n).map(|i| T::from_index(i) / nf).collect())
            }
            SamplingOperator::DomainSampling { points }
            | SamplingOperator::WeightedDomainSampling { points, .. }
            | SamplingOperator::RandomIid { points, .. } => Some(points.clone()),
        }
    }

    /// Per-sample weights (all ones for unweighted domain variants).
    pub fn weights(&self) -> Option<Vec<T>> {
        match self {
            SamplingOperator::FourierTruncation { .. } => None,
            SamplingOperator::WeightedDomainSampling { weights, .. } => Some(weights.clone()),
            _ => Some(vec![T::one(); self.dim()]),
        }
    }

    fn require_eigenfunctions(&self, sys: &EigenSystem<T>) -> Result<()> {
        if self.is_domain_variant() && !sys.has_eigenfunctions() {
            return Err(Error::Unsupported(format!(
                "{} operator needs eigenfunctions, {} eigensystem has none",
                self.variant_name(),
                sys.kind_name()
            )));
        }
        Ok(())
    }

    /// `Φf` for `f = Σ_k √σ_k α_k ψ_k`.
    pub fn apply(&self, sys: &EigenSystem<T>, alpha: &[T]) -> Result<Vec<T>> {
        self.require_eigenfunctions(sys)?;
        match self {
            SamplingOperator::FourierTruncation { n } => {
                Ok((1..=*n).map(|i| alpha.get(i - 1).map_or(T::zero(), |a| sys.sigma_at(i).sqrt() * *a)).collect())
            }
            _ => {
                let points = self.points().unwrap_or_default();
                let weights = self.weights().unwrap_or_default();
                let scale = T::one() / T::from_index(self.dim()).sqrt();
                Ok(points
                    .iter()
                    .zip(&weights)
                    .map(|(x, w)| {
                        let f = alpha
                            .iter()
                            .enumerate()
                            .filter(|(_, a)| **a != T::zero())
                            .fold(T::zero(), |acc, (i, a)| {
                                acc + sys.sigma_at(i + 1).sqrt() * *a * sys.psi_at(i + 1, *x)
                            });
                        scale * *w * f
                    })
                    .collect())
            }
        }
    }

    /// `‖f‖_Φ = ‖Φf‖₂`.
    pub fn phi_seminorm(&self, sys: &EigenSystem<T>, alpha: &[T]) -> Result<T> {
        let v = self.apply(sys, alpha)?;
        Ok(v.iter().fold(T::zero(), |acc, x| acc + *x * *x).sqrt())
    }

    /// `[Ψ]_{jk}`, using closed forms where available.
    pub fn psi_entry(&self, sys: &EigenSystem<T>, j: usize, k: usize) -> Result<T> {
        if j == 0 || k == 0 {
            return Err(Error::Domain("Gram indices must be at least 1".into()));
        }
        self.require_eigenfunctions(sys)?;
        Ok(self.psi_entry_unchecked(sys, j, k))
    }

    pub(crate) fn psi_entry_unchecked(&self, sys: &EigenSystem<T>, j: usize, k: usize) -> T {
        match (self, sys.sequence()) {
            (SamplingOperator::FourierTruncation { n }, _) => {
                if j == k && j <= *n {
                    T::one()
                } else {
                    T::zero()
                }
            }
            (SamplingOperator::UniformGrid { n }, EigenSequence::Sobolev) => sobolev_grid_entry(*n, j, k),
            (SamplingOperator::UniformGrid { n }, EigenSequence::FourierZeta(_)) => fourier_grid_entry(*n, j, k),
            _ => self.psi_entry_by_sum(sys, j, k),
        }
    }

    /// `[Ψ]_{jk}` by direct summation `(1/n) Σ_i w_i² ψ_j(x_i) ψ_k(x_i)`
    /// (Kronecker delta on `j, k ≤ n` for Fourier truncation).
    pub fn psi_entry_direct(&self, sys: &EigenSystem<T>, j: usize, k: usize) -> Result<T> {
        if j == 0 || k == 0 {
            return Err(Error::Domain("Gram indices must be at least 1".into()));
        }
        self.require_eigenfunctions(sys)?;
        Ok(match self {
            SamplingOperator::FourierTruncation { .. } => self.psi_entry_unchecked(sys, j, k),
            _ => self.psi_entry_by_sum(sys, j, k),
        })
    }

    fn psi_entry_by_sum(&self, sys: &EigenSystem<T>, j: usize, k: usize) -> T {
        let points = self.points().unwrap_or_default();
        let weights = self.weights().unwrap_or_default();
        let sum = points
            .iter()
            .zip(&weights)
            .fold(T::zero(), |acc, (x, w)| acc + *w * *w * sys.psi_at(j, *x) * sys.psi_at(k, *x));
        sum / T::from_index(self.dim())
    }

    /// Upper bound on `[Ψ]_{kk}` valid for every `k > horizon`.
    pub fn diag_envelope(&self, sys: &EigenSystem<T>, horizon: usize) -> Result<T> {
        match self {
            SamplingOperator::FourierTruncation { n } => Ok(if horizon >= *n { T::zero() } else { T::one() }),
            _ => {
                let c_psi = sys.c_psi().ok_or_else(|| {
                    Error::Unsupported(format!("{} eigensystem has no uniform eigenfunction bound", sys.kind_name()))
                })?;
                let weights = self.weights().unwrap_or_default();
                let mean_w2 = weights.iter().fold(T::zero(), |acc, w| acc + *w * *w) / T::from_index(self.dim());
                Ok(c_psi * c_psi * mean_w2)
            }
        }
    }

    /// Row-major `k × n` matrix `E_{ki} = n^{−1/2} w_i ψ_k(x_i)` for
    /// `k ∈ [a, b]`, so that the Gram block equals `E Eᵀ`.
    pub(crate) fn evaluation_rows(&self, sys: &EigenSystem<T>, a: usize, b: usize) -> Vec<Vec<T>> {
        let points = self.points().unwrap_or_default();
        let weights = self.weights().unwrap_or_default();
        let scale = T::one() / T::from_index(self.dim()).sqrt();
        (a..=b).map(|k| points.iter().zip(&weights).map(|(x, w)| scale * *w * sys.psi_at(k, *x)).collect()).collect()
    }

    /// Whether `psi_entry` has an O(1) closed form for this pairing.
    pub(crate) fn has_closed_form(&self, sys: &EigenSystem<T>) -> bool {
        matches!(
            (self, sys.sequence()),
            (SamplingOperator::FourierTruncation { .. }, _)
                | (SamplingOperator::UniformGrid { .. }, EigenSequence::Sobolev)
                | (SamplingOperator::UniformGrid { .. }, EigenSequence::FourierZeta(_))
        )
    }
}

fn check_dim(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidInput("operator dimension must be at least 1".into()));
    }
    Ok(())
}

fn check_points<T: Scalar>(points: &[T]) -> Result<()> {
    match points.iter().position(|x| !(*x >= T::zero() && *x <= T::one())) {
        Some(i) => Err(Error::InvalidInput(format!("sample point #{i} lies outside [0, 1]"))),
        None => Ok(()),
    }
}

/// Sobolev kernel under uniform sampling `x_i = i/n`: entries are periodic
/// in both indices with period `2n`, and on `1 ≤ k, r ≤ 2n`
/// `Ψ_kr = 1 + 1/n` if `k = r`, `−1 − 1/n` if `k + r = 2n + 1`, and
/// `(−1)^{k−r}/n` otherwise.
fn sobolev_grid_entry<T: Scalar>(n: usize, j: usize, k: usize) -> T {
    let period = 2 * n;
    let j = (j - 1) % period + 1;
    let k = (k - 1) % period + 1;
    let inv_n = T::one() / T::from_index(n);
    let same = j == k;
    let mirrored = j + k == period + 1;
    debug_assert!(!(same && mirrored), "k = r and k + r = 2n + 1 cannot both hold");
    if same {
        T::one() + inv_n
    } else if mirrored {
        -(T::one() + inv_n)
    } else if (j + k).is_multiple_of(2) {
        inv_n
    } else {
        -inv_n
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Trig {
    Cos,
    Sin,
}

/// Maps eigen-index `j ≥ 1` to `(cos|sin, frequency)`.
fn fourier_index(j: usize) -> (Trig, usize) {
    if j == 1 {
        (Trig::Cos, 0)
    } else if j.is_multiple_of(2) {
        (Trig::Cos, j / 2)
    } else {
        (Trig::Sin, j / 2)
    }
}

/// Fourier-type kernel under uniform sampling, from the discrete
/// orthogonality `n^{−1} Σ_ℓ exp(2πi kℓ/n) = δ_{k mod n}`.
fn fourier_grid_entry<T: Scalar>(n: usize, j: usize, k: usize) -> T {
    let (tj, fj) = fourier_index(j);
    let (tk, fk) = fourier_index(k);
    let delta = |m: isize| -> T {
        if m.rem_euclid(n as isize) == 0 {
            T::one()
        } else {
            T::zero()
        }
    };
    let diff = fk as isize - fj as isize;
    let sum = (fk + fj) as isize;
    match (tj, tk) {
        (Trig::Cos, Trig::Cos) => {
            let mut v = delta(diff) + delta(sum);
            // (1/√2)^{δ_k + δ_j}
            if fj == 0 {
                v *= T::lit(std::f64::consts::FRAC_1_SQRT_2);
            }
            if fk == 0 {
                v *= T::lit(std::f64::consts::FRAC_1_SQRT_2);
            }
            v
        }
        (Trig::Sin, Trig::Sin) => delta(diff) - delta(sum),
        _ => T::zero(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::ZetaSequence;
    use approx::assert_abs_diff_eq;

    fn sob() -> EigenSystem<f64> {
        EigenSystem::sobolev()
    }

    fn fz() -> EigenSystem<f64> {
        EigenSystem::fourier_zeta(ZetaSequence::geometric(0.5)).unwrap()
    }

    #[test]
    fn fourier_truncation_apply() {
        let sys = EigenSystem::polynomial(1.0, 2.0).unwrap();
        let op = SamplingOperator::fourier_truncation(2).unwrap();
        assert_eq!(op.apply(&sys, &[1.0, 0.0, 0.0]).unwrap(), vec![1.0, 0.0]);
        let op1 = SamplingOperator::fourier_truncation(1).unwrap();
        assert_eq!(op1.phi_seminorm(&sys, &[1.0]).unwrap(), 1.0);
    }

    #[test]
    fn domain_sampling_apply_at_one() {
        let op = SamplingOperator::domain_sampling(vec![1.0]).unwrap();
        let v = op.apply(&sob(), &[1.0]).unwrap();
        assert_abs_diff_eq!(v[0], 2f64.sqrt() * 2.0 / std::f64::consts::PI, epsilon = 1e-14);
        assert_abs_diff_eq!(v[0], 0.9003, epsilon = 1e-4);
    }

    #[test]
    fn zero_coefficients_give_zero() {
        let ops = [
            SamplingOperator::fourier_truncation(3).unwrap(),
            SamplingOperator::uniform_grid(4).unwrap(),
            SamplingOperator::random_iid(5, 1).unwrap(),
        ];
        for op in &ops {
            let v = op.apply(&sob(), &[0.0; 6]).unwrap();
            assert!(v.iter().all(|x| *x == 0.0));
            assert_eq!(op.phi_seminorm(&sob(), &[0.0; 6]).unwrap(), 0.0);
        }
    }

    #[test]
    fn psi_entry_examples() {
        let grid = SamplingOperator::uniform_grid(9).unwrap();
        assert_abs_diff_eq!(grid.psi_entry(&sob(), 1, 1).unwrap(), 1.0 + 1.0 / 9.0, epsilon = 1e-15);
        assert_abs_diff_eq!(grid.psi_entry(&sob(), 1, 18).unwrap(), -1.0 - 1.0 / 9.0, epsilon = 1e-15);
        let ft = SamplingOperator::fourier_truncation(5).unwrap();
        assert_eq!(ft.psi_entry(&sob(), 2, 7).unwrap(), 0.0);
        let g3 = SamplingOperator::uniform_grid(3).unwrap();
        for j in 1..=3 {
            for k in 1..=3 {
                let expect = if j == k { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(g3.psi_entry(&fz(), j, k).unwrap(), expect, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn abstract_kinds_rejected_for_domain_variants() {
        let sys = EigenSystem::polynomial(1.0, 2.0).unwrap();
        let grid = SamplingOperator::uniform_grid(4).unwrap();
        assert!(matches!(grid.psi_entry(&sys, 1, 1), Err(Error::Unsupported(_))));
        assert!(matches!(grid.apply(&sys, &[1.0]), Err(Error::Unsupported(_))));
        let ft = SamplingOperator::fourier_truncation(4).unwrap();
        assert_eq!(ft.psi_entry(&sys, 2, 2).unwrap(), 1.0);
    }

    #[test]
    fn operator_invariants_checked() {
        assert!(SamplingOperator::<f64>::domain_sampling(vec![0.5, 1.2]).is_err());
        assert!(SamplingOperator::weighted(vec![0.1, 0.2], vec![1.0, 1.0]).is_err());
        let w = std::f64::consts::FRAC_1_SQRT_2;
        assert!(SamplingOperator::weighted(vec![0.1, 0.2], vec![w, w]).is_ok());
        assert!(SamplingOperator::<f64>::uniform_grid(0).is_err());
    }

    #[test]
    fn random_iid_is_deterministic() {
        let a = SamplingOperator::<f64>::random_iid(16, 42).unwrap();
        let b = SamplingOperator::<f64>::random_iid(16, 42).unwrap();
        let c = SamplingOperator::<f64>::random_iid(16, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.points(), c.points());
        assert!(a.points().unwrap().iter().all(|x| (0.0..1.0).contains(x)));
    }

    #[test]
    fn diag_envelope_dominates_diagonal() {
        let w = std::f64::consts::FRAC_1_SQRT_2;
        let ops = [
            SamplingOperator::uniform_grid(7).unwrap(),
            SamplingOperator::random_iid(7, 3).unwrap(),
            SamplingOperator::weighted(vec![0.3, 0.8], vec![w, w]).unwrap(),
        ];
        for op in &ops {
            for sys in [sob(), fz()] {
                let env = op.diag_envelope(&sys, 10).unwrap();
                for k in 11..60 {
                    assert!(op.psi_entry(&sys, k, k).unwrap() <= env + 1e-12);
                }
            }
        }
        let ft = SamplingOperator::<f64>::fourier_truncation(4).unwrap();
        assert_eq!(ft.diag_envelope(&sob(), 4).unwrap(), 0.0);
        assert_eq!(ft.diag_envelope(&sob(), 3).unwrap(), 1.0);
    }
}
