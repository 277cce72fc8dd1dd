//! Eigen-decompositions `(σ_k, ψ_k)` of kernel integral operators on `[0, 1]`.
//!
//! Indices are 1-based throughout, matching the usual convention
//! `σ_1 ≥ σ_2 ≥ … > 0`. Two kinds carry closed-form eigenfunctions
//! (Sobolev `min(x, y)` and Fourier-type translation-invariant kernels); the
//! remaining kinds are abstract decay models that only describe eigenvalues.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Prefix length summed explicitly before a sharpened tail bound is applied
/// for non-closed-form tails.
const EXPLICIT_PREFIX: usize = 4096;

/// A tail or full sum together with whether it is exact or an upper bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesSum<T> {
    pub value: T,
    /// `true` when `value` is the exact series value (up to rounding);
    /// `false` when it is a certified upper bound.
    pub exact: bool,
}

/// Parametric decay used by abstract kinds and to continue finite prefixes.
#[derive(Debug, Clone, PartialEq)]
pub enum DecayModel<T> {
    /// `C · k^{−α}` (with the `k = 0` term taken equal to `C`).
    Polynomial { c: T, alpha: T },
    /// `C · ρ^k`.
    Exponential { c: T, rho: T },
}

impl<T: Scalar> DecayModel<T> {
    fn validate(&self) -> Result<()> {
        match *self {
            DecayModel::Polynomial { c, alpha } => {
                if !(c > T::zero()) || !(alpha > T::zero()) {
                    return Err(Error::InvalidInput(format!(
                        "polynomial decay needs C > 0 and alpha > 0 (got C={}, alpha={})",
                        c.as_f64(),
                        alpha.as_f64()
                    )));
                }
            }
            DecayModel::Exponential { c, rho } => {
                if !(c > T::zero()) || !(rho > T::zero() && rho < T::one()) {
                    return Err(Error::InvalidInput(format!(
                        "exponential decay needs C > 0 and rho in (0,1) (got C={}, rho={})",
                        c.as_f64(),
                        rho.as_f64()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Value at index `k ≥ 0`.
    pub fn value(&self, k: usize) -> T {
        match *self {
            DecayModel::Polynomial { c, alpha } => c * T::from_index(k.max(1)).powf(-alpha),
            DecayModel::Exponential { c, rho } => c * rho.powf(T::from_index(k)),
        }
    }

    fn summable(&self) -> bool {
        match *self {
            DecayModel::Polynomial { alpha, .. } => alpha > T::one(),
            DecayModel::Exponential { .. } => true,
        }
    }

    /// `Σ_{k>p} value(k)`: exact for exponential decay, the integral bound
    /// `C p^{1−α}/(α−1)` for polynomial decay.
    pub fn tail_after(&self, p: usize) -> SeriesSum<T> {
        match *self {
            DecayModel::Polynomial { c, alpha } => {
                if alpha <= T::one() {
                    return SeriesSum { value: T::infinity(), exact: false };
                }
                let am1 = alpha - T::one();
                let value = if p == 0 {
                    // value(0) = C plus Σ_{k≥1} C k^{−α} ≤ C(1 + 1/(α−1)).
                    c + c * (T::one() + T::one() / am1)
                } else {
                    c * T::from_index(p).powf(-am1) / am1
                };
                SeriesSum { value, exact: false }
            }
            DecayModel::Exponential { c, rho } => {
                SeriesSum { value: c * rho.powf(T::from_index(p + 1)) / (T::one() - rho), exact: true }
            }
        }
    }

    /// Tighter certified tail for polynomial decay using convexity of
    /// `x ↦ x^{−α}`: `Σ_{k>p} k^{−α} ≤ ∫_{p+1/2}^∞ x^{−α} dx`.
    fn tail_after_sharp(&self, p: usize) -> SeriesSum<T> {
        match *self {
            DecayModel::Polynomial { c, alpha } if p >= 1 && alpha > T::one() => {
                let am1 = alpha - T::one();
                let start = T::from_index(p) + T::lit(0.5);
                SeriesSum { value: c * start.powf(-am1) / am1, exact: false }
            }
            _ => self.tail_after(p),
        }
    }
}

/// The sequence `ζ_0 ≥ ζ_1 ≥ …` defining a Fourier-type kernel
/// `κ(x) = ζ_0 + Σ_k 2 ζ_k cos(2πkx)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZetaSequence<T> {
    /// Explicit leading values `ζ_0, ζ_1, …` (may be empty).
    pub prefix: Vec<T>,
    /// Continuation for indices past the prefix.
    pub decay: DecayModel<T>,
}

impl<T: Scalar> ZetaSequence<T> {
    /// `ζ_k = ρ^k`.
    pub fn geometric(rho: T) -> Self {
        ZetaSequence { prefix: Vec::new(), decay: DecayModel::Exponential { c: T::one(), rho } }
    }

    pub fn zeta(&self, k: usize) -> T {
        self.prefix.get(k).copied().unwrap_or_else(|| self.decay.value(k))
    }

    /// First ζ index (at least 1) from which the decay model applies.
    fn decay_start(&self) -> usize {
        self.prefix.len().max(1)
    }

    /// `Σ_{k ≥ k0} ζ_k` for `k0 ≥ decay_start()`.
    fn decay_sum_from(&self, k0: usize, sharp: bool) -> SeriesSum<T> {
        debug_assert!(k0 >= 1);
        if sharp {
            self.decay.tail_after_sharp(k0 - 1)
        } else {
            self.decay.tail_after(k0 - 1)
        }
    }
}

/// Eigenvalue sequence of a kernel integral operator.
#[derive(Debug, Clone, PartialEq)]
pub enum EigenSequence<T> {
    /// `σ_k = [(2k−1)π/2]^{−2}` for the kernel `min(x, y)`.
    Sobolev,
    /// `σ_1 = ζ_0`, `σ_{2k} = σ_{2k+1} = ζ_k`.
    FourierZeta(ZetaSequence<T>),
    /// `σ_k = C k^{−α}`.
    Polynomial { c: T, alpha: T },
    /// `σ_k = C ρ^k`.
    Exponential { c: T, rho: T },
    /// Listed `σ_1..σ_L`, continued by `tail` for `k > L`.
    Explicit { values: Vec<T>, tail: DecayModel<T> },
}

/// Eigen-system `(σ_k, ψ_k)` with its uniform eigenfunction bound `C_ψ`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem<T> {
    sequence: EigenSequence<T>,
}

impl<T: Scalar> EigenSystem<T> {
    /// Validates the sequence invariants (positivity, monotonicity,
    /// parameter ranges) and wraps it.
    pub fn new(sequence: EigenSequence<T>) -> Result<Self> {
        match &sequence {
            EigenSequence::Sobolev => {}
            EigenSequence::FourierZeta(z) => {
                z.decay.validate()?;
                check_prefix("zeta", &z.prefix, z.decay.value(z.prefix.len().max(1)))?;
                if z.prefix.is_empty() && z.decay.value(1) > z.decay.value(0) {
                    return Err(Error::InvalidInput("zeta sequence must be nonincreasing".into()));
                }
            }
            EigenSequence::Polynomial { c, alpha } => DecayModel::Polynomial { c: *c, alpha: *alpha }.validate()?,
            EigenSequence::Exponential { c, rho } => DecayModel::Exponential { c: *c, rho: *rho }.validate()?,
            EigenSequence::Explicit { values, tail } => {
                tail.validate()?;
                if values.is_empty() {
                    return Err(Error::InvalidInput("explicit sequence needs at least one value".into()));
                }
                check_prefix("explicit", values, tail.value(values.len() + 1))?;
            }
        }
        Ok(EigenSystem { sequence })
    }

    pub fn sobolev() -> Self {
        EigenSystem { sequence: EigenSequence::Sobolev }
    }

    pub fn polynomial(c: T, alpha: T) -> Result<Self> {
        Self::new(EigenSequence::Polynomial { c, alpha })
    }

    pub fn exponential(c: T, rho: T) -> Result<Self> {
        Self::new(EigenSequence::Exponential { c, rho })
    }

    pub fn fourier_zeta(zeta: ZetaSequence<T>) -> Result<Self> {
        Self::new(EigenSequence::FourierZeta(zeta))
    }

    pub fn explicit(values: Vec<T>, tail: DecayModel<T>) -> Result<Self> {
        Self::new(EigenSequence::Explicit { values, tail })
    }

    pub fn sequence(&self) -> &EigenSequence<T> {
        &self.sequence
    }

    /// Short kind label, as used in config documents.
    pub fn kind_name(&self) -> &'static str {
        match self.sequence {
            EigenSequence::Sobolev => "sobolev",
            EigenSequence::FourierZeta(_) => "fourier_zeta",
            EigenSequence::Polynomial { .. } => "polynomial",
            EigenSequence::Exponential { .. } => "exponential",
            EigenSequence::Explicit { .. } => "explicit",
        }
    }

    /// Whether closed-form eigenfunctions are available.
    pub fn has_eigenfunctions(&self) -> bool {
        matches!(self.sequence, EigenSequence::Sobolev | EigenSequence::FourierZeta(_))
    }

    /// Uniform bound `sup_k sup_x |ψ_k(x)|`, when eigenfunctions are known.
    pub fn c_psi(&self) -> Option<T> {
        self.has_eigenfunctions().then(|| T::lit(2.0).sqrt())
    }

    /// `σ_k` for `k ≥ 1`.
    pub fn sigma(&self, k: usize) -> Result<T> {
        if k == 0 {
            return Err(Error::Domain("eigenvalue index must be at least 1".into()));
        }
        Ok(self.sigma_at(k))
    }

    /// `σ_k` without the index check; `k ≥ 1`.
    pub(crate) fn sigma_at(&self, k: usize) -> T {
        debug_assert!(k >= 1);
        match &self.sequence {
            EigenSequence::Sobolev => {
                let w = T::from_index(2 * k - 1) * T::pi() / T::lit(2.0);
                T::one() / (w * w)
            }
            EigenSequence::FourierZeta(z) => z.zeta(k / 2),
            EigenSequence::Polynomial { c, alpha } => *c * T::from_index(k).powf(-*alpha),
            EigenSequence::Exponential { c, rho } => *c * rho.powf(T::from_index(k)),
            EigenSequence::Explicit { values, tail } => values.get(k - 1).copied().unwrap_or_else(|| tail.value(k)),
        }
    }

    /// `(σ_1, …, σ_p)`.
    pub fn sigmas(&self, p: usize) -> Vec<T> {
        (1..=p).map(|k| self.sigma_at(k)).collect()
    }

    /// `Σ_{k>p} σ_k`: exact where a closed form exists, otherwise a
    /// certified upper bound.
    pub fn tail_sum(&self, p: usize) -> Result<SeriesSum<T>> {
        if p == 0 {
            return Err(Error::Domain("tail index must be at least 1".into()));
        }
        Ok(self.tail_after(p, false))
    }

    /// `Σ_{k>p} σ_k` for any `p ≥ 0`. With `sharp`, polynomial tails use the
    /// midpoint-convexity bound instead of the plain integral bound.
    pub(crate) fn tail_after(&self, p: usize, sharp: bool) -> SeriesSum<T> {
        match &self.sequence {
            EigenSequence::Sobolev => {
                // Σ_{k>p} 4/(π²(2k−1)²) = ψ₁(p + 1/2)/π².
                let pi = T::pi();
                let value = trigamma(T::from_index(p) + T::lit(0.5)) / (pi * pi);
                SeriesSum { value, exact: true }
            }
            EigenSequence::Polynomial { c, alpha } => {
                let d = DecayModel::Polynomial { c: *c, alpha: *alpha };
                if sharp {
                    d.tail_after_sharp(p)
                } else {
                    d.tail_after(p)
                }
            }
            EigenSequence::Exponential { c, rho } => DecayModel::Exponential { c: *c, rho: *rho }.tail_after(p),
            EigenSequence::Explicit { values, tail } => {
                let listed = values.len();
                let mut value = T::zero();
                for v in values.iter().skip(p) {
                    value += *v;
                }
                let rest = if sharp { tail.tail_after_sharp(p.max(listed)) } else { tail.tail_after(p.max(listed)) };
                SeriesSum { value: value + rest.value, exact: rest.exact }
            }
            EigenSequence::FourierZeta(z) => {
                let k1 = z.decay_start();
                let mut value = T::zero();
                // Indices j whose ζ-index lies in the explicit prefix.
                let mut j = p + 1;
                while j / 2 < k1 {
                    value += z.zeta(j / 2);
                    j += 1;
                }
                let rest = if j % 2 == 1 {
                    // j = 2k+1 pairs with 2k, already counted.
                    let k = j / 2;
                    let s = z.decay_sum_from(k + 1, sharp);
                    SeriesSum { value: z.zeta(k) + s.value * T::lit(2.0), exact: s.exact }
                } else {
                    let s = z.decay_sum_from(j / 2, sharp);
                    SeriesSum { value: s.value * T::lit(2.0), exact: s.exact }
                };
                SeriesSum { value: value + rest.value, exact: rest.exact }
            }
        }
    }

    /// `‖σ‖₁ = Σ_k σ_k`.
    pub fn sigma_l1(&self) -> Result<SeriesSum<T>> {
        let summable = match &self.sequence {
            EigenSequence::Polynomial { c, alpha } => DecayModel::Polynomial { c: *c, alpha: *alpha }.summable(),
            EigenSequence::Explicit { tail, .. } => tail.summable(),
            EigenSequence::FourierZeta(z) => z.decay.summable(),
            _ => true,
        };
        if !summable {
            return Err(Error::NotSummable(format!("{} sequence has alpha <= 1", self.kind_name())));
        }
        let full = self.tail_after(0, true);
        if full.exact {
            return Ok(full);
        }
        let head: T = self.sigmas(EXPLICIT_PREFIX).into_iter().fold(T::zero(), |a, b| a + b);
        let rest = self.tail_after(EXPLICIT_PREFIX, true);
        Ok(SeriesSum { value: head + rest.value, exact: false })
    }

    /// `ψ_k(x)` for `k ≥ 1`, `x ∈ [0, 1]`.
    pub fn eval_psi(&self, k: usize, x: T) -> Result<T> {
        if k == 0 {
            return Err(Error::Domain("eigenfunction index must be at least 1".into()));
        }
        if !(x >= T::zero() && x <= T::one()) {
            return Err(Error::Domain(format!("point {} outside [0, 1]", x.as_f64())));
        }
        if !self.has_eigenfunctions() {
            return Err(Error::Unsupported(format!("{} eigensystem has no eigenfunctions", self.kind_name())));
        }
        Ok(self.psi_at(k, x))
    }

    /// `ψ_k(x)` without checks; requires eigenfunctions and `k ≥ 1`.
    pub(crate) fn psi_at(&self, k: usize, x: T) -> T {
        let root2 = T::lit(2.0).sqrt();
        match &self.sequence {
            EigenSequence::Sobolev => {
                let w = T::from_index(2 * k - 1) * T::pi() / T::lit(2.0);
                root2 * (w * x).sin()
            }
            EigenSequence::FourierZeta(_) => {
                if k == 1 {
                    return T::one();
                }
                let freq = T::from_index(k / 2) * T::two_pi() * x;
                if k.is_multiple_of(2) {
                    root2 * freq.cos()
                } else {
                    root2 * freq.sin()
                }
            }
            _ => unreachable!("psi_at on abstract eigensystem"),
        }
    }

    /// Partial Mercer sum `Σ_{k ≤ K} σ_k ψ_k(x) ψ_k(y)`.
    pub fn mercer_eval(&self, x: T, y: T, terms: usize) -> Result<T> {
        if terms == 0 {
            return Err(Error::Domain("truncation must be at least 1".into()));
        }
        // Validates kind and both points.
        self.eval_psi(1, x)?;
        self.eval_psi(1, y)?;
        let mut sum = T::zero();
        for k in 1..=terms {
            sum += self.sigma_at(k) * self.psi_at(k, x) * self.psi_at(k, y);
        }
        Ok(sum)
    }
}

fn check_prefix<T: Scalar>(label: &str, values: &[T], next: T) -> Result<()> {
    for (i, v) in values.iter().enumerate() {
        if !(*v > T::zero()) {
            return Err(Error::InvalidInput(format!("{label} value #{i} is not positive")));
        }
        if i > 0 && *v > values[i - 1] {
            return Err(Error::InvalidInput(format!("{label} values must be nonincreasing")));
        }
    }
    if let Some(last) = values.last() {
        if next > *last {
            return Err(Error::InvalidInput(format!("{label} tail model exceeds the last listed value")));
        }
    }
    Ok(())
}

/// Trigamma function `ψ₁(x) = Σ_{k≥0} (x+k)^{−2}` for `x > 0`.
pub fn trigamma<T: Scalar>(x: T) -> T {
    let mut x = x;
    let mut acc = T::zero();
    let start = T::lit(20.0);
    while x < start {
        acc += T::one() / (x * x);
        x += T::one();
    }
    let inv = T::one() / x;
    let inv2 = inv * inv;
    // Asymptotic series 1/x + 1/(2x²) + Σ B_{2k}/x^{2k+1}.
    let series = inv
        + inv2 / T::lit(2.0)
        + inv
            * inv2
            * (T::lit(1.0 / 6.0)
                + inv2
                    * (T::lit(-1.0 / 30.0)
                        + inv2
                            * (T::lit(1.0 / 42.0)
                                + inv2
                                    * (T::lit(-1.0 / 30.0)
                                        + inv2 * (T::lit(5.0 / 66.0) + inv2 * T::lit(-691.0 / 2730.0))))));
    acc + series
}
