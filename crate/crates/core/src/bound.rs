//! Upper bounds on `R_Φ(ε)`, the exact Fourier-truncation value, and the
//! small transfer utilities built on top of them.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::eigen::EigenSystem;
use crate::error::{Error, Result};
use crate::linalg::{self, LineMin};
use crate::psi::{default_horizon, PsiWindow, TailMethod};
use crate::sampling::SamplingOperator;
use crate::scalar::Scalar;

/// `max{λ_max(D − t √D M √D), 0}` with `D = diag(d)`.
pub fn l_func<T: Scalar>(t: T, m: &DMatrix<T>, d: &DVector<T>) -> Result<T> {
    if m.nrows() != m.ncols() || m.nrows() != d.len() {
        return Err(Error::DimensionMismatch(format!("M is {}x{}, D has {} entries", m.nrows(), m.ncols(), d.len())));
    }
    if !(t >= T::zero()) {
        return Err(Error::Domain("t must be nonnegative".into()));
    }
    if d.iter().any(|v| *v < T::zero()) {
        return Err(Error::Domain("D must be PSD".into()));
    }
    let w = linalg::scale_sym(m, d);
    Ok(linalg::ball_sup(&(DMatrix::from_diagonal(d) - w * t)))
}

/// How the cross term `(ε, τ)` is combined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RhoMode<T> {
    /// `(ε + √τ)²`, the infimum over the split parameter.
    Optimized,
    /// `ε²/r + τ/(1 − r)` for a fixed `r = ρ² ∈ (0, 1)`.
    Fixed(T),
}

impl<T: Scalar> RhoMode<T> {
    fn combine(&self, eps: T, tail: T) -> T {
        match *self {
            RhoMode::Optimized => {
                let s = eps + tail.max(T::zero()).sqrt();
                s * s
            }
            RhoMode::Fixed(r) => eps * eps / r + tail / (T::one() - r),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundConfig<T> {
    pub p_candidates: Vec<usize>,
    /// Relative width at which the `t` search stops.
    pub t_tol: T,
    pub tail_method: TailMethod,
    /// Explicit tail horizon; `None` means [`default_horizon`].
    pub horizon: Option<usize>,
    pub rho_mode: RhoMode<T>,
}

impl<T: Scalar> BoundConfig<T> {
    /// `p ∈ {1, …, 64} ∪ {n}`, `ℓ∞` tail, optimized split.
    pub fn for_dim(n: usize) -> Self {
        let mut p: Vec<usize> = (1..=64).collect();
        if n > 64 {
            p.push(n);
        }
        BoundConfig {
            p_candidates: p,
            t_tol: T::lit(1e-8),
            tail_method: TailMethod::Linf,
            horizon: None,
            rho_mode: RhoMode::Optimized,
        }
    }

    pub fn with_p(mut self, p: Vec<usize>) -> Self {
        self.p_candidates = p;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.p_candidates.is_empty() {
            return Err(Error::InvalidInput("p_candidates must be nonempty".into()));
        }
        if self.p_candidates.contains(&0) {
            return Err(Error::InvalidInput("p candidates must be at least 1".into()));
        }
        if !(self.t_tol > T::zero()) {
            return Err(Error::InvalidInput("t tolerance must be positive".into()));
        }
        if let RhoMode::Fixed(r) = self.rho_mode {
            if !(r > T::zero() && r < T::one()) {
                return Err(Error::InvalidInput("fixed rho^2 must lie in (0, 1)".into()));
            }
        }
        if let TailMethod::Block { size: 0 } = self.tail_method {
            return Err(Error::InvalidInput("block size must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    Strong,
    Weak,
    FourierExact,
}

impl BoundKind {
    pub fn name(&self) -> &'static str {
        match self {
            BoundKind::Strong => "strong",
            BoundKind::Weak => "weak",
            BoundKind::FourierExact => "fourier_exact",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport<T> {
    pub value: T,
    pub epsilon: T,
    pub p_star: usize,
    /// `+∞` when the infimum is the `t → ∞` limit; `None` for the weak bound.
    pub t_star: Option<T>,
    /// Bound on `λ_max` of the weighted tail past `p_star`.
    pub tail: T,
    pub sigma_next: T,
    pub lambda_min: Option<T>,
    pub kind: BoundKind,
}

/// Per-`p` data reused across many `ε`.
#[derive(Debug, Clone)]
struct Truncation<T: Scalar> {
    p: usize,
    d: DMatrix<T>,
    w: DMatrix<T>,
    psi: DMatrix<T>,
    tail: T,
    sigma_next: T,
}

/// Evaluates the bounds for a fixed `(sys, op, cfg)` at many `ε`.
pub struct BoundEngine<'a, T: Scalar> {
    sys: &'a EigenSystem<T>,
    cfg: BoundConfig<T>,
    window: PsiWindow<'a, T>,
    cache: Vec<Truncation<T>>,
}

impl<'a, T: Scalar> BoundEngine<'a, T> {
    pub fn new(sys: &'a EigenSystem<T>, op: &'a SamplingOperator<T>, cfg: &BoundConfig<T>) -> Result<Self> {
        cfg.validate()?;
        let candidates: BTreeSet<usize> = cfg.p_candidates.iter().copied().collect();
        let p_max = *candidates.iter().next_back().unwrap();
        let horizon = cfg.horizon.unwrap_or_else(|| default_horizon(op.dim())).max(p_max);
        let window = PsiWindow::new(op, sys, horizon)?;
        let mut engine = BoundEngine { sys, cfg: cfg.clone(), window, cache: Vec::new() };
        let cache = candidates.into_par_iter().map(|p| engine.truncation(p)).collect::<Result<Vec<_>>>()?;
        engine.cache = cache;
        Ok(engine)
    }

    fn truncation(&self, p: usize) -> Result<Truncation<T>> {
        let psi = self.window.head(p)?;
        let sig = DVector::from_vec(self.sys.sigmas(p));
        let w = linalg::symmetrize(linalg::scale_sym(&psi, &sig));
        let tail = self.window.tail_bound(p, self.cfg.tail_method)?.value;
        Ok(Truncation { p, d: DMatrix::from_diagonal(&sig), w, psi, tail, sigma_next: self.sys.sigma_at(p + 1) })
    }

    fn strong_at(&self, tr: &Truncation<T>, eps: T) -> BoundReport<T> {
        let c = self.cfg.rho_mode.combine(eps, tr.tail);
        let LineMin { arg, value } = linalg::penalized_line_min(&tr.d, &tr.w, c, self.cfg.t_tol);
        BoundReport {
            value: value + tr.sigma_next,
            epsilon: eps,
            p_star: tr.p,
            t_star: Some(arg),
            tail: tr.tail,
            sigma_next: tr.sigma_next,
            lambda_min: None,
            kind: BoundKind::Strong,
        }
    }

    /// Strong bound minimized over the configured `p` candidates.
    pub fn strong(&self, eps: T) -> Result<BoundReport<T>> {
        check_eps(eps)?;
        let reports: Vec<BoundReport<T>> = self.cache.par_iter().map(|tr| self.strong_at(tr, eps)).collect();
        // Ties go to the smallest p.
        let mut best = reports[0];
        for r in &reports[1..] {
            if r.value < best.value {
                best = *r;
            }
        }
        Ok(best)
    }

    /// Weak bound at a single `p`.
    pub fn weak(&self, eps: T, p: usize) -> Result<BoundReport<T>> {
        check_eps(eps)?;
        let owned;
        let tr = match self.cache.iter().find(|t| t.p == p) {
            Some(t) => t,
            None => {
                owned = self.truncation(p)?;
                &owned
            }
        };
        let lmin = linalg::lambda_min(&tr.psi);
        let scale = linalg::lambda_max(&tr.psi).abs().max(T::one());
        if !(lmin > T::lit(linalg::NULL_REL_TOL) * scale) {
            return Err(Error::Precondition(format!("lambda_min(Psi_{p}) = {:e} is not positive", lmin.as_f64())));
        }
        let s1 = self.sys.sigma_at(1);
        let c = self.cfg.rho_mode.combine(eps, tr.tail);
        let value = (T::one() - tr.sigma_next / s1) * c / lmin + tr.sigma_next;
        Ok(BoundReport {
            value,
            epsilon: eps,
            p_star: p,
            t_star: None,
            tail: tr.tail,
            sigma_next: tr.sigma_next,
            lambda_min: Some(lmin),
            kind: BoundKind::Weak,
        })
    }
}

fn check_eps<T: Scalar>(eps: T) -> Result<()> {
    if !(eps >= T::zero()) || !eps.is_finite_value() {
        return Err(Error::Domain(format!("epsilon must be finite and nonnegative, got {}", eps.as_f64())));
    }
    Ok(())
}

/// Strong bound on `R_Φ(ε)`, minimized over `p` and `t`.
pub fn strong_bound<T: Scalar>(
    eps: T,
    sys: &EigenSystem<T>,
    op: &SamplingOperator<T>,
    cfg: &BoundConfig<T>,
) -> Result<BoundReport<T>> {
    check_eps(eps)?;
    BoundEngine::new(sys, op, cfg)?.strong(eps)
}

/// Weak bound on `R_Φ(ε)` at truncation `p`; needs `λ_min(Ψ_p) > 0`.
pub fn weak_bound<T: Scalar>(
    eps: T,
    sys: &EigenSystem<T>,
    op: &SamplingOperator<T>,
    p: usize,
    cfg: &BoundConfig<T>,
) -> Result<BoundReport<T>> {
    check_eps(eps)?;
    let cfg = cfg.clone().with_p(vec![p]);
    BoundEngine::new(sys, op, &cfg)?.weak(eps, p)
}

/// Exact `R_Φ(ε)` for the Fourier truncation of size `n`, saturating at `σ_1`.
pub fn fourier_exact<T: Scalar>(eps: T, sys: &EigenSystem<T>, n: usize) -> Result<T> {
    check_eps(eps)?;
    let s1 = sys.sigma_at(1);
    let e2 = eps * eps;
    if e2 >= s1 {
        return Ok(s1);
    }
    let next = sys.sigma_at(n + 1);
    Ok((T::one() - next / s1) * e2 + next)
}

/// `σ_{n+1}`, the smallest `R_Φ(0)` over rank-`n` operators.
pub fn minimax_width<T: Scalar>(n: usize, sys: &EigenSystem<T>) -> T {
    sys.sigma_at(n + 1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerTBound<T> {
    pub value: T,
    /// The raw value `(δ² − B)/A` was negative and has been clamped to 0.
    pub clamped: bool,
}

/// From `R_Φ(ε) ≤ Aε² + B`, the lower bound `(δ² − B)/A` on the right limit
/// `T̲_Φ(δ+)`, i.e. the inverse of `ε² ↦ Aε² + B`. This is at least
/// `δ²/A − B` whenever `A ≥ 1`.
///
/// At a jump of `T̲_Φ` the bound holds for the right limit only.
pub fn translate_to_lower_t<T: Scalar>(a: T, b: T, delta: T) -> Result<LowerTBound<T>> {
    if !(a > T::zero()) {
        return Err(Error::Domain("slope A must be positive".into()));
    }
    if !(b >= T::zero()) {
        return Err(Error::Domain("intercept B must be nonnegative".into()));
    }
    let raw = (delta * delta - b) / a;
    Ok(if raw < T::zero() {
        LowerTBound { value: T::zero(), clamped: true }
    } else {
        LowerTBound { value: raw, clamped: false }
    })
}

/// `M(ε; D, L²) ≤ M(√T̲; D, Φ)` as a pair of radii.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PackingTransfer<T> {
    pub l2_radius: T,
    pub phi_radius: T,
    /// `T̲ = 0`: the right-hand packing number is infinite.
    pub vacuous: bool,
}

pub fn packing_transfer<T: Scalar>(t_lower: T, eps: T) -> Result<PackingTransfer<T>> {
    if !(t_lower >= T::zero()) {
        return Err(Error::Domain("T lower bound must be nonnegative".into()));
    }
    check_eps(eps)?;
    Ok(PackingTransfer { l2_radius: eps, phi_radius: t_lower.sqrt(), vacuous: t_lower == T::zero() })
}

/// Residual of `xᵀAx + 2xᵀCy + yᵀDy ≥ ρ² xᵀAx − κ²/(1−ρ²) ‖y‖²` and a scale
/// for judging it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadCheck<T> {
    pub residual: T,
    pub scale: T,
}

fn quad_dims<T: Scalar>(a: &DMatrix<T>, c: &DMatrix<T>, d: &DMatrix<T>, x: &DVector<T>, y: &DVector<T>) -> Result<()> {
    let (p, q) = (x.len(), y.len());
    if a.shape() != (p, p) || c.shape() != (p, q) || d.shape() != (q, q) {
        return Err(Error::DimensionMismatch(format!(
            "A {:?}, C {:?}, D {:?} do not match x ({p}) and y ({q})",
            a.shape(),
            c.shape(),
            d.shape()
        )));
    }
    Ok(())
}

/// Residual without checking the PSD condition.
pub fn quad_residual<T: Scalar>(
    a: &DMatrix<T>,
    c: &DMatrix<T>,
    d: &DMatrix<T>,
    rho2: T,
    kappa2: T,
    x: &DVector<T>,
    y: &DVector<T>,
) -> Result<QuadCheck<T>> {
    quad_dims(a, c, d, x, y)?;
    if !(rho2 > T::zero() && rho2 < T::one()) {
        return Err(Error::Domain("rho^2 must lie in (0, 1)".into()));
    }
    if !(kappa2 > T::zero()) {
        return Err(Error::Domain("kappa^2 must be positive".into()));
    }
    let xax = x.dot(&(a * x));
    let xcy = x.dot(&(c * y));
    let ydy = y.dot(&(d * y));
    let yy = y.norm_squared();
    let k = kappa2 / (T::one() - rho2);
    let two = T::lit(2.0);
    let residual = xax + two * xcy + ydy - rho2 * xax + k * yy;
    let norms = [a, d].iter().fold(c.abs().max(), |acc, m| acc.max(m.abs().max()));
    let scale = (x.norm_squared() + yy) * (T::lit(3.0) * norms + k).max(T::one());
    Ok(QuadCheck { residual, scale })
}

/// Checked residual: the augmented block matrix with lower-right block
/// `(1−ρ²)D + κ²I` must be PSD (this holds whenever the full matrix is PSD
/// and `ρ² λ_max(D) ≤ κ²`).
pub fn quad_inequality_check<T: Scalar>(
    a: &DMatrix<T>,
    c: &DMatrix<T>,
    d: &DMatrix<T>,
    rho2: T,
    kappa2: T,
    x: &DVector<T>,
    y: &DVector<T>,
) -> Result<QuadCheck<T>> {
    let out = quad_residual(a, c, d, rho2, kappa2, x, y)?;
    let (p, q) = (x.len(), y.len());
    let mut aug = DMatrix::zeros(p + q, p + q);
    aug.view_mut((0, 0), (p, p)).copy_from(a);
    aug.view_mut((0, p), (p, q)).copy_from(c);
    aug.view_mut((p, 0), (q, p)).copy_from(&c.transpose());
    let lower = d * (T::one() - rho2) + DMatrix::identity(q, q) * kappa2;
    aug.view_mut((p, p), (q, q)).copy_from(&lower);
    let aug = linalg::symmetrize(aug);
    let scale = aug.abs().max().max(T::one());
    let lmin = linalg::lambda_min(&aug);
    if lmin < -T::lit(1e-10) * scale {
        return Err(Error::Precondition(format!(
            "augmented matrix is not PSD (lambda_min = {:e}); inequality not guaranteed",
            lmin.as_f64()
        )));
    }
    Ok(out)
}
