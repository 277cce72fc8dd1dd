//! Finite blocks of the Gram matrix `Ψ`, their spectra, and certified upper
//! bounds on `λ_max(M^{1/2} Ψ M^{1/2})` restricted to the infinite tail
//! `{p+1, p+2, …}`.

use nalgebra::{DMatrix, DVector};

use crate::eigen::EigenSystem;
use crate::error::{Error, Result};
use crate::linalg::{self, MAX_DENSE_DIM};
use crate::sampling::SamplingOperator;
use crate::scalar::Scalar;

/// A principal block of `Ψ` on indices `start..=end`.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiBlock<T: Scalar> {
    pub start: usize,
    pub end: usize,
    pub matrix: DMatrix<T>,
}

impl<T: Scalar> PsiBlock<T> {
    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.nrows() == 0
    }

    /// Entry at global (1-based) indices.
    pub fn get(&self, j: usize, k: usize) -> T {
        self.matrix[(j - self.start, k - self.start)]
    }

    /// Smallest eigenvalue of the block.
    pub fn lambda_min(&self) -> T {
        linalg::lambda_min(&self.matrix)
    }

    pub fn lambda_max(&self) -> T {
        linalg::lambda_max(&self.matrix)
    }

    /// `diag(√σ) Ψ diag(√σ)` over the block's index range.
    pub fn weighted(&self, sys: &EigenSystem<T>) -> DMatrix<T> {
        let sig = DVector::from_iterator(self.len(), (self.start..=self.end).map(|k| sys.sigma_at(k)));
        linalg::scale_sym(&self.matrix, &sig)
    }

    /// `λ_max(M^{1/2} Ψ M^{1/2})` over the block's index range.
    pub fn lambda_max_weighted(&self, sys: &EigenSystem<T>) -> T {
        linalg::lambda_max(&self.weighted(sys))
    }
}

/// Assembles `Ψ` on `start..=end`, refusing blocks larger than `cap`.
pub fn assemble<T: Scalar>(
    op: &SamplingOperator<T>,
    sys: &EigenSystem<T>,
    start: usize,
    end: usize,
    cap: usize,
) -> Result<PsiBlock<T>> {
    if start == 0 || end < start {
        return Err(Error::Domain(format!("invalid block range [{start}, {end}]")));
    }
    let size = end + 1 - start;
    if size > cap {
        return Err(Error::Resource(format!("block of size {size} exceeds cap {cap}")));
    }
    // Validates the pairing once.
    op.psi_entry(sys, start, start)?;
    let matrix = if op.has_closed_form(sys) {
        DMatrix::from_fn(size, size, |i, j| op.psi_entry_unchecked(sys, start + i, start + j))
    } else {
        let rows = op.evaluation_rows(sys, start, end);
        let n = op.dim();
        let e = DMatrix::from_fn(size, n, |i, j| rows[i][j]);
        linalg::symmetrize(&e * e.transpose())
    };
    Ok(PsiBlock { start, end, matrix })
}

/// Assembles `Ψ` on `start..=end` with the default dense cap.
pub fn assemble_default<T: Scalar>(
    op: &SamplingOperator<T>,
    sys: &EigenSystem<T>,
    start: usize,
    end: usize,
) -> Result<PsiBlock<T>> {
    assemble(op, sys, start, end, MAX_DENSE_DIM)
}

/// How the tail eigenvalue is bounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailMethod {
    /// Trace of the weighted tail.
    Trace,
    /// Max absolute row sum over the explicit window, plus the trace of the
    /// remainder past the horizon.
    Linf,
    /// Sum of exact `λ_max` over consecutive diagonal blocks of the given
    /// size, plus the trace of the remainder.
    Block { size: usize },
    /// `λ_max` of the explicitly truncated window only. A lower reference,
    /// not a certified bound.
    TruncatedEig,
}

impl TailMethod {
    pub fn name(&self) -> &'static str {
        match self {
            TailMethod::Trace => "trace",
            TailMethod::Linf => "linf",
            TailMethod::Block { .. } => "block",
            TailMethod::TruncatedEig => "truncated_eig",
        }
    }
}

/// Bound on `λ_max(M_p̃^{1/2} Ψ_p̃ M_p̃^{1/2})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailBoundReport<T> {
    pub value: T,
    pub method: TailMethod,
    pub p: usize,
    /// Last index summed explicitly; past it the diagonal envelope is used.
    pub horizon: usize,
    /// `false` only for [`TailMethod::TruncatedEig`].
    pub certified: bool,
}

/// Default explicit horizon `max(8n, 1000)` for an operator of dimension `n`.
pub fn default_horizon(n: usize) -> usize {
    (8 * n).max(1000)
}

/// Analytic bound on the trace of the weighted tail past `horizon`:
/// `sup_{k>H} [Ψ]_kk · Σ_{k>H} σ_k`.
fn remainder_trace<T: Scalar>(op: &SamplingOperator<T>, sys: &EigenSystem<T>, horizon: usize) -> Result<T> {
    let env = op.diag_envelope(sys, horizon)?;
    if env == T::zero() {
        return Ok(T::zero());
    }
    Ok(env * sys.tail_after(horizon, false).value)
}

/// Upper bound on the largest eigenvalue of the weighted infinite tail block
/// of `Ψ` past index `p`.
pub fn tail_lambda_max_bound<T: Scalar>(
    op: &SamplingOperator<T>,
    sys: &EigenSystem<T>,
    p: usize,
    method: TailMethod,
    horizon: usize,
) -> Result<TailBoundReport<T>> {
    if p == 0 {
        return Err(Error::Domain("tail index p must be at least 1".into()));
    }
    let horizon = horizon.max(p);
    let window = horizon - p;
    let report =
        |value: T| TailBoundReport { value, method, p, horizon, certified: method != TailMethod::TruncatedEig };
    if method == TailMethod::TruncatedEig {
        // Pairing check happens inside assemble.
        if window == 0 {
            op.psi_entry(sys, p, p)?;
            return Ok(report(T::zero()));
        }
        let block = assemble(op, sys, p + 1, horizon, MAX_DENSE_DIM)?;
        return Ok(report(block.lambda_max_weighted(sys).max(T::zero())));
    }
    let rest = remainder_trace(op, sys, horizon)?;
    if window == 0 {
        return Ok(report(rest));
    }
    let explicit = match method {
        TailMethod::Trace => {
            op.psi_entry(sys, p + 1, p + 1)?;
            let mut acc = T::zero();
            for k in (p + 1)..=horizon {
                acc += sys.sigma_at(k) * op.psi_entry_unchecked(sys, k, k);
            }
            acc
        }
        TailMethod::Linf => {
            let block = assemble(op, sys, p + 1, horizon, MAX_DENSE_DIM)?;
            let w = block.weighted(sys);
            (0..w.nrows()).fold(T::zero(), |best, i| best.max(w.row(i).iter().fold(T::zero(), |acc, v| acc + v.abs())))
        }
        TailMethod::Block { size } => {
            if size == 0 {
                return Err(Error::InvalidInput("block size must be at least 1".into()));
            }
            let mut acc = T::zero();
            let mut a = p + 1;
            while a <= horizon {
                let b = (a + size - 1).min(horizon);
                let block = assemble(op, sys, a, b, MAX_DENSE_DIM)?;
                acc += block.lambda_max_weighted(sys).max(T::zero());
                a = b + 1;
            }
            acc
        }
        TailMethod::TruncatedEig => unreachable!(),
    };
    Ok(report(explicit + rest))
}

/// `Ψ` on `1..=H` assembled once, so tail bounds for many `p ≤ H` share
/// the same dense block.
#[derive(Debug, Clone)]
pub struct PsiWindow<'a, T: Scalar> {
    op: &'a SamplingOperator<T>,
    sys: &'a EigenSystem<T>,
    block: PsiBlock<T>,
    weighted: DMatrix<T>,
    /// `linf[q]`: largest absolute row sum of the weighted block on `q+1..=H`.
    linf: Vec<T>,
    rest: T,
}

impl<'a, T: Scalar> PsiWindow<'a, T> {
    pub fn new(op: &'a SamplingOperator<T>, sys: &'a EigenSystem<T>, horizon: usize) -> Result<Self> {
        let block = assemble(op, sys, 1, horizon.max(1), MAX_DENSE_DIM)?;
        let weighted = block.weighted(sys);
        let rest = remainder_trace(op, sys, block.end)?;
        let h = weighted.nrows();
        let mut linf = vec![T::zero(); h + 1];
        for (i, col) in weighted.column_iter().enumerate() {
            let mut acc = T::zero();
            for k in (0..h).rev() {
                acc += col[k].abs();
                if k <= i && acc > linf[k] {
                    linf[k] = acc;
                }
            }
        }
        Ok(PsiWindow { op, sys, block, weighted, linf, rest })
    }

    pub fn horizon(&self) -> usize {
        self.block.end
    }

    /// Leading block `Ψ_p`.
    pub fn head(&self, p: usize) -> Result<DMatrix<T>> {
        if p == 0 || p > self.horizon() {
            return Err(Error::Domain(format!("head size {p} outside [1, {}]", self.horizon())));
        }
        Ok(self.block.matrix.view((0, 0), (p, p)).into_owned())
    }

    /// Same contract as [`tail_lambda_max_bound`] with this window's horizon.
    pub fn tail_bound(&self, p: usize, method: TailMethod) -> Result<TailBoundReport<T>> {
        if p == 0 {
            return Err(Error::Domain("tail index p must be at least 1".into()));
        }
        let h = self.horizon();
        if p >= h {
            return tail_lambda_max_bound(self.op, self.sys, p, method, p);
        }
        let w = self.weighted.view((p, p), (h - p, h - p));
        let explicit = match method {
            TailMethod::Trace => w.diagonal().iter().fold(T::zero(), |acc, v| acc + *v),
            TailMethod::Linf => self.linf[p],
            TailMethod::Block { size } => {
                if size == 0 {
                    return Err(Error::InvalidInput("block size must be at least 1".into()));
                }
                let mut acc = T::zero();
                let mut a = 0;
                while a < w.nrows() {
                    let len = size.min(w.nrows() - a);
                    acc += linalg::ball_sup(&w.view((a, a), (len, len)).into_owned());
                    a += len;
                }
                acc
            }
            TailMethod::TruncatedEig => linalg::ball_sup(&w.into_owned()),
        };
        let certified = method != TailMethod::TruncatedEig;
        let value = if certified { explicit + self.rest } else { explicit };
        Ok(TailBoundReport { value, method, p, horizon: h, certified })
    }
}

/// Parameters of a sparse periodic tail: rows periodic with period `γn`,
/// at most `η` entries per period bounded by `c₁`, the rest by `c₂/n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparsePeriodicParams<T> {
    pub gamma: usize,
    pub eta: usize,
    pub c1: T,
    pub c2: T,
}

impl<T: Scalar> SparsePeriodicParams<T> {
    /// Envelope of the Sobolev kernel under uniform sampling.
    pub fn sobolev() -> Self {
        SparsePeriodicParams { gamma: 2, eta: 2, c1: T::lit(2.0), c2: T::one() }
    }

    /// Envelope of Fourier-type kernels under uniform sampling.
    pub fn fourier_type() -> Self {
        SparsePeriodicParams { gamma: 2, eta: 2, c1: T::lit(2.0), c2: T::zero() }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.gamma == 0 {
            return Err(Error::InvalidInput("gamma must be a positive integer".into()));
        }
        if self.eta > self.gamma * n {
            return Err(Error::InvalidInput(format!(
                "eta = {} exceeds the period gamma*n = {}",
                self.eta,
                self.gamma * n
            )));
        }
        if self.c1 < T::zero() || self.c2 < T::zero() {
            return Err(Error::InvalidInput("c1 and c2 must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Number of periods summed explicitly before the analytic remainder.
const SPARSE_PERIODS: usize = 2000;

/// Certified bound on `λ_max(M_ñ^{1/2} Ψ_ñ M_ñ^{1/2})` (tail past `p = n`)
/// for a sparse periodic `Ψ_ñ` and `σ_k = C k^{−α}`, `α ≥ 2`.
///
/// For `α > 2` this is the row-sum bound over the whole tail. For `α = 2`
/// the tail is split at `n²`: row sums over `[n+1, n²]` plus the trace of
/// the rest. Large entries are placed at the start of each period, which
/// maximizes the weighted envelope.
pub fn sparse_periodic_linf_bound<T: Scalar>(params: &SparsePeriodicParams<T>, c: T, alpha: T, n: usize) -> Result<T> {
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    if !(alpha >= T::lit(2.0)) {
        return Err(Error::Domain(format!("sparse periodic bound needs alpha >= 2, got {}", alpha.as_f64())));
    }
    if !(c > T::zero()) {
        return Err(Error::InvalidInput("C must be positive".into()));
    }
    params.validate(n)?;
    if params.c1 == T::zero() && params.c2 == T::zero() {
        return Ok(T::zero());
    }
    let nf = T::from_index(n);
    let half = alpha / T::lit(2.0);
    let root = |l: usize| c.sqrt() * T::from_index(l).powf(-half);
    let small = params.c2 / nf;
    let excess = (params.c1 - small).max(T::zero());
    let period = params.gamma * n;
    let lead = root(n + 1);

    if alpha > T::lit(2.0) {
        let periods = SPARSE_PERIODS;
        let last = n + period * periods;
        let hm1 = half - T::one();
        let mut all = T::zero();
        for l in (n + 1)..=last {
            all += root(l);
        }
        // Σ_{ℓ>L} ℓ^{−α/2} ≤ L^{1−α/2}/(α/2 − 1).
        all += c.sqrt() * T::from_index(last).powf(-hm1) / hm1;
        let mut large = T::zero();
        for q in 0..periods {
            for r in 1..=params.eta {
                large += root(n + r + q * period);
            }
        }
        // Σ_{q≥Q} η (n + qγn)^{−α/2} ≤ η n^{−α/2} γ^{−α/2} [Q^{−α/2} + Q^{1−α/2}/(α/2−1)].
        let q = T::from_index(periods);
        let g = T::from_index(params.gamma);
        large += T::from_index(params.eta) * c.sqrt() * (nf * g).powf(-half) * (q.powf(-half) + q.powf(-hm1) / hm1);
        Ok(lead * (small * all + excess * large))
    } else {
        let split = n * n;
        let mut row = T::zero();
        let mut l = n + 1;
        while l <= split {
            let r = (l - n - 1) % period + 1;
            let weight = if r <= params.eta { small + excess } else { small };
            row += weight * root(l);
            l += 1;
        }
        let diag = params.c1.max(small);
        let am1 = alpha - T::one();
        let trace = diag * c * T::from_index(split.max(1)).powf(-am1) / am1;
        Ok(lead * row + trace)
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

    #[test]
    fn fourier_truncation_block_is_identity() {
        let op = SamplingOperator::fourier_truncation(3).unwrap();
        let b = assemble_default(&op, &sob(), 1, 3).unwrap();
        assert_eq!(b.matrix, DMatrix::identity(3, 3));
        assert_eq!(b.lambda_min(), 1.0);
    }

    #[test]
    fn sobolev_grid_block_is_identity_plus_rank_one() {
        let op = SamplingOperator::uniform_grid(9).unwrap();
        let b = assemble_default(&op, &sob(), 1, 9).unwrap();
        let s = DVector::from_fn(9, |j, _| if j % 2 == 0 { 1.0 } else { -1.0 });
        let expect = DMatrix::identity(9, 9) + &s * s.transpose() / 9.0;
        assert!((&b.matrix - expect).amax() < 1e-12);
        assert_abs_diff_eq!(b.lambda_min(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn single_entry_block() {
        let op = SamplingOperator::uniform_grid(5).unwrap();
        let b = assemble_default(&op, &sob(), 2, 2).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b.matrix[(0, 0)], op.psi_entry(&sob(), 2, 2).unwrap());
    }

    #[test]
    fn assemble_respects_cap_and_range() {
        let op = SamplingOperator::uniform_grid(5).unwrap();
        assert!(matches!(assemble(&op, &sob(), 1, 20, 10), Err(Error::Resource(_))));
        assert!(matches!(assemble(&op, &sob(), 3, 2, 10), Err(Error::Domain(_))));
        assert!(matches!(assemble(&op, &sob(), 0, 2, 10), Err(Error::Domain(_))));
    }

    #[test]
    fn weighted_lambda_max_of_fourier_block() {
        let sys = EigenSystem::polynomial(1.0, 2.0).unwrap();
        let op = SamplingOperator::fourier_truncation(4).unwrap();
        let b = assemble_default(&op, &sys, 1, 4).unwrap();
        assert_abs_diff_eq!(b.lambda_max_weighted(&sys), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn fourier_truncation_tail_is_zero() {
        let sys = EigenSystem::polynomial(1.0, 2.0).unwrap();
        let op = SamplingOperator::fourier_truncation(6).unwrap();
        for method in [TailMethod::Trace, TailMethod::Linf, TailMethod::Block { size: 4 }, TailMethod::TruncatedEig] {
            let r = tail_lambda_max_bound(&op, &sys, 6, method, 50).unwrap();
            assert_eq!(r.value, 0.0, "{method:?}");
        }
    }

    #[test]
    fn trace_bound_for_geometric_fourier_kernel() {
        let sys = EigenSystem::fourier_zeta(ZetaSequence::geometric(0.5)).unwrap();
        let op = SamplingOperator::uniform_grid(7).unwrap();
        let p = 7;
        let r = tail_lambda_max_bound(&op, &sys, p, TailMethod::Trace, 200).unwrap();
        let t = sys.tail_sum(p).unwrap();
        assert!(t.exact);
        assert!(r.value <= 2.0 * t.value + 1e-15);
    }

    #[test]
    fn abstract_kind_with_domain_operator_errors() {
        let sys = EigenSystem::polynomial(1.0, 2.0).unwrap();
        let op = SamplingOperator::uniform_grid(4).unwrap();
        assert!(matches!(tail_lambda_max_bound(&op, &sys, 4, TailMethod::Trace, 100), Err(Error::Unsupported(_))));
    }

    #[test]
    fn sparse_periodic_zero_envelope() {
        let params = SparsePeriodicParams { gamma: 2, eta: 2, c1: 0.0, c2: 0.0 };
        assert_eq!(sparse_periodic_linf_bound(&params, 1.0, 3.0, 16).unwrap(), 0.0);
        assert!(sparse_periodic_linf_bound(&SparsePeriodicParams::sobolev(), 1.0, 1.5, 16).is_err());
        let bad = SparsePeriodicParams { gamma: 1, eta: 5, c1: 1.0, c2: 1.0 };
        assert!(sparse_periodic_linf_bound(&bad, 1.0, 3.0, 4).is_err());
    }

    #[test]
    fn sparse_periodic_dominates_sobolev_tail() {
        // σ_k = 4/(π²(2k−1)²) ≤ (4/π²) k^{−2}.
        let c = 4.0 / std::f64::consts::PI.powi(2);
        for n in [4, 9, 16] {
            let op = SamplingOperator::uniform_grid(n).unwrap();
            let lower = tail_lambda_max_bound(&op, &sob(), n, TailMethod::TruncatedEig, 12 * n).unwrap();
            let bound = sparse_periodic_linf_bound(&SparsePeriodicParams::sobolev(), c, 2.0, n).unwrap();
            assert!(bound >= lower.value, "n={n}: {bound} < {}", lower.value);
        }
    }
}
