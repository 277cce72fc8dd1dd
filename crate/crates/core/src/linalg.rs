//! Dense symmetric eigenvalue helpers and the scalar convex line search used
//! by both the bound engine and the dual oracle.

use nalgebra::{DMatrix, DVector};

use crate::scalar::Scalar;

/// Largest matrix dimension handed to the dense eigensolver.
pub const MAX_DENSE_DIM: usize = 4096;

/// Eigenvalues of a symmetric matrix, sorted ascending.
pub fn sym_eigenvalues<T: Scalar>(m: &DMatrix<T>) -> DVector<T> {
    assert_eq!(m.nrows(), m.ncols(), "matrix must be square");
    if m.nrows() == 0 {
        return DVector::zeros(0);
    }
    let mut vals: Vec<T> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    DVector::from_vec(vals)
}

/// Largest eigenvalue of a symmetric matrix; `0` for an empty matrix.
pub fn lambda_max<T: Scalar>(m: &DMatrix<T>) -> T {
    let vals = sym_eigenvalues(m);
    vals.iter().copied().last().unwrap_or_else(T::zero)
}

/// Smallest eigenvalue of a symmetric matrix; `0` for an empty matrix.
pub fn lambda_min<T: Scalar>(m: &DMatrix<T>) -> T {
    let vals = sym_eigenvalues(m);
    vals.iter().copied().next().unwrap_or_else(T::zero)
}

/// Spectral norm of a symmetric matrix (largest absolute eigenvalue).
pub fn sym_spectral_norm<T: Scalar>(m: &DMatrix<T>) -> T {
    let vals = sym_eigenvalues(m);
    vals.iter().fold(T::zero(), |acc, v| acc.max(v.abs()))
}

/// Eigenpair with the largest eigenvalue of a symmetric matrix.
pub fn top_eigenvector<T: Scalar>(m: &DMatrix<T>) -> (T, DVector<T>) {
    let eig = m.clone().symmetric_eigen();
    let mut best = 0;
    for i in 1..eig.eigenvalues.len() {
        if eig.eigenvalues[i] > eig.eigenvalues[best] {
            best = i;
        }
    }
    (eig.eigenvalues[best], eig.eigenvectors.column(best).into_owned())
}

/// Smallest eigenvalue exceeding `rel_tol * λ_max`, if any.
pub fn lambda_min_positive<T: Scalar>(m: &DMatrix<T>, rel_tol: T) -> Option<T> {
    let vals = sym_eigenvalues(m);
    let top = vals.iter().copied().last()?;
    let cut = rel_tol * top.abs();
    vals.iter().copied().find(|v| *v > cut && *v > T::zero())
}

/// `max{λ_max(m), 0}`, i.e. the supremum of `xᵀ m x` over the unit ball.
pub fn ball_sup<T: Scalar>(m: &DMatrix<T>) -> T {
    lambda_max(m).max(T::zero())
}

/// `lim_{t→∞} max{λ_max(a − t b), 0}` for symmetric `a` and PSD `b`.
///
/// Equals the top eigenvalue of `a` compressed to the numerical null space of
/// `b` (eigenvalues of `b` below `rel_tol · λ_max(b)`), or `0` if that null
/// space is trivial.
pub fn penalized_limit<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>, rel_tol: T) -> T {
    let n = b.nrows();
    if n == 0 {
        return T::zero();
    }
    let eig = b.clone().symmetric_eigen();
    let top = eig.eigenvalues.iter().fold(T::zero(), |acc, v| acc.max(*v));
    let cut = rel_tol * top;
    let null_cols: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] <= cut).collect();
    if null_cols.is_empty() {
        return T::zero();
    }
    let q = DMatrix::from_fn(n, null_cols.len(), |r, c| eig.eigenvectors[(r, null_cols[c])]);
    let compressed = q.transpose() * a * &q;
    ball_sup(&symmetrize(compressed))
}

/// Replaces `m` by `(m + mᵀ)/2`.
pub fn symmetrize<T: Scalar>(m: DMatrix<T>) -> DMatrix<T> {
    let half = T::lit(0.5);
    let t = m.transpose();
    (m + t) * half
}

/// Largest absolute asymmetry `|m_ij − m_ji|`.
pub fn asymmetry<T: Scalar>(m: &DMatrix<T>) -> T {
    let mut worst = T::zero();
    for i in 0..m.nrows() {
        for j in 0..i {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// `diag(√d) m diag(√d)` for a diagonal given as a vector.
pub fn scale_sym<T: Scalar>(m: &DMatrix<T>, d: &DVector<T>) -> DMatrix<T> {
    let root: Vec<T> = d.iter().map(|v| v.max(T::zero()).sqrt()).collect();
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| root[i] * m[(i, j)] * root[j])
}

/// Result of a one-dimensional convex minimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineMin<T> {
    pub arg: T,
    pub value: T,
}

/// Minimizes a convex function on `[lo, hi]` by golden-section search.
///
/// Stops when the bracket width drops below `rel_tol · max(1, hi)`. Both
/// endpoints are always evaluated, so a minimum at the boundary is returned
/// exactly.
pub fn minimize_convex<T: Scalar, F: FnMut(T) -> T>(mut f: F, lo: T, hi: T, rel_tol: T) -> LineMin<T> {
    let mut best = LineMin { arg: lo, value: f(lo) };
    if hi <= lo {
        return best;
    }
    let at_hi = f(hi);
    if at_hi < best.value {
        best = LineMin { arg: hi, value: at_hi };
    }
    let inv_phi = T::lit((5f64.sqrt() - 1.0) / 2.0);
    let width_tol = rel_tol * hi.max(T::one());
    let (mut a, mut b) = (lo, hi);
    let mut c = b - (b - a) * inv_phi;
    let mut d = a + (b - a) * inv_phi;
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iters = 0;
    while (b - a) > width_tol && iters < 400 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * inv_phi;
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * inv_phi;
            fd = f(d);
        }
        iters += 1;
    }
    for (arg, value) in [(c, fc), (d, fd)] {
        if value < best.value {
            best = LineMin { arg, value };
        }
    }
    best
}

/// Relative cut below which eigenvalues of a PSD constraint matrix count as zero.
pub const NULL_REL_TOL: f64 = 1e-12;

/// Cap on bracket doublings in [`penalized_line_min`].
const MAX_DOUBLINGS: usize = 60;

/// `inf_{t ≥ 0} max{λ_max(a − t b), 0} + t c` for symmetric `a` and PSD `b`.
///
/// The bracket starts at `λ_max(a)/λ_min⁺(b)` and doubles until the penalty
/// term vanishes, capped at `λ_max(a)/c` where the linear term alone exceeds
/// the value at `t = 0`. With `c = 0` the infimum is the `t → ∞` limit and the
/// returned argument is `+∞`.
pub fn penalized_line_min<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>, c: T, rel_tol: T) -> LineMin<T> {
    let top = ball_sup(a);
    let at_zero = LineMin { arg: T::zero(), value: top };
    if top == T::zero() || !c.is_finite_value() {
        return at_zero;
    }
    let null_tol = T::lit(NULL_REL_TOL);
    if c <= T::zero() {
        return LineMin { arg: T::infinity(), value: penalized_limit(a, b, null_tol) };
    }
    let Some(floor) = lambda_min_positive(b, null_tol) else {
        return at_zero;
    };
    let pen = |t: T| ball_sup(&(a - b * t));
    let mut hi = top / floor;
    let mut j = 0;
    while pen(hi) > T::zero() && j < MAX_DOUBLINGS {
        hi *= T::lit(2.0);
        j += 1;
    }
    hi = hi.min(top / c);
    minimize_convex(|t| pen(t) + t * c, T::zero(), hi, rel_tol)
}
