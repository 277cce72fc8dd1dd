//! Reference values of `R` on finite truncations:
//! `sup{αᵀMα : ‖α‖ ≤ 1, αᵀSα ≤ ε²}`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::eigen::EigenSystem;
use crate::error::{Error, Result};
use crate::linalg::{self, MAX_DENSE_DIM};
use crate::psi::assemble;
use crate::sampling::SamplingOperator;
use crate::scalar::Scalar;

/// Truncated problem with diagonal objective `M` and PSD constraint `S`.
#[derive(Debug, Clone, PartialEq)]
pub struct QcqpInstance<T: Scalar> {
    m: DVector<T>,
    s: DMatrix<T>,
    eps2: T,
}

impl<T: Scalar> QcqpInstance<T> {
    pub fn new(m: DVector<T>, s: DMatrix<T>, eps2: T) -> Result<Self> {
        let n = m.len();
        if s.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!("M has {n} entries, S is {:?}", s.shape())));
        }
        if n == 0 {
            return Err(Error::InvalidInput("instance must have at least one coordinate".into()));
        }
        if !(eps2 >= T::zero()) {
            return Err(Error::Domain("eps^2 must be nonnegative".into()));
        }
        if m.iter().any(|v| !(*v >= T::zero())) || m.as_slice().windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidInput("M must be nonnegative and nonincreasing".into()));
        }
        let scale = s.abs().max().max(T::one());
        let tol = T::lit(1e-10) * scale;
        if linalg::asymmetry(&s) > tol {
            return Err(Error::InvalidInput("S must be symmetric".into()));
        }
        let s = linalg::symmetrize(s);
        if linalg::lambda_min(&s) < -tol {
            return Err(Error::InvalidInput("S must be positive semidefinite".into()));
        }
        Ok(QcqpInstance { m, s, eps2 })
    }

    /// `M = diag(σ_1..σ_N)`, `S = M^{1/2} Ψ_N M^{1/2}`.
    pub fn from_operator(op: &SamplingOperator<T>, sys: &EigenSystem<T>, n_trunc: usize, eps2: T) -> Result<Self> {
        let psi = assemble(op, sys, 1, n_trunc, MAX_DENSE_DIM)?;
        let m = DVector::from_vec(sys.sigmas(n_trunc));
        let s = linalg::symmetrize(linalg::scale_sym(&psi.matrix, &m));
        QcqpInstance::new(m, s, eps2)
    }

    pub fn dim(&self) -> usize {
        self.m.len()
    }

    pub fn m(&self) -> &DVector<T> {
        &self.m
    }

    pub fn s(&self) -> &DMatrix<T> {
        &self.s
    }

    pub fn eps2(&self) -> T {
        self.eps2
    }

    pub fn with_eps2(&self, eps2: T) -> Result<Self> {
        if !(eps2 >= T::zero()) {
            return Err(Error::Domain("eps^2 must be nonnegative".into()));
        }
        Ok(QcqpInstance { eps2, ..self.clone() })
    }

    /// Objective restricted to the ray through `u`: `uᵀMu · min(1, ε²/uᵀSu)`.
    fn ray_value(&self, u: &[T]) -> T {
        let mut q2 = T::zero();
        for (ui, mi) in u.iter().zip(self.m.iter()) {
            q2 += *mi * *ui * *ui;
        }
        let mut qs = T::zero();
        for i in 0..u.len() {
            for j in 0..u.len() {
                qs += u[i] * self.s[(i, j)] * u[j];
            }
        }
        q2 * cap(self.eps2, qs)
    }
}

/// `min(1, e/a)`, with `1` when `a ≤ 0`.
fn cap<T: Scalar>(e: T, a: T) -> T {
    if a <= T::zero() {
        T::one()
    } else {
        (e / a).min(T::one())
    }
}

/// Lagrangian dual `inf_{t≥0} max{λ_max(M − tS), 0} + tε²`, exact by
/// convexity of the joint numerical range.
pub fn dual_oracle<T: Scalar>(inst: &QcqpInstance<T>, tol: T) -> T {
    let m = DMatrix::from_diagonal(&inst.m);
    linalg::penalized_line_min(&m, &inst.s, inst.eps2, tol).value
}

/// Largest `res^{N−1}` the grid oracle will evaluate.
pub const GRID_BUDGET: f64 = 1e8;

/// Local refinement rounds after the global angle grid.
const REFINE_ROUNDS: usize = 12;
const REFINE_POINTS: usize = 9;

fn sphere_point<T: Scalar>(angles: &[T]) -> Vec<T> {
    let n = angles.len() + 1;
    let mut u = vec![T::one(); n];
    let mut prod = T::one();
    for (i, a) in angles.iter().enumerate() {
        u[i] = prod * a.cos();
        prod *= a.sin();
    }
    u[n - 1] = prod;
    u
}

/// Feasible-point lower bound from a deterministic hyperspherical angle grid
/// with `resolution` points per angle (`N ≤ 4`), followed by a local zoom
/// around the best grid point.
pub fn grid_oracle<T: Scalar>(inst: &QcqpInstance<T>, resolution: usize) -> Result<T> {
    let n = inst.dim();
    if n > 4 {
        return Err(Error::Unsupported(format!("grid oracle supports N <= 4, got {n}")));
    }
    if n == 1 {
        return Ok(inst.ray_value(&[T::one()]));
    }
    if resolution < 2 {
        return Err(Error::InvalidInput("resolution must be at least 2".into()));
    }
    let k = n - 1;
    if (resolution as f64).powi(k as i32) > GRID_BUDGET {
        return Err(Error::Resource(format!("{resolution}^{k} grid points exceed the budget")));
    }
    // Sign symmetry: every angle in [0, π] covers the sphere up to ±u.
    let pi = T::pi();
    let step = pi / T::from_index(resolution - 1);
    let total = resolution.pow(k as u32);
    let (best_val, best_idx) = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut rem = flat;
            let angles: Vec<T> = (0..k)
                .map(|_| {
                    let i = rem % resolution;
                    rem /= resolution;
                    step * T::from_index(i)
                })
                .collect();
            (inst.ray_value(&sphere_point(&angles)), flat)
        })
        .reduce(
            || (T::zero() - T::one(), usize::MAX),
            |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
        );
    let mut rem = best_idx;
    let mut center: Vec<T> = (0..k)
        .map(|_| {
            let i = rem % resolution;
            rem /= resolution;
            step * T::from_index(i)
        })
        .collect();
    let mut best = best_val;
    let mut radius = step;
    let half = (REFINE_POINTS / 2) as isize;
    for _ in 0..REFINE_ROUNDS {
        let local_total = REFINE_POINTS.pow(k as u32);
        let h = radius / T::from_index(half as usize);
        let mut next = center.clone();
        for flat in 0..local_total {
            let mut rem = flat;
            let angles: Vec<T> = center
                .iter()
                .map(|c| {
                    let off = (rem % REFINE_POINTS) as isize - half;
                    rem /= REFINE_POINTS;

                    if off < 0 {
                        *c - h * T::from_index((-off) as usize)
                    } else {
                        *c + h * T::from_index(off as usize)
                    }
                })
                .collect();
            let val = inst.ray_value(&sphere_point(&angles));
            if val > best {
                best = val;
                next = angles;
            }
        }
        center = next;
        radius = h;
    }
    Ok(best)
}

/// `sup{u² r² + v² s² : r² + s² ≤ 1, a² r² + d² s² ≤ ε²}`.
///
/// The feasible image is the triangle hull of `0`, `(u², a²)`, `(v², d²)`, so
/// the supremum sits at one of the vertices of the resulting linear program.
pub fn two_by_two_f<T: Scalar>(u2: T, v2: T, a2: T, d2: T, eps2: T) -> Result<T> {
    for (name, v) in [("u2", u2), ("v2", v2), ("a2", a2), ("d2", d2), ("eps2", eps2)] {
        if !(v >= T::zero()) {
            return Err(Error::Domain(format!("{name} must be nonnegative")));
        }
    }
    let (u2, v2, a2, d2) = if u2 >= v2 { (u2, v2, a2, d2) } else { (v2, u2, d2, a2) };
    if a2 > d2 && d2 >= v2 && a2 == u2 {
        return Ok(eps2.min(u2));
    }
    let mut best = (u2 * cap(eps2, a2)).max(v2 * cap(eps2, d2));
    if a2 != d2 {
        let l1 = (eps2 - d2) / (a2 - d2);
        if l1 >= T::zero() && l1 <= T::one() {
            best = best.max(u2 * l1 + v2 * (T::one() - l1));
        }
    }
    Ok(best)
}

/// A point on the upper boundary of `{(αᵀMα, αᵀSα) : ‖α‖ = 1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint<T> {
    pub theta: T,
    pub q2: T,
    pub qphi: T,
}

/// Largest dimension accepted by [`q_set_boundary`].
pub const BOUNDARY_MAX_DIM: usize = 64;

/// Support points of the joint numerical range in directions
/// `(cos θ, sin θ)`, `θ = 2πi/samples`.
pub fn q_set_boundary<T: Scalar>(inst: &QcqpInstance<T>, samples: usize) -> Result<Vec<BoundaryPoint<T>>> {
    if inst.dim() > BOUNDARY_MAX_DIM {
        return Err(Error::Unsupported(format!(
            "boundary tracing supports N <= {BOUNDARY_MAX_DIM}, got {}",
            inst.dim()
        )));
    }
    let m = DMatrix::from_diagonal(&inst.m);
    let two_pi = T::two_pi();
    Ok((0..samples)
        .into_par_iter()
        .map(|i| {
            let theta = two_pi * T::from_index(i) / T::from_index(samples);
            let dir = &m * theta.cos() + &inst.s * theta.sin();
            let (_, u) = linalg::top_eigenvector(&linalg::symmetrize(dir));
            let q2 = u.dot(&(&m * &u));
            let qphi = u.dot(&(&inst.s * &u));
            BoundaryPoint { theta, q2, qphi }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn diag(v: &[f64]) -> DVector<f64> {
        DVector::from_vec(v.to_vec())
    }

    #[test]
    fn instance_validation() {
        assert!(QcqpInstance::new(diag(&[0.5, 1.0]), DMatrix::zeros(2, 2), 0.1).is_err());
        assert!(QcqpInstance::new(diag(&[1.0]), DMatrix::from_element(1, 1, -1.0), 0.1).is_err());
        assert!(QcqpInstance::new(diag(&[1.0]), DMatrix::zeros(2, 2), 0.1).is_err());
        assert!(QcqpInstance::new(diag(&[1.0]), DMatrix::zeros(1, 1), -0.1).is_err());
    }

    #[test]
    fn dual_oracle_examples() {
        let m = diag(&[1.0, 0.25]);
        let same = QcqpInstance::new(m.clone(), DMatrix::from_diagonal(&m), 0.1).unwrap();
        assert_abs_diff_eq!(dual_oracle(&same, 1e-12), 0.1, epsilon = 1e-9);
        let free = QcqpInstance::new(m, DMatrix::zeros(2, 2), 0.1).unwrap();
        assert_eq!(dual_oracle(&free, 1e-12), 1.0);
        let sys = EigenSystem::polynomial(1.0, 2.0).unwrap();
        let op = SamplingOperator::fourier_truncation(2).unwrap();
        let inst = QcqpInstance::from_operator(&op, &sys, 3, 0.1).unwrap();
        assert_abs_diff_eq!(dual_oracle(&inst, 1e-12), 0.2, epsilon = 1e-9);
    }

    #[test]
    fn grid_oracle_examples() {
        let m = diag(&[1.0, 0.25]);
        let same = QcqpInstance::new(m.clone(), DMatrix::from_diagonal(&m), 0.1).unwrap();
        let g = grid_oracle(&same, 1000).unwrap();
        assert!((0.0999..=0.1 + 1e-12).contains(&g));
        let pd = QcqpInstance::new(m, DMatrix::identity(2, 2), 0.0).unwrap();
        assert_eq!(grid_oracle(&pd, 100).unwrap(), 0.0);
        let one = QcqpInstance::new(diag(&[1.0]), DMatrix::identity(1, 1), 0.5).unwrap();
        assert_eq!(grid_oracle(&one, 10).unwrap(), 0.5);
        let five = QcqpInstance::new(diag(&[1.0; 5]), DMatrix::identity(5, 5), 0.5).unwrap();
        assert!(matches!(grid_oracle(&five, 10), Err(Error::Unsupported(_))));
    }

    #[test]
    fn two_by_two_examples() {
        assert_abs_diff_eq!(two_by_two_f(4.0, 1.0, 2.0, 0.5, 1.0).unwrap(), 2.0, epsilon = 1e-15);
        assert_eq!(two_by_two_f(4.0, 1.0, 2.0, 0.5, 0.0).unwrap(), 0.0);
        assert_eq!(two_by_two_f(1.0, 0.2, 1.0, 0.5, 0.3).unwrap(), 0.3);
        // Vacuous constraint.
        assert_eq!(two_by_two_f(3.0, 1.0, 0.0, 0.0, 0.2).unwrap(), 3.0);
        // Swapped arguments give the same value.
        assert_eq!(two_by_two_f(1.0, 4.0, 0.5, 2.0, 1.0).unwrap(), two_by_two_f(4.0, 1.0, 2.0, 0.5, 1.0).unwrap());
        // Case a² ≤ d².
        assert_abs_diff_eq!(two_by_two_f(4.0, 1.0, 1.0, 2.0, 0.5).unwrap(), 2.0, epsilon = 1e-15);
        assert!(two_by_two_f(-1.0, 1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn boundary_examples() {
        let sys = EigenSystem::polynomial(1.0, 2.0).unwrap();
        let op = SamplingOperator::fourier_truncation(2).unwrap();
        let inst = QcqpInstance::from_operator(&op, &sys, 4, 0.1).unwrap();
        let pts = q_set_boundary(&inst, 360).unwrap();
        let has = |x: f64, y: f64| pts.iter().any(|b| (b.q2 - x).abs() < 1e-12 && (b.qphi - y).abs() < 1e-12);
        assert!(has(1.0, 1.0));
        assert!(has(1.0 / 9.0, 0.0));
        let one = QcqpInstance::new(diag(&[0.7]), DMatrix::from_element(1, 1, 0.3), 0.1).unwrap();
        for b in q_set_boundary(&one, 8).unwrap() {
            assert_abs_diff_eq!(b.q2, 0.7, epsilon = 1e-15);
            assert_abs_diff_eq!(b.qphi, 0.3, epsilon = 1e-15);
        }
        let m = diag(&[1.0, 0.5, 0.2]);
        let same = QcqpInstance::new(m.clone(), DMatrix::from_diagonal(&m), 0.1).unwrap();
        for b in q_set_boundary(&same, 64).unwrap() {
            assert_abs_diff_eq!(b.q2, b.qphi, epsilon = 1e-12);
        }
    }
}
