//! Small dense linear-algebra kernels shared by the projection and solver modules.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};

use crate::error::{Error, Result};

/// Any m×m system whose condition estimate exceeds this is treated as singular.
pub const SINGULARITY_THRESHOLD: f64 = 1e12;

/// Result of a condition-guarded dense solve.
#[derive(Debug, Clone)]
pub struct GuardedSolve<T> {
    pub condition: f64,
    pub solution: Option<T>,
}

fn extreme_singular_values(m: &DMatrix<f64>) -> (f64, f64) {
    let sv = m.singular_values();
    let max = sv.iter().cloned().fold(0.0_f64, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    (min, max)
}

/// 2-norm condition number `σ_max / σ_min` (infinite when rank deficient).
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let (min, max) = extreme_singular_values(m);
    if min > 0.0 && min.is_finite() {
        max / min
    } else {
        f64::INFINITY
    }
}

/// Solves `system · x = rhs` for a product system `system = U'V`.
///
/// The condition estimate is `scale / σ_min(system)` where `scale` bounds
/// `‖U‖·‖V‖`. Unlike the plain condition number this also catches
/// cancellation in the product: a 1×1 system `u'v ≈ 0` is well conditioned
/// as a matrix but is still reported as singular here.
pub fn guarded_solve(
    system: &DMatrix<f64>,
    rhs: &DMatrix<f64>,
    scale: f64,
) -> GuardedSolve<DMatrix<f64>> {
    let (min, max) = extreme_singular_values(system);
    let scale = if scale > 0.0 && scale.is_finite() {
        scale.max(max)
    } else {
        max
    };
    let condition = if min > 0.0 { scale / min } else { f64::INFINITY };
    if !(condition <= SINGULARITY_THRESHOLD) {
        return GuardedSolve {
            condition,
            solution: None,
        };
    }
    let solution = system.clone().lu().solve(rhs);
    GuardedSolve {
        condition,
        solution: solution.filter(|s| s.iter().all(|x| x.is_finite())),
    }
}

pub fn guarded_solve_vec(
    system: &DMatrix<f64>,
    rhs: &DVector<f64>,
    scale: f64,
) -> GuardedSolve<DVector<f64>> {
    let rhs = DMatrix::from_column_slice(rhs.len(), 1, rhs.as_slice());
    let g = guarded_solve(system, &rhs, scale);
    GuardedSolve {
        condition: g.condition,
        solution: g.solution.map(|s| s.column(0).into_owned()),
    }
}

/// Thin QR factorization of `diag(sqrt_w) · a`, the workhorse of every
/// ξ-weighted least-squares problem.
pub struct WeightedQr {
    q: DMatrix<f64>,
    r: DMatrix<f64>,
    sqrt_w: DVector<f64>,
    pub condition: f64,
}

impl WeightedQr {
    pub fn new(a: &DMatrix<f64>, sqrt_w: &DVector<f64>) -> Self {
        let mut aw = a.clone();
        for (i, mut row) in aw.row_iter_mut().enumerate() {
            row *= sqrt_w[i];
        }
        let qr = aw.qr();
        let q = qr.q();
        let r = qr.r();
        let condition = condition_number(&r);
        WeightedQr {
            q,
            r,
            sqrt_w: sqrt_w.clone(),
            condition,
        }
    }

    pub fn is_singular(&self) -> bool {
        !(self.condition <= SINGULARITY_THRESHOLD)
    }

    /// Minimizer of `‖diag(sqrt_w)(a x − b)‖₂`.
    pub fn solve(&self, b: &DVector<f64>) -> Option<DVector<f64>> {
        let bw = b.component_mul(&self.sqrt_w);
        let qtb = self.q.transpose() * bw;
        self.r.solve_upper_triangular(&qtb)
    }

    /// The coefficient map `R⁻¹ Q' diag(sqrt_w)`, equal to `(a'Wa)⁻¹ a'W`.
    pub fn coefficient_map(&self) -> Option<DMatrix<f64>> {
        let mut qt = self.q.transpose();
        for (j, mut col) in qt.column_iter_mut().enumerate() {
            col *= self.sqrt_w[j];
        }
        self.r.solve_upper_triangular(&qt)
    }
}

/// Largest eigenvalue modulus of a general square matrix.
pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            context: "spectral_radius (square matrix)",
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 10_000).ok_or(Error::EigenFailure)?;
    let eig = schur.complex_eigenvalues();
    Ok(eig.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Principal square root of a symmetric positive semidefinite matrix.
pub fn psd_sqrt(g: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(symmetrize(g));
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

/// `σ(G H)` for symmetric PSD `G`, `H`, evaluated as the top eigenvalue of
/// the similar symmetric matrix `G^{1/2} H G^{1/2}`.
pub fn psd_product_radius(g: &DMatrix<f64>, h: &DMatrix<f64>) -> f64 {
    let root = psd_sqrt(g);
    let s = symmetrize(&(&root * h * &root));
    let eig = SymmetricEigen::new(s);
    eig.eigenvalues.iter().cloned().fold(0.0, f64::max)
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}
