//! ξ-weighted norms, orthogonal and oblique projections onto span(Φ), and
//! the small-matrix evaluation of projector norms.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, guarded_solve, WeightedQr};

/// Columns of Φ count as independent when `σ_min > INDEPENDENCE_RATIO · σ_max`.
pub const INDEPENDENCE_RATIO: f64 = 1e-10;
/// State weights must sum to 1 within this tolerance.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

/// N×m feature matrix Φ with linearly independent columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBasis {
    matrix: DMatrix<f64>,
}

impl FeatureBasis {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let (n, m) = matrix.shape();
        if m == 0 || n == 0 {
            return Err(Error::InvalidFeatures("empty feature matrix".into()));
        }
        if m > n {
            return Err(Error::InvalidFeatures(format!(
                "{m} features for {n} states (need m <= N)"
            )));
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidFeatures("non-finite entry".into()));
        }
        let ratio = independence_ratio(&matrix);
        if !(ratio > INDEPENDENCE_RATIO) {
            return Err(Error::InvalidFeatures(format!(
                "columns are not linearly independent (singular value ratio {ratio:.3e})"
            )));
        }
        Ok(FeatureBasis { matrix })
    }

    pub fn identity(n: usize) -> Self {
        FeatureBasis {
            matrix: DMatrix::identity(n, n),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn n_states(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.matrix.ncols()
    }

    /// `Φ w`.
    pub fn combine(&self, weights: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("feature weights", self.n_features(), weights.len())?;
        Ok(&self.matrix * weights)
    }
}

/// `σ_min(Φ) / σ_max(Φ)`.
pub fn independence_ratio(matrix: &DMatrix<f64>) -> f64 {
    let sv = matrix.singular_values();
    let max = sv.max();
    if max > 0.0 {
        sv.min() / max
    } else {
        0.0
    }
}

/// Strictly positive state distribution ξ.
#[derive(Debug, Clone, PartialEq)]
pub struct StateWeights {
    weights: DVector<f64>,
}

impl StateWeights {
    /// Requires `ξ > 0` and `Σξ = 1` within 1e-12.
    pub fn new(weights: DVector<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidWeights("empty weight vector".into()));
        }
        if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !(**w > 0.0)) {
            return Err(Error::InvalidWeights(format!(
                "weight {i} is {w}, must be strictly positive"
            )));
        }
        let sum = weights.sum();
        if !((sum - 1.0).abs() <= WEIGHT_SUM_TOLERANCE) {
            return Err(Error::InvalidWeights(format!("weights sum to {sum}, not 1")));
        }
        Ok(StateWeights { weights })
    }

    /// Scales a positive vector to sum 1.
    pub fn normalized(weights: DVector<f64>) -> Result<Self> {
        let sum = weights.sum();
        if !(sum > 0.0 && sum.is_finite()) {
            return Err(Error::InvalidWeights(format!("cannot normalize, sum is {sum}")));
        }
        StateWeights::new(weights / sum)
    }

    pub fn uniform(n: usize) -> Self {
        StateWeights {
            weights: DVector::from_element(n, 1.0 / n as f64),
        }
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn sqrt(&self) -> DVector<f64> {
        self.weights.map(f64::sqrt)
    }

    /// `Ξ M` (row scaling).
    pub fn scale_rows(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = m.clone();
        for (i, mut row) in out.row_iter_mut().enumerate() {
            row *= self.weights[i];
        }
        out
    }

    /// `Ξ⁻¹ M` (row scaling).
    pub fn unscale_rows(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = m.clone();
        for (i, mut row) in out.row_iter_mut().enumerate() {
            row /= self.weights[i];
        }
        out
    }

    /// `Ξ^{1/2} M`
    pub fn sqrt_scale_rows(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = m.clone();
        for (i, mut row) in out.row_iter_mut().enumerate() {
            row *= self.weights[i].sqrt();
        }
        out
    }

    /// `Ξ^{-1/2} M`
    pub fn sqrt_unscale_rows(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = m.clone();
        for (i, mut row) in out.row_iter_mut().enumerate() {
            row /= self.weights[i].sqrt();
        }
        out
    }
}

/// `‖v‖_ξ = sqrt(Σ ξ_i v_i²)`.
pub fn weighted_norm(v: &DVector<f64>, xi: &StateWeights) -> Result<f64> {
    check_dim("weighted_norm", xi.len(), v.len())?;
    Ok(v
        .iter()
        .zip(xi.as_vector().iter())
        .map(|(x, w)| w * x * x)
        .sum::<f64>()
        .sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapKind {
    /// ξ-orthogonal projection.
    Orthogonal,
    /// Projection orthogonally to span(X).
    Oblique,
}

/// An m×N left inverse π of Φ; `Φπ` is a projector onto span(Φ).
#[derive(Debug, Clone)]
pub struct CoefficientMap {
    matrix: DMatrix<f64>,
    kind: MapKind,
    condition: f64,
}

impl CoefficientMap {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    pub fn condition_estimate(&self) -> f64 {
        self.condition
    }

    /// Coordinates `π v` of the projection of `v`.
    pub fn coordinates(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("coefficient map input", self.matrix.ncols(), v.len())?;
        Ok(&self.matrix * v)
    }

    /// The N×N projector `Φπ`.
    pub fn projector(&self, phi: &FeatureBasis) -> Result<DMatrix<f64>> {
        check_dim("projector", phi.n_features(), self.matrix.nrows())?;
        Ok(phi.matrix() * &self.matrix)
    }
}

/// `π = (Φ'ΞΦ)⁻¹Φ'Ξ`, computed from a thin QR of `Ξ^{1/2}Φ`.
///
/// The reported condition estimate is that of `Ξ^{1/2}Φ`.
pub fn orthogonal_coefficient_map(phi: &FeatureBasis, xi: &StateWeights) -> Result<CoefficientMap> {
    check_dim("orthogonal_coefficient_map", phi.n_states(), xi.len())?;
    let qr = WeightedQr::new(phi.matrix(), &xi.sqrt());
    if qr.is_singular() {
        return Err(Error::Singular {
            matrix: "Φ'ΞΦ",
            condition: qr.condition,
        });
    }
    let matrix = qr.coefficient_map().ok_or(Error::Singular {
        matrix: "Φ'ΞΦ",
        condition: qr.condition,
    })?;
    Ok(CoefficientMap {
        matrix,
        kind: MapKind::Orthogonal,
        condition: qr.condition,
    })
}

/// `π_X = (X'Φ)⁻¹X'`, the projection onto span(Φ) orthogonally to span(X).
pub fn oblique_coefficient_map(phi: &FeatureBasis, x: &DMatrix<f64>) -> Result<CoefficientMap> {
    check_dim("direction rows", phi.n_states(), x.nrows())?;
    check_dim("direction columns", phi.n_features(), x.ncols())?;
    let system = x.tr_mul(phi.matrix());
    let scale = x.norm() * phi.matrix().norm();
    let solved = guarded_solve(&system, &x.transpose(), scale);
    match solved.solution {
        Some(matrix) => Ok(CoefficientMap {
            matrix,
            kind: MapKind::Oblique,
            condition: solved.condition,
        }),
        None => Err(Error::Singular {
            matrix: "X'Φ",
            condition: solved.condition,
        }),
    }
}

/// `‖Y Z‖_ξ` for an N×m `Y` and an m×N `Z`, as `sqrt σ((Y'ΞY)(ZΞ⁻¹Z'))`.
pub fn product_weighted_norm(y: &DMatrix<f64>, z: &DMatrix<f64>, xi: &StateWeights) -> Result<f64> {
    check_dim("product norm Y rows", xi.len(), y.nrows())?;
    check_dim("product norm Z columns", xi.len(), z.ncols())?;
    check_dim("product norm inner dimension", y.ncols(), z.nrows())?;
    let g = y.tr_mul(&xi.scale_rows(y));
    let zt = z.transpose();
    let h = zt.tr_mul(&xi.unscale_rows(&zt));
    Ok(linalg::psd_product_radius(&g, &h).sqrt())
}

/// `‖Φπ‖_ξ` through the m×m product.
pub fn projector_weighted_norm(
    phi: &FeatureBasis,
    pi: &CoefficientMap,
    xi: &StateWeights,
) -> Result<f64> {
    product_weighted_norm(phi.matrix(), pi.matrix(), xi)
}

pub use crate::linalg::spectral_radius;

/// Induced ξ-operator norm of an N×N matrix: `σ_max(Ξ^{1/2} M Ξ^{-1/2})`.
pub fn operator_norm_oracle(m: &DMatrix<f64>, xi: &StateWeights) -> Result<f64> {
    check_dim("operator norm rows", xi.len(), m.nrows())?;
    check_dim("operator norm columns", xi.len(), m.ncols())?;
    let s = xi.sqrt();
    let scaled = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| s[i] * m[(i, j)] / s[j]);
    Ok(scaled.singular_values().max())
}
