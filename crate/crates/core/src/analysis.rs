//! Error functionals of a value estimate and the spectral error bounds of
//! oblique projection methods.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::linalg::guarded_solve;
use crate::mdp::Mdp;
use crate::projection::{orthogonal_coefficient_map, weighted_norm, FeatureBasis, StateWeights};
use crate::solvers::{self, br_direction, solve_best, solve_td, td_direction};

/// Membership test tolerance for `v̂ ∈ span(Φ)`, relative to `max(1, ‖v̂‖_ξ)`.
pub const SPAN_TOLERANCE: f64 = 1e-8;
/// Largest `‖ξ'P − ξ'‖_∞` accepted as stationary.
pub const STATIONARITY_TOLERANCE: f64 = 1e-8;

/// The four error functionals of an estimate `v̂ ∈ span(Φ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    /// `‖v − v̂‖_ξ`
    pub approx_error: f64,
    /// `‖v̂ − ΠTv̂‖_ξ`
    pub td_error: f64,
    /// `‖v̂ − Tv̂‖_ξ`
    pub br_residual: f64,
    /// `‖Tv̂ − ΠTv̂‖_ξ`
    pub adequacy: f64,
}

impl ErrorReport {
    /// `E_BR² − E_TD² − adequacy²`, zero up to rounding.
    pub fn pythagorean_gap(&self) -> f64 {
        self.br_residual.powi(2) - self.td_error.powi(2) - self.adequacy.powi(2)
    }
}

pub fn error_report(
    mdp: &Mdp,
    phi: &FeatureBasis,
    xi: &StateWeights,
    v_hat: &DVector<f64>,
) -> Result<ErrorReport> {
    check_dim("error_report features", mdp.n_states(), phi.n_states())?;
    check_dim("error_report weights", mdp.n_states(), xi.len())?;
    check_dim("error_report estimate", mdp.n_states(), v_hat.len())?;
    let pi = orthogonal_coefficient_map(phi, xi)?;
    let project = |u: &DVector<f64>| phi.matrix() * (pi.matrix() * u);

    let distance = weighted_norm(&(v_hat - project(v_hat)), xi)?;
    let scale = weighted_norm(v_hat, xi)?.max(1.0);
    if distance > SPAN_TOLERANCE * scale {
        return Err(Error::NotInSpan { distance });
    }

    let v = mdp.exact_value()?;
    let t_v_hat = mdp.bellman_apply(v_hat)?;
    let pt_v_hat = project(&t_v_hat);
    Ok(ErrorReport {
        approx_error: weighted_norm(&(&v - v_hat), xi)?,
        td_error: weighted_norm(&(v_hat - &pt_v_hat), xi)?,
        br_residual: weighted_norm(&(v_hat - &t_v_hat), xi)?,
        adequacy: weighted_norm(&(&t_v_hat - &pt_v_hat), xi)?,
    })
}

/// `‖v − v̂‖_ξ`.
pub fn approximation_error(mdp: &Mdp, xi: &StateWeights, v_hat: &DVector<f64>) -> Result<f64> {
    let v = mdp.exact_value()?;
    check_dim("approximation_error", v.len(), v_hat.len())?;
    weighted_norm(&(v - v_hat), xi)
}

/// Which projection direction a bound was computed for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Td,
    Br,
    Optimal,
    Custom,
}

/// Matrices `A = Φ'ΞΦ`, `B = (X'LΦ)⁻¹`, `C = X'LΞ⁻¹L'X` and the amplification
/// factor `sqrt σ(ABCB') = ‖Π_{L'X}‖_ξ`.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub direction: Direction,
    pub a_matrix: DMatrix<f64>,
    /// Absent when `X'LΦ` is singular.
    pub b_matrix: Option<DMatrix<f64>>,
    pub c_matrix: DMatrix<f64>,
    pub condition_estimate: f64,
    /// Absent when `X'LΦ` is singular.
    pub bound: Option<f64>,
}

impl BoundReport {
    pub fn is_singular(&self) -> bool {
        self.bound.is_none()
    }
}

pub fn error_bound(
    mdp: &Mdp,
    phi: &FeatureBasis,
    xi: &StateWeights,
    x: &DMatrix<f64>,
) -> Result<BoundReport> {
    error_bound_tagged(mdp, phi, xi, x, Direction::Custom)
}

fn error_bound_tagged(
    mdp: &Mdp,
    phi: &FeatureBasis,
    xi: &StateWeights,
    x: &DMatrix<f64>,
    direction: Direction,
) -> Result<BoundReport> {
    check_dim("error_bound features", mdp.n_states(), phi.n_states())?;
    check_dim("error_bound weights", mdp.n_states(), xi.len())?;
    check_dim("error_bound direction rows", phi.n_states(), x.nrows())?;
    check_dim("error_bound direction columns", phi.n_features(), x.ncols())?;
    let f = phi.matrix();
    let m = f.ncols();
    let a = f.tr_mul(&xi.scale_rows(f));
    let l = mdp.l_matrix();
    let l_phi = &l * f;
    let lt_x = l.tr_mul(x);
    let c = lt_x.tr_mul(&xi.unscale_rows(&lt_x));
    let system = x.tr_mul(&l_phi);
    let solved = guarded_solve(&system, &DMatrix::identity(m, m), x.norm() * l_phi.norm());
    // σ(ABCB') is evaluated through the principal angles between span(Ξ^{1/2}Φ)
    // and span(Ξ^{-1/2}L'X): with thin QR factors Q₁, Q₂ the projector norm is
    // 1/σ_min(Q₂'Q₁). Forming B explicitly squares the conditioning.
    let bound = solved.solution.as_ref().map(|_| {
        let q1 = xi.sqrt_scale_rows(f).qr().q();
        let q2 = xi.sqrt_unscale_rows(&lt_x).qr().q();
        1.0 / q2.tr_mul(&q1).singular_values().min()
    });
    Ok(BoundReport {
        direction,
        a_matrix: a,
        b_matrix: solved.solution,
        c_matrix: c,
        condition_estimate: solved.condition,
        bound,
    })
}

/// Bound for the TD fixed point (`X = ΞΦ`).
pub fn td_bound(mdp: &Mdp, phi: &FeatureBasis, xi: &StateWeights) -> Result<BoundReport> {
    error_bound_tagged(mdp, phi, xi, &td_direction(phi, xi), Direction::Td)
}

/// Bound for the BR minimizer (`X = ΞLΦ`).
pub fn br_bound(mdp: &Mdp, phi: &FeatureBasis, xi: &StateWeights) -> Result<BoundReport> {
    error_bound_tagged(mdp, phi, xi, &br_direction(mdp, phi, xi), Direction::Br)
}

/// Bound for `X* = L'⁻¹ΞΦ`; equals 1 up to rounding.
pub fn optimal_bound(mdp: &Mdp, phi: &FeatureBasis, xi: &StateWeights) -> Result<BoundReport> {
    let x = solvers::optimal_direction(mdp, phi, xi)?;
    error_bound_tagged(mdp, phi, xi, &x, Direction::Optimal)
}

/// `C(ξ) = max_{i,j} p_ij / ξ_i`.
///
/// The source state's weight is in the denominator.
pub fn concentration_coefficient(mdp: &Mdp, xi: &StateWeights) -> Result<f64> {
    check_dim("concentration_coefficient", mdp.n_states(), xi.len())?;
    let w = xi.as_vector();
    Ok(mdp
        .transitions()
        .row_iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().map(move |p| p / w[i]).collect::<Vec<_>>())
        .fold(0.0, f64::max))
}

/// Two sides of an inequality `lhs ≤ rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
}

impl InequalityCheck {
    pub fn holds(&self, tolerance: f64) -> bool {
        self.lhs <= self.rhs + tolerance
    }
}

/// `‖v − v̂‖_ξ ≤ sqrt(C(ξ))/(1−γ) · ‖Tv̂ − v̂‖_ξ`.
pub fn br_guarantee(
    mdp: &Mdp,
    phi: &FeatureBasis,
    xi: &StateWeights,
    v_hat: &DVector<f64>,
) -> Result<InequalityCheck> {
    check_dim("br_guarantee features", mdp.n_states(), phi.n_states())?;
    let lhs = approximation_error(mdp, xi, v_hat)?;
    let residual = weighted_norm(&(mdp.bellman_apply(v_hat)? - v_hat), xi)?;
    let c = concentration_coefficient(mdp, xi)?;
    Ok(InequalityCheck {
        lhs,
        rhs: c.sqrt() / (1.0 - mdp.discount()) * residual,
    })
}

/// TD error against the best error under a stationary distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryTdCheck {
    /// `‖v − v̂_TD‖_ξ`
    pub lhs: f64,
    /// `‖v − v_best‖_ξ / sqrt(1 − γ²)`
    pub rhs: f64,
    /// `1 / sqrt(1 − γ²)`
    pub multiplier: f64,
    /// `sqrt σ(ABCB')` for `X = ΞΦ`.
    pub td_bound: f64,
}

/// `‖v − v̂_TD‖_ξ ≤ ‖v − v_best‖_ξ / sqrt(1 − γ²)` when `ξ' P = ξ'`.
pub fn stationary_td_bound_check(
    mdp: &Mdp,
    phi: &FeatureBasis,
    xi: &StateWeights,
) -> Result<StationaryTdCheck> {
    check_dim("stationary_td_bound_check", mdp.n_states(), xi.len())?;
    let drift = (mdp.transitions().tr_mul(xi.as_vector()) - xi.as_vector()).amax();
    if drift > STATIONARITY_TOLERANCE {
        return Err(Error::Precondition(format!(
            "weights are not stationary: max |ξ'P - ξ'| = {drift:.3e}"
        )));
    }
    let gamma = mdp.discount();
    let multiplier = 1.0 / (1.0 - gamma * gamma).sqrt();
    let td = solve_td(mdp, phi, xi)?;
    let best = solve_best(mdp, phi, xi)?;
    let lhs = approximation_error(mdp, xi, td.require_value_estimate()?)?;
    let best_error = approximation_error(mdp, xi, best.require_value_estimate()?)?;
    let bound = td_bound(mdp, phi, xi)?;
    let td_bound = bound.bound.ok_or(Error::Singular {
        matrix: "X'LΦ",
        condition: bound.condition_estimate,
    })?;
    Ok(StationaryTdCheck {
        lhs,
        rhs: multiplier * best_error,
        multiplier,
        td_bound,
    })
}
