//! Best projection, TD(0) fixed point, Bellman-residual minimizer and the
//! general oblique projected equation `v̂ = Π_X T v̂`.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{guarded_solve_vec, WeightedQr};
use crate::mdp::Mdp;
use crate::projection::{orthogonal_coefficient_map, FeatureBasis, StateWeights};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Best,
    Td,
    Br,
    Oblique,
    OptimalDirection,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Best => "best",
            Method::Td => "td",
            Method::Br => "br",
            Method::Oblique => "oblique",
            Method::OptimalDirection => "optimal-direction",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Ok {
        weights: DVector<f64>,
        value_estimate: DVector<f64>,
    },
    Singular,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionSolution {
    pub method: Method,
    /// Condition estimate of the m×m (or least-squares) system behind the solve.
    pub condition_estimate: f64,
    /// Human-readable name of that system, used in diagnostics.
    pub system: &'static str,
    pub status: Status,
}

impl ProjectionSolution {
    fn from_weights(
        method: Method,
        system: &'static str,
        condition_estimate: f64,
        phi: &FeatureBasis,
        weights: Option<DVector<f64>>,
    ) -> Self {
        let status = match weights {
            Some(weights) => Status::Ok {
                value_estimate: phi.matrix() * &weights,
                weights,
            },
            None => Status::Singular,
        };
        ProjectionSolution {
            method,
            condition_estimate,
            system,
            status,
        }
    }

    pub fn is_singular(&self) -> bool {
        matches!(self.status, Status::Singular)
    }

    pub fn weights(&self) -> Option<&DVector<f64>> {
        match &self.status {
            Status::Ok { weights, .. } => Some(weights),
            Status::Singular => None,
        }
    }

    pub fn value_estimate(&self) -> Option<&DVector<f64>> {
        match &self.status {
            Status::Ok { value_estimate, .. } => Some(value_estimate),
            Status::Singular => None,
        }
    }

    fn singular_error(&self) -> Error {
        Error::Singular {
            matrix: self.system,
            condition: self.condition_estimate,
        }
    }

    /// Weights, or a `Singular` error carrying the condition estimate.
    pub fn require_weights(&self) -> Result<&DVector<f64>> {
        self.weights().ok_or_else(|| self.singular_error())
    }

    pub fn require_value_estimate(&self) -> Result<&DVector<f64>> {
        self.value_estimate().ok_or_else(|| self.singular_error())
    }
}

fn check_inputs(mdp: &Mdp, phi: &FeatureBasis, xi: Option<&StateWeights>) -> Result<()> {
    check_dim("feature rows", mdp.n_states(), phi.n_states())?;
    if let Some(xi) = xi {
        check_dim("state weights", mdp.n_states(), xi.len())?;
    }
    Ok(())
}

/// `w_best = π v`: the ξ-orthogonal projection of the exact value.
pub fn solve_best(mdp: &Mdp, phi: &FeatureBasis, xi: &StateWeights) -> Result<ProjectionSolution> {
    check_inputs(mdp, phi, Some(xi))?;
    let pi = orthogonal_coefficient_map(phi, xi)?;
    let v = mdp.exact_value()?;
    let w = pi.coordinates(&v)?;
    Ok(ProjectionSolution::from_weights(
        Method::Best,
        "Φ'ΞΦ",
        pi.condition_estimate(),
        phi,
        Some(w),
    ))
}

/// TD(0) fixed point `w_TD = (Φ'ΞLΦ)⁻¹Φ'Ξr`.
pub fn solve_td(mdp: &Mdp, phi: &FeatureBasis, xi: &StateWeights) -> Result<ProjectionSolution> {
    check_inputs(mdp, phi, Some(xi))?;
    let f = phi.matrix();
    let xi_phi = xi.scale_rows(f);
    let p_phi = mdp.transitions() * f;
    // Φ'ΞΦ − γ Φ'ΞPΦ
    let system = xi_phi.tr_mul(f) - xi_phi.tr_mul(&p_phi) * mdp.discount();
    let rhs = xi_phi.tr_mul(mdp.rewards());
    let scale = xi_phi.norm() * (f - &p_phi * mdp.discount()).norm();
    let solved = guarded_solve_vec(&system, &rhs, scale);
    Ok(ProjectionSolution::from_weights(
        Method::Td,
        "Φ'ΞLΦ",
        solved.condition,
        phi,
        solved.solution,
    ))
}

/// Bellman-residual minimizer `argmin_w ‖Ψw − r‖_ξ` with `Ψ = LΦ`, solved by
/// weighted QR rather than the normal equations `(Ψ'ΞΨ)⁻¹Ψ'Ξr`.
pub fn solve_br(mdp: &Mdp, phi: &FeatureBasis, xi: &StateWeights) -> Result<ProjectionSolution> {
    check_inputs(mdp, phi, Some(xi))?;
    let psi = mdp.l_matrix() * phi.matrix();
    let qr = WeightedQr::new(&psi, &xi.sqrt());
    let w = if qr.is_singular() {
        None
    } else {
        qr.solve(mdp.rewards())
    };
    Ok(ProjectionSolution::from_weights(
        Method::Br,
        "Ψ'ΞΨ",
        qr.condition,
        phi,
        w,
    ))
}

/// Solution `w_X = (X'LΦ)⁻¹X'r` of the projected equation `v̂ = Π_X T v̂`.
pub fn solve_oblique(mdp: &Mdp, phi: &FeatureBasis, x: &DMatrix<f64>) -> Result<ProjectionSolution> {
    solve_projected(mdp, phi, x, Method::Oblique)
}

fn solve_projected(
    mdp: &Mdp,
    phi: &FeatureBasis,
    x: &DMatrix<f64>,
    method: Method,
) -> Result<ProjectionSolution> {
    check_inputs(mdp, phi, None)?;
    check_dim("direction rows", phi.n_states(), x.nrows())?;
    check_dim("direction columns", phi.n_features(), x.ncols())?;
    let l_phi = mdp.l_matrix() * phi.matrix();
    let system = x.tr_mul(&l_phi);
    let rhs = x.tr_mul(mdp.rewards());
    let solved = guarded_solve_vec(&system, &rhs, x.norm() * l_phi.norm());
    Ok(ProjectionSolution::from_weights(
        method,
        "X'LΦ",
        solved.condition,
        phi,
        solved.solution,
    ))
}

/// `X_TD = ΞΦ`.
pub fn td_direction(phi: &FeatureBasis, xi: &StateWeights) -> DMatrix<f64> {
    xi.scale_rows(phi.matrix())
}

/// `X_BR = ΞLΦ`.
pub fn br_direction(mdp: &Mdp, phi: &FeatureBasis, xi: &StateWeights) -> DMatrix<f64> {
    xi.scale_rows(&(mdp.l_matrix() * phi.matrix()))
}

/// `X* = L'⁻¹ΞΦ`, the direction whose oblique solution is the best projection.
pub fn optimal_direction(mdp: &Mdp, phi: &FeatureBasis, xi: &StateWeights) -> Result<DMatrix<f64>> {
    check_inputs(mdp, phi, Some(xi))?;
    let lt = mdp.l_matrix().transpose();
    lt.lu()
        .solve(&td_direction(phi, xi))
        .filter(|x| x.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::Precondition("L' is numerically singular".into()))
}

/// Oblique solve along `X*`.
pub fn solve_optimal_direction(
    mdp: &Mdp,
    phi: &FeatureBasis,
    xi: &StateWeights,
) -> Result<ProjectionSolution> {
    let x = optimal_direction(mdp, phi, xi)?;
    solve_projected(mdp, phi, &x, Method::OptimalDirection)
}
