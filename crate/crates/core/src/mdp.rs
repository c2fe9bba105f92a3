//! The uncontrolled MDP: transitions, rewards and discount of a fixed policy.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result, ValidationReport, Violation};

/// Row sums must be within this of 1; rows inside the band are renormalized.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;

/// A state-space vector (value function, Bellman image, ...).
pub type ValueVector = DVector<f64>;

/// Markov reward process `(P, r, γ)` of the policy under evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Mdp {
    transitions: DMatrix<f64>,
    rewards: DVector<f64>,
    discount: f64,
}

/// Checks every `Mdp` invariant and returns all violations at once.
pub fn validate(
    transitions: &DMatrix<f64>,
    rewards: &DVector<f64>,
    discount: f64,
) -> std::result::Result<(), ValidationReport> {
    let mut violations = Vec::new();
    let (rows, cols) = transitions.shape();
    if rows == 0 {
        violations.push(Violation::Empty);
    }
    if rows != cols {
        violations.push(Violation::NotSquare { rows, cols });
    }
    if rewards.len() != rows {
        violations.push(Violation::RewardLength {
            expected: rows,
            found: rewards.len(),
        });
    }
    if transitions.iter().any(|x| !x.is_finite()) {
        violations.push(Violation::NonFinite { what: "transitions" });
    }
    if rewards.iter().any(|x| !x.is_finite()) {
        violations.push(Violation::NonFinite { what: "rewards" });
    }
    if !(discount > 0.0 && discount < 1.0) {
        violations.push(Violation::DiscountOutOfRange { discount });
    }
    for (i, row) in transitions.row_iter().enumerate() {
        for (j, &p) in row.iter().enumerate() {
            if p < 0.0 {
                violations.push(Violation::NegativeProbability {
                    row: i,
                    col: j,
                    value: p,
                });
            } else if p > 1.0 {
                violations.push(Violation::ProbabilityAboveOne {
                    row: i,
                    col: j,
                    value: p,
                });
            }
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            violations.push(Violation::RowSum { row: i, sum });
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(ValidationReport { violations })
    }
}

impl Mdp {
    /// Validates the inputs and renormalizes each row to sum to exactly 1.
    pub fn new(transitions: DMatrix<f64>, rewards: DVector<f64>, discount: f64) -> Result<Self> {
        validate(&transitions, &rewards, discount).map_err(Error::InvalidMdp)?;
        let mut transitions = transitions;
        for mut row in transitions.row_iter_mut() {
            let sum: f64 = row.iter().sum();
            row /= sum;
        }
        Ok(Mdp {
            transitions,
            rewards,
            discount,
        })
    }

    pub fn n_states(&self) -> usize {
        self.rewards.len()
    }

    pub fn transitions(&self) -> &DMatrix<f64> {
        &self.transitions
    }

    pub fn rewards(&self) -> &DVector<f64> {
        &self.rewards
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    /// Same dynamics and discount with a different reward vector.
    pub fn with_rewards(&self, rewards: DVector<f64>) -> Result<Self> {
        check_dim("with_rewards", self.n_states(), rewards.len())?;
        Mdp::new(self.transitions.clone(), rewards, self.discount)
    }

    /// Same dynamics and rewards with a different discount.
    pub fn with_discount(&self, discount: f64) -> Result<Self> {
        Mdp::new(self.transitions.clone(), self.rewards.clone(), discount)
    }

    /// `L = I − γP`.
    pub fn l_matrix(&self) -> DMatrix<f64> {
        let n = self.n_states();
        DMatrix::identity(n, n) - &self.transitions * self.discount
    }

    /// Bellman operator `T v = r + γ P v`.
    pub fn bellman_apply(&self, v: &ValueVector) -> Result<ValueVector> {
        check_dim("bellman_apply", self.n_states(), v.len())?;
        Ok(&self.rewards + (&self.transitions * v) * self.discount)
    }

    /// `(I − γP) v`.
    pub fn apply_l(&self, v: &ValueVector) -> Result<ValueVector> {
        check_dim("apply_L", self.n_states(), v.len())?;
        Ok(v - (&self.transitions * v) * self.discount)
    }

    /// `(I − γP') v`.
    pub fn apply_l_transpose(&self, v: &ValueVector) -> Result<ValueVector> {
        check_dim("apply_L_transpose", self.n_states(), v.len())?;
        Ok(v - self.transitions.tr_mul(v) * self.discount)
    }

    /// Exact value function `v = (I − γP)⁻¹ r` by pivoted LU.
    pub fn exact_value(&self) -> Result<ValueVector> {
        let lu = self.l_matrix().lu();
        let v = lu
            .solve(&self.rewards)
            .ok_or_else(|| Error::Precondition("I - γP is numerically singular".into()))?;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Precondition("exact value solve broke down".into()));
        }
        Ok(v)
    }

    /// Stationary distribution `ξ' P = ξ'` with `ξ > 0`, if one exists.
    ///
    /// Iterates the lazy chain `(I + P)/2`, which shares the stationary
    /// distributions of `P` but is aperiodic. Returns `None` when the
    /// iteration fails to converge within 10⁶ steps or the limit puts
    /// (numerically) zero mass on some state.
    pub fn stationary_distribution(&self) -> Option<DVector<f64>> {
        const MAX_ITER: usize = 1_000_000;
        const RESIDUAL: f64 = 1e-12;
        let n = self.n_states();
        let pt = self.transitions.transpose();
        let mut xi = DVector::from_element(n, 1.0 / n as f64);
        for it in 0..MAX_ITER {
            let step = &pt * &xi;
            let residual = (&step - &xi).amax();
            if residual <= RESIDUAL {
                break;
            }
            xi = (&xi + &step) * 0.5;
            xi /= xi.sum();
            if it + 1 == MAX_ITER {
                return None;
            }
        }
        // absorbing classes drain mass geometrically; anything this small is zero
        if xi.min() <= 1e-9 {
            return None;
        }
        xi /= xi.sum();
        Some(xi)
    }
}
