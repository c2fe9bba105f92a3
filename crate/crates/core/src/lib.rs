//! Linear policy evaluation by projection: the TD(0) fixed point, Bellman
//! residual minimization and the oblique projected equations that contain
//! both, with spectral error bounds and a reproducible random-MDP sweep.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod harness;
pub mod instances;
pub mod linalg;
pub mod mdp;
pub mod projection;
pub mod solvers;

pub use error::{Error, Result};
pub use mdp::{Mdp, ValueVector};
pub use projection::{CoefficientMap, FeatureBasis, StateWeights};
pub use solvers::{Method, ProjectionSolution};
