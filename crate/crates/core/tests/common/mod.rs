#![allow(dead_code)]
//! Random fixtures and straight-from-the-formula oracles for integration tests.
//!
//! Oracles use full-pivot LU on the normal equations, a different route from
//! the library's partial-pivot LU and QR paths. (nalgebra's SVD vectors are
//! not accurate enough to serve as a reference solve.)

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tdbr::{FeatureBasis, Mdp, StateWeights};

pub struct Fixture {
    pub mdp: Mdp,
    pub phi: FeatureBasis,
    pub xi: StateWeights,
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

pub fn uniform_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

pub fn stochastic_matrix(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let mut p = DMatrix::from_fn(n, n, |_, _| rng.random_range(0.0..1.0f64).powi(3));
    for mut row in p.row_iter_mut() {
        let s = row.sum();
        row /= s;
    }
    p
}

pub fn positive_weights(rng: &mut ChaCha8Rng, n: usize) -> StateWeights {
    let raw = DVector::from_fn(n, |_, _| rng.random_range(0.05..1.0));
    StateWeights::normalized(raw).unwrap()
}

/// Dense random instance with `N = n` states and `m` features.
pub fn fixture(seed: u64, n: usize, m: usize, gamma: f64) -> Fixture {
    let mut rng = rng(seed);
    let p = stochastic_matrix(&mut rng, n);
    let r = uniform_vector(&mut rng, n);
    let mdp = Mdp::new(p, r, gamma).unwrap();
    let phi = FeatureBasis::new(uniform_matrix(&mut rng, n, m)).unwrap();
    let xi = positive_weights(&mut rng, n);
    Fixture { mdp, phi, xi }
}

/// Sizes and discount of the `i`-th instance in a batch (N ≤ 20, m ≤ 10).
pub fn batch_fixture(i: u64) -> Fixture {
    let mut rng = rng(0xA11CE ^ i.wrapping_mul(0x9E37_79B9));
    let n = rng.random_range(2..=20usize);
    let m = rng.random_range(1..=n.min(10));
    let gamma = rng.random_range(0.05..0.95);
    fixture(rng.random(), n, m, gamma)
}

pub fn solve(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.clone().full_piv_lu().solve(b).unwrap()
}

pub fn solve_vec(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    a.clone().full_piv_lu().solve(b).unwrap()
}

pub fn xi_diag(xi: &StateWeights) -> DMatrix<f64> {
    DMatrix::from_diagonal(xi.as_vector())
}

pub fn l_matrix(mdp: &Mdp) -> DMatrix<f64> {
    DMatrix::identity(mdp.n_states(), mdp.n_states()) - mdp.transitions() * mdp.discount()
}

pub fn oracle_value(mdp: &Mdp) -> DVector<f64> {
    solve_vec(&l_matrix(mdp), mdp.rewards())
}

/// `(X'LΦ)⁻¹X'r`
pub fn oracle_oblique(mdp: &Mdp, phi: &DMatrix<f64>, x: &DMatrix<f64>) -> DVector<f64> {
    let l = l_matrix(mdp);
    solve_vec(&(x.transpose() * &l * phi), &(x.transpose() * mdp.rewards()))
}

pub fn oracle_td(f: &Fixture) -> DVector<f64> {
    oracle_oblique(&f.mdp, f.phi.matrix(), &(xi_diag(&f.xi) * f.phi.matrix()))
}

/// Normal equations `(Ψ'ΞΨ)⁻¹Ψ'Ξr`.
pub fn oracle_br(f: &Fixture) -> DVector<f64> {
    let psi = l_matrix(&f.mdp) * f.phi.matrix();
    let xi = xi_diag(&f.xi);
    solve_vec(&(psi.transpose() * &xi * &psi), &(psi.transpose() * xi * f.mdp.rewards()))
}

pub fn oracle_best(f: &Fixture) -> DVector<f64> {
    let phi = f.phi.matrix();
    let xi = xi_diag(&f.xi);
    solve_vec(&(phi.transpose() * &xi * phi), &(phi.transpose() * xi * oracle_value(&f.mdp)))
}

/// `σ_max(Ξ^{1/2} M Ξ^{-1/2})`, as the root of the top eigenvalue of `S'S`.
pub fn oracle_operator_norm(m: &DMatrix<f64>, xi: &StateWeights) -> f64 {
    let s = xi.as_vector().map(f64::sqrt);
    let scaled = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| s[i] * m[(i, j)] / s[j]);
    scaled.tr_mul(&scaled).symmetric_eigen().eigenvalues.max().max(0.0).sqrt()
}

pub fn oracle_weighted_norm(v: &DVector<f64>, xi: &StateWeights) -> f64 {
    v.iter().zip(xi.as_vector().iter()).map(|(a, w)| w * a * a).sum::<f64>().sqrt()
}

pub fn max_diff(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).amax()
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
