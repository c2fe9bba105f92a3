//! Analytic fixtures and seeded random generators.
//!
//! Every generator is a pure function of its [`SeedSpec`]: each
//! `(master_seed, labels, stream)` triple is hashed into the seed of an
//! independent ChaCha8 stream, so instances can be built in any order and on
//! any thread without changing a single bit.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mdp::Mdp;
use crate::projection::{independence_ratio, FeatureBasis, StateWeights, INDEPENDENCE_RATIO};

/// Lower end of the pre-normalization draw for random state weights.
pub const WEIGHT_FLOOR: f64 = 1e-3;
/// Random feature matrices failing the independence check are redrawn this many times.
pub const MAX_FEATURE_ATTEMPTS: usize = 100;

/// Master seed plus the labels identifying one trial of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub gamma_index: u32,
    pub n: u32,
    pub k: u32,
    pub feature_trial: u32,
    pub mdp_trial: u32,
}

/// Independent random streams drawn from one `SeedSpec`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Features,
    Weights,
    Chain,
    Ergodic,
    Dense,
    BlockTriangular,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Features => 1,
            Stream::Weights => 2,
            Stream::Chain => 3,
            Stream::Ergodic => 4,
            Stream::Dense => 5,
            Stream::BlockTriangular => 6,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SeedSpec {
    pub fn new(master_seed: u64) -> Self {
        SeedSpec {
            master_seed,
            ..Default::default()
        }
    }

    /// 64-bit seed for `stream`, mixing every label in a fixed order.
    pub fn derive(&self, stream: Stream) -> u64 {
        [
            self.gamma_index as u64,
            self.n as u64,
            self.k as u64,
            self.feature_trial as u64,
            self.mdp_trial as u64,
            stream.tag(),
        ]
        .iter()
        .fold(splitmix64(self.master_seed), |h, &label| {
            splitmix64(h ^ splitmix64(label))
        })
    }

    pub fn rng(&self, stream: Stream) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.derive(stream))
    }
}

/// Closed-form weights of a one-feature fixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceWeights {
    pub best: f64,
    /// Absent where the TD system is singular.
    pub td: Option<f64>,
    pub br: f64,
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub mdp: Mdp,
    pub phi: FeatureBasis,
    pub xi: StateWeights,
    pub reference: Option<ReferenceWeights>,
}

/// Two states, state 1 → state 2 → state 2, `Φ = (1, 2)'`, uniform ξ and
/// reward `(cos θ, sin θ)`.
pub fn example1(gamma: f64, theta: f64) -> Result<Instance> {
    let (r1, r2) = (theta.cos(), theta.sin());
    let mdp = Mdp::new(
        DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 1.0]),
        DVector::from_vec(vec![r1, r2]),
        gamma,
    )?;
    let phi = FeatureBasis::new(DMatrix::from_column_slice(2, 1, &[1.0, 2.0]))?;
    let best = r1 / 5.0 + (2.0 + gamma) * r2 / (5.0 * (1.0 - gamma));
    let td_den = 5.0 - 6.0 * gamma;
    let td = (td_den.abs() > 1e-12).then(|| (r1 + 2.0 * r2) / td_den);
    let a = 1.0 - 2.0 * gamma;
    let b = 2.0 - 2.0 * gamma;
    let br = (a * r1 + b * r2) / (a * a + b * b);
    Ok(Instance {
        mdp,
        phi,
        xi: StateWeights::uniform(2),
        reference: Some(ReferenceWeights { best, td, br }),
    })
}

fn uniform_sym(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(-1.0..=1.0)
}

/// A draw from the open interval (0, 1).
fn open_unit(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let p: f64 = rng.random();
        if p > 0.0 {
            return p;
        }
    }
}

fn random_stochastic_row(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| open_unit(rng)).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / sum).collect()
}

fn random_independent_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
    for _ in 0..MAX_FEATURE_ATTEMPTS {
        let m = DMatrix::from_fn(rows, cols, |_, _| uniform_sym(rng));
        if independence_ratio(&m) > INDEPENDENCE_RATIO {
            return Ok(m);
        }
    }
    Err(Error::InvalidFeatures(format!(
        "no independent {rows}x{cols} draw in {MAX_FEATURE_ATTEMPTS} attempts"
    )))
}

/// Chain where state `i` moves to `i+1` with probability `p_i ~ U(0,1)` and
/// stays otherwise; the last state is absorbing. Rewards are `U[-1, 1]`.
pub fn random_chain(n: usize, discount: f64, seed: &SeedSpec) -> Result<Mdp> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("random_chain needs n >= 2, got {n}")));
    }
    let mut rng = seed.rng(Stream::Chain);
    let mut p = DMatrix::zeros(n, n);
    for i in 0..n - 1 {
        let q = open_unit(&mut rng);
        p[(i, i + 1)] = q;
        p[(i, i)] = 1.0 - q;
    }
    p[(n - 1, n - 1)] = 1.0;
    let r = DVector::from_fn(n, |_, _| uniform_sym(&mut rng));
    Mdp::new(p, r, discount)
}

/// Cyclic variant of [`random_chain`]: state `i` moves to `(i+1) mod n`, so
/// the chain is irreducible and, with its self-loops, aperiodic.
pub fn ergodic_chain(n: usize, discount: f64, seed: &SeedSpec) -> Result<Mdp> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("ergodic_chain needs n >= 2, got {n}")));
    }
    let mut rng = seed.rng(Stream::Ergodic);
    let mut p = DMatrix::zeros(n, n);
    for i in 0..n {
        let q = open_unit(&mut rng);
        p[(i, (i + 1) % n)] = q;
        p[(i, i)] = 1.0 - q;
    }
    let r = DVector::from_fn(n, |_, _| uniform_sym(&mut rng));
    Mdp::new(p, r, discount)
}

/// Dense random MDP: every row is i.i.d. `U(0,1)` normalized.
pub fn random_dense_mdp(n: usize, discount: f64, seed: &SeedSpec) -> Result<Mdp> {
    if n < 1 {
        return Err(Error::InvalidArgument("random_dense_mdp needs n >= 1".into()));
    }
    let mut rng = seed.rng(Stream::Dense);
    let rows: Vec<f64> = (0..n).flat_map(|_| random_stochastic_row(&mut rng, n)).collect();
    let r = DVector::from_fn(n, |_, _| uniform_sym(&mut rng));
    Mdp::new(DMatrix::from_row_slice(n, n, &rows), r, discount)
}

/// N×k features with i.i.d. `U[-1, 1]` entries, redrawn until independent.
pub fn random_features(n: usize, k: usize, seed: &SeedSpec) -> Result<FeatureBasis> {
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "random_features needs 1 <= k <= n, got n={n}, k={k}"
        )));
    }
    let mut rng = seed.rng(Stream::Features);
    FeatureBasis::new(random_independent_matrix(&mut rng, n, k)?)
}

/// `U[ε, 1]` draws with `ε = 1e-3`, normalized to sum 1.
pub fn random_weights(n: usize, seed: &SeedSpec) -> Result<StateWeights> {
    if n == 0 {
        return Err(Error::InvalidArgument("random_weights needs n >= 1".into()));
    }
    let mut rng = seed.rng(Stream::Weights);
    let raw = DVector::from_fn(n, |_, _| rng.random_range(WEIGHT_FLOOR..=1.0));
    StateWeights::normalized(raw)
}

/// `(k + l)`-state MDP whose first `k` states never reach the last `l`,
/// with features `blockdiag(I_k, S₂)` where `S₂` is a random
/// `l × max(1, l−1)` basis.
pub fn block_triangular(k: usize, l: usize, discount: f64, seed: &SeedSpec) -> Result<Instance> {
    if k == 0 || l == 0 {
        return Err(Error::InvalidArgument(format!(
            "block_triangular needs k, l >= 1, got k={k}, l={l}"
        )));
    }
    let n = k + l;
    let mut rng = seed.rng(Stream::BlockTriangular);
    let mut p = DMatrix::zeros(n, n);
    for i in 0..k {
        for (j, x) in random_stochastic_row(&mut rng, k).into_iter().enumerate() {
            p[(i, j)] = x;
        }
    }
    for i in k..n {
        for (j, x) in random_stochastic_row(&mut rng, n).into_iter().enumerate() {
            p[(i, j)] = x;
        }
    }
    let r = DVector::from_fn(n, |_, _| uniform_sym(&mut rng));
    let s = l.saturating_sub(1).max(1);
    let s2 = random_independent_matrix(&mut rng, l, s)?;
    let mut phi = DMatrix::zeros(n, k + s);
    phi.view_mut((0, 0), (k, k)).fill_with_identity();
    phi.view_mut((k, k), (l, s)).copy_from(&s2);
    let raw = DVector::from_fn(n, |_, _| rng.random_range(WEIGHT_FLOOR..=1.0));
    Ok(Instance {
        mdp: Mdp::new(p, r, discount)?,
        phi: FeatureBasis::new(phi)?,
        xi: StateWeights::normalized(raw)?,
        reference: None,
    })
}
