//! Random chain sweep: per-trial errors and bounds of the best, TD and BR
//! projections, aggregated into per-(γ, n, k) cell statistics.
//!
//! Trials are independent and derive their instances from [`SeedSpec`]s, so
//! the parallel and serial sweeps produce identical records in identical
//! order.

use std::fmt;
use std::str::FromStr;

use crate::analysis::{approximation_error, br_bound, td_bound};
use crate::error::{Error, Result};
use crate::instances::{random_chain, random_features, random_weights, SeedSpec};
use crate::solvers::{solve_best, solve_br, solve_td};

pub const DEFAULT_MASTER_SEED: u64 = 20_100_611;
/// Best errors below this are treated as exact and kept out of ratio means.
pub const DEGENERATE_ERROR: f64 = 1e-12;

/// How trials with a singular TD system enter the cell statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SingularPolicy {
    /// Count as a TD loss in the indicators, leave out of TD ratio means.
    #[default]
    Worst,
    /// Drop the trial from every statistic.
    Exclude,
}

impl fmt::Display for SingularPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SingularPolicy::Worst => "worst",
            SingularPolicy::Exclude => "exclude",
        })
    }
}

impl FromStr for SingularPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "worst" => Ok(SingularPolicy::Worst),
            "exclude" => Ok(SingularPolicy::Exclude),
            other => Err(Error::InvalidArgument(format!(
                "unknown singular policy {other:?} (expected worst or exclude)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub gammas: Vec<f64>,
    pub n_min: usize,
    pub n_max: usize,
    /// Feature dimensions run over `1..=min(n, k_max)`; `None` means `1..=n`.
    pub k_max: Option<usize>,
    pub feature_trials: usize,
    pub mdp_trials: usize,
    pub master_seed: u64,
    pub singular_policy: SingularPolicy,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            gammas: vec![0.9, 0.95, 0.99, 0.999],
            n_min: 2,
            n_max: 30,
            k_max: None,
            feature_trials: 20,
            mdp_trials: 20,
            master_seed: DEFAULT_MASTER_SEED,
            singular_policy: SingularPolicy::Worst,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.gammas.is_empty() {
            return Err(Error::InvalidArgument("no discount factors".into()));
        }
        if let Some(g) = self.gammas.iter().find(|g| !(**g > 0.0 && **g < 1.0)) {
            return Err(Error::InvalidArgument(format!("discount {g} not in (0,1)")));
        }
        if self.n_min < 2 || self.n_max < self.n_min {
            return Err(Error::InvalidArgument(format!(
                "state range {}..={} must satisfy 2 <= n_min <= n_max",
                self.n_min, self.n_max
            )));
        }
        if self.feature_trials == 0 || self.mdp_trials == 0 {
            return Err(Error::InvalidArgument("trial counts must be >= 1".into()));
        }
        if self.k_max == Some(0) {
            return Err(Error::InvalidArgument("k_max must be >= 1".into()));
        }
        Ok(())
    }

    fn k_limit(&self, n: usize) -> usize {
        self.k_max.map_or(n, |cap| cap.min(n))
    }

    /// Every `(γ index, n, k)` cell in canonical order.
    pub fn cells(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for g in 0..self.gammas.len() {
            for n in self.n_min..=self.n_max {
                for k in 1..=self.k_limit(n) {
                    out.push((g, n, k));
                }
            }
        }
        out
    }

    pub fn trials_per_cell(&self) -> usize {
        self.feature_trials * self.mdp_trials
    }

    fn tasks(&self) -> Vec<TrialKey> {
        let mut out = Vec::with_capacity(self.cells().len() * self.trials_per_cell());
        for (gamma_index, n, k) in self.cells() {
            for feature_trial in 0..self.feature_trials {
                for mdp_trial in 0..self.mdp_trials {
                    out.push(TrialKey {
                        gamma_index,
                        n,
                        k,
                        feature_trial,
                        mdp_trial,
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct TrialKey {
    gamma_index: usize,
    n: usize,
    k: usize,
    feature_trial: usize,
    mdp_trial: usize,
}

/// Raw outcome of one (features, chain, γ) combination.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub gamma: f64,
    pub n: usize,
    pub k: usize,
    pub feature_trial: usize,
    pub mdp_trial: usize,
    /// `‖v − v_best‖_ξ`
    pub e: f64,
    /// `‖v − v̂_TD‖_ξ`, absent when TD is singular.
    pub e_td: Option<f64>,
    /// `‖v − v̂_BR‖_ξ`, absent only if the BR least-squares problem is singular.
    pub e_br: Option<f64>,
    pub b_td: Option<f64>,
    pub b_br: Option<f64>,
    pub td_singular: bool,
}

/// Runs one trial; instances are shared across discount factors.
pub fn run_trial(
    config: &SweepConfig,
    gamma_index: usize,
    n: usize,
    k: usize,
    feature_trial: usize,
    mdp_trial: usize,
) -> Result<TrialRecord> {
    let gamma = *config.gammas.get(gamma_index).ok_or_else(|| {
        Error::InvalidArgument(format!("gamma index {gamma_index} out of range"))
    })?;
    let base = SeedSpec {
        master_seed: config.master_seed,
        gamma_index: 0,
        n: n as u32,
        k: k as u32,
        feature_trial: 0,
        mdp_trial: 0,
    };
    let feature_seed = SeedSpec {
        feature_trial: feature_trial as u32,
        ..base
    };
    let chain_seed = SeedSpec {
        mdp_trial: mdp_trial as u32,
        ..base
    };
    let phi = random_features(n, k, &feature_seed)?;
    let xi = random_weights(n, &feature_seed)?;
    let mdp = random_chain(n, gamma, &chain_seed)?;

    let best = solve_best(&mdp, &phi, &xi)?;
    let e = approximation_error(&mdp, &xi, best.require_value_estimate()?)?;
    let td = solve_td(&mdp, &phi, &xi)?;
    let e_td = match td.value_estimate() {
        Some(v) => Some(approximation_error(&mdp, &xi, v)?),
        None => None,
    };
    let br = solve_br(&mdp, &phi, &xi)?;
    let e_br = match br.value_estimate() {
        Some(v) => Some(approximation_error(&mdp, &xi, v)?),
        None => None,
    };
    let b_td = td_bound(&mdp, &phi, &xi)?.bound;
    let b_br = br_bound(&mdp, &phi, &xi)?.bound;
    Ok(TrialRecord {
        gamma,
        n,
        k,
        feature_trial,
        mdp_trial,
        e,
        e_td,
        e_br,
        b_td,
        b_br,
        td_singular: e_td.is_none() || b_td.is_none(),
    })
}

fn run_key(config: &SweepConfig, key: &TrialKey) -> Result<TrialRecord> {
    run_trial(
        config,
        key.gamma_index,
        key.n,
        key.k,
        key.feature_trial,
        key.mdp_trial,
    )
}

/// Single-threaded sweep, records in canonical order.
pub fn sweep_serial(config: &SweepConfig) -> Result<Vec<TrialRecord>> {
    config.validate()?;
    config.tasks().iter().map(|key| run_key(config, key)).collect()
}

/// Rayon sweep; same records, same order as [`sweep_serial`].
#[cfg(feature = "parallel")]
pub fn sweep_parallel(config: &SweepConfig) -> Result<Vec<TrialRecord>> {
    use rayon::prelude::*;
    config.validate()?;
    config
        .tasks()
        .par_iter()
        .map(|key| run_key(config, key))
        .collect()
}

pub fn sweep(config: &SweepConfig) -> Result<Vec<TrialRecord>> {
    #[cfg(feature = "parallel")]
    {
        sweep_parallel(config)
    }
    #[cfg(not(feature = "parallel"))]
    {
        sweep_serial(config)
    }
}

/// Statistics of one `(γ, n, k)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellStats {
    pub gamma: f64,
    pub n: usize,
    pub k: usize,
    /// Mean of `[e_TD < e_BR]` over non-degenerate trials; NaN when there are none.
    pub td_win_ratio: f64,
    /// Mean of `[e_TD < e_BR] == [b_TD < b_BR]`.
    pub bound_prediction_ratio: f64,
    /// Mean of `e_TD / e_BR`; absent when no trial qualifies.
    pub mean_ratio_td_over_br: Option<f64>,
    /// Mean of `e_TD / e`.
    pub mean_rel_td: Option<f64>,
    /// Mean of `e_BR / e`.
    pub mean_rel_br: Option<f64>,
    pub singular_count: usize,
    /// Degenerate trials (exact best projection) kept out of every statistic.
    pub excluded_count: usize,
}

/// A trial is degenerate when the best projection is exact: either the basis
/// spans the whole space or the best error vanishes.
pub fn is_degenerate(record: &TrialRecord) -> bool {
    record.k >= record.n || record.e < DEGENERATE_ERROR
}

#[derive(Default)]
struct Mean {
    sum: f64,
    count: usize,
}

impl Mean {
    fn push(&mut self, x: f64) {
        self.sum += x;
        self.count += 1;
    }

    fn value(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum / self.count as f64)
    }
}

fn cell_order(a: &TrialRecord, b: &TrialRecord) -> std::cmp::Ordering {
    a.gamma
        .total_cmp(&b.gamma)
        .then(a.n.cmp(&b.n))
        .then(a.k.cmp(&b.k))
        .then(a.feature_trial.cmp(&b.feature_trial))
        .then(a.mdp_trial.cmp(&b.mdp_trial))
}

fn same_cell(a: &TrialRecord, b: &TrialRecord) -> bool {
    a.gamma.to_bits() == b.gamma.to_bits() && a.n == b.n && a.k == b.k
}

fn check_complete(cell: &[&TrialRecord]) -> Result<()> {
    let first = cell[0];
    let features = cell.iter().map(|r| r.feature_trial).max().unwrap_or(0) + 1;
    let mdps = cell.iter().map(|r| r.mdp_trial).max().unwrap_or(0) + 1;
    let incomplete = |detail: String| Error::IncompleteCell {
        gamma: first.gamma,
        n: first.n,
        k: first.k,
        detail,
    };
    if cell.len() != features * mdps {
        return Err(incomplete(format!(
            "{} records for a {features}x{mdps} trial grid",
            cell.len()
        )));
    }
    for (i, r) in cell.iter().enumerate() {
        if (r.feature_trial, r.mdp_trial) != (i / mdps, i % mdps) {
            return Err(incomplete(format!(
                "duplicate or missing trial ({}, {})",
                r.feature_trial, r.mdp_trial
            )));
        }
    }
    Ok(())
}

fn aggregate_cell(cell: &[&TrialRecord], policy: SingularPolicy) -> CellStats {
    let first = cell[0];
    let mut wins = Mean::default();
    let mut predictions = Mean::default();
    let mut td_over_br = Mean::default();
    let mut rel_td = Mean::default();
    let mut rel_br = Mean::default();
    let mut singular_count = 0;
    let mut excluded_count = 0;

    for r in cell {
        if r.td_singular {
            singular_count += 1;
            if policy == SingularPolicy::Exclude {
                continue;
            }
        }
        let Some(e_br) = r.e_br else {
            excluded_count += 1;
            continue;
        };
        // both errors are rounding noise here, so neither method wins
        if is_degenerate(r) {
            excluded_count += 1;
            continue;
        }
        let td_error = if r.td_singular { None } else { r.e_td };
        let td_wins = td_error.is_some_and(|e_td| e_td < e_br);
        let td_bound_smaller = match (r.b_td, r.b_br) {
            (Some(b_td), Some(b_br)) => !r.td_singular && b_td < b_br,
            (Some(_), None) => !r.td_singular,
            (None, _) => false,
        };
        wins.push(if td_wins { 1.0 } else { 0.0 });
        predictions.push(if td_wins == td_bound_smaller { 1.0 } else { 0.0 });

        rel_br.push(e_br / r.e);
        if let Some(e_td) = td_error {
            td_over_br.push(e_td / e_br);
            rel_td.push(e_td / r.e);
        }
    }

    CellStats {
        gamma: first.gamma,
        n: first.n,
        k: first.k,
        td_win_ratio: wins.value().unwrap_or(f64::NAN),
        bound_prediction_ratio: predictions.value().unwrap_or(f64::NAN),
        mean_ratio_td_over_br: td_over_br.value(),
        mean_rel_td: rel_td.value(),
        mean_rel_br: rel_br.value(),
        singular_count,
        excluded_count,
    }
}

/// Cell statistics in canonical `(γ, n, k)` order.
///
/// Records may arrive in any order; they are sorted before reduction so the
/// floating-point sums are independent of how the sweep was scheduled.
pub fn aggregate(records: &[TrialRecord], policy: SingularPolicy) -> Result<Vec<CellStats>> {
    let mut sorted: Vec<&TrialRecord> = records.iter().collect();
    sorted.sort_by(|a, b| cell_order(a, b));
    let mut out = Vec::new();
    let mut start = 0;
    while start < sorted.len() {
        let mut end = start + 1;
        while end < sorted.len() && same_cell(sorted[start], sorted[end]) {
            end += 1;
        }
        let cell = &sorted[start..end];
        check_complete(cell)?;
        out.push(aggregate_cell(cell, policy));
        start = end;
    }
    Ok(out)
}

/// Per-γ roll-up of cell statistics (plain means over cells).
#[derive(Debug, Clone, PartialEq)]
pub struct GammaSummary {
    pub gamma: f64,
    pub cells: usize,
    pub td_win_ratio: f64,
    pub bound_prediction_ratio: f64,
    pub mean_ratio_td_over_br: f64,
    pub mean_rel_td: f64,
    pub mean_rel_br: f64,
    pub max_mean_rel_td: f64,
    pub max_mean_rel_br: f64,
    pub singular_count: usize,
}

pub fn summarize(cells: &[CellStats]) -> Vec<GammaSummary> {
    let mut gammas: Vec<f64> = cells.iter().map(|c| c.gamma).collect();
    gammas.sort_by(f64::total_cmp);
    gammas.dedup_by(|a, b| a.to_bits() == b.to_bits());
    gammas
        .into_iter()
        .map(|gamma| {
            let group: Vec<&CellStats> = cells
                .iter()
                .filter(|c| c.gamma.to_bits() == gamma.to_bits())
                .collect();
            let mean_of = |f: &dyn Fn(&CellStats) -> Option<f64>| {
                let mut m = Mean::default();
                group.iter().filter_map(|c| f(c)).filter(|x| x.is_finite()).for_each(|x| m.push(x));
                m.value().unwrap_or(f64::NAN)
            };
            let max_of = |f: &dyn Fn(&CellStats) -> Option<f64>| {
                group.iter().filter_map(|c| f(c)).fold(f64::NAN, f64::max)
            };
            GammaSummary {
                gamma,
                cells: group.len(),
                td_win_ratio: mean_of(&|c| Some(c.td_win_ratio)),
                bound_prediction_ratio: mean_of(&|c| Some(c.bound_prediction_ratio)),
                mean_ratio_td_over_br: mean_of(&|c| c.mean_ratio_td_over_br),
                mean_rel_td: mean_of(&|c| c.mean_rel_td),
                mean_rel_br: mean_of(&|c| c.mean_rel_br),
                max_mean_rel_td: max_of(&|c| c.mean_rel_td),
                max_mean_rel_br: max_of(&|c| c.mean_rel_br),
                singular_count: group.iter().map(|c| c.singular_count).sum(),
            }
        })
        .collect()
}
