//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on failure.
//!
//! `cargo test --test acceptance` runs criteria 1–10; add `-- --full-grid` to
//! also time the full sweep (n ≤ 30, 20×20 trials, four discounts).

mod common;

use std::time::{Duration, Instant};

use common::*;
use rand::Rng;
use tdbr::analysis::{
    br_bound, br_guarantee, error_bound, error_report, stationary_td_bound_check, td_bound,
};
use tdbr::cli::csv_io::{write_cells, write_trials};
use tdbr::harness::{aggregate, summarize, sweep, sweep_serial, SingularPolicy, SweepConfig};
use tdbr::instances::{
    block_triangular, ergodic_chain, example1, random_chain, random_features, random_weights, SeedSpec,
};
use tdbr::solvers::{
    br_direction, solve_best, solve_br, solve_oblique, solve_optimal_direction, solve_td, td_direction,
};
use tdbr::StateWeights;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

/// Tracks the worst value of a quantity against a limit.
struct Worst {
    value: f64,
    limit: f64,
}

impl Worst {
    fn new(limit: f64) -> Self {
        Worst { value: 0.0, limit }
    }

    fn see(&mut self, x: f64) {
        // NaN counts as a failure
        if !(x <= self.value) {
            self.value = if x.is_nan() { f64::INFINITY } else { x };
        }
    }

    fn ok(&self) -> bool {
        self.value <= self.limit
    }
}

fn rel(a: f64, b: f64) -> f64 {
    rel_diff(a, b)
}

/// Error relative to `max(|reference|, 1)`; the example reward has unit length,
/// so this only departs from a plain relative error when the reference is 0.
fn rel_to_reference(value: f64, reference: f64) -> f64 {
    (value - reference).abs() / reference.abs().max(1.0)
}

/// `‖a − b‖∞ / max(1, ‖b‖∞)`
fn scaled_diff(a: &nalgebra::DVector<f64>, b: &nalgebra::DVector<f64>) -> f64 {
    max_diff(a, b) / b.amax().max(1.0)
}

fn within_runtime(start: Instant, limit: Duration) -> (bool, String) {
    let t = start.elapsed();
    (t <= limit, format!("{:.2}s (limit {}s)", t.as_secs_f64(), limit.as_secs()))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut worst = Worst::new(1e-10);
    for gamma in [0.1, 0.3, 0.5, 0.7, 0.9, 0.99] {
        for theta in [0.0, 1.0, 2.0, 4.0] {
            let inst = example1(gamma, theta).unwrap();
            let reference = inst.reference.unwrap();
            let w = |s: &tdbr::ProjectionSolution| s.weights().unwrap()[0];
            worst.see(rel_to_reference(w(&solve_td(&inst.mdp, &inst.phi, &inst.xi).unwrap()), reference.td.unwrap()));
            worst.see(rel_to_reference(w(&solve_br(&inst.mdp, &inst.phi, &inst.xi).unwrap()), reference.br));
            worst.see(rel_to_reference(w(&solve_best(&inst.mdp, &inst.phi, &inst.xi).unwrap()), reference.best));
        }
    }
    let singular = {
        let inst = example1(5.0 / 6.0, 1.0).unwrap();
        solve_td(&inst.mdp, &inst.phi, &inst.xi).unwrap().is_singular()
    };
    let (fast, time) = within_runtime(start, Duration::from_secs(1));
    outcome(
        worst.ok() && singular && fast,
        format!("max rel err {:.2e}, TD singular at 5/6: {singular}, {time}", worst.value),
    )
}

const BATCH: u64 = 200;

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut worst = Worst::new(1e-8);
    for i in 0..BATCH {
        let f = batch_fixture(i);
        let w = uniform_vector(&mut rng(i), f.phi.n_features());
        let v_hat = f.phi.matrix() * w;
        let rep = error_report(&f.mdp, &f.phi, &f.xi, &v_hat).unwrap();
        worst.see(rep.pythagorean_gap().abs());
    }
    let (fast, time) = within_runtime(start, Duration::from_secs(5));
    outcome(worst.ok() && fast, format!("max |gap| {:.2e} over {BATCH}, {time}", worst.value))
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut unify = Worst::new(1e-8);
    let mut unify_abs = 0.0f64;
    let mut projection = Worst::new(1e-8);
    let mut skipped = 0;
    for i in 0..BATCH {
        let f = batch_fixture(i);
        let td = solve_td(&f.mdp, &f.phi, &f.xi).unwrap();
        let br = solve_br(&f.mdp, &f.phi, &f.xi).unwrap();
        let via_td = solve_oblique(&f.mdp, &f.phi, &td_direction(&f.phi, &f.xi)).unwrap();
        let via_br = solve_oblique(&f.mdp, &f.phi, &br_direction(&f.mdp, &f.phi, &f.xi)).unwrap();
        match (td.weights(), via_td.weights()) {
            (Some(a), Some(b)) => {
                unify.see(scaled_diff(b, a));
                unify_abs = unify_abs.max(max_diff(a, b));
            }
            (None, None) => skipped += 1,
            _ => unify.see(f64::INFINITY),
        }
        let (a, b) = (br.weights().unwrap(), via_br.weights().unwrap());
        unify.see(scaled_diff(b, a));
        unify_abs = unify_abs.max(max_diff(a, b));

        // v̂_X = Π_{L'X} v for a random X
        let x = uniform_matrix(&mut rng(1000 + i), f.phi.n_states(), f.phi.n_features());
        let sol = solve_oblique(&f.mdp, &f.phi, &x).unwrap();
        if let Some(v_hat) = sol.value_estimate() {
            let l = l_matrix(&f.mdp);
            let phi = f.phi.matrix();
            let lt_x = l.transpose() * &x;
            let expected =
                phi * solve_vec(&(lt_x.transpose() * phi), &(lt_x.transpose() * oracle_value(&f.mdp)));
            projection.see(scaled_diff(v_hat, &expected));
        } else {
            skipped += 1;
        }
    }
    let (fast, time) = within_runtime(start, Duration::from_secs(10));
    outcome(
        unify.ok() && projection.ok() && fast,
        format!(
            "unification {:.2e} (absolute {:.2e}), projection identity {:.2e}, both relative to max(1, |.|inf), {skipped} singular skipped, {time}",
            unify.value, unify_abs, projection.value
        ),
    )
}

fn criterion_4() -> Outcome {
    let mut norm_match = Worst::new(1e-8);
    let mut violation = Worst::new(1e-8);
    for i in 0..BATCH {
        let f = batch_fixture(i);
        let l = l_matrix(&f.mdp);
        let phi = f.phi.matrix();
        let v = oracle_value(&f.mdp);
        let best = solve_best(&f.mdp, &f.phi, &f.xi).unwrap();
        let e_best = oracle_weighted_norm(&(&v - best.value_estimate().unwrap()), &f.xi);
        let random_x = uniform_matrix(&mut rng(2000 + i), f.phi.n_states(), f.phi.n_features());
        for x in [td_direction(&f.phi, &f.xi), br_direction(&f.mdp, &f.phi, &f.xi), random_x] {
            let report = error_bound(&f.mdp, &f.phi, &f.xi, &x).unwrap();
            let Some(bound) = report.bound else { continue };
            let proj = phi * solve(&(x.transpose() * &l * phi), &(x.transpose() * &l));
            norm_match.see(rel(bound, oracle_operator_norm(&proj, &f.xi)));
            let sol = solve_oblique(&f.mdp, &f.phi, &x).unwrap();
            if let Some(v_hat) = sol.value_estimate() {
                let e = oracle_weighted_norm(&(&v - v_hat), &f.xi);
                violation.see(e - bound * e_best);
            }
        }
    }
    let inst = example1(0.5, 1.0).unwrap();
    let b_td = td_bound(&inst.mdp, &inst.phi, &inst.xi).unwrap().bound.unwrap();
    let b_br = br_bound(&inst.mdp, &inst.phi, &inst.xi).unwrap().bound.unwrap();
    let v = oracle_value(&inst.mdp);
    let err = |s: tdbr::ProjectionSolution| oracle_weighted_norm(&(&v - s.value_estimate().unwrap()), &inst.xi);
    let e_best = err(solve_best(&inst.mdp, &inst.phi, &inst.xi).unwrap());
    let ratio_td = err(solve_td(&inst.mdp, &inst.phi, &inst.xi).unwrap()) / e_best;
    let ratio_br = err(solve_br(&inst.mdp, &inst.phi, &inst.xi).unwrap()) / e_best;
    let example_ok = (b_td - 1.25).abs() <= 1e-10
        && (b_br - 1.25f64.sqrt()).abs() <= 1e-10
        && (ratio_td - b_td).abs() <= 1e-10
        && (ratio_br - b_br).abs() <= 1e-10;
    outcome(
        norm_match.ok() && violation.ok() && example_ok,
        format!(
            "bound vs oracle rel {:.2e}, max bound slack violation {:.2e}, example b_TD={b_td:.12} b_BR={b_br:.12} ratios {ratio_td:.12}/{ratio_br:.12}",
            norm_match.value, violation.value
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut worst = Worst::new(1e-8);
    for i in 0..100 {
        let f = batch_fixture(i);
        let best = solve_best(&f.mdp, &f.phi, &f.xi).unwrap();
        let opt = solve_optimal_direction(&f.mdp, &f.phi, &f.xi).unwrap();
        match opt.weights() {
            Some(w) => worst.see(max_diff(w, best.weights().unwrap())),
            None => worst.see(f64::INFINITY),
        }
    }
    outcome(worst.ok(), format!("max weight diff {:.2e} over 100", worst.value))
}

fn criterion_6() -> Outcome {
    let mut worst = Worst::new(1e-8);
    for i in 0..50 {
        let f = batch_fixture(i);
        let w0 = uniform_vector(&mut rng(3000 + i), f.phi.n_features());
        let r = l_matrix(&f.mdp) * f.phi.matrix() * &w0;
        let mdp = f.mdp.with_rewards(r).unwrap();
        let x = uniform_matrix(&mut rng(4000 + i), f.phi.n_states(), f.phi.n_features());
        for sol in [
            solve_best(&mdp, &f.phi, &f.xi).unwrap(),
            solve_td(&mdp, &f.phi, &f.xi).unwrap(),
            solve_br(&mdp, &f.phi, &f.xi).unwrap(),
            solve_oblique(&mdp, &f.phi, &x).unwrap(),
            solve_optimal_direction(&mdp, &f.phi, &f.xi).unwrap(),
        ] {
            match sol.weights() {
                Some(w) => worst.see(max_diff(w, &w0)),
                None => worst.see(f64::INFINITY),
            }
        }
    }
    outcome(worst.ok(), format!("max |w - w0| {:.2e} over 50 instances, 5 methods", worst.value))
}

fn criterion_7() -> Outcome {
    let mut br_ok = 0;
    let mut br_worst = f64::NEG_INFINITY;
    for i in 0..50u32 {
        let mut r = rng(5000 + i as u64);
        let n = r.random_range(2..=20usize);
        let k = r.random_range(1..=n.min(10));
        let gamma = r.random_range(0.5..0.99);
        let s = SeedSpec { master_seed: 77, n: n as u32, k: k as u32, mdp_trial: i, ..Default::default() };
        let mdp = random_chain(n, gamma, &s).unwrap();
        let phi = random_features(n, k, &s).unwrap();
        let xi = random_weights(n, &s).unwrap();
        let br = solve_br(&mdp, &phi, &xi).unwrap();
        let check = br_guarantee(&mdp, &phi, &xi, br.value_estimate().unwrap()).unwrap();
        br_worst = br_worst.max(check.lhs - check.rhs);
        if check.holds(1e-10) {
            br_ok += 1;
        }
    }
    let mut td_ok = 0;
    let mut dominance = Worst::new(1e-8);
    let mut td_worst = f64::NEG_INFINITY;
    for i in 0..50u32 {
        let mut r = rng(6000 + i as u64);
        let n = r.random_range(2..=20usize);
        let k = r.random_range(1..=n.min(10));
        let gamma = r.random_range(0.5..0.99);
        let s = SeedSpec { master_seed: 78, n: n as u32, k: k as u32, mdp_trial: i, ..Default::default() };
        let mdp = ergodic_chain(n, gamma, &s).unwrap();
        let phi = random_features(n, k, &s).unwrap();
        let Some(stationary) = mdp.stationary_distribution() else { continue };
        let xi = StateWeights::normalized(stationary).unwrap();
        let check = stationary_td_bound_check(&mdp, &phi, &xi).unwrap();
        td_worst = td_worst.max(check.lhs - check.rhs);
        if check.lhs <= check.rhs + 1e-10 {
            td_ok += 1;
        }
        dominance.see(check.td_bound - check.multiplier);
    }
    outcome(
        br_ok == 50 && td_ok == 50 && dominance.ok(),
        format!(
            "BR guarantee {br_ok}/50 (max lhs-rhs {br_worst:.2e}), stationary TD {td_ok}/50 (max lhs-rhs {td_worst:.2e}), max b_TD - 1/sqrt(1-g^2) {:.2e}",
            dominance.value
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut exact = Worst::new(1e-8);
    let mut br_off = 0;
    for i in 0..50u32 {
        let mut r = rng(7000 + i as u64);
        let k = r.random_range(1..=5usize);
        let l = r.random_range(2..=6usize);
        let gamma = r.random_range(0.5..0.99);
        let s = SeedSpec { master_seed: 79, n: (k + l) as u32, k: k as u32, mdp_trial: i, ..Default::default() };
        let inst = block_triangular(k, l, gamma, &s).unwrap();
        let v = oracle_value(&inst.mdp);
        let td = solve_td(&inst.mdp, &inst.phi, &inst.xi).unwrap();
        let br = solve_br(&inst.mdp, &inst.phi, &inst.xi).unwrap();
        let head = |x: &nalgebra::DVector<f64>| x.rows(0, k).into_owned();
        match td.value_estimate() {
            Some(v_td) => exact.see(max_diff(&head(v_td), &head(&v))),
            None => exact.see(f64::INFINITY),
        }
        if max_diff(&head(br.value_estimate().unwrap()), &head(&v)) > 1e-6 {
            br_off += 1;
        }
    }
    outcome(
        exact.ok() && br_off >= 45,
        format!("TD first-block max err {:.2e}, BR deviates on {br_off}/50", exact.value),
    )
}

fn reduced_config() -> SweepConfig {
    SweepConfig {
        gammas: vec![0.9, 0.99],
        n_min: 2,
        n_max: 15,
        feature_trials: 10,
        mdp_trials: 10,
        ..SweepConfig::default()
    }
}

fn csv_bytes(records: &[tdbr::harness::TrialRecord], policy: SingularPolicy) -> (Vec<u8>, Vec<u8>) {
    let cells = aggregate(records, policy).unwrap();
    let (mut t, mut c) = (Vec::new(), Vec::new());
    write_trials(&mut t, records).unwrap();
    write_cells(&mut c, &cells).unwrap();
    (t, c)
}

fn criterion_9() -> (Outcome, (Vec<u8>, Vec<u8>)) {
    let config = reduced_config();
    let start = Instant::now();
    let records = sweep(&config).unwrap();
    let cells = aggregate(&records, config.singular_policy).unwrap();
    let (fast, time) = within_runtime(start, Duration::from_secs(300));
    let summaries = summarize(&cells);
    let mut pass = fast;
    let mut parts = Vec::new();
    for s in &summaries {
        let win_ok = s.td_win_ratio > 0.5;
        let ratio_ok = (s.gamma - 0.99).abs() > 1e-12 || s.mean_ratio_td_over_br > 1.0;
        let smooth_ok = s.max_mean_rel_br.is_finite() && s.max_mean_rel_br < s.max_mean_rel_td;
        pass &= win_ok && ratio_ok && smooth_ok;
        parts.push(format!(
            "g={} win={:.3} E[td/br]={:.3} max rel_br={:.3} < max rel_td={:.3}",
            s.gamma, s.td_win_ratio, s.mean_ratio_td_over_br, s.max_mean_rel_br, s.max_mean_rel_td
        ));
    }
    pass &= summaries.len() == 2;
    let bytes = csv_bytes(&records, config.singular_policy);
    (outcome(pass, format!("{}; {time}", parts.join("; "))), bytes)
}

fn criterion_10(first: &(Vec<u8>, Vec<u8>)) -> Outcome {
    let config = reduced_config();
    let again = csv_bytes(&sweep(&config).unwrap(), config.singular_policy);
    let serial = csv_bytes(&sweep_serial(&config).unwrap(), config.singular_policy);
    let mut runs = vec![("repeat", again), ("serial", serial)];
    #[cfg(feature = "parallel")]
    for threads in [1, 3] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let recs = pool.install(|| tdbr::harness::sweep_parallel(&config)).unwrap();
        runs.push((if threads == 1 { "1 thread" } else { "3 threads" }, csv_bytes(&recs, config.singular_policy)));
    }
    let mismatched: Vec<&str> = runs.iter().filter(|(_, b)| b != first).map(|(n, _)| *n).collect();
    let names: Vec<&str> = runs.iter().map(|(n, _)| *n).collect();
    outcome(
        mismatched.is_empty(),
        format!("compared {} against first run, mismatches: {:?}", names.join(", "), mismatched),
    )
}

fn full_grid() -> Outcome {
    let config = SweepConfig::default();
    let start = Instant::now();
    let records = sweep(&config).unwrap();
    let cells = aggregate(&records, config.singular_policy).unwrap();
    let (fast, time) = within_runtime(start, Duration::from_secs(1800));
    let s = summarize(&cells);
    let win: Vec<String> = s.iter().map(|s| format!("g={} win={:.3} E[td/br]={:.3}", s.gamma, s.td_win_ratio, s.mean_ratio_td_over_br)).collect();
    let ratio_ok = s.iter().filter(|s| s.gamma >= 0.99).all(|s| s.mean_ratio_td_over_br > 1.0);
    let win_ok = s.iter().all(|s| s.td_win_ratio > 0.5);
    outcome(fast && win_ok && ratio_ok, format!("{} records; {}; {time}", records.len(), win.join("; ")))
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    // `cargo test -- --list` and similar probes
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let mut results: Vec<(u32, &str, Outcome)> = vec![
        (1, "example closed forms", criterion_1()),
        (2, "pythagorean identity", criterion_2()),
        (3, "oblique unification", criterion_3()),
        (4, "bound correctness", criterion_4()),
        (5, "optimal direction", criterion_5()),
        (6, "exactness", criterion_6()),
        (7, "BR guarantee and stationary TD bound", criterion_7()),
        (8, "block-triangular TD exactness", criterion_8()),
    ];
    let (c9, bytes) = criterion_9();
    results.push((9, "sweep reproduction", c9));
    results.push((10, "determinism", criterion_10(&bytes)));
    if args.iter().any(|a| a == "--full-grid") {
        results.push((11, "full grid runtime", full_grid()));
    }

    let mut failed = 0;
    for (id, name, o) in &results {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        if !o.pass {
            failed += 1;
        }
        println!("criterion {id:>2} [{tag}] {name}: {}", o.detail);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
