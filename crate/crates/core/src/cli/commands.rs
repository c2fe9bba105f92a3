use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};

use super::csv_io::{fmt_sig, read_cells, write_cells, write_trials};
use super::heatmap::{self, Stat};
use super::matrix_io::{read_matrix, read_vector, write_matrix};
use super::CliError;
use crate::analysis::{approximation_error, error_report};
use crate::harness::{aggregate, summarize, SingularPolicy, SweepConfig, DEFAULT_MASTER_SEED};
use crate::instances::example1;
use crate::mdp::Mdp;
use crate::projection::{FeatureBasis, StateWeights};
use crate::solvers::{solve_best, solve_br, solve_oblique, solve_td, ProjectionSolution};

#[derive(Debug, Parser)]
#[command(name = "tdbr", version, about = "TD, Bellman residual and oblique projections for policy evaluation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Td,
    Br,
    Best,
    Oblique,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one instance read from matrix text files.
    Solve {
        #[arg(long)]
        transitions: PathBuf,
        #[arg(long)]
        rewards: PathBuf,
        /// Discount factor; decimals or fractions such as 5/6.
        #[arg(long, value_parser = parse_number)]
        gamma: f64,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        weights: PathBuf,
        #[arg(long, value_enum)]
        method: MethodArg,
        /// Direction matrix X (oblique only).
        #[arg(long)]
        direction: Option<PathBuf>,
    },
    /// Error ratios of the two-state example over a (γ, θ) grid.
    Example1 {
        /// Comma list or `start:stop:count`.
        #[arg(long, value_parser = parse_grid)]
        gamma_grid: Grid,
        #[arg(long, value_parser = parse_grid)]
        theta_grid: Grid,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the two-state example as matrix files.
    ExportExample1 {
        #[arg(long, value_parser = parse_number)]
        gamma: f64,
        #[arg(long, value_parser = parse_number, default_value = "0")]
        theta: f64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Random chain sweep; writes trials.csv and cells.csv.
    Sweep {
        #[arg(long, default_value_t = DEFAULT_MASTER_SEED)]
        seed: u64,
        #[arg(long, value_delimiter = ',', value_parser = parse_number, default_value = "0.9,0.95,0.99,0.999")]
        gammas: Vec<f64>,
        #[arg(long, default_value_t = 2)]
        n_min: usize,
        #[arg(long, default_value_t = 30)]
        n_max: usize,
        #[arg(long)]
        k_max: Option<usize>,
        /// Feature draws and chain draws per cell (each).
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value = "worst", value_parser = parse_policy)]
        singular_policy: SingularPolicy,
        #[arg(long)]
        out_dir: PathBuf,
        /// Worker threads; 0 uses all cores.
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// SVG heatmap of one cell statistic over (n, k).
    Heatmap {
        #[arg(long)]
        cells: PathBuf,
        #[arg(long)]
        stat: String,
        #[arg(long, value_parser = parse_number)]
        gamma: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        log: bool,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

/// Decimal or `a/b`, with `pi` allowed as a factor (`pi/4`, `2*pi`).
pub fn parse_number(s: &str) -> Result<f64, String> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let (a, b) = (parse_number(a)?, parse_number(b)?);
        if b == 0.0 {
            return Err(format!("division by zero in {s:?}"));
        }
        return Ok(a / b);
    }
    if let Some((a, b)) = s.split_once('*') {
        return Ok(parse_number(a)? * parse_number(b)?);
    }
    match s {
        "pi" => Ok(std::f64::consts::PI),
        _ => s.parse::<f64>().map_err(|_| format!("not a number: {s:?}")),
    }
}

pub fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let values = match parts.as_slice() {
        [start, stop, count] => {
            let (a, b) = (parse_number(start)?, parse_number(stop)?);
            let count: usize = count.trim().parse().map_err(|_| format!("bad count {count:?}"))?;
            match count {
                0 => Vec::new(),
                1 => vec![a],
                c => (0..c).map(|i| a + (b - a) * i as f64 / (c - 1) as f64).collect(),
            }
        }
        [_] => s.split(',').map(parse_number).collect::<Result<_, _>>()?,
        _ => return Err(format!("grid {s:?} is neither a comma list nor start:stop:count")),
    };
    if values.is_empty() {
        return Err("empty grid".into());
    }
    Ok(Grid(values))
}

fn parse_policy(s: &str) -> Result<SingularPolicy, String> {
    s.parse().map_err(|e: crate::Error| e.to_string())
}

pub fn execute<W: Write>(cli: Cli, out: &mut W) -> Result<(), CliError> {
    match cli.command {
        Command::Solve {
            transitions,
            rewards,
            gamma,
            features,
            weights,
            method,
            direction,
        } => cmd_solve(
            out,
            &SolveInputs {
                transitions,
                rewards,
                gamma,
                features,
                weights,
                method,
                direction,
            },
        ),
        Command::Example1 {
            gamma_grid,
            theta_grid,
            out: path,
        } => cmd_example1(&gamma_grid.0, &theta_grid.0, &path),
        Command::ExportExample1 { gamma, theta, out_dir } => cmd_export_example1(gamma, theta, &out_dir),
        Command::Sweep {
            seed,
            gammas,
            n_min,
            n_max,
            k_max,
            trials,
            singular_policy,
            out_dir,
            threads,
        } => {
            let config = SweepConfig {
                gammas,
                n_min,
                n_max,
                k_max,
                feature_trials: trials,
                mdp_trials: trials,
                master_seed: seed,
                singular_policy,
            };
            cmd_sweep(out, &config, &out_dir, threads)
        }
        Command::Heatmap {
            cells,
            stat,
            gamma,
            out: path,
            log,
        } => cmd_heatmap(&cells, &stat, gamma, &path, log),
    }
}

pub struct SolveInputs {
    pub transitions: PathBuf,
    pub rewards: PathBuf,
    pub gamma: f64,
    pub features: PathBuf,
    pub weights: PathBuf,
    pub method: MethodArg,
    pub direction: Option<PathBuf>,
}

fn join(v: &DVector<f64>) -> String {
    v.iter().map(|x| fmt_sig(*x)).collect::<Vec<_>>().join(" ")
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Input(format!("cannot write {}: {e}", path.display()))
}

pub fn cmd_solve<W: Write>(out: &mut W, args: &SolveInputs) -> Result<(), CliError> {
    let p = read_matrix(&args.transitions)?;
    let r = read_vector(&args.rewards)?;
    let phi = FeatureBasis::new(read_matrix(&args.features)?)?;
    let xi = StateWeights::new(read_vector(&args.weights)?)?;
    let mdp = Mdp::new(p, r, args.gamma)?;

    let solution: ProjectionSolution = match args.method {
        MethodArg::Td => solve_td(&mdp, &phi, &xi)?,
        MethodArg::Br => solve_br(&mdp, &phi, &xi)?,
        MethodArg::Best => solve_best(&mdp, &phi, &xi)?,
        MethodArg::Oblique => {
            let path = args
                .direction
                .as_ref()
                .ok_or_else(|| CliError::Input("--method oblique requires --direction".into()))?;
            solve_oblique(&mdp, &phi, &read_matrix(path)?)?
        }
    };
    if args.method != MethodArg::Oblique && args.direction.is_some() {
        return Err(CliError::Input("--direction is only valid with --method oblique".into()));
    }

    let w = solution.require_weights()?;
    let v_hat = solution.require_value_estimate()?;
    let report = error_report(&mdp, &phi, &xi, v_hat)?;
    let text = format!(
        "method: {}\ncondition_estimate: {}\nw: {}\nv_hat: {}\napprox_error: {}\ntd_error: {}\nbr_residual: {}\nadequacy: {}\n",
        solution.method,
        fmt_sig(solution.condition_estimate),
        join(w),
        join(v_hat),
        fmt_sig(report.approx_error),
        fmt_sig(report.td_error),
        fmt_sig(report.br_residual),
        fmt_sig(report.adequacy),
    );
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::Input(format!("cannot write output: {e}")))
}

/// One row of the example grid: squared error ratios against the best projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Example1Row {
    pub gamma: f64,
    pub theta: f64,
    /// `None` when the TD system is singular.
    pub ratio_td: Option<f64>,
    pub ratio_br: f64,
}

pub fn example1_row(gamma: f64, theta: f64) -> Result<Example1Row, CliError> {
    let inst = example1(gamma, theta)?;
    let err = |s: &ProjectionSolution| -> Result<Option<f64>, CliError> {
        match s.value_estimate() {
            Some(v) => Ok(Some(approximation_error(&inst.mdp, &inst.xi, v)?)),
            None => Ok(None),
        }
    };
    let best = solve_best(&inst.mdp, &inst.phi, &inst.xi)?;
    let e = err(&best)?.ok_or_else(|| CliError::Singular("best projection failed".into()))?;
    let e_td = err(&solve_td(&inst.mdp, &inst.phi, &inst.xi)?)?;
    let e_br = err(&solve_br(&inst.mdp, &inst.phi, &inst.xi)?)?
        .ok_or_else(|| CliError::Singular("BR least squares is singular".into()))?;
    // e = 0 makes the ratios undefined
    let ratio = |x: f64| if e > 0.0 { (x / e).powi(2) } else { f64::NAN };
    Ok(Example1Row {
        gamma,
        theta,
        ratio_td: e_td.map(ratio),
        ratio_br: ratio(e_br),
    })
}

pub fn cmd_example1(gammas: &[f64], thetas: &[f64], path: &Path) -> Result<(), CliError> {
    let mut rows = Vec::with_capacity(gammas.len() * thetas.len());
    for &g in gammas {
        for &t in thetas {
            rows.push(example1_row(g, t)?);
        }
    }
    let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    let write = |w: &mut BufWriter<fs::File>| -> std::io::Result<()> {
        writeln!(w, "gamma,theta,ratio_td,ratio_br")?;
        for r in &rows {
            let td = r.ratio_td.map(fmt_sig).unwrap_or_else(|| "singular".into());
            writeln!(w, "{},{},{},{}", fmt_sig(r.gamma), fmt_sig(r.theta), td, fmt_sig(r.ratio_br))?;
        }
        w.flush()
    };
    write(&mut w).map_err(|e| io_err(path, e))
}

pub fn cmd_export_example1(gamma: f64, theta: f64, dir: &Path) -> Result<(), CliError> {
    let inst = example1(gamma, theta)?;
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let col = |v: &DVector<f64>| DMatrix::from_column_slice(v.len(), 1, v.as_slice());
    write_matrix(&dir.join("transitions.txt"), inst.mdp.transitions())?;
    write_matrix(&dir.join("rewards.txt"), &col(inst.mdp.rewards()))?;
    write_matrix(&dir.join("features.txt"), inst.phi.matrix())?;
    write_matrix(&dir.join("weights.txt"), &col(inst.xi.as_vector()))?;
    Ok(())
}

fn run_sweep(config: &SweepConfig, threads: usize) -> Result<Vec<crate::harness::TrialRecord>, CliError> {
    #[cfg(feature = "parallel")]
    {
        if threads > 0 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| CliError::Input(format!("cannot start {threads} threads: {e}")))?;
            return Ok(pool.install(|| crate::harness::sweep(config))?);
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(crate::harness::sweep(config)?)
}

pub fn cmd_sweep<W: Write>(
    out: &mut W,
    config: &SweepConfig,
    dir: &Path,
    threads: usize,
) -> Result<(), CliError> {
    config.validate()?;
    let records = run_sweep(config, threads)?;
    let cells = aggregate(&records, config.singular_policy)?;
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;

    let trials_path = dir.join("trials.csv");
    let mut buf = Vec::new();
    write_trials(&mut buf, &records).map_err(|e| io_err(&trials_path, e))?;
    fs::write(&trials_path, &buf).map_err(|e| io_err(&trials_path, e))?;

    let cells_path = dir.join("cells.csv");
    let mut buf = Vec::new();
    write_cells(&mut buf, &cells).map_err(|e| io_err(&cells_path, e))?;
    fs::write(&cells_path, &buf).map_err(|e| io_err(&cells_path, e))?;

    for s in summarize(&cells) {
        writeln!(
            out,
            "gamma={} cells={} td_win_ratio={} bound_prediction_ratio={} mean_td_over_br={} mean_rel_td={} mean_rel_br={} singular={}",
            fmt_sig(s.gamma),
            s.cells,
            fmt_sig(s.td_win_ratio),
            fmt_sig(s.bound_prediction_ratio),
            fmt_sig(s.mean_ratio_td_over_br),
            fmt_sig(s.mean_rel_td),
            fmt_sig(s.mean_rel_br),
            s.singular_count
        )
        .map_err(|e| CliError::Input(format!("cannot write output: {e}")))?;
    }
    Ok(())
}

pub fn cmd_heatmap(cells: &Path, stat: &str, gamma: f64, path: &Path, log: bool) -> Result<(), CliError> {
    let stat: Stat = stat.parse()?;
    let rows = read_cells(cells)?;
    let svg = heatmap::render(&rows, stat, gamma, log)?;
    fs::write(path, svg).map_err(|e| io_err(path, e))
}
