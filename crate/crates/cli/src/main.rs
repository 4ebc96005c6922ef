//! `surfsim` — rotated surface code memory experiments from the command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use surfsim::analysis::{
    break_even, fit_effective_alpha, fit_power_law, lifetime_grid, DataPoint, FitReport, LifetimeParams, Weighting,
    DEFAULT_FIT_RANGE,
};
use surfsim::circuit::{build_parallel, build_serialized, validate_schedules};
use surfsim::engine::{run_shot, write_shot_records, Calibration, NoiseModel};
use surfsim::experiment::{
    standard_grid, read_results, run_experiment, sweep, write_results, ExperimentConfig, Manifest, RunOptions,
};
use surfsim::layout::{build_layout, CodeDistance};
use surfsim::noise::{CrNoiseMode, NoiseParams};
use surfsim::plots::{emit_outputs, Outputs};
use surfsim::rng::shot_seed;
use surfsim::statevector::StateVector;
use surfsim::tableau::Tableau;
use surfsim::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "surfsim", version, about = "Rotated surface code QEC simulator with coherent over-rotation noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the stabilizer table of a distance-d layout.
    Layout {
        #[arg(long, default_value_t = 5)]
        d: usize,
    },
    /// Print the compiled syndrome-extraction circuit.
    Circuit {
        #[arg(long, default_value_t = 5)]
        d: usize,
        #[arg(long)]
        rounds: Option<usize>,
        #[arg(long, value_enum, default_value_t = ScheduleArg::Serialized)]
        schedule: ScheduleArg,
    },
    /// Run one memory experiment.
    Run {
        #[command(flatten)]
        exp: ExpArgs,
        /// Also write every shot's syndrome record.
        #[arg(long)]
        records: bool,
    },
    /// Run a (p, c) grid; resumes an interrupted sweep in the same directory.
    Sweep {
        #[command(flatten)]
        exp: ExpArgs,
        /// Comma-separated p values.
        #[arg(long, value_delimiter = ',')]
        ps: Vec<f64>,
        /// Comma-separated c values.
        #[arg(long, value_delimiter = ',')]
        cs: Vec<f64>,
        /// Use the standard 10 × 5 (p, c) grid instead of --ps/--cs.
        #[arg(long)]
        standard_grid: bool,
    },
    /// Fit p_L = A·p^ξ (and α if several c are present) to a results CSV.
    Fit {
        /// Results CSV written by `run` or `sweep`.
        results: PathBuf,
        #[arg(long, default_value_t = DEFAULT_FIT_RANGE.0)]
        p_min: f64,
        #[arg(long, default_value_t = DEFAULT_FIT_RANGE.1)]
        p_max: f64,
        /// Weight points by their binomial standard error.
        #[arg(long)]
        weighted: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Tabulate and plot t_L/t_c over (t_g/t_c, c).
    Lifetime {
        #[arg(long = "A", default_value_t = 6.5e5)]
        a: f64,
        #[arg(long, default_value_t = 2.92)]
        xi: f64,
        #[arg(long, default_value_t = 0.872)]
        alpha: f64,
        #[arg(long, default_value_t = 5)]
        d: usize,
        #[arg(long, default_value_t = 11)]
        n_steps: usize,
        #[arg(long, default_value_t = 1e-4)]
        x_min: f64,
        #[arg(long, default_value_t = 1e-2)]
        x_max: f64,
        #[arg(long, default_value_t = 60)]
        nx: usize,
        #[arg(long, default_value_t = 21)]
        nc: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Check schedule equivalence and state-vector/tableau agreement.
    Validate {
        /// Distances for the schedule check.
        #[arg(long, value_delimiter = ',', default_value = "3,5")]
        d: Vec<usize>,
        /// Shots per p for the engine comparison at d = 3.
        #[arg(long, default_value_t = 1000)]
        shots: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScheduleArg {
    Parallel,
    Serialized,
}

#[derive(Args, Debug)]
struct OutArgs {
    /// Output directory (default: $SURFSIM_OUT or ./surfsim-out).
    #[arg(long, env = "SURFSIM_OUT", default_value = "surfsim-out")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ExpArgs {
    /// TOML config with keys d, p, c, rounds, shots, master_seed, engine, cr_noise_mode.
    #[arg(long)]
    config: Option<PathBuf>,
    /// key=value override, applied after the config file.
    #[arg(long = "set")]
    set: Vec<String>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    engine: Option<String>,
    #[arg(long)]
    cr_noise_mode: Option<String>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    workers: Option<usize>,
    #[command(flatten)]
    out: OutArgs,
}

impl ExpArgs {
    /// Defaults < config file < --set < dedicated flags.
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_toml(&std::fs::read_to_string(path)?)?,
            None => ExperimentConfig::new(3, 0.0, 0.0, 1000),
        };
        for s in &self.set {
            cfg.set(s)?;
        }
        if let Some(v) = self.d {
            cfg.d = v;
        }
        if let Some(v) = self.p {
            cfg.p = v;
        }
        if let Some(v) = self.c {
            cfg.c = v;
        }
        if let Some(v) = self.rounds {
            cfg.rounds = Some(v);
        }
        if let Some(v) = self.shots {
            cfg.shots = v;
        }
        if let Some(v) = self.seed {
            cfg.master_seed = v;
        }
        if let Some(v) = &self.engine {
            cfg.engine = v.parse()?;
        }
        if let Some(v) = &self.cr_noise_mode {
            cfg.cr_noise_mode = v.parse()?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn options(&self) -> RunOptions {
        RunOptions { workers: self.workers, keep_records: false }
    }
}

fn args() -> Vec<String> {
    std::env::args().skip(1).collect()
}

fn finish(mut manifest: Manifest, dir: &Path, outputs: Vec<PathBuf>) -> Result<()> {
    manifest.outputs = outputs.iter().map(|p| p.display().to_string()).collect();
    let path = manifest.write(dir)?;
    info!("manifest written to {}", path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Layout { d } => {
            print!("{}", build_layout(CodeDistance::new(d)?).table());
        }
        Command::Circuit { d, rounds, schedule } => {
            let layout = build_layout(CodeDistance::new(d)?);
            let rounds = rounds.unwrap_or(d);
            let circuit = match schedule {
                ScheduleArg::Parallel => build_parallel(&layout, rounds)?,
                ScheduleArg::Serialized => build_serialized(&layout, rounds)?,
            };
            print!("{}", circuit.dump());
        }
        Command::Run { exp, records } => {
            let cfg = exp.resolve()?;
            let opts = RunOptions { keep_records: records, ..exp.options() };
            let result = run_experiment(&cfg, &opts)?;
            let dir = &exp.out.out;
            std::fs::create_dir_all(dir)?;
            let csv = dir.join("results.csv");
            write_results(&csv, std::slice::from_ref(&result))?;
            let mut outputs = vec![csv];
            if records {
                let path = dir.join("shots.csv");
                write_shot_records(std::fs::File::create(&path)?, &result.records)?;
                outputs.push(path);
            }
            println!(
                "d={} p={} c={} rounds={} shots={} p_L={} stderr={} aborts={} wall_time_s={:.3}",
                cfg.d,
                cfg.p,
                cfg.c,
                cfg.rounds(),
                result.shots_run,
                result.p_l,
                result.stderr,
                result.aborts,
                result.wall_time_s
            );
            let mut m = Manifest::new("run", args());
            m.config = Some(cfg);
            m.workers = exp.workers;
            finish(m, dir, outputs)?;
        }
        Command::Sweep { exp, ps, cs, standard_grid: standard } => {
            let base = exp.resolve()?;
            let grid: Vec<(f64, f64)> = if standard {
                standard_grid()
            } else {
                if ps.is_empty() {
                    return Err(Error::Config("sweep needs --ps (and optionally --cs) or --standard-grid".into()));
                }
                let cs = if cs.is_empty() { vec![base.c] } else { cs };
                cs.iter().flat_map(|&c| ps.iter().map(move |&p| (p, c))).collect()
            };
            let dir = &exp.out.out;
            let csv = dir.join("results.csv");
            let results = sweep(&grid, &base, &csv, &exp.options())?;
            for r in &results {
                println!("p={} c={} p_L={} stderr={}", r.config.p, r.config.c, r.p_l, r.stderr);
            }
            let mut m = Manifest::new("sweep", args());
            m.config = Some(base);
            m.grid = Some(grid);
            m.workers = exp.workers;
            finish(m, dir, vec![csv])?;
        }
        Command::Fit { results, p_min, p_max, weighted, out } => {
            let rows = read_results(&results)?;
            let points: Vec<DataPoint> = rows.iter().map(DataPoint::from).collect();
            let zero: Vec<DataPoint> = points.iter().copied().filter(|pt| pt.c == 0.0).collect();
            let weighting = if weighted { Weighting::Stderr } else { Weighting::Unweighted };
            let fit = fit_power_law(&zero, (p_min, p_max), weighting)?;
            let mut cs: Vec<f64> = points.iter().map(|pt| pt.c).collect();
            cs.sort_by(f64::total_cmp);
            cs.dedup();
            let effective = if cs.len() >= 3 { Some(fit_effective_alpha(&points, &fit)?) } else { None };
            let report = FitReport { fit: fit.clone(), effective: effective.clone() };
            let text = report.to_toml();
            print!("{text}");
            std::fs::create_dir_all(&out.out)?;
            let report_path = out.out.join("fit.toml");
            std::fs::write(&report_path, &text)?;
            let mut outputs = emit_outputs(
                &out.out,
                &Outputs { results: &rows, fit: Some(&fit), model: effective.as_ref(), ..Default::default() },
            )?;
            outputs.push(report_path);
            finish(Manifest::new("fit", args()), &out.out, outputs)?;
        }
        Command::Lifetime { a, xi, alpha, d, n_steps, x_min, x_max, nx, nc, out } => {
            let base = LifetimeParams { t_g: x_min, t_c: 1.0, d, n_steps, c: 0.0, a, xi, alpha };
            let grid = lifetime_grid(&base, (x_min, x_max), nx, (0.0, 1.0), nc)?;
            let saturated = grid.iter().filter(|g| g.saturated).count();
            if saturated > 0 {
                log::warn!("{saturated} of {} grid cells saturated (predicted p_L ≥ 1)", grid.len());
            }
            let mut contour = Vec::new();
            for k in 0..nc {
                let c = if nc == 1 { 0.0 } else { k as f64 / (nc - 1) as f64 };
                if let Some(x) = break_even(&LifetimeParams { c, ..base }, x_min, x_max)? {
                    println!("c={c:.3} break_even_t_g_over_t_c={x:.6}");
                    contour.push((x, c));
                }
            }
            let outputs = emit_outputs(&out.out, &Outputs { lifetime: &grid, contour: &contour, ..Default::default() })?;
            finish(Manifest::new("lifetime", args()), &out.out, outputs)?;
        }
        Command::Validate { d, shots, seed } => validate(&d, shots, seed)?,
    }
    Ok(())
}

fn validate(distances: &[usize], shots: u64, seed: u64) -> Result<()> {
    for &d in distances {
        let layout = build_layout(CodeDistance::new(d)?);
        let report = validate_schedules(&build_parallel(&layout, d)?, &build_serialized(&layout, d)?, &layout)?;
        println!("d={d}: {report}");
    }
    let layout = build_layout(CodeDistance::new(3)?);
    let circuit = build_serialized(&layout, 3)?;
    let cal = Calibration::compute(&circuit, &layout)?;
    let mut sv = StateVector::new(circuit.n_registers)?;
    let mut tab = Tableau::new(circuit.n_registers);
    for p in [5e-3, 1e-2] {
        let model = NoiseModel::new(NoiseParams::new(p, 0.0)?, CrNoiseMode::Replace);
        for i in 0..shots {
            let s = shot_seed(seed, i);
            let a = run_shot(&mut sv, &circuit, &layout, &model, &cal, s, &[])?;
            let b = run_shot(&mut tab, &circuit, &layout, &model, &cal, s, &[])?;
            if a != b {
                return Err(Error::ScheduleMismatch(format!("engines disagree at p={p}, shot {i} (seed {s})")));
            }
        }
        println!("engines d=3 p={p}: {shots} shots bit-identical");
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).format_timestamp(None).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
