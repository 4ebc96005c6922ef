//! Monte-Carlo memory experiments and resumable parameter sweeps.

use std::fmt;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::circuit::{build_serialized, Circuit};
use crate::decoder::Decoder;
use crate::engine::{run_shot, Backend, Calibration, NoiseModel, ShotRecord};
use crate::error::{Error, Result};
use crate::layout::{build_layout, CodeDistance, CodeLayout};
use crate::noise::{CrNoiseMode, NoiseParams};
use crate::rng::shot_seed;
use crate::statevector::StateVector;
use crate::tableau::Tableau;

/// Header of the results CSV; column order is part of the file format.
pub const RESULTS_HEADER: [&str; 9] = ["d", "p", "c", "rounds", "shots", "p_L", "stderr", "wall_time_s", "master_seed"];

/// Largest fraction of numerically aborted shots a run tolerates.
pub const MAX_ABORT_FRACTION: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    #[default]
    #[serde(alias = "state_vector", alias = "sv")]
    StateVector,
    Tableau,
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::StateVector => "statevector",
            Engine::Tableau => "tableau",
        })
    }
}

impl FromStr for Engine {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "statevector" | "state_vector" | "sv" => Ok(Engine::StateVector),
            "tableau" | "stabilizer" => Ok(Engine::Tableau),
            _ => Err(Error::Config(format!("unknown engine '{s}' (statevector | tableau)"))),
        }
    }
}

/// One memory experiment. Serialized as flat TOML:
///
/// ```toml
/// d = 3
/// p = 0.005
/// c = 0.5
/// rounds = 3          # optional, defaults to d
/// shots = 10000
/// master_seed = 1
/// engine = "statevector"
/// cr_noise_mode = "replace"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub d: usize,
    pub p: f64,
    #[serde(default)]
    pub c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rounds: Option<usize>,
    pub shots: u64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub engine: Engine,
    #[serde(default)]
    pub cr_noise_mode: CrNoiseMode,
}

impl ExperimentConfig {
    pub fn new(d: usize, p: f64, c: f64, shots: u64) -> Self {
        Self { d, p, c, rounds: None, shots, master_seed: 0, engine: Engine::default(), cr_noise_mode: CrNoiseMode::default() }
    }

    pub fn rounds(&self) -> usize {
        self.rounds.unwrap_or(self.d)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Apply a `key=value` override using the file's key names.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override '{assignment}' is not key=value")))?;
        let (key, value) = (key.trim(), value.trim());
        let bad = |e: &dyn fmt::Display| Error::Config(format!("{key}: {e}"));
        match key {
            "d" => self.d = value.parse().map_err(|e| bad(&e))?,
            "p" => self.p = value.parse().map_err(|e| bad(&e))?,
            "c" => self.c = value.parse().map_err(|e| bad(&e))?,
            "rounds" => self.rounds = Some(value.parse().map_err(|e| bad(&e))?),
            "shots" => self.shots = value.parse().map_err(|e| bad(&e))?,
            "master_seed" | "seed" => self.master_seed = value.parse().map_err(|e| bad(&e))?,
            "engine" => self.engine = value.parse()?,
            "cr_noise_mode" => self.cr_noise_mode = value.parse()?,
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        CodeDistance::new(self.d)?;
        NoiseParams::new(self.p, self.c)?;
        if self.shots == 0 {
            return Err(Error::Config("shots must be at least 1".into()));
        }
        if self.rounds() == 0 {
            return Err(Error::Config("rounds must be at least 1".into()));
        }
        if self.engine == Engine::Tableau && self.c != 0.0 {
            return Err(Error::Config("the tableau engine requires c = 0".into()));
        }
        Ok(())
    }

    fn noise_model(&self) -> Result<NoiseModel> {
        Ok(NoiseModel::new(NoiseParams::new(self.p, self.c)?, self.cr_noise_mode))
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses the available parallelism.
    pub workers: Option<usize>,
    /// Keep every decoded shot's record in the result.
    pub keep_records: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub config: ExperimentConfig,
    pub p_l: f64,
    pub stderr: f64,
    pub flips: u64,
    pub shots_run: u64,
    pub aborts: u64,
    pub wall_time_s: f64,
    /// Bytes held by one worker's simulator state.
    pub state_bytes: usize,
    pub records: Vec<ShotRecord>,
}

impl RunResult {
    pub fn csv_row(&self) -> [String; 9] {
        let c = &self.config;
        [
            c.d.to_string(),
            c.p.to_string(),
            c.c.to_string(),
            c.rounds().to_string(),
            self.shots_run.to_string(),
            self.p_l.to_string(),
            self.stderr.to_string(),
            format!("{:.3}", self.wall_time_s),
            c.master_seed.to_string(),
        ]
    }
}

/// Binomial estimate `(p_L, stderr)`.
pub fn binomial_estimate(flips: u64, shots: u64) -> (f64, f64) {
    if shots == 0 {
        return (0.0, 0.0);
    }
    let p = flips as f64 / shots as f64;
    (p, (p * (1.0 - p) / shots as f64).sqrt())
}

/// Everything a worker needs, shared read-only across shots.
pub struct Prepared {
    pub layout: CodeLayout,
    pub circuit: Circuit,
    pub calibration: Calibration,
    pub decoder: Decoder,
    pub model: NoiseModel,
}

impl Prepared {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let layout = build_layout(CodeDistance::new(config.d)?);
        let circuit = build_serialized(&layout, config.rounds())?;
        let calibration = Calibration::compute(&circuit, &layout)?;
        let decoder = Decoder::new(&layout, config.rounds());
        Ok(Self { layout, circuit, calibration, decoder, model: config.noise_model()? })
    }

    pub fn new_backend(&self, engine: Engine) -> Result<Box<dyn Backend + Send>> {
        Ok(match engine {
            Engine::StateVector => Box::new(StateVector::new(self.circuit.n_registers)?),
            Engine::Tableau => Box::new(Tableau::new(self.circuit.n_registers)),
        })
    }

    /// One shot and its decoded outcome.
    pub fn shot(&self, backend: &mut dyn Backend, seed: u64) -> Result<(ShotRecord, bool)> {
        let rec = run_shot(backend, &self.circuit, &self.layout, &self.model, &self.calibration, seed, &[])?;
        let flip = self.decoder.decode(&rec)?.logical_flip;
        Ok((rec, flip))
    }
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        b = b.num_threads(w.max(1));
    }
    b.build().map_err(|e| Error::Config(format!("worker pool: {e}")))
}

/// Run `config.shots` shots. Shot `i` uses seed `shot_seed(master_seed, i)`,
/// so the outcome does not depend on the worker count.
pub fn run_experiment(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunResult> {
    let start = Instant::now();
    let prep = Prepared::new(config)?;
    let state_bytes = match config.engine {
        Engine::StateVector => (1usize << prep.circuit.n_registers) * std::mem::size_of::<num_complex::Complex64>(),
        Engine::Tableau => 0,
    };
    let outcomes: Vec<Result<Option<(ShotRecord, bool)>>> = pool(opts.workers)?.install(|| {
        (0..config.shots)
            .into_par_iter()
            .map_init(
                || prep.new_backend(config.engine),
                |backend, i| {
                    let backend = backend.as_mut().map_err(|e| Error::Config(e.to_string()))?;
                    match prep.shot(backend.as_mut(), shot_seed(config.master_seed, i)) {
                        Ok(r) => Ok(Some(r)),
                        Err(Error::NumericHealth { norm }) => {
                            log::warn!("shot {i} aborted: norm {norm}");
                            Ok(None)
                        }
                        Err(e) => Err(e),
                    }
                },
            )
            .collect()
    });
    let mut flips = 0;
    let mut aborts = 0;
    let mut records = Vec::new();
    for o in outcomes {
        match o? {
            Some((rec, flip)) => {
                flips += flip as u64;
                if opts.keep_records {
                    records.push(rec);
                }
            }
            None => aborts += 1,
        }
    }
    if aborts as f64 > MAX_ABORT_FRACTION * config.shots as f64 {
        return Err(Error::TooManyAborts { aborts, shots: config.shots });
    }
    let shots_run = config.shots - aborts;
    let (p_l, stderr) = binomial_estimate(flips, shots_run);
    Ok(RunResult {
        config: config.clone(),
        p_l,
        stderr,
        flips,
        shots_run,
        aborts,
        wall_time_s: start.elapsed().as_secs_f64(),
        state_bytes,
        records,
    })
}

/// Standard sweep: p from 10⁻³ to 7×10⁻² (1-2-3-5-7 per decade), c from
/// 0 to 1 in steps of 0.25.
pub fn standard_grid() -> Vec<(f64, f64)> {
    let ps = [1e-3, 2e-3, 3e-3, 5e-3, 7e-3, 1e-2, 2e-2, 3e-2, 5e-2, 7e-2];
    let cs = [0.0, 0.25, 0.5, 0.75, 1.0];
    cs.iter().flat_map(|&c| ps.iter().map(move |&p| (p, c))).collect()
}

/// Hash identifying a sweep: base config (without p and c) plus the grid.
pub fn sweep_hash(base: &ExperimentConfig, grid: &[(f64, f64)]) -> String {
    let mut h = Sha256::new();
    let mut b = base.clone();
    b.p = 0.0;
    b.c = 0.0;
    h.update(b.to_toml().as_bytes());
    for (p, c) in grid {
        h.update(format!("{p},{c};").as_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn hash_path(csv: &Path) -> PathBuf {
    let mut s = csv.as_os_str().to_owned();
    s.push(".hash");
    PathBuf::from(s)
}

/// Run every grid point with `base` (all points share its master seed) and
/// append one row per point to `csv`. An existing CSV with a matching hash
/// sidecar is resumed after its last complete row; a mismatching one is an
/// error.
pub fn sweep(grid: &[(f64, f64)], base: &ExperimentConfig, csv: &Path, opts: &RunOptions) -> Result<Vec<RunResult>> {
    if grid.is_empty() {
        return Err(Error::Config("empty sweep grid".into()));
    }
    for &(p, c) in grid {
        ExperimentConfig { p, c, ..base.clone() }.validate()?;
    }
    let hash = sweep_hash(base, grid);
    let hpath = hash_path(csv);
    let mut done = 0;
    if csv.exists() {
        let found = fs::read_to_string(&hpath).unwrap_or_default().trim().to_string();
        if found != hash {
            return Err(Error::ConfigHashMismatch { expected: hash, found });
        }
        let rows = read_results(csv)?;
        for (row, &(p, c)) in rows.iter().zip(grid) {
            if row.p != p || row.c != c {
                return Err(Error::Config(format!("{} does not follow the sweep grid", csv.display())));
            }
        }
        done = rows.len().min(grid.len());
        log::info!("resuming {} after {done} of {} points", csv.display(), grid.len());
    } else {
        if let Some(dir) = csv.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(&hpath, format!("{hash}\n"))?;
        let mut w = csv::Writer::from_path(csv)?;
        w.write_record(RESULTS_HEADER)?;
        w.flush()?;
    }
    let mut out = Vec::new();
    for &(p, c) in &grid[done..] {
        let cfg = ExperimentConfig { p, c, ..base.clone() };
        let r = run_experiment(&cfg, opts)?;
        log::info!("d={} p={p} c={c}: p_L={} ± {}", cfg.d, r.p_l, r.stderr);
        let file = OpenOptions::new().append(true).open(csv)?;
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
        w.write_record(r.csv_row())?;
        w.flush()?;
        out.push(r);
    }
    Ok(out)
}

/// One parsed results row.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ResultRow {
    pub d: usize,
    pub p: f64,
    pub c: f64,
    pub rounds: usize,
    pub shots: u64,
    #[serde(rename = "p_L")]
    pub p_l: f64,
    pub stderr: f64,
    pub wall_time_s: f64,
    pub master_seed: u64,
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let mut rd = csv::Reader::from_path(path)?;
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header != RESULTS_HEADER {
        return Err(Error::Parse(format!("{}: unexpected header {header:?}", path.display())));
    }
    rd.deserialize().map(|r| r.map_err(Error::from)).collect()
}

pub fn write_results(path: &Path, results: &[RunResult]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(RESULTS_HEADER)?;
    for r in results {
        w.write_record(r.csv_row())?;
    }
    w.flush()?;
    Ok(())
}

/// Provenance written next to every output: what ran, with which settings.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub arguments: Vec<String>,
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<ExperimentConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<(f64, f64)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

impl Manifest {
    pub fn new(command: &str, arguments: Vec<String>) -> Self {
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            arguments,
            outputs: Vec::new(),
            config: None,
            grid: None,
            workers: None,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join(format!("manifest-{}.toml", self.command));
        let text = toml::to_string(self).map_err(|e| Error::Config(e.to_string()))?;
        File::create(&path)?.write_all(text.as_bytes())?;
        Ok(path)
    }
}
