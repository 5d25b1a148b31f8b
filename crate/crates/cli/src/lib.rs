//! Sweeps, burst reports, circuit export and noise studies over a time grid.
//!
//! Every command evaluates grid points in parallel and merges results in grid
//! order, so outputs are byte-identical for identical configuration.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use ico_battery_core::analytic::{closed_form_report, dco_zero_window};
use ico_battery_core::circuit::{
    angles_of_time, build_ico_circuit, emit_qasm, estimate, outcome_probabilities, sample, simulate, standard_errors,
    write_shot_records, ShotRecord,
};
use ico_battery_core::thermo::report;
use ico_battery_core::{run_ico, ModelParams, NoiseSpec};

/// Maximum tolerated disagreement between the numeric and analytic engines.
pub const ENGINE_TOLERANCE: f64 = 1e-9;
/// Slack for `W_ico ≥ W_dco`.
pub const DOMINANCE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Invariant(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    #[default]
    Numeric,
    Analytic,
    Both,
}

/// Experiment description. Mirrors the JSON config file; CLI flags override it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(alias = "N_list")]
    pub n_list: Vec<usize>,
    pub omega: f64,
    pub lambda: f64,
    pub t_min: f64,
    /// Defaults to `4π/(ωλ)`.
    pub t_max: Option<f64>,
    pub points: usize,
    pub engine: Engine,
    pub shots: Option<u64>,
    pub depolarizing_p: Option<f64>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub tau: f64,
    pub eps_dco: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n_list: vec![2],
            omega: 1.0,
            lambda: 0.1,
            t_min: 0.0,
            t_max: None,
            points: 400,
            engine: Engine::Numeric,
            shots: None,
            depolarizing_p: None,
            seed: 0,
            out: None,
            tau: 0.5,
            eps_dco: 1e-9,
        }
    }
}

/// Flag values; `None` keeps the configured value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub n_list: Option<Vec<usize>>,
    pub omega: Option<f64>,
    pub lambda: Option<f64>,
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    pub points: Option<usize>,
    pub engine: Option<Engine>,
    pub shots: Option<u64>,
    pub depolarizing_p: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub tau: Option<f64>,
    pub eps_dco: Option<f64>,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config JSON: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn with_overrides(mut self, o: Overrides) -> Self {
        macro_rules! take {
            ($($field:ident),*) => {$( if let Some(v) = o.$field { self.$field = v; } )*};
        }
        take!(n_list, omega, lambda, t_min, points, engine, seed, tau, eps_dco);
        if o.t_max.is_some() {
            self.t_max = o.t_max;
        }
        if o.shots.is_some() {
            self.shots = o.shots;
        }
        if o.depolarizing_p.is_some() {
            self.depolarizing_p = o.depolarizing_p;
        }
        if o.out.is_some() {
            self.out = o.out;
        }
        self
    }

    pub fn t_max(&self) -> f64 {
        self.t_max.unwrap_or(4.0 * std::f64::consts::PI / (self.omega * self.lambda))
    }

    pub fn params(&self, n: usize) -> CliResult<ModelParams> {
        ModelParams::new(n, self.omega, self.lambda).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.n_list.is_empty() {
            return Err(CliError::Config("N list is empty".into()));
        }
        for &n in &self.n_list {
            self.params(n)?;
        }
        let t_max = self.t_max();
        if !(self.t_min.is_finite() && t_max.is_finite() && self.t_min < t_max) {
            return Err(CliError::Config(format!("need t_min < t_max, got [{}, {t_max}]", self.t_min)));
        }
        if self.t_min < 0.0 {
            return Err(CliError::Config("t_min must be non-negative".into()));
        }
        if self.points < 2 {
            return Err(CliError::Config("points must be at least 2".into()));
        }
        if self.shots == Some(0) {
            return Err(CliError::Config("shots must be positive".into()));
        }
        if let Some(p) = self.depolarizing_p {
            NoiseSpec::new(p).map_err(|e| CliError::Config(e.to_string()))?;
        }
        if !self.tau.is_finite() || !self.eps_dco.is_finite() {
            return Err(CliError::Config("thresholds must be finite".into()));
        }
        Ok(())
    }

    /// Uniform grid including both end points.
    pub fn grid(&self) -> Vec<f64> {
        let (a, b) = (self.t_min, self.t_max());
        let last = (self.points - 1) as f64;
        (0..self.points).map(|k| if k + 1 == self.points { b } else { a + (b - a) * k as f64 / last }).collect()
    }

    fn require_two_chargers(&self, command: &str) -> CliResult<ModelParams> {
        if self.n_list != [2] {
            return Err(CliError::Config(format!("{command} supports only N = 2, got {:?}", self.n_list)));
        }
        self.params(2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub t: f64,
    pub e: f64,
    pub w_ico: f64,
    pub p_ico: Option<f64>,
    pub w_dco: f64,
    pub p_dco: Option<f64>,
    pub p1: f64,
    pub passive_k1: bool,
    pub passive_dco: bool,
    pub max_engine_dev: Option<f64>,
}

fn numeric_row(params: &ModelParams, t: f64) -> SweepRow {
    let r = run_ico(params, t);
    let (ico, dco) = report(&r, params).expect("protocol states are valid densities");
    SweepRow {
        n: params.n(),
        t,
        e: ico.stored_energy,
        w_ico: ico.ergotropy,
        p_ico: ico.efficiency,
        w_dco: dco.ergotropy,
        p_dco: dco.efficiency,
        p1: r.p1(),
        passive_k1: ico.passive,
        passive_dco: dco.passive,
        max_engine_dev: None,
    }
}

fn analytic_row(params: &ModelParams, t: f64) -> SweepRow {
    let c = closed_form_report(params, t);
    SweepRow {
        n: params.n(),
        t,
        e: c.e,
        w_ico: c.w_ico,
        p_ico: c.p_ico,
        w_dco: c.w_dco,
        p_dco: c.p_dco,
        p1: c.p1,
        passive_k1: c.passive_k1,
        passive_dco: c.passive_dco,
        max_engine_dev: None,
    }
}

/// Largest componentwise gap; a definedness mismatch in `P` counts as infinite.
pub fn engine_deviation(a: &SweepRow, b: &SweepRow) -> f64 {
    let opt = |x: Option<f64>, y: Option<f64>| match (x, y) {
        (Some(x), Some(y)) => (x - y).abs(),
        (None, None) => 0.0,
        _ => f64::INFINITY,
    };
    [
        (a.e - b.e).abs(),
        (a.w_ico - b.w_ico).abs(),
        (a.w_dco - b.w_dco).abs(),
        (a.p1 - b.p1).abs(),
        opt(a.p_ico, b.p_ico),
        opt(a.p_dco, b.p_dco),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

fn evaluate(engine: Engine, params: &ModelParams, t: f64) -> SweepRow {
    match engine {
        Engine::Numeric => numeric_row(params, t),
        Engine::Analytic => analytic_row(params, t),
        Engine::Both => {
            let mut row = numeric_row(params, t);
            row.max_engine_dev = Some(engine_deviation(&row, &analytic_row(params, t)));
            row
        }
    }
}

/// One row per `(N, t)`, ordered by `N_list` then time.
pub fn sweep(cfg: &SweepConfig) -> CliResult<Vec<SweepRow>> {
    cfg.validate()?;
    let grid = cfg.grid();
    let params = cfg.n_list.iter().map(|&n| cfg.params(n)).collect::<CliResult<Vec<_>>>()?;
    let jobs: Vec<(usize, f64)> = (0..params.len()).flat_map(|i| grid.iter().map(move |&t| (i, t))).collect();
    Ok(jobs.into_par_iter().map(|(i, t)| evaluate(cfg.engine, &params[i], t)).collect())
}

/// Engine agreement and daemonic dominance over all rows.
pub fn check_rows(rows: &[SweepRow]) -> CliResult<()> {
    for r in rows {
        if let Some(dev) = r.max_engine_dev {
            if dev.is_nan() || dev > ENGINE_TOLERANCE {
                return Err(CliError::Invariant(format!(
                    "engines disagree by {dev:e} at N = {}, t = {}",
                    r.n, r.t
                )));
            }
        }
        if r.w_ico < r.w_dco - DOMINANCE_TOLERANCE {
            return Err(CliError::Invariant(format!("W_ico < W_dco at N = {}, t = {}", r.n, r.t)));
        }
    }
    Ok(())
}

fn cell(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_sweep_csv<W: Write>(writer: W, rows: &[SweepRow], with_dev: bool) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["N", "t", "E", "W_ico", "P_ico", "W_dco", "P_dco", "p1", "passive_k1", "passive_dco"];
    if with_dev {
        header.push("max_engine_dev");
    }
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.n.to_string(),
            r.t.to_string(),
            r.e.to_string(),
            r.w_ico.to_string(),
            cell(r.p_ico),
            r.w_dco.to_string(),
            cell(r.p_dco),
            r.p1.to_string(),
            r.passive_k1.to_string(),
            r.passive_dco.to_string(),
        ];
        if with_dev {
            rec.push(cell(r.max_engine_dev));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BurstInterval {
    pub t_a: f64,
    pub t_b: f64,
    pub max_p_ico: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NBursts {
    pub n: usize,
    pub intervals: Vec<BurstInterval>,
    pub total_duration: f64,
    /// Analytic end of the DCO zero-ergotropy window.
    pub t_star: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BurstReport {
    pub tau: f64,
    pub eps_dco: f64,
    pub per_n: Vec<NBursts>,
    /// `t*` strictly increasing with `N`.
    pub monotonicity: Verdict,
}

/// Maximal runs of grid points with `P_dco ≤ ε` and `P_ico ≥ τ`.
pub fn burst_intervals(rows: &[SweepRow], tau: f64, eps_dco: f64) -> Vec<BurstInterval> {
    let hit = |r: &SweepRow| matches!((r.p_ico, r.p_dco), (Some(pi), Some(pd)) if pi >= tau && pd <= eps_dco);
    let mut out = Vec::new();
    let mut current: Option<BurstInterval> = None;
    for r in rows {
        match (hit(r), current.as_mut()) {
            (true, Some(b)) => {
                b.t_b = r.t;
                b.max_p_ico = b.max_p_ico.max(r.p_ico.unwrap_or(0.0));
            }
            (true, None) => current = Some(BurstInterval { t_a: r.t, t_b: r.t, max_p_ico: r.p_ico.unwrap_or(0.0) }),
            (false, _) => out.extend(current.take()),
        }
    }
    out.extend(current);
    out
}

/// The DCO ergotropy vanishes on `|t − kT| ≤ t*` with period `T = Nπ/(ωλ)`;
/// the first of these windows is `[0, t*]`.
pub fn inside_dco_zero_window(params: &ModelParams, b: &BurstInterval, slack: f64) -> bool {
    let t_star = dco_zero_window(params);
    let period = params.n() as f64 * std::f64::consts::PI / (params.omega() * params.lambda());
    let k = ((b.t_a + b.t_b) / 2.0 / period).round();
    let (lo, hi) = (k * period - t_star - slack, k * period + t_star + slack);
    b.t_a >= lo && b.t_b <= hi
}

pub fn bursts(cfg: &SweepConfig) -> CliResult<BurstReport> {
    let rows = sweep(cfg)?;
    check_rows(&rows)?;
    let step = (cfg.t_max() - cfg.t_min) / (cfg.points - 1) as f64;
    let mut per_n = Vec::with_capacity(cfg.n_list.len());
    for (i, &n) in cfg.n_list.iter().enumerate() {
        let block = &rows[i * cfg.points..(i + 1) * cfg.points];
        let intervals = burst_intervals(block, cfg.tau, cfg.eps_dco);
        let params = cfg.params(n)?;
        let t_star = dco_zero_window(&params);
        if let Some(b) = intervals.iter().find(|b| !inside_dco_zero_window(&params, b, step)) {
            return Err(CliError::Invariant(format!(
                "burst [{}, {}] at N = {n} leaves the DCO zero windows (t* = {t_star})",
                b.t_a, b.t_b
            )));
        }
        let total_duration = intervals.iter().map(|b| b.t_b - b.t_a).sum();
        per_n.push(NBursts { n, intervals, total_duration, t_star });
    }
    let mut by_n: Vec<(usize, f64)> = per_n.iter().map(|b| (b.n, b.t_star)).collect();
    by_n.sort_by_key(|&(n, _)| n);
    let increasing = by_n.windows(2).all(|w| w[0].0 == w[1].0 || w[1].1 > w[0].1);
    Ok(BurstReport {
        tau: cfg.tau,
        eps_dco: cfg.eps_dco,
        per_n,
        monotonicity: if increasing { Verdict::Pass } else { Verdict::Fail },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub index: usize,
    pub t: f64,
    pub theta: f64,
    pub phi: f64,
    pub file: String,
}

pub fn qasm_file_name(index: usize) -> String {
    format!("ico_n2_t{index}.qasm")
}

/// Writes one QASM program per grid point plus `manifest.csv` into `dir`.
pub fn export_circuits(cfg: &SweepConfig, dir: &Path) -> CliResult<Vec<ManifestRow>> {
    cfg.validate()?;
    let params = cfg.require_two_chargers("export-circuits")?;
    fs::create_dir_all(dir)?;
    let rows: Vec<ManifestRow> = cfg
        .grid()
        .into_iter()
        .enumerate()
        .map(|(index, t)| {
            let (theta, phi) = angles_of_time(&params, t);
            ManifestRow { index, t, theta, phi, file: qasm_file_name(index) }
        })
        .collect();
    rows.par_iter().try_for_each(|r| fs::write(dir.join(&r.file), emit_qasm(&build_ico_circuit(r.theta, r.phi))))?;
    let mut w = csv::Writer::from_path(dir.join("manifest.csv"))?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseRow {
    pub t: f64,
    pub e: f64,
    pub p_ico: Option<f64>,
    pub e_hat: f64,
    pub e_se: f64,
    pub w_hat: f64,
    pub w_se: f64,
    pub p_hat: Option<f64>,
    pub p_se: Option<f64>,
    pub p_plus: f64,
    pub p_plus_hat: f64,
    pub p_plus_se: f64,
    /// `Ê > E`.
    pub overestimate: bool,
    pub record: ShotRecord,
}

/// Ideal closed-form figures against sampled noisy estimates. Time point `i`
/// uses seed `seed + i` (wrapping). Standard errors are evaluated at the noisy
/// model's outcome probabilities, so they stay positive when a sample is
/// degenerate.
pub fn noise_study(cfg: &SweepConfig) -> CliResult<Vec<NoiseRow>> {
    cfg.validate()?;
    let params = cfg.require_two_chargers("noise-study")?;
    let shots = cfg.shots.ok_or_else(|| CliError::Config("noise-study needs --shots".into()))?;
    let p = cfg.depolarizing_p.ok_or_else(|| CliError::Config("noise-study needs --depol-p".into()))?;
    let noise = NoiseSpec::new(p).map_err(|e| CliError::Config(e.to_string()))?;
    let grid = cfg.grid();
    grid.into_par_iter()
        .enumerate()
        .map(|(i, t)| {
            let ideal = closed_form_report(&params, t);
            let (theta, phi) = angles_of_time(&params, t);
            let seed = cfg.seed.wrapping_add(i as u64);
            let circuit = build_ico_circuit(theta, phi);
            let shot = sample(&circuit, noise, shots, seed).map_err(|e| CliError::Config(e.to_string()))?;
            let est = estimate(&shot).map_err(|e| CliError::Invariant(e.to_string()))?;
            let se = standard_errors(&outcome_probabilities(&simulate(&circuit, noise)), shots);
            Ok(NoiseRow {
                t,
                e: ideal.e,
                p_ico: ideal.p_ico,
                e_hat: est.report.stored_energy,
                e_se: se.stored_energy,
                w_hat: est.report.ergotropy,
                w_se: se.ergotropy,
                p_hat: est.report.efficiency,
                p_se: se.efficiency,
                p_plus: ideal.p1,
                p_plus_hat: est.p_plus,
                p_plus_se: se.p_plus,
                overestimate: est.report.stored_energy > ideal.e,
                record: ShotRecord::new(t, theta, phi, &shot),
            })
        })
        .collect()
}

pub fn write_noise_csv<W: Write>(writer: W, rows: &[NoiseRow]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "t", "E", "P_ico", "E_hat", "E_se", "W_hat", "W_se", "P_hat", "P_se", "p_plus", "p_plus_hat", "p_plus_se",
        "overestimate",
    ])?;
    for r in rows {
        w.write_record([
            r.t.to_string(),
            r.e.to_string(),
            cell(r.p_ico),
            r.e_hat.to_string(),
            r.e_se.to_string(),
            r.w_hat.to_string(),
            r.w_se.to_string(),
            cell(r.p_hat),
            cell(r.p_se),
            r.p_plus.to_string(),
            r.p_plus_hat.to_string(),
            r.p_plus_se.to_string(),
            r.overestimate.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_noise_shots<W: Write>(writer: W, rows: &[NoiseRow]) -> CliResult<()> {
    let records: Vec<ShotRecord> = rows.iter().map(|r| r.record).collect();
    write_shot_records(writer, &records).map_err(|e| CliError::Io(e.to_string()))
}
