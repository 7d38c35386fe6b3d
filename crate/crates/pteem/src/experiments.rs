//! Experiment drivers: independent runs on a worker pool, then files.
//!
//! Every run `r` draws from `RunSeed::new(seed, r)` only, so the output does
//! not depend on the number of workers. Everything except `timing.toml` is
//! byte-identical for a fixed configuration.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use pteem_core::engines::{move_budget, Algorithm, EesBudgetReading, MoveBudget};
use pteem_core::experiments::galaxy::{self, galaxy_velocities, parse_velocities, GalaxyModel, GalaxyRun, GalaxySummary};
use pteem_core::experiments::mixture2d::{self, GaussianMixture2D, MixtureRun, MixtureSummary, Mixture2dConfig};
use pteem_core::experiments::tfbs::{
    self, detected_sites, generate_benchmark, planted_allocation, score_detection, Allocation, DetectionScore,
    PlantedSite, TfbsModel, TfbsPriors, NUCLEOTIDES,
};
use pteem_core::ladders::{EnergyLadder, TemperatureLadder};
use pteem_core::rng::RunSeed;

use crate::config::{GalaxySetup, Resolved, RunSettings, TfbsSetup};
use crate::error::{CliError, Result};
use crate::fasta;
use crate::format::{read_text, real, write_text, Table};
use crate::output::write_trace_files;

/// Runs `f(0..runs)` on a pool of `workers` threads, results in run order.
pub fn run_all<T, F>(runs: usize, workers: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w);
    }
    let pool = builder.build().map_err(|e| CliError::Config(format!("cannot start {workers:?} workers: {e}")))?;
    pool.install(|| (0..runs).into_par_iter().map(&f).collect())
}

fn run_dir(base: &Path, r: usize) -> PathBuf {
    base.join(format!("run_{:03}", r + 1))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MoveFigures {
    pub local_moves: f64,
    pub global_moves: f64,
}

impl From<MoveBudget> for MoveFigures {
    fn from(b: MoveBudget) -> Self {
        Self { local_moves: b.local_moves, global_moves: b.global_moves }
    }
}

/// Move accounting echoed in the manifest. For EES the run itself follows
/// `engine`; both readings of the closed-form count are listed with `M` equal
/// to the kept iterations.
#[derive(Debug, Clone, Serialize)]
pub struct BudgetEcho {
    pub engine: MoveFigures,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub formula_reading: Option<MoveFigures>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub after_rings_reading: Option<MoveFigures>,
}

pub struct Schedule {
    pub algorithm: Algorithm,
    pub chains: usize,
    pub burn_in: usize,
    pub ring_period: usize,
    pub kept: usize,
    pub jump_probability: f64,
}

pub fn budget(s: &Schedule) -> Result<BudgetEcho> {
    let at = |reading| {
        move_budget(s.algorithm, s.burn_in, s.ring_period, s.kept, s.chains, s.jump_probability, reading).map(MoveFigures::from)
    };
    let engine = at(EesBudgetReading::AfterRings)?;
    if s.algorithm != Algorithm::Ees {
        return Ok(BudgetEcho { engine, formula_reading: None, after_rings_reading: None });
    }
    let formula = match at(EesBudgetReading::Printed) {
        Ok(f) => Some(f),
        // the formula needs M >= R
        Err(_) => None,
    };
    Ok(BudgetEcho { engine, formula_reading: formula, after_rings_reading: Some(engine) })
}

#[derive(Debug, Clone, Serialize)]
struct LadderEcho {
    chains: usize,
    temperatures: Vec<f64>,
    levels: Vec<f64>,
    burnin: usize,
    iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    ring_period: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    jump_probability: Option<f64>,
}

impl LadderEcho {
    fn new(s: &Schedule, t: &TemperatureLadder, e: &EnergyLadder) -> Self {
        let ees = s.algorithm == Algorithm::Ees;
        Self {
            chains: s.chains,
            temperatures: t.as_slice().to_vec(),
            levels: e.levels().to_vec(),
            burnin: s.burn_in,
            iterations: s.kept,
            ring_period: ees.then_some(s.ring_period),
            jump_probability: ees.then_some(s.jump_probability),
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a, X: Serialize> {
    experiment: &'a str,
    algorithm: &'a str,
    seed: u64,
    runs: usize,
    version: &'a str,
    ladder: LadderEcho,
    settings: X,
    budget: BudgetEcho,
}

#[derive(Serialize)]
struct Timing {
    workers: usize,
    wall_seconds: f64,
}

fn write_manifest<X: Serialize>(
    dir: &Path,
    experiment: &str,
    settings: &RunSettings,
    schedule: &Schedule,
    ladders: (&TemperatureLadder, &EnergyLadder),
    extra: X,
) -> Result<()> {
    let m = Manifest {
        experiment,
        algorithm: settings.algorithm.as_str(),
        seed: settings.seed,
        runs: settings.runs,
        version: env!("CARGO_PKG_VERSION"),
        ladder: LadderEcho::new(schedule, ladders.0, ladders.1),
        settings: extra,
        budget: budget(schedule)?,
    };
    let text = toml::to_string(&m).map_err(|e| CliError::parse(dir.join("manifest.toml"), e.to_string()))?;
    write_text(&dir.join("manifest.toml"), &text)
}

fn write_timing(dir: &Path, settings: &RunSettings, start: Instant) -> Result<()> {
    let t = Timing {
        workers: settings.workers.unwrap_or_else(rayon::current_num_threads),
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    let text = toml::to_string(&t).map_err(|e| CliError::parse(dir.join("timing.toml"), e.to_string()))?;
    write_text(&dir.join("timing.toml"), &text)
}

fn aggregate(path: &Path, rows: &[(&str, f64)]) -> Result<()> {
    let mut t = Table::create(path, &["statistic", "value"])?;
    for (k, v) in rows {
        t.row([k.to_string(), real(*v)])?;
    }
    t.finish()
}

// ---------------------------------------------------------------- mixture

#[derive(Serialize)]
struct MixtureEcho {
    variant: &'static str,
    step_base: f64,
}

pub struct MixtureOutcome {
    pub dir: PathBuf,
    pub runs: Vec<MixtureRun>,
    pub summary: MixtureSummary,
}

fn mixture_schedule(c: &Mixture2dConfig) -> Schedule {
    Schedule {
        algorithm: c.algorithm,
        chains: c.chains(),
        burn_in: c.length.burn_in,
        ring_period: c.ring_period,
        kept: c.length.kept,
        jump_probability: c.jump_probability,
    }
}

/// Chains drawn in the scatter plots: 1, 7, 14 and 20 for the tempering
/// samplers, every chain for EES.
fn plot_chains(c: &Mixture2dConfig) -> Vec<usize> {
    match c.algorithm {
        Algorithm::Ees => (1..c.chains()).collect(),
        _ => [6, 13, 19].into_iter().filter(|&i| i < c.chains()).collect(),
    }
}

pub fn mixture2d(r: &Resolved<Mixture2dConfig>) -> Result<MixtureOutcome> {
    let start = Instant::now();
    let s = &r.settings;
    let dir = s.out.join("mixture2d");
    let mut cfg = r.experiment.clone();
    cfg.watch = plot_chains(&cfg);
    let model = GaussianMixture2D::variant(cfg.variant);
    let runs = run_all(s.runs, s.workers, |i| {
        let run = mixture2d::run_mixture2d(&cfg, RunSeed::new(s.seed, i as u64))?;
        let rd = run_dir(&dir, i);
        let mut t = Table::create(&rd.join("samples.csv"), &["iteration", "x1", "x2", "mode", "energy"])?;
        for (k, (x, h)) in run.trace.samples.iter().zip(&run.trace.sample_energies).enumerate() {
            let (m, captured) = model.assign_mode(x);
            let mode = if captured { m + 1 } else { 0 };
            t.row([k.to_string(), real(x[0]), real(x[1]), mode.to_string(), real(*h)])?;
        }
        t.finish()?;
        write_trace_files(&rd, &run.trace, &cfg.energy)?;
        Ok(run)
    })?;
    let summary = mixture2d::summarize(&runs);

    let mut t = Table::create(
        &dir.join("summary.csv"),
        &["run", "visited_modes", "mean_x1", "mean_x2", "mean_x1_sq", "mean_x2_sq", "local_acceptance", "global_acceptance", "skipped"],
    )?;
    for (i, run) in runs.iter().enumerate() {
        let m = run.moments;
        t.row([
            (i + 1).to_string(),
            run.stats.visited_modes().to_string(),
            real(m[0]),
            real(m[1]),
            real(m[2]),
            real(m[3]),
            real(run.trace.local_acceptance()),
            real(run.trace.global_acceptance()),
            run.trace.skipped.to_string(),
        ])?;
    }
    t.finish()?;

    let exact = model.exact_moments();
    let mut stats = vec![("mean_visited_modes", summary.mean_visited)];
    let names = ["x1", "x2", "x1_sq", "x2_sq"];
    let mean_names = ["mean_x1", "mean_x2", "mean_x1_sq", "mean_x2_sq"];
    let sd_names = ["sd_x1", "sd_x2", "sd_x1_sq", "sd_x2_sq"];
    let exact_names = ["exact_x1", "exact_x2", "exact_x1_sq", "exact_x2_sq"];
    for j in 0..names.len() {
        stats.push((mean_names[j], summary.moment_mean[j]));
        stats.push((sd_names[j], summary.moment_sd[j]));
        stats.push((exact_names[j], exact[j]));
    }
    stats.push(("local_acceptance", summary.local_acceptance));
    stats.push(("global_acceptance", summary.global_acceptance));
    aggregate(&dir.join("aggregate.csv"), &stats)?;

    let mut t = Table::create(&dir.join("modes.csv"), &["mode", "mean_x1", "mean_x2", "sigma", "weight", "error_median", "error_max"])?;
    for i in 0..model.components() {
        t.row([
            (i + 1).to_string(),
            real(model.means()[i][0]),
            real(model.means()[i][1]),
            real(model.sigmas()[i]),
            real(model.weights()[i]),
            real(summary.err_median[i]),
            real(summary.err_max[i]),
        ])?;
    }
    t.finish()?;

    if let Some(first) = runs.first() {
        let mut t = Table::create(&dir.join("plot_data.csv"), &["chain", "iteration", "x1", "x2", "ring"])?;
        let mut chains = vec![0];
        chains.extend(cfg.watch.iter().copied());
        for c in chains {
            if let Some(samples) = first.trace.chain_samples(c) {
                for (k, x) in samples.iter().enumerate() {
                    let ring = cfg.energy.ring_index(-model.log_density_at(x));
                    t.row([(c + 1).to_string(), k.to_string(), real(x[0]), real(x[1]), (ring + 1).to_string()])?;
                }
            }
        }
        t.finish()?;
    }

    let schedule = mixture_schedule(&cfg);
    let echo = MixtureEcho { variant: cfg.variant.as_str(), step_base: cfg.step_base };
    write_manifest(&dir, "mixture2d", s, &schedule, (&cfg.temperatures, &cfg.energy), echo)?;
    write_timing(&dir, s, start)?;
    Ok(MixtureOutcome { dir, runs, summary })
}

// ----------------------------------------------------------------- galaxy

#[derive(Serialize)]
struct GalaxyEcho {
    k: usize,
    data: String,
    observations: usize,
    xi: f64,
    kappa: f64,
    alpha: f64,
    g: f64,
    h: f64,
    delta: f64,
    range: f64,
}

pub struct GalaxyOutcome {
    pub dir: PathBuf,
    pub runs: Vec<GalaxyRun>,
    pub summary: GalaxySummary,
}

pub fn load_velocities(path: &Option<PathBuf>) -> Result<Vec<f64>> {
    match path {
        None => Ok(galaxy_velocities()),
        Some(p) => parse_velocities(&read_text(p)?).map_err(|e| CliError::parse(p, e.to_string())),
    }
}

pub fn galaxy(r: &Resolved<GalaxySetup>) -> Result<GalaxyOutcome> {
    let start = Instant::now();
    let s = &r.settings;
    let dir = s.out.join("galaxy");
    let cfg = &r.experiment.config;
    let data = load_velocities(&r.experiment.data)?;
    let n = data.len();
    let model = GalaxyModel::new(data, cfg.hyper.clone())?;
    let k = model.k();
    let runs = run_all(s.runs, s.workers, |i| {
        let run = galaxy::run_galaxy(&model, cfg, RunSeed::new(s.seed, i as u64))?;
        let rd = run_dir(&dir, i);
        let mut header = vec!["iteration".to_string(), "energy".into(), "mode".into()];
        for name in ["mu", "sigma2", "w"] {
            header.extend((1..=k).map(|j| format!("{name}_{j}")));
        }
        header.push("beta".into());
        let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
        let mut t = Table::create(&rd.join("samples.csv"), &header_refs)?;
        for (it, x) in run.trace.samples.iter().enumerate() {
            let mut rec = vec![it.to_string(), real(run.trace.sample_energies[it]), run.modes[it].to_string()];
            rec.extend(x.mu.iter().map(|&v| real(v)));
            rec.extend(x.prec.iter().map(|&v| real(1.0 / v)));
            rec.extend(x.w.iter().map(|&v| real(v)));
            rec.push(real(x.beta));
            t.row(rec)?;
        }
        t.finish()?;
        let mut t = Table::create(&rd.join("modes.csv"), &["mode", "count"])?;
        for (m, &c) in run.mode_counts.iter().enumerate().filter(|(_, &c)| c > 0) {
            t.row([(m + 1).to_string(), c.to_string()])?;
        }
        t.finish()?;
        write_trace_files(&rd, &run.trace, &cfg.energy)?;
        Ok(run)
    })?;
    let summary = galaxy::summarize(&runs);

    let mut t = Table::create(
        &dir.join("summary.csv"),
        &["run", "visited_modes", "frequency_error_mean", "local_acceptance", "global_acceptance"],
    )?;
    for (i, run) in runs.iter().enumerate() {
        let errs = run.frequency_errors();
        let mean_err = errs.iter().sum::<f64>() / errs.len().max(1) as f64;
        t.row([
            (i + 1).to_string(),
            run.visited_modes().to_string(),
            real(mean_err),
            real(run.trace.local_acceptance()),
            real(run.trace.global_acceptance()),
        ])?;
    }
    t.finish()?;
    aggregate(
        &dir.join("aggregate.csv"),
        &[
            ("mean_visited_modes", summary.mean_visited),
            ("sd_visited_modes", summary.sd_visited),
            ("min_visited_modes", summary.min_visited as f64),
            ("max_visited_modes", summary.max_visited as f64),
            ("frequency_error_mean", summary.err_mean),
            ("frequency_error_median", summary.err_median),
            ("local_acceptance", summary.local_acceptance),
            ("global_acceptance", summary.global_acceptance),
        ],
    )?;

    let schedule = Schedule {
        algorithm: cfg.algorithm,
        chains: cfg.chains(),
        burn_in: cfg.length.burn_in,
        ring_period: 0,
        kept: cfg.length.kept,
        jump_probability: 0.0,
    };
    let h = &cfg.hyper;
    let echo = GalaxyEcho {
        k,
        data: r.experiment.data.as_ref().map_or_else(|| "bundled".to_string(), |p| p.display().to_string()),
        observations: n,
        xi: h.xi,
        kappa: h.kappa,
        alpha: h.alpha,
        g: h.g,
        h: h.h,
        delta: h.delta,
        range: h.range,
    };
    write_manifest(&dir, "galaxy", s, &schedule, (&cfg.temperatures, &cfg.energy), echo)?;
    write_timing(&dir, s, start)?;
    Ok(GalaxyOutcome { dir, runs, summary })
}

// ------------------------------------------------------------------- tfbs

#[derive(Serialize)]
struct TfbsEcho {
    data: String,
    width: usize,
    sequences: usize,
    background_length: usize,
    sites_per_sequence: usize,
    alpha: f64,
    threshold: f64,
    prior_a: f64,
    prior_b: f64,
}

pub struct TfbsRunOutcome {
    pub run: tfbs::TfbsRun,
    pub calls: usize,
    /// `None` for user data without planted sites.
    pub score: Option<DetectionScore>,
}

pub struct TfbsOutcome {
    pub dir: PathBuf,
    pub runs: Vec<TfbsRunOutcome>,
}

fn write_tfbs_run(dir: &Path, model: &TfbsModel, run: &tfbs::TfbsRun, truth: Option<&[PlantedSite]>, threshold: f64) -> Result<(usize, Option<DetectionScore>)> {
    let mut t = Table::create(&dir.join("posterior.csv"), &["position", "sequence", "offset", "probability"])?;
    for (i, &p) in run.probabilities.iter().enumerate() {
        let (m, o) = model.locate(i);
        t.row([(i + 1).to_string(), (m + 1).to_string(), (o + 1).to_string(), real(p)])?;
    }
    t.finish()?;

    let calls = detected_sites(model, &run.probabilities, threshold);
    let mut t = Table::create(&dir.join("sites.csv"), &["position", "probability", "sequence", "offset"])?;
    for c in &calls {
        t.row([(c.position + 1).to_string(), real(c.probability), (c.sequence + 1).to_string(), (c.offset + 1).to_string()])?;
    }
    t.finish()?;

    let called = Allocation::from_positions(model.lstar(), &calls.iter().map(|c| c.position).collect::<Vec<_>>());
    let counts = model.count_matrix(&called);
    let header: Vec<String> = std::iter::once("position".to_string()).chain(NUCLEOTIDES.iter().map(|&b| (b as char).to_string())).collect();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut t = Table::create(&dir.join("counts.csv"), &header_refs)?;
    for (k, row) in counts.counts.iter().enumerate() {
        t.row(std::iter::once((k + 1).to_string()).chain(row.iter().map(u32::to_string)))?;
    }
    t.finish()?;

    let mut t = Table::create(&dir.join("samples.csv"), &["iteration", "energy", "sites", "positions"])?;
    for (k, a) in run.trace.samples.iter().enumerate() {
        let pos: Vec<String> = a.positions().iter().map(|p| (p + 1).to_string()).collect();
        t.row([k.to_string(), real(run.trace.sample_energies[k]), pos.len().to_string(), pos.join(" ")])?;
    }
    t.finish()?;

    let score = truth.map(|truth| {
        score_detection(&calls, truth, model.width())
    });
    if let Some(truth) = truth {
        let mut t = Table::create(&dir.join("planted.csv"), &["position", "sequence", "offset"])?;
        for p in truth {
            let pos = model.position_of(p.sequence, p.offset).map_or(0, |x| x + 1);
            t.row([pos.to_string(), (p.sequence + 1).to_string(), (p.offset + 1).to_string()])?;
        }
        t.finish()?;
    }
    Ok((calls.len(), score))
}

pub fn tfbs(r: &Resolved<TfbsSetup>) -> Result<TfbsOutcome> {
    let start = Instant::now();
    let s = &r.settings;
    let dir = s.out.join("tfbs");
    let cfg = &r.experiment.config;
    let shared = match &r.experiment.input {
        Some(path) => {
            let set = fasta::parse(&read_text(path)?, r.experiment.width).map_err(|e| CliError::parse(path, e))?;
            let bg = tfbs::Background::symmetric(cfg.alpha)?;
            Some(TfbsModel::new(set, bg, TfbsPriors::defaults(r.experiment.width))?)
        }
        None => None,
    };
    let runs = run_all(s.runs, s.workers, |i| {
        let seed = RunSeed::new(s.seed, i as u64);
        let rd = run_dir(&dir, i);
        let (model, truth) = match &shared {
            Some(m) => (m.clone(), None),
            None => {
                let (m, t) = generate_benchmark(cfg, seed)?;
                write_text(&rd.join("data.fa"), &fasta::write(m.sequences()))?;
                (m, Some(t))
            }
        };
        let run = tfbs::run_tfbs(&model, cfg, seed)?;
        let (calls, score) = write_tfbs_run(&rd, &model, &run, truth.as_deref(), cfg.threshold)?;
        if let Some(t) = &truth {
            let planted = planted_allocation(&model, t);
            write_text(&rd.join("planted_energy.txt"), &format!("{}\n", real(-model.collapsed_log_posterior(&planted)?)))?;
        }
        write_trace_files(&rd, &run.trace, &cfg.energy)?;
        Ok(TfbsRunOutcome { run, calls, score })
    })?;

    let mut t = Table::create(
        &dir.join("summary.csv"),
        &["run", "calls", "detected", "exact", "planted", "local_acceptance", "global_acceptance", "skipped"],
    )?;
    for (i, o) in runs.iter().enumerate() {
        let (d, e, p) = o.score.map_or((String::new(), String::new(), String::new()), |sc| {
            (sc.detected.to_string(), sc.exact.to_string(), sc.planted.to_string())
        });
        t.row([
            (i + 1).to_string(),
            o.calls.to_string(),
            d,
            e,
            p,
            real(o.run.trace.local_acceptance()),
            real(o.run.trace.global_acceptance()),
            o.run.trace.skipped.to_string(),
        ])?;
    }
    t.finish()?;

    if cfg.algorithm == Algorithm::Ees {
        let mut t = Table::create(&dir.join("refit_acceptance.csv"), &["run", "chain", "acceptance"])?;
        for (i, o) in runs.iter().enumerate() {
            for (c, a) in o.run.refit_acceptance.iter().enumerate().skip(1) {
                t.row([(i + 1).to_string(), (c + 1).to_string(), real(*a)])?;
            }
        }
        t.finish()?;
    }

    let schedule = Schedule {
        algorithm: cfg.algorithm,
        chains: cfg.chains(),
        burn_in: cfg.length.burn_in,
        ring_period: cfg.ring_period,
        kept: cfg.length.kept,
        jump_probability: cfg.jump_probability,
    };
    let priors = TfbsPriors::defaults(r.experiment.width);
    let echo = TfbsEcho {
        data: r.experiment.input.as_ref().map_or_else(|| "generated".to_string(), |p| p.display().to_string()),
        width: r.experiment.width,
        sequences: cfg.sequences,
        background_length: cfg.background_length,
        sites_per_sequence: cfg.sites_per_sequence,
        alpha: cfg.alpha,
        threshold: cfg.threshold,
        prior_a: priors.a,
        prior_b: priors.b,
    };
    write_manifest(&dir, "tfbs", s, &schedule, (&cfg.temperatures, &cfg.energy), echo)?;
    write_timing(&dir, s, start)?;
    Ok(TfbsOutcome { dir, runs })
}
