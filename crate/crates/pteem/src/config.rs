//! Run configuration: an optional TOML file overlaid by command-line flags.
//!
//! ```toml
//! [run]
//! algorithm = "pteem"
//! runs = 20
//! iterations = 2500   # kept iterations of the target chain
//! burnin = 2500
//! seed = 42
//! out = "out"
//! workers = 4
//!
//! [mixture2d]
//! variant = "unequal"
//! ```
//!
//! Flags win over the file; every conflict is reported as a note. The
//! `PTEEM_OUT_DIR` environment variable overrides both for the output
//! directory.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use pteem_core::engines::{Algorithm, RunLength};
use pteem_core::experiments::galaxy::{GalaxyConfig, GalaxyHyper};
use pteem_core::experiments::mixture2d::{Mixture2dConfig, Variant};
use pteem_core::experiments::tfbs::TfbsConfig;
use pteem_core::ladders::{EnergyLadder, TemperatureLadder};

use crate::error::{CliError, Result};
use crate::format::read_text;

pub const OUT_DIR_ENV: &str = "PTEEM_OUT_DIR";
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub run: RunSection,
    pub mixture2d: MixtureSection,
    pub galaxy: GalaxySection,
    pub tfbs: TfbsSection,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub algorithm: Option<String>,
    pub runs: Option<usize>,
    pub iterations: Option<usize>,
    pub burnin: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
}

/// Ladder overrides shared by the experiment sections.
#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixtureSection {
    pub variant: Option<String>,
    pub temperatures: Option<Vec<f64>>,
    pub levels: Option<Vec<f64>>,
    pub ring_period: Option<usize>,
    pub jump_probability: Option<f64>,
    pub step_base: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct GalaxySection {
    pub k: Option<usize>,
    pub data: Option<PathBuf>,
    pub range: Option<f64>,
    pub temperatures: Option<Vec<f64>>,
    pub levels: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct TfbsSection {
    pub width: Option<usize>,
    pub input: Option<PathBuf>,
    pub generate: Option<bool>,
    pub sequences: Option<usize>,
    pub background_length: Option<usize>,
    pub sites_per_sequence: Option<usize>,
    pub alpha: Option<f64>,
    pub threshold: Option<f64>,
    pub temperatures: Option<Vec<f64>>,
    pub levels: Option<Vec<f64>>,
    pub ring_period: Option<usize>,
    pub jump_probability: Option<f64>,
}

pub fn load_file(path: &Path) -> Result<FileConfig> {
    let text = read_text(path)?;
    parse_file(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn parse_file(text: &str) -> std::result::Result<FileConfig, String> {
    toml::from_str(text).map_err(|e| e.to_string())
}

/// Flags shared by the experiment subcommands.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonFlags {
    /// TOML configuration file; flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// pt, ees or pteem
    #[arg(long)]
    pub algorithm: Option<String>,
    /// Number of independent runs
    #[arg(long)]
    pub runs: Option<usize>,
    /// Kept iterations of the target chain
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Burn-in iterations
    #[arg(long)]
    pub burnin: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for independent runs (default: all cores)
    #[arg(long)]
    pub workers: Option<usize>,
}

/// Settings common to every experiment after merging.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub algorithm: Algorithm,
    pub runs: usize,
    pub iterations: Option<usize>,
    pub burnin: Option<usize>,
    pub seed: u64,
    pub out: PathBuf,
    pub workers: Option<usize>,
}

/// Settings plus the precedence notes produced while merging.
#[derive(Debug, Clone)]
pub struct Resolved<T> {
    pub settings: RunSettings,
    pub experiment: T,
    pub notes: Vec<String>,
}

fn pick<T: PartialEq + std::fmt::Debug + Clone>(
    name: &str,
    flag: &Option<T>,
    file: &Option<T>,
    notes: &mut Vec<String>,
) -> Option<T> {
    match (flag, file) {
        (Some(f), Some(c)) if f != c => {
            notes.push(format!("--{name} {f:?} overrides the config value {c:?}"));
            Some(f.clone())
        }
        (Some(f), _) => Some(f.clone()),
        (None, c) => c.clone(),
    }
}

fn positive(name: &str, v: Option<usize>) -> Result<Option<usize>> {
    match v {
        Some(0) => Err(CliError::Config(format!("{name} must be positive"))),
        v => Ok(v),
    }
}

pub fn resolve_common(
    flags: &CommonFlags,
    file: &RunSection,
    default_algorithm: Algorithm,
    default_runs: usize,
    notes: &mut Vec<String>,
) -> Result<RunSettings> {
    let algorithm = match pick("algorithm", &flags.algorithm, &file.algorithm, notes) {
        Some(s) => Algorithm::parse(&s)?,
        None => default_algorithm,
    };
    let runs = positive("runs", pick("runs", &flags.runs, &file.runs, notes))?.unwrap_or(default_runs);
    let iterations = positive("iterations", pick("iterations", &flags.iterations, &file.iterations, notes))?;
    let burnin = positive("burnin", pick("burnin", &flags.burnin, &file.burnin, notes))?;
    let workers = positive("workers", pick("workers", &flags.workers, &file.workers, notes))?;
    let seed = pick("seed", &flags.seed, &file.seed, notes).unwrap_or(DEFAULT_SEED);
    let mut out = pick("out", &flags.out, &file.out, notes).unwrap_or_else(|| PathBuf::from("out"));
    if let Some(dir) = std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()) {
        let dir = PathBuf::from(dir);
        if dir != out {
            notes.push(format!("{OUT_DIR_ENV} overrides the output directory {}", out.display()));
        }
        out = dir;
    }
    Ok(RunSettings { algorithm, runs, iterations, burnin, seed, out, workers })
}

fn apply_length(length: &mut RunLength, s: &RunSettings) {
    if let Some(b) = s.burnin {
        length.burn_in = b;
    }
    if let Some(m) = s.iterations {
        length.kept = m;
    }
}

fn ladders(
    temperatures: &Option<Vec<f64>>,
    levels: &Option<Vec<f64>>,
    t: &mut TemperatureLadder,
    e: &mut EnergyLadder,
) -> Result<()> {
    if let Some(v) = temperatures {
        *t = TemperatureLadder::new(v.clone())?;
    }
    if let Some(v) = levels {
        *e = EnergyLadder::new(v.clone())?;
    }
    Ok(())
}

fn probability(name: &str, p: Option<f64>, into: &mut f64) -> Result<()> {
    if let Some(p) = p {
        if !(p > 0.0 && p < 1.0) {
            return Err(CliError::Config(format!("{name} must lie in (0, 1), got {p}")));
        }
        *into = p;
    }
    Ok(())
}

fn file_or_default(path: &Option<PathBuf>) -> Result<FileConfig> {
    match path {
        Some(p) => load_file(p),
        None => Ok(FileConfig::default()),
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct MixtureFlags {
    #[command(flatten)]
    pub common: CommonFlags,
    /// equal or unequal component variances
    #[arg(long)]
    pub variant: Option<String>,
}

pub fn resolve_mixture(flags: &MixtureFlags) -> Result<Resolved<Mixture2dConfig>> {
    let file = file_or_default(&flags.common.config)?;
    let mut notes = Vec::new();
    let settings = resolve_common(&flags.common, &file.run, Algorithm::Pteem, 20, &mut notes)?;
    let m = &file.mixture2d;
    let variant = match pick("variant", &flags.variant, &m.variant, &mut notes) {
        Some(v) => Variant::parse(&v)?,
        None => Variant::Equal,
    };
    let mut cfg = Mixture2dConfig::defaults(settings.algorithm, variant);
    apply_length(&mut cfg.length, &settings);
    ladders(&m.temperatures, &m.levels, &mut cfg.temperatures, &mut cfg.energy)?;
    if let Some(r) = positive("ring_period", m.ring_period)? {
        cfg.ring_period = r;
    }
    probability("jump_probability", m.jump_probability, &mut cfg.jump_probability)?;
    if let Some(s) = m.step_base {
        if !(s > 0.0 && s.is_finite()) {
            return Err(CliError::Config(format!("step_base must be positive, got {s}")));
        }
        cfg.step_base = s;
    }
    Ok(Resolved { settings, experiment: cfg, notes })
}

#[derive(Debug, Clone, Default, Args)]
pub struct GalaxyFlags {
    #[command(flatten)]
    pub common: CommonFlags,
    /// Number of mixture components
    #[arg(long)]
    pub k: Option<usize>,
    /// Data file, one velocity per line (default: the bundled 82 galaxies)
    #[arg(long)]
    pub data: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct GalaxySetup {
    pub config: GalaxyConfig,
    pub data: Option<PathBuf>,
}

pub fn resolve_galaxy(flags: &GalaxyFlags) -> Result<Resolved<GalaxySetup>> {
    let file = file_or_default(&flags.common.config)?;
    let mut notes = Vec::new();
    let settings = resolve_common(&flags.common, &file.run, Algorithm::Pteem, 10, &mut notes)?;
    if settings.algorithm == Algorithm::Ees {
        return Err(CliError::Config("the galaxy experiment supports pt and pteem only".into()));
    }
    let g = &file.galaxy;
    let mut cfg = GalaxyConfig::defaults(settings.algorithm);
    apply_length(&mut cfg.length, &settings);
    let k = positive("k", pick("k", &flags.k, &g.k, &mut notes))?.unwrap_or(6);
    cfg.hyper = match g.range {
        Some(r) => GalaxyHyper::with_range(k, r),
        None => GalaxyHyper::defaults(k),
    };
    cfg.hyper.validate()?;
    ladders(&g.temperatures, &g.levels, &mut cfg.temperatures, &mut cfg.energy)?;
    let data = pick("data", &flags.data, &g.data, &mut notes);
    Ok(Resolved { settings, experiment: GalaxySetup { config: cfg, data }, notes })
}

#[derive(Debug, Clone, Default, Args)]
pub struct TfbsFlags {
    #[command(flatten)]
    pub common: CommonFlags,
    /// Generate a fresh benchmark data set for every run (the default)
    #[arg(long, conflicts_with = "input")]
    pub generate: bool,
    /// FASTA-like sequence file (`>name` header lines, sequence lines)
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Motif width
    #[arg(long)]
    pub width: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct TfbsSetup {
    pub config: TfbsConfig,
    /// `None`: generate data per run.
    pub input: Option<PathBuf>,
    pub width: usize,
}

pub fn resolve_tfbs(flags: &TfbsFlags) -> Result<Resolved<TfbsSetup>> {
    let file = file_or_default(&flags.common.config)?;
    let mut notes = Vec::new();
    let settings = resolve_common(&flags.common, &file.run, Algorithm::Pteem, 3, &mut notes)?;
    if settings.algorithm == Algorithm::Pt {
        return Err(CliError::Config("the tfbs experiment supports pteem and ees only".into()));
    }
    let s = &file.tfbs;
    let mut cfg = TfbsConfig::defaults(settings.algorithm);
    apply_length(&mut cfg.length, &settings);
    ladders(&s.temperatures, &s.levels, &mut cfg.temperatures, &mut cfg.energy)?;
    if let Some(v) = positive("sequences", s.sequences)? {
        cfg.sequences = v;
    }
    if let Some(v) = s.background_length {
        cfg.background_length = v;
    }
    if let Some(v) = s.sites_per_sequence {
        cfg.sites_per_sequence = v;
    }
    if let Some(v) = positive("ring_period", s.ring_period)? {
        cfg.ring_period = v;
    }
    probability("jump_probability", s.jump_probability, &mut cfg.jump_probability)?;
    if let Some(a) = s.alpha {
        if !(a > 0.0 && a < 0.25) {
            return Err(CliError::Config(format!("alpha must lie in (0, 0.25), got {a}")));
        }
        cfg.alpha = a;
    }
    if let Some(t) = s.threshold {
        if !(0.0..1.0).contains(&t) {
            return Err(CliError::Config(format!("threshold must lie in [0, 1), got {t}")));
        }
        cfg.threshold = t;
    }
    let width = positive("width", pick("width", &flags.width, &s.width, &mut notes))?.unwrap_or(12);
    let generate = flags.generate || s.generate.unwrap_or(false);
    let input = if generate && flags.input.is_none() { None } else { pick("input", &flags.input, &s.input, &mut notes) };
    if input.is_none() && width != 12 {
        return Err(CliError::Config("generated data uses the 12-position benchmark motif; --width needs --input".into()));
    }
    Ok(Resolved { settings, experiment: TfbsSetup { config: cfg, input, width }, notes })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_benchmark_defaults() {
        let flags = MixtureFlags { common: CommonFlags { algorithm: Some("pteem".into()), ..Default::default() }, variant: None };
        let r = resolve_mixture(&flags).unwrap();
        let c = &r.experiment;
        assert_eq!(c.chains(), 20);
        assert_eq!(c.energy.levels().len(), 5);
        assert_eq!(c.temperatures.get(0), 1.0);
        assert!((c.temperatures.get(19) - 60.0).abs() < 1e-9);
        let ratio = c.temperatures.get(1) / c.temperatures.get(0);
        assert!((c.temperatures.get(10) / c.temperatures.get(9) - ratio).abs() < 1e-9);
        assert_eq!(r.settings.runs, 20);
        assert_eq!(r.settings.seed, DEFAULT_SEED);
    }

    #[test]
    fn zero_burnin_is_rejected() {
        let flags = MixtureFlags { common: CommonFlags { burnin: Some(0), ..Default::default() }, variant: None };
        let err = resolve_mixture(&flags).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("burnin"));
    }

    #[test]
    fn flag_seed_wins_and_is_noted() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "[run]\nseed = 3\nruns = 2\n").unwrap();
        let flags = MixtureFlags {
            common: CommonFlags { config: Some(path), seed: Some(7), ..Default::default() },
            variant: None,
        };
        let r = resolve_mixture(&flags).unwrap();
        assert_eq!(r.settings.seed, 7);
        assert_eq!(r.settings.runs, 2);
        assert!(r.notes.iter().any(|n| n.contains("--seed 7") && n.contains('3')));
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = parse_file("[run]\nseed = 1\n\n[mixture2d]\nvarient = \"equal\"\n").unwrap_err();
        assert!(err.contains("varient"), "{err}");
        assert!(err.contains("line 5"), "{err}");
    }

    #[test]
    fn out_of_range_values() {
        assert!(parse_file("[run]\nruns = -1\n").is_err());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "[mixture2d]\njump_probability = 1.5\n").unwrap();
        let flags = MixtureFlags { common: CommonFlags { config: Some(path), ..Default::default() }, variant: None };
        assert_eq!(resolve_mixture(&flags).unwrap_err().exit_code(), 2);
        let bad = MixtureFlags { common: CommonFlags { algorithm: Some("gibbs".into()), ..Default::default() }, variant: None };
        assert_eq!(resolve_mixture(&bad).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn experiment_specific_defaults() {
        let g = resolve_galaxy(&GalaxyFlags::default()).unwrap();
        assert_eq!(g.experiment.config.chains(), 20);
        assert_eq!(g.experiment.config.hyper.k, 6);
        assert_eq!(g.settings.runs, 10);
        let galaxy_ees = GalaxyFlags { common: CommonFlags { algorithm: Some("ees".into()), ..Default::default() }, ..Default::default() };
        assert!(resolve_galaxy(&galaxy_ees).is_err());
        let t = resolve_tfbs(&TfbsFlags::default()).unwrap();
        assert_eq!(t.experiment.config.chains(), 15);
        assert!(t.experiment.input.is_none());
        let e = resolve_tfbs(&TfbsFlags { common: CommonFlags { algorithm: Some("ees".into()), ..Default::default() }, ..Default::default() }).unwrap();
        assert_eq!(e.experiment.config.chains(), 9);
    }
}
