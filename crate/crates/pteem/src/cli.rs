//! Subcommands and their terminal output.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use pteem_core::engines::Algorithm;

use crate::config::{resolve_galaxy, resolve_mixture, resolve_tfbs, GalaxyFlags, MixtureFlags, TfbsFlags};
use crate::diagnose::diagnose;
use crate::error::Result;
use crate::experiments::{self, budget, BudgetEcho, Schedule};

#[derive(Debug, Parser)]
#[command(name = "pteem", version, about = "Parallel tempering with equi-energy moves")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Twenty-component Gaussian mixture in the plane
    Mixture2d(MixtureFlags),
    /// Bayesian normal mixture for the galaxy velocities
    Galaxy(GalaxyFlags),
    /// Binding-site discovery in DNA sequences
    Tfbs(TfbsFlags),
    /// Report ring occupancy and exchange traffic of written output
    Diagnose {
        /// Output directory or single file
        path: PathBuf,
    },
    /// Print the local and global move counts of a configuration
    Budget {
        experiment: Experiment,
        #[command(flatten)]
        flags: MixtureFlags,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    Mixture2d,
    Galaxy,
    Tfbs,
}

/// Text written to stdout and stderr by a successful command.
#[derive(Debug, Default)]
pub struct Report {
    pub stdout: String,
    pub stderr: String,
}

pub fn run(cli: Cli) -> Result<Report> {
    let mut rep = Report::default();
    match cli.command {
        Command::Mixture2d(flags) => {
            let r = resolve_mixture(&flags)?;
            notes(&mut rep, &r.notes);
            let o = experiments::mixture2d(&r)?;
            mixture_text(&mut rep.stdout, &r.settings, &o);
        }
        Command::Galaxy(flags) => {
            let r = resolve_galaxy(&flags)?;
            notes(&mut rep, &r.notes);
            let o = experiments::galaxy(&r)?;
            galaxy_text(&mut rep.stdout, &r.settings, &o);
        }
        Command::Tfbs(flags) => {
            let r = resolve_tfbs(&flags)?;
            notes(&mut rep, &r.notes);
            let o = experiments::tfbs(&r)?;
            tfbs_text(&mut rep.stdout, &r.settings, &o);
        }
        Command::Diagnose { path } => rep.stdout = diagnose(&path)?,
        Command::Budget { experiment, flags } => {
            let (schedule, notes_) = schedule_of(experiment, flags)?;
            notes(&mut rep, &notes_);
            budget_text(&mut rep.stdout, experiment, &schedule, &budget(&schedule)?);
        }
    }
    Ok(rep)
}

fn notes(rep: &mut Report, notes: &[String]) {
    for n in notes {
        let _ = writeln!(rep.stderr, "note: {n}");
    }
}

fn schedule_of(experiment: Experiment, flags: MixtureFlags) -> Result<(Schedule, Vec<String>)> {
    Ok(match experiment {
        Experiment::Mixture2d => {
            let r = resolve_mixture(&flags)?;
            let c = &r.experiment;
            let s = Schedule {
                algorithm: c.algorithm,
                chains: c.chains(),
                burn_in: c.length.burn_in,
                ring_period: c.ring_period,
                kept: c.length.kept,
                jump_probability: c.jump_probability,
            };
            (s, r.notes)
        }
        Experiment::Galaxy => {
            let r = resolve_galaxy(&GalaxyFlags { common: flags.common, ..Default::default() })?;
            let c = &r.experiment.config;
            let s = Schedule {
                algorithm: c.algorithm,
                chains: c.chains(),
                burn_in: c.length.burn_in,
                ring_period: 0,
                kept: c.length.kept,
                jump_probability: 0.0,
            };
            (s, r.notes)
        }
        Experiment::Tfbs => {
            let r = resolve_tfbs(&TfbsFlags { common: flags.common, ..Default::default() })?;
            let c = &r.experiment.config;
            let s = Schedule {
                algorithm: c.algorithm,
                chains: c.chains(),
                burn_in: c.length.burn_in,
                ring_period: c.ring_period,
                kept: c.length.kept,
                jump_probability: c.jump_probability,
            };
            (s, r.notes)
        }
    })
}

fn budget_text(out: &mut String, e: Experiment, s: &Schedule, b: &BudgetEcho) {
    let name = e.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
    let _ = writeln!(out, "{name} {}: {} chains, burn-in {}, {} kept iterations", s.algorithm, s.chains, s.burn_in, s.kept);
    if s.algorithm != Algorithm::Ees {
        let _ = writeln!(out, "local moves   {}", b.engine.local_moves);
        let _ = writeln!(out, "global moves  {}", b.engine.global_moves);
        return;
    }
    let _ = writeln!(out, "ring period {}, jump probability {}", s.ring_period, s.jump_probability);
    match b.formula_reading {
        Some(f) => {
            let _ = writeln!(out, "closed form with (M - R) terms:    local {}  global {}", f.local_moves, f.global_moves);
        }
        None => {
            let _ = writeln!(out, "closed form with (M - R) terms:    undefined (M < R)");
        }
    }
    let _ = writeln!(
        out,
        "M counted after ring construction: local {}  global {}  (used by the sampler)",
        b.engine.local_moves, b.engine.global_moves
    );
}

fn header(out: &mut String, name: &str, s: &crate::config::RunSettings, dir: &std::path::Path) {
    let _ = writeln!(out, "{name}: {}, {} runs, seed {} -> {}", s.algorithm, s.runs, s.seed, dir.display());
}

fn mixture_text(out: &mut String, s: &crate::config::RunSettings, o: &experiments::MixtureOutcome) {
    header(out, "mixture2d", s, &o.dir);
    let m = &o.summary;
    let _ = writeln!(out, "mean visited modes {:.2}", m.mean_visited);
    let _ = writeln!(out, "{:<8} {:>10} {:>10}", "moment", "mean", "sd");
    for (j, name) in ["E x1", "E x2", "E x1^2", "E x2^2"].iter().enumerate() {
        let _ = writeln!(out, "{name:<8} {:>10.4} {:>10.4}", m.moment_mean[j], m.moment_sd[j]);
    }
    let _ = writeln!(out, "local acceptance {:.3}, global acceptance {:.3}", m.local_acceptance, m.global_acceptance);
}

fn galaxy_text(out: &mut String, s: &crate::config::RunSettings, o: &experiments::GalaxyOutcome) {
    header(out, "galaxy", s, &o.dir);
    let g = &o.summary;
    let _ = writeln!(
        out,
        "visited modes: mean {:.1}, sd {:.1}, min {}, max {}",
        g.mean_visited, g.sd_visited, g.min_visited, g.max_visited
    );
    let _ = writeln!(out, "relative frequency error: mean {:.3}, median {:.3}", g.err_mean, g.err_median);
    let _ = writeln!(out, "local acceptance {:.3}, global acceptance {:.3}", g.local_acceptance, g.global_acceptance);
}

fn tfbs_text(out: &mut String, s: &crate::config::RunSettings, o: &experiments::TfbsOutcome) {
    header(out, "tfbs", s, &o.dir);
    for (i, r) in o.runs.iter().enumerate() {
        let _ = write!(out, "run {}: {} calls", i + 1, r.calls);
        if let Some(sc) = r.score {
            let _ = write!(out, ", {}/{} planted sites detected, {} exact", sc.detected, sc.planted, sc.exact);
        }
        let _ = writeln!(
            out,
            ", local acceptance {:.3}, global acceptance {:.3}",
            r.run.trace.local_acceptance(),
            r.run.trace.global_acceptance()
        );
    }
}
