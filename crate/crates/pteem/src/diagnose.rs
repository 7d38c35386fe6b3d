//! `pteem diagnose`: reads output files back and reports on ring occupancy
//! and exchange traffic.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use pteem_core::engines::{exchange_matrix, MoveKind};
use pteem_core::ladders::{check_repartition, OccupancyTable};

use crate::error::{CliError, Result};
use crate::fasta;
use crate::format::{read_table, read_text};
use crate::output::{read_events, read_exchange, read_occupancy};

/// Report for a file, a run directory or an experiment directory.
pub fn diagnose(path: &Path) -> Result<String> {
    let mut out = String::new();
    if !path.exists() {
        return Err(CliError::io(path, std::io::ErrorKind::NotFound.into()));
    }
    if path.is_dir() {
        directory(path, &mut out)?;
    } else {
        file(path, &mut out)?;
    }
    Ok(out)
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut v = std::fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|e| CliError::io(dir, e)))
        .collect::<Result<Vec<_>>>()?;
    v.sort();
    Ok(v)
}

fn directory(dir: &Path, out: &mut String) -> Result<()> {
    let entries = sorted_entries(dir)?;
    let files: Vec<&PathBuf> = entries.iter().filter(|p| p.is_file()).collect();
    let subdirs: Vec<&PathBuf> = entries.iter().filter(|p| p.is_dir()).collect();
    if files.is_empty() && subdirs.is_empty() {
        return Err(CliError::parse(dir, "empty directory"));
    }
    for f in files {
        file(f, out)?;
    }
    for d in subdirs {
        directory(d, out)?;
    }
    Ok(())
}

fn name_of(path: &Path) -> &str {
    path.file_name().and_then(|n| n.to_str()).unwrap_or("")
}

fn file(path: &Path, out: &mut String) -> Result<()> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    match (name_of(path), ext) {
        ("occupancy.csv", _) => occupancy(path, out),
        ("exchange.csv", _) => exchange(path, out),
        ("events.csv", _) => events(path, out),
        (_, "csv") => {
            let (header, rows) = read_table(path)?;
            let _ = writeln!(out, "{}: {} rows, {} columns", path.display(), rows.len(), header.len());
            Ok(())
        }
        (_, "toml") => {
            let table: toml::Table = toml::from_str(&read_text(path)?).map_err(|e| CliError::parse(path, e.to_string()))?;
            let keys: Vec<&str> = table.keys().map(String::as_str).collect();
            let _ = writeln!(out, "{}: {}", path.display(), keys.join(", "));
            Ok(())
        }
        (_, "fa") => {
            let set = fasta::parse(&read_text(path)?, 1).map_err(|e| CliError::parse(path, e))?;
            let total: usize = set.sequences.iter().map(Vec::len).sum();
            let _ = writeln!(out, "{}: {} sequences, {} bases", path.display(), set.sequences.len(), total);
            Ok(())
        }
        (_, "txt") => {
            let _ = writeln!(out, "{}: {}", path.display(), read_text(path)?.trim());
            Ok(())
        }
        _ => Err(CliError::parse(path, "unrecognised output file")),
    }
}

fn occupancy(path: &Path, out: &mut String) -> Result<()> {
    let (bounds, table) = read_occupancy(path)?;
    let _ = writeln!(out, "{}: ring occupancy (fraction of each chain's visits)", path.display());
    out.push_str(&occupancy_text(&bounds, &table));
    let report = check_repartition(&table);
    if report.is_ok() {
        out.push_str("repartition: ok\n");
    }
    for &i in &report.energy_gaps {
        let _ = writeln!(out, "repartition: energy gap between chains {} and {}", i + 1, i + 2);
    }
    for &(i, o) in &report.weak_overlaps {
        let _ = writeln!(out, "repartition: weak overlap {o:.3} between chains {} and {}", i + 1, i + 2);
    }
    Ok(())
}

pub fn occupancy_text(bounds: &[f64], table: &OccupancyTable) -> String {
    let mut s = String::from("chain");
    for b in bounds {
        let _ = write!(s, " {:>9}", format!(">={b:.4}"));
    }
    s.push('\n');
    for (c, row) in table.counts.iter().enumerate() {
        let total = row.iter().sum::<u64>().max(1) as f64;
        let _ = write!(s, "{:>5}", c + 1);
        for &n in row {
            let _ = write!(s, " {:>9.4}", n as f64 / total);
        }
        s.push('\n');
    }
    s
}

fn matrix_text(m: &[Vec<f64>]) -> String {
    let mut s = String::from("chain");
    for j in 1..=m.len() {
        let _ = write!(s, " {j:>6}");
    }
    s.push('\n');
    for (i, row) in m.iter().enumerate() {
        let _ = write!(s, "{:>5}", i + 1);
        for v in row {
            let _ = write!(s, " {v:>6.1}");
        }
        s.push('\n');
    }
    s
}

fn exchange(path: &Path, out: &mut String) -> Result<()> {
    let m = read_exchange(path)?;
    let _ = writeln!(out, "{}: accepted global moves by partner (%)", path.display());
    out.push_str(&matrix_text(&m));
    Ok(())
}

fn events(path: &Path, out: &mut String) -> Result<()> {
    let events = read_events(path)?;
    let _ = writeln!(out, "{}: {} global move attempts", path.display(), events.len());
    for kind in [MoveKind::EquiEnergy, MoveKind::Swap, MoveKind::Jump] {
        let of_kind: Vec<_> = events.iter().filter(|e| e.kind == kind).collect();
        if of_kind.is_empty() {
            continue;
        }
        let accepted = of_kind.iter().filter(|e| e.accepted).count();
        let skipped = of_kind.iter().filter(|e| e.pair.is_none()).count();
        let _ = writeln!(
            out,
            "  {}: {} proposed, {} accepted ({:.3}), {} without a partner",
            kind.as_str(),
            of_kind.len(),
            accepted,
            accepted as f64 / of_kind.len() as f64,
            skipped
        );
    }
    let chains = events.iter().filter_map(|e| e.pair).map(|(a, b)| a.max(b) as usize + 1).max().unwrap_or(0);
    if chains > 0 {
        out.push_str(&matrix_text(&exchange_matrix(&events, chains)));
    }
    Ok(())
}
