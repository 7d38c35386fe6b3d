//! Trace files shared by all experiments and their readers.
//!
//! - `events.csv`: `iteration,move,chain_a,chain_b,accepted`, chains 1-based,
//!   empty chain fields for moves that could not be proposed.
//! - `occupancy.csv`: one row per chain, one column per ring headed by the
//!   ring's lower energy bound.
//! - `exchange.csv`: percentage of chain `i`'s accepted global moves made
//!   with chain `j`.

use std::path::Path;

use pteem_core::engines::{exchange_matrix, ExchangeEvent, MoveKind, Trace};
use pteem_core::ladders::{EnergyLadder, OccupancyTable};

use crate::error::{CliError, Result};
use crate::format::{parse_real, read_table, real, Table};

pub const EVENTS_HEADER: [&str; 5] = ["iteration", "move", "chain_a", "chain_b", "accepted"];

/// Writes events, occupancy and exchange matrix of `trace` into `dir`.
pub fn write_trace_files<S>(dir: &Path, trace: &Trace<S>, ladder: &EnergyLadder) -> Result<()> {
    write_events(&dir.join("events.csv"), &trace.events)?;
    if let Some(table) = trace.occupancy() {
        let bounds: Vec<f64> = ladder.ring_lower_bounds().collect();
        write_occupancy(&dir.join("occupancy.csv"), &bounds, &table)?;
    }
    write_exchange(&dir.join("exchange.csv"), &exchange_matrix(&trace.events, trace.chains()))
}

pub fn write_events(path: &Path, events: &[ExchangeEvent]) -> Result<()> {
    let mut t = Table::create(path, &EVENTS_HEADER)?;
    for e in events {
        let (a, b) = match e.pair {
            Some((a, b)) => ((a + 1).to_string(), (b + 1).to_string()),
            None => (String::new(), String::new()),
        };
        t.row([e.iteration.to_string(), e.kind.as_str().into(), a, b, (e.accepted as u8).to_string()])?;
    }
    t.finish()
}

pub fn read_events(path: &Path) -> Result<Vec<ExchangeEvent>> {
    let (header, rows) = read_table(path)?;
    if header != EVENTS_HEADER {
        return Err(CliError::parse(path, "not an events file"));
    }
    let chain = |s: &str, line: usize| -> Result<Option<u16>> {
        if s.is_empty() {
            return Ok(None);
        }
        match s.parse::<u16>() {
            Ok(c) if c >= 1 => Ok(Some(c - 1)),
            _ => Err(CliError::parse(path, format!("row {line}: bad chain '{s}'"))),
        }
    };
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            let line = i + 2;
            let iteration = r[0].parse().map_err(|_| CliError::parse(path, format!("row {line}: bad iteration")))?;
            let kind = MoveKind::parse(&r[1]).ok_or_else(|| CliError::parse(path, format!("row {line}: bad move '{}'", r[1])))?;
            let pair = match (chain(&r[2], line)?, chain(&r[3], line)?) {
                (Some(a), Some(b)) => Some((a, b)),
                (None, None) => None,
                _ => return Err(CliError::parse(path, format!("row {line}: half-empty pair"))),
            };
            let accepted = match r[4].as_str() {
                "0" => false,
                "1" => true,
                s => return Err(CliError::parse(path, format!("row {line}: bad accepted flag '{s}'"))),
            };
            Ok(ExchangeEvent { iteration, kind, pair, accepted })
        })
        .collect()
}

pub fn write_occupancy(path: &Path, lower_bounds: &[f64], table: &OccupancyTable) -> Result<()> {
    let mut header = vec!["chain".to_string()];
    header.extend(lower_bounds.iter().map(|&b| real(b)));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut t = Table::create(path, &header_refs)?;
    for (c, row) in table.counts.iter().enumerate() {
        let mut rec = vec![(c + 1).to_string()];
        rec.extend(row.iter().map(u64::to_string));
        t.row(rec)?;
    }
    t.finish()
}

pub fn read_occupancy(path: &Path) -> Result<(Vec<f64>, OccupancyTable)> {
    let (header, rows) = read_table(path)?;
    if header.first().map(String::as_str) != Some("chain") || header.len() < 2 {
        return Err(CliError::parse(path, "not an occupancy file"));
    }
    let bounds = header[1..]
        .iter()
        .map(|s| parse_real(s).ok_or_else(|| CliError::parse(path, format!("bad ring bound '{s}'"))))
        .collect::<Result<Vec<_>>>()?;
    let mut counts = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        if r[0] != (i + 1).to_string() {
            return Err(CliError::parse(path, format!("row {}: chains must be numbered 1..N in order", i + 2)));
        }
        let row = r[1..]
            .iter()
            .map(|s| s.parse::<u64>().map_err(|_| CliError::parse(path, format!("row {}: bad count '{s}'", i + 2))))
            .collect::<Result<Vec<_>>>()?;
        counts.push(row);
    }
    Ok((bounds, OccupancyTable { counts }))
}

pub fn write_exchange(path: &Path, matrix: &[Vec<f64>]) -> Result<()> {
    let mut header = vec!["chain".to_string()];
    header.extend((1..=matrix.len()).map(|j| j.to_string()));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut t = Table::create(path, &header_refs)?;
    for (i, row) in matrix.iter().enumerate() {
        let mut rec = vec![(i + 1).to_string()];
        rec.extend(row.iter().map(|&v| real(v)));
        t.row(rec)?;
    }
    t.finish()
}

pub fn read_exchange(path: &Path) -> Result<Vec<Vec<f64>>> {
    let (header, rows) = read_table(path)?;
    if header.first().map(String::as_str) != Some("chain") || header.len() != rows.len() + 1 {
        return Err(CliError::parse(path, "not an exchange-matrix file"));
    }
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            r[1..]
                .iter()
                .map(|s| parse_real(s).ok_or_else(|| CliError::parse(path, format!("row {}: bad value '{s}'", i + 2))))
                .collect()
        })
        .collect()
}
