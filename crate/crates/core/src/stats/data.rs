//! Delimited response data: one row per `(run, unit, reload, ad)`.
//!
//! Columns are `run, unit, reload, url, text, context, treatment, index`.
//! An empty `url` marks a reload (or a unit) that showed no ads. `index` is
//! the unit's assignment index; the experimental group holds indices
//! `0..n`, so its label is the one at index 0.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

use super::response::{AdRecord, Reload, Response, ResponseVector};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataRow {
    pub run: usize,
    pub unit: usize,
    pub reload: usize,
    pub url: String,
    pub text: String,
    pub context: String,
    pub treatment: String,
    pub index: usize,
}

/// Rows of one unit's single-session response.
pub fn response_rows(run: usize, unit: usize, index: usize, treatment: &str, response: &Response) -> Result<Vec<DataRow>> {
    let row = |reload: usize, ad: Option<&AdRecord>| DataRow {
        run,
        unit,
        reload,
        url: ad.map(|a| a.url.clone()).unwrap_or_default(),
        text: ad.map(|a| a.text.clone()).unwrap_or_default(),
        context: ad.and_then(|a| a.context.clone()).unwrap_or_default(),
        treatment: treatment.to_string(),
        index,
    };
    let reloads: Vec<&Reload> = response.sessions()?.iter().flat_map(|s| s.reloads.iter()).collect();
    let mut rows = Vec::new();
    if reloads.is_empty() {
        rows.push(row(0, None));
    }
    for (r, ads) in reloads.iter().enumerate() {
        if ads.is_empty() {
            rows.push(row(r, None));
        }
        for ad in ads.iter() {
            rows.push(row(r, Some(ad)));
        }
    }
    Ok(rows)
}

pub fn write_rows<W: Write>(writer: W, rows: &[DataRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes one run's response vector.
pub fn write_responses<W: Write>(writer: W, run: usize, y: &ResponseVector) -> Result<()> {
    let mut rows = Vec::new();
    for (slot, r) in y.responses().iter().enumerate() {
        let label = if slot < y.n() { &y.labels.0 } else { &y.labels.1 };
        rows.extend(response_rows(run, y.units[slot], slot, label, r)?);
    }
    write_rows(writer, &rows)
}

/// Reads all runs. `n_override` fixes the experimental group size when both
/// groups carry the same label.
pub fn read_responses<R: Read>(reader: R, n_override: Option<usize>) -> Result<BTreeMap<usize, ResponseVector>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut runs: BTreeMap<usize, BTreeMap<usize, Vec<DataRow>>> = BTreeMap::new();
    for row in rdr.deserialize() {
        let row: DataRow = row?;
        runs.entry(row.run).or_default().entry(row.unit).or_default().push(row);
    }
    let mut out = BTreeMap::new();
    for (run, units) in runs {
        out.insert(run, assemble(run, units, n_override)?);
    }
    Ok(out)
}

fn assemble(run: usize, units: BTreeMap<usize, Vec<DataRow>>, n_override: Option<usize>) -> Result<ResponseVector> {
    let total = units.len();
    let mut slots: Vec<Option<(usize, String, Response)>> = vec![None; total];
    for (unit, rows) in units {
        let first = &rows[0];
        let (index, label) = (first.index, first.treatment.clone());
        if rows.iter().any(|r| r.index != index || r.treatment != label) {
            return Err(invalid(format!("run {run}: unit {unit} has inconsistent index or treatment")));
        }
        if index >= total || slots[index].is_some() {
            return Err(invalid(format!("run {run}: assignment indices are not a permutation of 0..{total}")));
        }
        let reload_count = rows.iter().map(|r| r.reload + 1).max().unwrap_or(0);
        let mut reloads: Vec<Reload> = vec![Vec::new(); reload_count];
        for r in &rows {
            if !r.url.is_empty() {
                let context = (!r.context.is_empty()).then(|| r.context.clone());
                reloads[r.reload].push(AdRecord { url: r.url.clone(), text: r.text.clone(), context });
            }
        }
        // a lone placeholder row stands for a unit without reloads
        if rows.len() == 1 && rows[0].url.is_empty() && rows[0].reload == 0 {
            reloads.clear();
        }
        slots[index] = Some((unit, label, Response::from_reloads(reloads)));
    }
    let slots: Vec<(usize, String, Response)> = slots.into_iter().map(|s| s.expect("filled")).collect();
    let exp_label = slots[0].1.clone();
    let n = match n_override {
        Some(n) => n,
        None => slots.iter().take_while(|s| s.1 == exp_label).count(),
    };
    if n > total || slots[n..].iter().any(|s| s.1 == exp_label && n_override.is_none()) {
        return Err(invalid(format!("run {run}: experimental units must hold indices 0..n")));
    }
    let control_label = slots.get(n).map(|s| s.1.clone()).unwrap_or_else(|| exp_label.clone());
    let units: Vec<usize> = slots.iter().map(|s| s.0).collect();
    let responses = slots.into_iter().map(|s| s.2).collect();
    ResponseVector::new(responses, n, total - n)?.with_labels(exp_label, control_label).with_units(units)
}
