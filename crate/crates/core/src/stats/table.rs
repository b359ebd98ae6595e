use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

use super::classic::bh_fdr;

/// One row per data set, one column per statistic. Missing entries (for
/// example failed runs) are `None`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PValueTable {
    pub columns: Vec<String>,
    pub rows: Vec<PValueRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PValueRow {
    pub data_set: String,
    pub values: Vec<Option<f64>>,
}

impl PValueTable {
    pub fn new(columns: Vec<String>) -> Self {
        PValueTable { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, data_set: impl Into<String>, values: Vec<Option<f64>>) -> Result<()> {
        if values.len() != self.columns.len() {
            return Err(invalid(format!("row has {} values for {} columns", values.len(), self.columns.len())));
        }
        self.rows.push(PValueRow { data_set: data_set.into(), values });
        Ok(())
    }

    pub fn column(&self, c: usize) -> impl Iterator<Item = Option<f64>> + '_ {
        self.rows.iter().map(move |r| r.values[c])
    }

    /// Per column, how many p-values fall below `alpha`.
    pub fn count_below(&self, alpha: f64) -> Vec<usize> {
        (0..self.columns.len()).map(|c| self.column(c).flatten().filter(|&p| p < alpha).count()).collect()
    }

    /// Benjamini–Hochberg flags per column over the present entries.
    #[allow(clippy::needless_range_loop)]
    pub fn bh_flags(&self, q: f64) -> Result<Vec<Vec<Option<bool>>>> {
        let mut flags = vec![vec![None; self.columns.len()]; self.rows.len()];
        for c in 0..self.columns.len() {
            let present: Vec<(usize, f64)> = self.column(c).enumerate().filter_map(|(r, p)| p.map(|p| (r, p))).collect();
            let f = bh_fdr(&present.iter().map(|x| x.1).collect::<Vec<_>>(), q)?;
            for ((r, _), flag) in present.iter().zip(f) {
                flags[*r][c] = Some(flag);
            }
        }
        Ok(flags)
    }

    /// Aligned text with a closing "Number < 5%" row. With `fdr_q`, entries
    /// significant under Benjamini–Hochberg are marked `*`.
    pub fn render_text(&self, fdr_q: Option<f64>) -> Result<String> {
        if self.rows.is_empty() {
            return Err(invalid("p-value table is empty"));
        }
        let flags = match fdr_q {
            Some(q) => Some(self.bh_flags(q)?),
            None => None,
        };
        let mut cells: Vec<Vec<String>> = Vec::new();
        let mut header = vec!["Data set".to_string()];
        header.extend(self.columns.iter().cloned());
        cells.push(header);
        for (r, row) in self.rows.iter().enumerate() {
            let mut line = vec![row.data_set.clone()];
            for (c, v) in row.values.iter().enumerate() {
                let mut s = match v {
                    Some(p) => format_p(*p),
                    None => "-".into(),
                };
                if let Some(f) = &flags {
                    if f[r][c] == Some(true) {
                        s.push('*');
                    }
                }
                line.push(s);
            }
            cells.push(line);
        }
        let mut summary = vec!["Number < 5%".to_string()];
        summary.extend(self.count_below(0.05).iter().map(|c| c.to_string()));
        cells.push(summary);

        let widths: Vec<usize> = (0..cells[0].len())
            .map(|c| cells.iter().map(|row| row[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in &cells {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (s, w))| if c == 0 { format!("{s:<w$}") } else { format!("{s:>w$}") })
                .collect();
            writeln!(out, "{}", line.join("  ").trim_end()).expect("string write");
        }
        Ok(out)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["data_set".to_string()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![row.data_set.clone()];
            rec.extend(row.values.iter().map(|v| v.map(|p| format!("{p:e}")).unwrap_or_default()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.get(0) != Some("data_set") {
            return Err(invalid("first column must be data_set"));
        }
        let mut table = PValueTable::new(header.iter().skip(1).map(String::from).collect());
        for rec in rdr.records() {
            let rec = rec?;
            let values = rec
                .iter()
                .skip(1)
                .map(|s| {
                    let s = s.trim();
                    if s.is_empty() || s == "-" {
                        Ok(None)
                    } else {
                        s.parse::<f64>().map(Some).map_err(|_| invalid(format!("bad p-value '{s}'")))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            table.push(rec.get(0).unwrap_or_default(), values)?;
        }
        Ok(table)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn format_p(p: f64) -> String {
    if p != 0.0 && p < 1e-4 {
        format!("{p:.4e}")
    } else {
        format!("{p:.6}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PValueTable {
        let mut t = PValueTable::new(vec!["sim".into(), "chi2".into()]);
        t.push("1", vec![Some(0.007937), Some(3.1815e-33)]).unwrap();
        t.push("2", vec![Some(0.460317), None]).unwrap();
        t
    }

    #[test]
    fn text_has_summary_row() {
        let text = sample().render_text(None).unwrap();
        let last = text.lines().last().unwrap();
        assert!(last.starts_with("Number < 5%"));
        assert!(last.ends_with('1'));
        assert!(text.contains("3.1815e-33"));
        assert!(PValueTable::new(vec!["x".into()]).render_text(None).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let t = sample();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(PValueTable::read_csv(buf.as_slice()).unwrap(), t);
    }

    #[test]
    fn fdr_marks() {
        let text = sample().render_text(Some(0.05)).unwrap();
        assert!(text.contains("0.007937*"));
        assert!(!text.contains("0.460317*"));
    }
}
