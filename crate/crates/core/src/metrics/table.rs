//! Score tables: one row per model/dataset, one column per metric.

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreTable {
    columns: Vec<String>,
    rows: Vec<(String, Vec<Option<f64>>)>,
}

impl ScoreTable {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        ScoreTable {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[(String, Vec<Option<f64>>)] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Appends a row; `None` marks a metric that was not computed.
    pub fn push(&mut self, name: impl Into<String>, values: Vec<Option<f64>>) -> Result<()> {
        if values.len() != self.columns.len() {
            return Err(Error::Shape(format!(
                "row has {} values for {} columns",
                values.len(),
                self.columns.len()
            )));
        }
        self.rows.push((name.into(), values));
        Ok(())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn value(&self, row: usize, column: &str) -> Option<f64> {
        let c = self.column_index(column)?;
        self.rows.get(row)?.1[c]
    }

    /// Stable ascending sort on `column`. Values within `tol` compare equal
    /// and fall back to the row name; missing values sort last.
    pub fn sort_by_column(&mut self, column: &str, tol: f64) -> Result<()> {
        let c = self
            .column_index(column)
            .ok_or_else(|| Error::Contract(format!("no column named {column}")))?;
        self.rows.sort_by(|(na, va), (nb, vb)| match (va[c], vb[c]) {
            (Some(a), Some(b)) if (a - b).abs() <= tol => na.cmp(nb),
            (Some(a), Some(b)) => a.total_cmp(&b),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => na.cmp(nb),
        });
        Ok(())
    }

    /// Comma-separated with a `name` column first; missing values are empty.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("name");
        for c in &self.columns {
            s.push(',');
            s.push_str(c);
        }
        s.push('\n');
        for (name, vals) in &self.rows {
            s.push_str(name);
            for v in vals {
                s.push(',');
                if let Some(v) = v {
                    let _ = write!(s, "{v}");
                }
            }
            s.push('\n');
        }
        s
    }

    /// Aligned plain-text rendering.
    pub fn to_text(&self) -> String {
        let cells: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|(n, vals)| {
                std::iter::once(n.clone())
                    .chain(vals.iter().map(|v| match v {
                        Some(v) => format!("{v:.6}"),
                        None => "-".to_string(),
                    }))
                    .collect()
            })
            .collect();
        let header: Vec<String> = std::iter::once("name".to_string())
            .chain(self.columns.iter().cloned())
            .collect();
        let mut widths: Vec<usize> = header.iter().map(String::len).collect();
        for row in &cells {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.len());
            }
        }
        let mut out = String::new();
        for row in std::iter::once(&header).chain(&cells) {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        out
    }
}
