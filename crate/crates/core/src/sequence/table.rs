use crate::config::format_number;
use crate::error::{Result, SimError};
use std::collections::BTreeMap;

/// Named equal-length columns plus free-form metadata.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DataTable {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    pub meta: BTreeMap<String, String>,
}

impl DataTable {
    /// The standard shot-experiment layout with `sweep_name` in front.
    pub(crate) fn new(sweep_name: &str) -> Self {
        let mut t = Self::with_columns(&["sweep", "mean", "err", "bright", "photons", "p_down"]);
        t.meta.insert("sweep".into(), sweep_name.into());
        t
    }

    pub fn with_columns(names: &[&str]) -> Self {
        Self {
            names: names.iter().map(|s| s.to_string()).collect(),
            columns: vec![Vec::new(); names.len()],
            meta: BTreeMap::new(),
        }
    }

    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        for (c, v) in self.columns.iter_mut().zip(row) {
            c.push(*v);
        }
    }

    /// Appends a column; its length must match the existing rows.
    pub fn add_column(&mut self, name: &str, values: Vec<f64>) -> Result<()> {
        if !self.columns.is_empty() && values.len() != self.len() {
            return Err(SimError::DimensionMismatch {
                expected: self.len(),
                got: values.len(),
            });
        }
        self.names.push(name.into());
        self.columns.push(values);
        Ok(())
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names.iter().position(|n| n == name).map(|i| self.columns[i].as_slice())
    }

    pub fn len(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Header row plus one line per row; shortest round-trip numbers, `.`
    /// decimal separator, `\n` line ends.
    pub fn to_csv(&self) -> String {
        let mut out = self.names.join(",");
        out.push('\n');
        for r in 0..self.len() {
            let row: Vec<String> = self.columns.iter().map(|c| format_number(c[r])).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut t = DataTable::with_columns(&["a", "b"]);
        t.push_row(&[1.0, 2.5e-9]);
        t.push_row(&[0.0, -3.0]);
        assert_eq!(t.to_csv(), "a,b\n1,2.5e-9\n0,-3\n");
        assert!(t.add_column("c", vec![1.0]).is_err());
        t.add_column("c", vec![1.0, 2.0]).unwrap();
        assert_eq!(t.column("c").unwrap(), &[1.0, 2.0]);
    }
}
