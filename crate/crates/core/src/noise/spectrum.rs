use crate::error::{Result, SimError};
use serde::Serialize;
use std::path::Path;

/// Tabulated one-sided noise spectrum S(ω) (rad²/s) on an increasing ω grid (rad/s).
///
/// Values between nodes are linearly interpolated; S is zero outside the
/// tabulated range.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TabulatedSpectrum {
    pub omega: Vec<f64>,
    pub s_of_omega: Vec<f64>,
}

impl TabulatedSpectrum {
    pub fn new(omega: Vec<f64>, s_of_omega: Vec<f64>) -> Result<Self> {
        if omega.len() != s_of_omega.len() {
            return Err(SimError::DimensionMismatch {
                expected: omega.len(),
                got: s_of_omega.len(),
            });
        }
        if omega.len() < 2 {
            return Err(SimError::EmptyInput("tabulated spectrum needs at least two points"));
        }
        if omega[0] < 0.0 || omega.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(SimError::param("omega", "must be non-negative and strictly increasing"));
        }
        if s_of_omega.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(SimError::param("s_of_omega", "must be finite and non-negative"));
        }
        Ok(Self { omega, s_of_omega })
    }

    /// Two whitespace- or comma-separated columns `omega S`, `#` comments.
    pub fn parse(text: &str, label: &str) -> Result<Self> {
        let mut omega = Vec::new();
        let mut s = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |message: String| SimError::SpectrumFile {
                path: label.to_string(),
                line: i + 1,
                message,
            };
            let cols: Vec<&str> = content.split(|c: char| c.is_whitespace() || c == ',').filter(|c| !c.is_empty()).collect();
            if cols.len() != 2 {
                return Err(err(format!("expected two columns, found {}", cols.len())));
            }
            let num = |c: &str| c.parse::<f64>().map_err(|_| err(format!("`{c}` is not a number")));
            let (w, v) = (num(cols[0])?, num(cols[1])?);
            if let Some(&last) = omega.last() {
                if !(w > last) {
                    return Err(err("omega must be strictly increasing".into()));
                }
            }
            if !(v >= 0.0 && v.is_finite()) || !(w >= 0.0 && w.is_finite()) {
                return Err(err("values must be finite and non-negative".into()));
            }
            omega.push(w);
            s.push(v);
        }
        Self::new(omega, s)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn at(&self, w: f64) -> f64 {
        let (om, s) = (&self.omega, &self.s_of_omega);
        if w < om[0] || w > om[om.len() - 1] {
            return 0.0;
        }
        let k = om.partition_point(|&x| x <= w).clamp(1, om.len() - 1);
        let (x0, x1) = (om[k - 1], om[k]);
        s[k - 1] + (s[k] - s[k - 1]) * (w - x0) / (x1 - x0)
    }

    pub fn omega_max(&self) -> f64 {
        self.omega[self.omega.len() - 1]
    }

    /// Same spectrum scaled by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            omega: self.omega.clone(),
            s_of_omega: self.s_of_omega.iter().map(|s| s * c).collect(),
        }
    }
}
