//! Line-level syntax: `[section]` headers, `key = value` entries, `#` comments.

use super::error::ConfigError;
use super::units::Dim;

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub name: String,
    pub line: usize,
    pub entries: Vec<Entry>,
}

pub fn parse_document(text: &str) -> Result<Vec<Section>, ConfigError> {
    let mut sections: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| ConfigError::Syntax {
                line,
                message: "section header must end with `]`".into(),
            })?;
            let name = name.trim();
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("invalid section name `{name}`"),
                });
            }
            sections.push(Section {
                name: name.to_string(),
                line,
                entries: Vec::new(),
            });
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line,
            message: "expected `key = value`".into(),
        })?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(ConfigError::Syntax {
                line,
                message: format!("invalid key `{key}`"),
            });
        }
        if value.is_empty() {
            return Err(ConfigError::BadValue {
                line,
                key: key.into(),
                message: "empty value".into(),
            });
        }
        let section = sections.last_mut().ok_or_else(|| ConfigError::Syntax {
            line,
            message: "entry before the first section header".into(),
        })?;
        if section.entries.iter().any(|e| e.key == key) {
            return Err(ConfigError::Duplicate {
                line,
                what: "key",
                name: key.into(),
            });
        }
        section.entries.push(Entry {
            key: key.into(),
            value: value.into(),
            line,
        });
    }
    Ok(sections)
}

/// Splits `"12.5 kHz"` / `"3ms"` into number and unit.
fn split_number(s: &str) -> Option<(f64, &str)> {
    let s = s.trim();
    let mut best = None;
    for (i, _) in s.char_indices().skip(1).chain(std::iter::once((s.len(), ' '))) {
        if let Ok(v) = s[..i].trim_end().parse::<f64>() {
            best = Some((v, s[i..].trim()));
        }
    }
    best.filter(|(v, _)| v.is_finite())
}

fn bad(entry: &Entry, message: impl Into<String>) -> ConfigError {
    ConfigError::BadValue {
        line: entry.line,
        key: entry.key.clone(),
        message: message.into(),
    }
}

fn unit_scale(entry: &Entry, dim: Dim, unit: &str) -> Result<f64, ConfigError> {
    dim.scale(unit).ok_or_else(|| ConfigError::BadUnit {
        line: entry.line,
        key: entry.key.clone(),
        unit: unit.into(),
        dimension: dim.name(),
    })
}

/// `v·scale`. Decimal scales shift the exponent of the shortest decimal
/// form instead of multiplying, so `32.7 GHz` is exactly the double
/// nearest 3.27e10 and `50 ns` the one nearest 5e-8.
fn apply(v: f64, scale: f64) -> f64 {
    let k = scale.log10().round();
    if k != 0.0 && 10f64.powi(k as i32) == scale {
        let s = format!("{v:e}");
        let shifted = s.split_once('e').and_then(|(m, e)| Some(format!("{m}e{}", e.parse::<i32>().ok()? + k as i32)));
        if let Some(x) = shifted.and_then(|t| t.parse::<f64>().ok()) {
            return x;
        }
    }
    v * scale
}

pub fn scalar(entry: &Entry, dim: Dim) -> Result<f64, ConfigError> {
    let (v, unit) = split_number(&entry.value).ok_or_else(|| bad(entry, format!("`{}` is not a number", entry.value)))?;
    Ok(apply(v, unit_scale(entry, dim, unit)?))
}

pub fn integer(entry: &Entry) -> Result<u64, ConfigError> {
    entry
        .value
        .parse::<u64>()
        .map_err(|_| bad(entry, format!("`{}` is not a non-negative integer", entry.value)))
}

/// A list of values: explicit, or generated by `linspace`/`logspace`.
#[derive(Debug, Clone, PartialEq)]
pub enum ValueList {
    Explicit(Vec<f64>),
    Linspace { start: f64, stop: f64, n: usize },
    Logspace { start: f64, stop: f64, n: usize },
}

impl ValueList {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            ValueList::Explicit(ref v) => v.clone(),
            ValueList::Linspace { start, stop, n } => {
                if n == 1 {
                    return vec![start];
                }
                (0..n).map(|k| start + (stop - start) * k as f64 / (n - 1) as f64).collect()
            }
            ValueList::Logspace { start, stop, n } => {
                if n == 1 {
                    return vec![start];
                }
                let (a, b) = (start.ln(), stop.ln());
                (0..n)
                    .map(|k| {
                        // pin the endpoints exactly
                        if k == 0 {
                            start
                        } else if k == n - 1 {
                            stop
                        } else {
                            (a + (b - a) * k as f64 / (n - 1) as f64).exp()
                        }
                    })
                    .collect()
            }
        }
    }

    pub fn len(&self) -> usize {
        match self {
            ValueList::Explicit(v) => v.len(),
            ValueList::Linspace { n, .. } | ValueList::Logspace { n, .. } => *n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn list(entry: &Entry, dim: Dim) -> Result<ValueList, ConfigError> {
    let v = entry.value.trim();
    for (name, log) in [("linspace", false), ("logspace", true)] {
        if let Some(rest) = v.strip_prefix(name) {
            let rest = rest.trim_start();
            let inner_end = rest.find(')').ok_or_else(|| bad(entry, format!("unterminated {name}(")))?;
            let inner = rest
                .strip_prefix('(')
                .map(|r| &r[..inner_end - 1])
                .ok_or_else(|| bad(entry, format!("expected `{name}(start, stop, n)`")))?;
            let unit = rest[inner_end + 1..].trim();
            let scale = unit_scale(entry, dim, unit)?;
            let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(bad(entry, format!("{name} takes (start, stop, n)")));
            }
            let num = |s: &str| s.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| bad(entry, format!("`{s}` is not a number")));
            let (start, stop) = (apply(num(parts[0])?, scale), apply(num(parts[1])?, scale));
            let n = parts[2].parse::<usize>().map_err(|_| bad(entry, "point count must be a positive integer"))?;
            if n == 0 {
                return Err(bad(entry, "point count must be positive"));
            }
            if log && !(start > 0.0 && stop > 0.0) {
                return Err(bad(entry, "logspace endpoints must be positive"));
            }
            return Ok(if log {
                ValueList::Logspace { start, stop, n }
            } else {
                ValueList::Linspace { start, stop, n }
            });
        }
    }
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    let (last_num, unit) = split_number(parts[parts.len() - 1]).ok_or_else(|| bad(entry, format!("`{v}` is not a number list")))?;
    let scale = unit_scale(entry, dim, unit)?;
    let mut out = Vec::with_capacity(parts.len());
    for p in &parts[..parts.len() - 1] {
        let x: f64 = p.parse().ok().filter(|x: &f64| x.is_finite()).ok_or_else(|| bad(entry, format!("`{p}` is not a number")))?;
        out.push(apply(x, scale));
    }
    out.push(apply(last_num, scale));
    Ok(ValueList::Explicit(out))
}

pub fn integer_list(entry: &Entry) -> Result<Vec<u64>, ConfigError> {
    entry
        .value
        .split(',')
        .map(|p| p.trim().parse::<u64>().map_err(|_| bad(entry, format!("`{}` is not a non-negative integer", p.trim()))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(v: &str) -> Entry {
        Entry {
            key: "k".into(),
            value: v.into(),
            line: 3,
        }
    }

    #[test]
    fn sections_and_comments() {
        let doc = parse_document("# header\n[system]\nb_mag = 2.7 kG # inline\n\n[run]\nseed=7\n").unwrap();
        assert_eq!(doc.len(), 2);
        assert_eq!(doc[0].entries[0].value, "2.7 kG");
        assert_eq!(doc[0].entries[0].line, 3);
        assert_eq!(doc[1].entries[0].key, "seed");
    }

    #[test]
    fn syntax_errors_have_lines() {
        assert_eq!(parse_document("[system\n").unwrap_err().line(), Some(1));
        assert_eq!(parse_document("[a]\nfoo\n").unwrap_err().line(), Some(2));
        assert!(matches!(parse_document("x = 1\n"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(matches!(parse_document("[a]\nx=1\nx=2\n"), Err(ConfigError::Duplicate { line: 3, .. })));
    }

    #[test]
    fn units() {
        assert_eq!(scalar(&e("2.7 kG"), Dim::Field).unwrap(), 2700.0);
        assert_eq!(scalar(&e("100 mK"), Dim::Temperature).unwrap(), 0.1);
        assert_eq!(scalar(&e("3ms"), Dim::Time).unwrap(), 3e-3);
        assert_eq!(scalar(&e("1.5e-9 s"), Dim::Time).unwrap(), 1.5e-9);
        assert!(matches!(scalar(&e("3 furlongs"), Dim::Time), Err(ConfigError::BadUnit { line: 3, .. })));
        assert!(matches!(scalar(&e("abc"), Dim::Time), Err(ConfigError::BadValue { .. })));
    }

    #[test]
    fn lists() {
        assert_eq!(list(&e("0, 50, 100 ns"), Dim::Time).unwrap().values(), vec![0.0, 50e-9, 100e-9]);
        let l = list(&e("linspace(0, 2, 5) us"), Dim::Time).unwrap();
        assert_eq!(l.values().len(), 5);
        assert!((l.values()[4] - 2e-6).abs() < 1e-18);
        let g = list(&e("logspace(1, 1000, 4) ms"), Dim::Time).unwrap().values();
        assert!((g[1] - 1e-2).abs() < 1e-12 && g[3] == 1.0);
        assert!(list(&e("logspace(0, 1, 3)"), Dim::Time).is_err());
        assert_eq!(integer_list(&e("1, 2, 4")).unwrap(), vec![1, 2, 4]);
    }
}
