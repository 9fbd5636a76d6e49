/// Physical dimension of a config value; fixes the accepted unit suffixes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dim {
    /// Hz.
    Frequency,
    /// s⁻¹.
    Rate,
    /// s.
    Time,
    /// K.
    Temperature,
    /// G.
    Field,
    /// degrees.
    Angle,
    /// rad/s.
    Angular,
    /// rad.
    Phase,
    Dimensionless,
}

impl Dim {
    pub fn name(self) -> &'static str {
        match self {
            Dim::Frequency => "frequency",
            Dim::Rate => "rate",
            Dim::Time => "time",
            Dim::Temperature => "temperature",
            Dim::Field => "magnetic field",
            Dim::Angle => "angle",
            Dim::Angular => "angular frequency",
            Dim::Phase => "phase",
            Dim::Dimensionless => "dimensionless",
        }
    }

    /// Unit written by the canonical dump (values are stored in it).
    pub fn base_unit(self) -> &'static str {
        match self {
            Dim::Frequency => "Hz",
            Dim::Rate => "/s",
            Dim::Time => "s",
            Dim::Temperature => "K",
            Dim::Field => "G",
            Dim::Angle => "deg",
            Dim::Angular => "rad/s",
            Dim::Phase => "rad",
            Dim::Dimensionless => "",
        }
    }

    /// Multiplier from `unit` to the base unit, or `None` if not accepted.
    pub fn scale(self, unit: &str) -> Option<f64> {
        if unit.is_empty() {
            return Some(1.0);
        }
        let s = match (self, unit) {
            (Dim::Frequency | Dim::Rate, "Hz") => 1.0,
            (Dim::Frequency | Dim::Rate, "kHz") => 1e3,
            (Dim::Frequency | Dim::Rate, "MHz") => 1e6,
            (Dim::Frequency | Dim::Rate, "GHz") => 1e9,
            (Dim::Rate, "/s" | "1/s" | "s^-1") => 1.0,
            (Dim::Rate, "/ms") => 1e3,
            (Dim::Rate, "/us" | "/µs") => 1e6,
            (Dim::Time, "s") => 1.0,
            (Dim::Time, "ms") => 1e-3,
            (Dim::Time, "us" | "µs") => 1e-6,
            (Dim::Time, "ns") => 1e-9,
            (Dim::Time, "ps") => 1e-12,
            (Dim::Temperature, "K") => 1.0,
            (Dim::Temperature, "mK") => 1e-3,
            (Dim::Field, "G") => 1.0,
            (Dim::Field, "kG") => 1e3,
            (Dim::Field, "mT") => 10.0,
            (Dim::Field, "T") => 1e4,
            (Dim::Angle, "deg") => 1.0,
            (Dim::Angle, "rad") => 180.0 / std::f64::consts::PI,
            (Dim::Angular, "rad/s") => 1.0,
            (Dim::Angular, "krad/s") => 1e3,
            (Dim::Angular, "Mrad/s") => 1e6,
            (Dim::Phase, "rad") => 1.0,
            (Dim::Phase, "deg") => std::f64::consts::PI / 180.0,
            (Dim::Dimensionless, "%") => 1e-2,
            _ => return None,
        };
        Some(s)
    }
}

/// Shortest round-trip text for `x`, switching to exponent form for very
/// large or small magnitudes so it stays readable.
pub fn format_number(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 {
        "0".to_string()
    } else if (1e-4..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scales() {
        assert_eq!(Dim::Field.scale("kG"), Some(1e3));
        assert_eq!(Dim::Temperature.scale("mK"), Some(1e-3));
        assert_eq!(Dim::Time.scale("µs"), Some(1e-6));
        assert_eq!(Dim::Time.scale("GHz"), None);
        assert_eq!(Dim::Dimensionless.scale(""), Some(1.0));
    }

    #[test]
    fn shortest_round_trip() {
        for &x in &[0.1, 2700.0, 4.6e10, 1.7e-9, -3.25, 1e20, 123456.789] {
            let s = format_number(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(format_number(2700.0), "2700");
        assert_eq!(format_number(1.7e-9), "1.7e-9");
    }
}
