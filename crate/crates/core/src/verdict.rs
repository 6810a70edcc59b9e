//! Structured pass/fail records shared by the checking code and the CLI.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub check_id: String,
    /// Named parameters, in a stable order.
    pub params: Vec<(String, f64)>,
    pub pass: bool,
    /// Smallest slack over the checked set; negative means violated.
    pub worst_margin: f64,
    pub tolerance: f64,
    pub location: String,
}

impl VerdictRecord {
    /// `pass` is derived: the margin must be at least `-tolerance`.
    /// A NaN margin fails.
    pub fn new(
        check_id: impl Into<String>,
        params: Vec<(String, f64)>,
        worst_margin: f64,
        tolerance: f64,
        location: impl Into<String>,
    ) -> Self {
        Self {
            check_id: check_id.into(),
            params,
            pass: worst_margin >= -tolerance,
            worst_margin,
            tolerance,
            location: location.into(),
        }
    }
}

/// Builds a parameter list from `(name, value)` pairs.
pub fn params(pairs: &[(&str, f64)]) -> Vec<(String, f64)> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Tracks the smallest margin seen and where it occurred.
#[derive(Debug, Clone, Copy)]
pub struct Worst {
    pub margin: f64,
    pub at: f64,
}

impl Default for Worst {
    fn default() -> Self {
        Self {
            margin: f64::INFINITY,
            at: f64::NAN,
        }
    }
}

impl Worst {
    pub fn update(&mut self, margin: f64, at: f64) {
        if margin < self.margin || margin.is_nan() && !self.margin.is_nan() {
            self.margin = margin;
            self.at = at;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_follows_margin() {
        assert!(VerdictRecord::new("x", vec![], -1e-12, 1e-10, "").pass);
        assert!(!VerdictRecord::new("x", vec![], -1e-9, 1e-10, "").pass);
        assert!(!VerdictRecord::new("x", vec![], f64::NAN, 1e-10, "").pass);
    }

    #[test]
    fn worst_tracks_minimum_and_nan() {
        let mut w = Worst::default();
        w.update(3.0, 0.1);
        w.update(-1.0, 0.2);
        w.update(2.0, 0.3);
        assert_eq!((w.margin, w.at), (-1.0, 0.2));
        w.update(f64::NAN, 0.4);
        assert!(w.margin.is_nan());
    }
}
