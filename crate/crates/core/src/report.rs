//! Residual reports shared by the verification routines.

use serde::Serialize;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Residual {
    pub name: String,
    pub max: f64,
    /// Sample point where the maximum was attained.
    pub witness: Option<Vec<f64>>,
}

impl Residual {
    pub fn new(name: impl Into<String>) -> Self {
        Residual { name: name.into(), max: 0.0, witness: None }
    }

    /// Fold in one observation; NaN always wins so it cannot hide.
    pub fn observe(&mut self, value: f64, at: &[f64]) {
        let replace =
            self.witness.is_none() || value.is_nan() || (!self.max.is_nan() && value > self.max);
        if replace {
            self.max = value;
            self.witness = Some(at.to_vec());
        }
    }

    pub fn merge(&mut self, other: &Residual) {
        if let Some(w) = &other.witness {
            self.observe(other.max, w);
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CheckReport {
    pub residuals: Vec<Residual>,
    pub samples: usize,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckReport {
    pub fn new(residuals: Vec<Residual>, samples: usize, tolerance: f64) -> Self {
        let passed = residuals.iter().all(|r| r.max < tolerance);
        CheckReport { residuals, samples, tolerance, passed }
    }

    pub fn get(&self, name: &str) -> Option<&Residual> {
        self.residuals.iter().find(|r| r.name == name)
    }

    pub fn worst(&self) -> Option<&Residual> {
        self.residuals
            .iter()
            .max_by(|a, b| a.max.partial_cmp(&b.max).unwrap_or(std::cmp::Ordering::Greater))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nan_is_a_failure() {
        let mut r = Residual::new("a");
        r.observe(1e-20, &[0.0]);
        r.observe(f64::NAN, &[1.0]);
        r.observe(1.0, &[2.0]);
        assert!(r.max.is_nan());
        let rep = CheckReport::new(vec![r], 3, 1e-9);
        assert!(!rep.passed);
    }
}
