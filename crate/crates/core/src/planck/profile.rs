use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// `(1 + sqrt 5) / 2`.
pub const GOLDEN: f64 = 1.618_033_988_749_895;

/// `lambda = 2 hbar / (-1 + sqrt(5 + 4 hbar^2))`, the second rescaling of
/// the Fibonacci two-sphere model.
pub fn fibonacci_lambda(hbar: f64) -> Result<f64> {
    if !(hbar > 0.0 && hbar.is_finite()) {
        return Err(Error::Argument(format!("fibonacci_lambda needs hbar > 0, got {hbar}")));
    }
    Ok(2.0 * hbar / (-1.0 + (5.0 + 4.0 * hbar * hbar).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaurentTerm {
    pub power: i32,
    pub coeff: f64,
}

/// One normalized symplectic area `A_i(hbar)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AreaComponent {
    /// `sum c hbar^p`.
    Laurent(Vec<LaurentTerm>),
    /// `1 / fibonacci_lambda(hbar)`.
    FibonacciSecond,
}

impl AreaComponent {
    pub fn laurent(terms: &[(i32, f64)]) -> Self {
        AreaComponent::Laurent(terms.iter().map(|&(power, coeff)| LaurentTerm { power, coeff }).collect())
    }

    pub fn eval(&self, h: f64) -> f64 {
        match self {
            AreaComponent::Laurent(t) => t.iter().map(|t| t.coeff * h.powi(t.power)).sum(),
            AreaComponent::FibonacciSecond => ((5.0 + 4.0 * h * h).sqrt() - 1.0) / (2.0 * h),
        }
    }

    /// Closed-form derivative.
    pub fn derivative(&self, h: f64) -> f64 {
        match self {
            AreaComponent::Laurent(t) => {
                t.iter().filter(|t| t.power != 0).map(|t| t.coeff * t.power as f64 * h.powi(t.power - 1)).sum()
            }
            AreaComponent::FibonacciSecond => (1.0 - 5.0 / (5.0 + 4.0 * h * h).sqrt()) / (2.0 * h * h),
        }
    }

    /// Whether `A(-hbar) = -A(hbar)`.
    pub fn is_odd(&self) -> bool {
        match self {
            AreaComponent::Laurent(t) => t.iter().all(|t| t.power % 2 != 0 || t.coeff == 0.0),
            AreaComponent::FibonacciSecond => true,
        }
    }
}

/// How `A_i'` is obtained in the monodromy report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DerivativeMode {
    #[default]
    Exact,
    /// Central differences with step `1e-5 hbar`.
    FiniteDifference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AreaProfile {
    pub name: String,
    pub components: Vec<AreaComponent>,
    /// Upper end of the validity range `(0, hbar_max]`.
    pub hbar_max: f64,
    /// Constant class in `[omega(hbar)] = rho + [Omega] / F(hbar)`.
    #[serde(default)]
    pub rho: Option<Vec<f64>>,
    #[serde(default)]
    pub derivatives: DerivativeMode,
}

/// Names accepted by [`AreaProfile::builtin`].
pub const BUILTIN_PROFILES: &[&str] = &["fibonacci", "golden-linear", "rational-pair", "single-sphere"];

impl AreaProfile {
    pub fn new(name: impl Into<String>, components: Vec<AreaComponent>, hbar_max: f64) -> Result<Self> {
        let p = AreaProfile { name: name.into(), components, hbar_max, rho: None, derivatives: DerivativeMode::Exact };
        p.validate()?;
        Ok(p)
    }

    pub fn builtin(name: &str) -> Result<Self> {
        let inv = |c: f64| AreaComponent::laurent(&[(-1, c)]);
        match name {
            "single-sphere" => Self::new(name, vec![inv(1.0)], 1.0),
            "fibonacci" => Self::new(name, vec![inv(1.0), AreaComponent::FibonacciSecond], 1.0),
            "golden-linear" => Self::new(name, vec![inv(1.0), inv(GOLDEN)], 1.0),
            "rational-pair" => Self::new(name, vec![inv(2.0), inv(3.0)], 2.0),
            _ => Err(Error::Argument(format!("unknown profile '{name}'; expected one of {}", BUILTIN_PROFILES.join(", ")))),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let p: AreaProfile = serde_path_to_error::deserialize(de)
            .map_err(|e| Error::Validation(format!("profile JSON at {}: {}", e.path(), e.inner())))?;
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::Validation("profile needs at least one area component".into()));
        }
        if !(self.hbar_max > 0.0 && self.hbar_max.is_finite()) {
            return Err(Error::Validation(format!("hbar_max must be positive and finite, got {}", self.hbar_max)));
        }
        for (i, c) in self.components.iter().enumerate() {
            if let AreaComponent::Laurent(t) = c {
                if t.is_empty() || t.iter().any(|t| !t.coeff.is_finite() || t.power.abs() > 12) {
                    return Err(Error::Validation(format!(
                        "component {i}: Laurent terms must be nonempty with finite coefficients and |power| <= 12"
                    )));
                }
            }
        }
        if let Some(rho) = &self.rho {
            if rho.len() != self.components.len() || rho.iter().any(|r| !r.is_finite()) {
                return Err(Error::Validation("rho needs one finite entry per component".into()));
            }
        }
        Ok(())
    }

    pub fn eval(&self, h: f64) -> Vec<f64> {
        self.components.iter().map(|c| c.eval(h)).collect()
    }

    /// `A_i'(hbar)` and a relative noise estimate (zero for closed forms).
    pub fn derivative(&self, i: usize, h: f64) -> (f64, f64) {
        let c = &self.components[i];
        match self.derivatives {
            DerivativeMode::Exact => (c.derivative(h), 0.0),
            DerivativeMode::FiniteDifference => {
                let step = 1e-5 * h;
                let d = |s: f64| (c.eval(h + s) - c.eval(h - s)) / (2.0 * s);
                let (d1, d2) = (d(step), d(2.0 * step));
                (d1, (d1 - d2).abs() / d1.abs().max(f64::MIN_POSITIVE))
            }
        }
    }

    pub fn is_odd(&self) -> bool {
        self.components.iter().all(AreaComponent::is_odd)
    }
}
