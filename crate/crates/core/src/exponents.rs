use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The exponent sequence `alpha_m` of the power series.
///
/// Only `alpha_m >= m` is required. It is checked lazily, whenever an
/// exponent is looked up.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExponentSpec {
    /// `alpha_m = m^2`, the case tied to the heat equation.
    Squares,
    /// `alpha_m = c_0 + c_1 m + c_2 m^2 + ...` with non-negative integer
    /// coefficients.
    Custom { coefficients: Vec<u64> },
}

impl ExponentSpec {
    pub fn linear() -> Self {
        ExponentSpec::Custom {
            coefficients: vec![0, 1],
        }
    }

    pub fn polynomial(coefficients: Vec<u64>) -> Self {
        ExponentSpec::Custom { coefficients }
    }

    pub fn is_squares(&self) -> bool {
        matches!(self, ExponentSpec::Squares)
    }

    /// `alpha_m` for `m >= 1`.
    pub fn alpha(&self, m: u64) -> Result<u64> {
        if m == 0 {
            return Err(Error::domain("exponent index starts at 1"));
        }
        let alpha = match self {
            ExponentSpec::Squares => m.checked_mul(m).ok_or(Error::ExponentOverflow { m })?,
            ExponentSpec::Custom { coefficients } => {
                // Horner, highest degree first.
                let mut acc: u64 = 0;
                for &c in coefficients.iter().rev() {
                    acc = acc
                        .checked_mul(m)
                        .and_then(|v| v.checked_add(c))
                        .ok_or(Error::ExponentOverflow { m })?;
                }
                acc
            }
        };
        if alpha < m {
            return Err(Error::ExponentBelowIndex { m, alpha });
        }
        Ok(alpha)
    }

    /// Checks `alpha_1 >= 1` and that the polynomial is not constant (a
    /// constant sequence violates `alpha_m >= m` eventually).
    pub fn validate(&self) -> Result<()> {
        self.alpha(1)?;
        if let ExponentSpec::Custom { coefficients } = self {
            if coefficients.iter().skip(1).all(|&c| c == 0) {
                let c0 = coefficients.first().copied().unwrap_or(0);
                return Err(Error::ExponentBelowIndex {
                    m: c0 + 1,
                    alpha: c0,
                });
            }
        }
        Ok(())
    }
}

impl fmt::Display for ExponentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExponentSpec::Squares => f.write_str("squares"),
            ExponentSpec::Custom { coefficients } => {
                f.write_str("polynomial:")?;
                for (i, c) in coefficients.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{c}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for ExponentSpec {
    type Err = Error;

    /// Accepts `squares`, `linear`, or `polynomial:c0,c1,...`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "squares" => return Ok(ExponentSpec::Squares),
            "linear" => return Ok(ExponentSpec::linear()),
            _ => {}
        }
        let Some(list) = s.strip_prefix("polynomial:") else {
            return Err(Error::domain(format!("unknown exponent sequence {s:?}")));
        };
        let coefficients = list
            .split(',')
            .map(|c| {
                c.trim()
                    .parse::<u64>()
                    .map_err(|e| Error::domain(format!("bad coefficient {c:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let spec = ExponentSpec::Custom { coefficients };
        spec.validate()?;
        Ok(spec)
    }
}
