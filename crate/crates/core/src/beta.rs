//! Inverse temperature with an exactly known `e^β` where possible.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// `β` together with `e^β`.
///
/// Symbolic inputs such as `log(3)` keep `e^β = 3` exactly, so eigen-conditions
/// `B_i τ = e^β τ` can be tested without a round trip through `exp(ln 3)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Beta {
    value: f64,
    exp: f64,
}

impl Beta {
    pub fn new(value: f64) -> Self {
        Beta { value, exp: value.exp() }
    }

    /// `β = log(x)`.
    pub fn log(x: f64) -> Self {
        Beta { value: x.ln(), exp: x }
    }

    pub fn from_exp(x: f64) -> Self {
        Self::log(x)
    }

    pub fn value(self) -> f64 {
        self.value
    }

    /// `e^β`.
    pub fn exp(self) -> f64 {
        self.exp
    }

    /// `e^{-β}`.
    pub fn exp_neg(self) -> f64 {
        1.0 / self.exp
    }

    /// `e^{-kβ}`.
    pub fn weight(self, k: u64) -> f64 {
        self.exp_neg().powi(k as i32)
    }
}

impl fmt::Display for Beta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl FromStr for Beta {
    type Err = Error;

    /// Accepts `1.25`, `log(3)`, `ln(3)` and `2*log(3)`.
    fn from_str(s: &str) -> Result<Self, Error> {
        let bad = || Error::InvalidInput(format!("cannot parse beta from {s:?}"));
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let (coef, rest) = match t.split_once('*') {
            Some((c, r)) => (c.parse::<f64>().map_err(|_| bad())?, r.to_string()),
            None => (1.0, t.clone()),
        };
        let inner = rest
            .strip_prefix("log(")
            .or_else(|| rest.strip_prefix("ln("))
            .and_then(|r| r.strip_suffix(')'));
        let beta = match inner {
            Some(arg) => {
                let x = arg.parse::<f64>().map_err(|_| bad())?;
                if x <= 0.0 {
                    return Err(bad());
                }
                if coef.fract() == 0.0 && coef.abs() <= 64.0 {
                    Beta::log(x.powi(coef as i32))
                } else {
                    Beta::new(coef * x.ln())
                }
            }
            None if t.contains('*') => return Err(bad()),
            None => Beta::new(t.parse::<f64>().map_err(|_| bad())?),
        };
        if !beta.value.is_finite() {
            return Err(bad());
        }
        Ok(beta)
    }
}

impl Serialize for Beta {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.value.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Beta {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(Beta::new(x)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbolic_forms_keep_exact_exponential() {
        let b: Beta = "log(3)".parse().unwrap();
        assert_eq!(b.exp(), 3.0);
        assert!((b.value() - 3f64.ln()).abs() < 1e-15);
        let b2: Beta = "2*log(3)".parse().unwrap();
        assert_eq!(b2.exp(), 9.0);
        let b3: Beta = " 0.5 ".parse().unwrap();
        assert_eq!(b3.value(), 0.5);
        assert!("log(-1)".parse::<Beta>().is_err());
        assert!("abc".parse::<Beta>().is_err());
    }

    #[test]
    fn serde_accepts_numbers_and_strings() {
        let b: Beta = serde_json::from_str("\"log(2)\"").unwrap();
        assert_eq!(b.exp(), 2.0);
        let b: Beta = serde_json::from_str("1.5").unwrap();
        assert_eq!(b.value(), 1.5);
    }
}
