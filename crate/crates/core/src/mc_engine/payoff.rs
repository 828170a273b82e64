use serde::{Deserialize, Serialize};

use crate::error::{ensure_domain, Result};

/// Terminal payoff `g(X_T)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PayoffSpec {
    Call { strike: f64 },
    Put { strike: f64 },
    /// Piecewise linear through `(prices[k], values[k])`, extended linearly
    /// beyond the end knots.
    Custom { prices: Vec<f64>, values: Vec<f64> },
}

impl PayoffSpec {
    pub fn call(strike: f64) -> Result<Self> {
        let p = Self::Call { strike };
        p.validate()?;
        Ok(p)
    }

    pub fn put(strike: f64) -> Result<Self> {
        let p = Self::Put { strike };
        p.validate()?;
        Ok(p)
    }

    pub fn custom(prices: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let p = Self::Custom { prices, values };
        p.validate()?;
        Ok(p)
    }

    /// Strikes may be zero (a zero-strike call pays `X_T`).
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Call { strike } | Self::Put { strike } => {
                ensure_domain(*strike >= 0.0 && strike.is_finite(), "strike", *strike, "strike >= 0")
            }
            Self::Custom { prices, values } => {
                ensure_domain(
                    prices.len() >= 2 && prices.len() == values.len(),
                    "custom payoff length",
                    prices.len() as f64,
                    "at least 2 knots, one value per knot",
                )?;
                ensure_domain(
                    prices.windows(2).all(|w| w[1] > w[0]),
                    "custom payoff prices",
                    prices[0],
                    "strictly increasing",
                )?;
                ensure_domain(
                    values.iter().all(|v| v.is_finite()),
                    "custom payoff values",
                    f64::NAN,
                    "finite",
                )
            }
        }
    }

    pub fn strike(&self) -> Option<f64> {
        match self {
            Self::Call { strike } | Self::Put { strike } => Some(*strike),
            Self::Custom { .. } => None,
        }
    }

    #[inline]
    pub fn evaluate(&self, x: f64) -> f64 {
        match self {
            Self::Call { strike } => (x - strike).max(0.0),
            Self::Put { strike } => (strike - x).max(0.0),
            Self::Custom { prices, values } => {
                let n = prices.len();
                let k = prices.partition_point(|&p| p <= x).clamp(1, n - 1) - 1;
                let w = (x - prices[k]) / (prices[k + 1] - prices[k]);
                values[k] + w * (values[k + 1] - values[k])
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vanilla_payoffs() {
        let c = PayoffSpec::call(50.0).unwrap();
        assert_eq!(c.evaluate(60.0), 10.0);
        assert_eq!(c.evaluate(40.0), 0.0);
        let p = PayoffSpec::put(50.0).unwrap();
        assert_eq!(p.evaluate(40.0), 10.0);
        assert!(PayoffSpec::call(-1.0).is_err());
    }

    #[test]
    fn custom_payoff_interpolates_and_extends() {
        let g = PayoffSpec::custom(vec![0.0, 10.0, 20.0], vec![0.0, 0.0, 10.0]).unwrap();
        assert_eq!(g.evaluate(15.0), 5.0);
        assert_eq!(g.evaluate(30.0), 20.0);
        assert_eq!(g.evaluate(-5.0), 0.0);
        assert!(PayoffSpec::custom(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
    }
}
