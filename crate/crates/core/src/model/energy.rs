use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Power-law energy term `a * x^beta` attached to one resource at one site.
///
/// The site (a location or a cloud) is implied by the list that owns the term.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyTerm {
    pub resource: usize,
    pub coefficient: f64,
    pub exponent: f64,
}

impl EnergyTerm {
    pub fn new(resource: usize, coefficient: f64, exponent: f64) -> Self {
        Self {
            resource,
            coefficient,
            exponent,
        }
    }

    /// Value and first derivative at `x`. See [`energy_eval`].
    pub fn eval(&self, x: f64) -> Result<(f64, f64)> {
        energy_eval(x, self)
    }

    /// Unchecked value, used inside the solver where `x >= 0` already holds.
    pub(crate) fn value(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            self.coefficient * x.powf(self.exponent)
        }
    }

    pub(crate) fn derivative(&self, x: f64) -> f64 {
        if self.exponent == 1.0 {
            self.coefficient
        } else if x <= 0.0 {
            0.0
        } else {
            self.coefficient * self.exponent * x.powf(self.exponent - 1.0)
        }
    }
}

/// Evaluates `a * x^beta` and its derivative `a * beta * x^(beta - 1)`.
///
/// At `x = 0` the derivative is the one-sided limit: `0` for `beta > 1` and
/// `a` for `beta = 1`.
pub fn energy_eval(x: f64, term: &EnergyTerm) -> Result<(f64, f64)> {
    if x < 0.0 || x.is_nan() {
        return Err(Error::NegativeUsage(x));
    }
    Ok((term.value(x), term.derivative(x)))
}

/// Sums of energy terms evaluated on a per-resource usage vector.
pub(crate) fn site_energy(terms: &[EnergyTerm], usage: &[f64]) -> f64 {
    terms.iter().map(|t| t.value(usage[t.resource])).sum()
}

/// Derivative of the site energy with respect to the usage of `resource`.
pub(crate) fn site_energy_gradient(terms: &[EnergyTerm], usage: &[f64], resource: usize) -> f64 {
    terms
        .iter()
        .filter(|t| t.resource == resource)
        .map(|t| t.derivative(usage[resource]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_rule() {
        let t = EnergyTerm::new(0, 1.0, 2.0);
        assert_eq!(energy_eval(2.0, &t).unwrap(), (4.0, 4.0));
    }

    #[test]
    fn linear_case() {
        let t = EnergyTerm::new(0, 1.0, 1.0);
        assert_eq!(energy_eval(3.0, &t).unwrap(), (3.0, 1.0));
        assert_eq!(energy_eval(0.0, &t).unwrap(), (0.0, 1.0));
    }

    #[test]
    fn zero_boundary() {
        let t = EnergyTerm::new(0, 1.0, 2.0);
        assert_eq!(energy_eval(0.0, &t).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn negative_usage_rejected() {
        let t = EnergyTerm::new(0, 1.0, 2.0);
        assert!(matches!(
            energy_eval(-1.0, &t),
            Err(Error::NegativeUsage(_))
        ));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for &beta in &[1.0, 1.3, 1.5, 2.0, 2.5, 3.0] {
            let t = EnergyTerm::new(0, 0.7, beta);
            let mut x = 0.1;
            while x <= 100.0 {
                let h = 1e-5 * x;
                let fd = (t.value(x + h) - t.value(x - h)) / (2.0 * h);
                let (_, g) = energy_eval(x, &t).unwrap();
                assert!(
                    ((g - fd) / g).abs() < 1e-6,
                    "beta={beta} x={x} g={g} fd={fd}"
                );
                x *= 1.7;
            }
        }
    }
}
