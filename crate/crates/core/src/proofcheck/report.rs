use serde::Serialize;

use crate::numerics::log_log_slope;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `measured ≤ bound·(1 + slack) + allowance`.
    AtMost,
    /// `measured ≥ bound`.
    AtLeast,
}

/// One assertable inequality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckEntry {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    pub slack: f64,
    /// Absolute allowance for an asymptotic remainder, fitted on coarser rungs.
    pub allowance: f64,
    pub comparison: Comparison,
    pub pass: bool,
    pub fitted_exponent: Option<f64>,
    pub fitted_constant: Option<f64>,
    pub detail: String,
}

impl CheckEntry {
    pub fn at_most(name: &str, measured: f64, bound: f64, slack: f64) -> Self {
        Self::at_most_with_allowance(name, measured, bound, slack, 0.0)
    }

    pub fn at_most_with_allowance(name: &str, measured: f64, bound: f64, slack: f64, allowance: f64) -> Self {
        let limit = bound * (1.0 + slack) + allowance;
        Self {
            name: name.to_string(),
            measured,
            bound,
            slack,
            allowance,
            comparison: Comparison::AtMost,
            pass: measured <= limit * (1.0 + 1e-12),
            fitted_exponent: None,
            fitted_constant: None,
            detail: String::new(),
        }
    }

    pub fn at_least(name: &str, measured: f64, bound: f64) -> Self {
        Self {
            name: name.to_string(),
            measured,
            bound,
            slack: 0.0,
            allowance: 0.0,
            comparison: Comparison::AtLeast,
            pass: measured >= bound,
            fitted_exponent: None,
            fitted_constant: None,
            detail: String::new(),
        }
    }

    /// A check that could not be evaluated.
    pub fn failed(name: &str, detail: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            measured: f64::NAN,
            bound: f64::NAN,
            slack: 0.0,
            allowance: 0.0,
            comparison: Comparison::AtMost,
            pass: false,
            fitted_exponent: None,
            fitted_constant: None,
            detail: detail.into(),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    pub fn with_fit(mut self, exponent: Option<f64>, constant: Option<f64>) -> Self {
        self.fitted_exponent = exponent;
        self.fitted_constant = constant;
        self
    }

    /// Measured over the limit it is compared against; `≤ 1` passes an
    /// `AtMost` check.
    pub fn ratio(&self) -> f64 {
        match self.comparison {
            Comparison::AtMost => {
                let limit = self.bound * (1.0 + self.slack) + self.allowance;
                if limit > 0.0 {
                    self.measured / limit
                } else if self.measured <= 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Comparison::AtLeast => {
                if self.measured > 0.0 {
                    self.bound / self.measured
                } else {
                    f64::INFINITY
                }
            }
        }
    }
}

/// A measurement and its leading-order bound at one discretization level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rung {
    pub steps: u64,
    pub measured: f64,
    pub bound: f64,
}

/// Asymptotic inequality `y(L) ≤ b(L)(1 + slack) + C/L^order`.
///
/// `rungs[0]` is the finest level. `C` is the largest excess
/// `(y − b(1+slack))·L^order` over the coarser rungs; the finest rung must then
/// satisfy the inequality with that `C`. The excess exponent is reported
/// when at least two rungs have a positive excess.
pub fn ladder_entry(name: &str, rungs: &[Rung], slack: f64, order: i32) -> CheckEntry {
    assert!(!rungs.is_empty());
    let excess: Vec<f64> = rungs.iter().map(|r| r.measured - r.bound * (1.0 + slack)).collect();
    let constant = rungs[1..]
        .iter()
        .zip(&excess[1..])
        .map(|(r, e)| e.max(0.0) * (r.steps as f64).powi(order))
        .fold(0.0, f64::max);
    let finest = rungs[0];
    let allowance = constant / (finest.steps as f64).powi(order);
    let ls: Vec<f64> = rungs.iter().map(|r| r.steps as f64).collect();
    let exponent = log_log_slope(&ls, &excess).map(|s| -s);
    CheckEntry::at_most_with_allowance(name, finest.measured, finest.bound, slack, allowance)
        .with_fit(exponent, Some(constant))
        .with_detail(format!(
            "L = {}; remainder order {order}; rungs {}",
            finest.steps,
            rungs
                .iter()
                .map(|r| format!("{}:{:.3e}/{:.3e}", r.steps, r.measured, r.bound))
                .collect::<Vec<_>>()
                .join(" ")
        ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rungs(f: impl Fn(f64) -> (f64, f64)) -> Vec<Rung> {
        (0..5)
            .map(|i| {
                let l = 1600u64 >> i;
                let (y, b) = f(l as f64);
                Rung {
                    steps: l,
                    measured: y,
                    bound: b,
                }
            })
            .collect()
    }

    #[test]
    fn remainder_of_the_declared_order_passes() {
        let e = ladder_entry("x", &rungs(|l| (1.0 / l + 5.0 / (l * l), 1.0 / l)), 0.0, 2);
        assert!(e.pass, "{e:?}");
        assert!((e.fitted_exponent.unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn leading_order_violation_fails() {
        let e = ladder_entry("x", &rungs(|l| (2.0 / l, 1.0 / l)), 0.05, 2);
        assert!(!e.pass);
    }

    #[test]
    fn slower_remainder_fails() {
        let e = ladder_entry("x", &rungs(|l| (1.0 / l + 1.0 / l.powf(1.5), 1.0 / l)), 0.0, 2);
        assert!(!e.pass);
    }

    #[test]
    fn entries_compare_as_declared() {
        assert!(CheckEntry::at_most("a", 1.05, 1.0, 0.05).pass);
        assert!(!CheckEntry::at_most("a", 1.06, 1.0, 0.05).pass);
        assert!(CheckEntry::at_least("b", 1.8, 1.7).pass);
        assert!(!CheckEntry::at_least("b", 1.6, 1.7).pass);
        assert_eq!(CheckEntry::at_most("z", 0.0, 0.0, 0.05).ratio(), 0.0);
        assert!(!CheckEntry::failed("f", "nope").pass);
    }
}
