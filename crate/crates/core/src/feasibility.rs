//! Admissibility of the damping pair against the delay, and the choice of
//! the energy weight `ξ` and exponential weight `λ`.

use std::fmt;

use crate::delay::DelayProfile;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampingPair {
    a0: f64,
    a1: f64,
}

impl DampingPair {
    pub fn new(a0: f64, a1: f64) -> Result<Self> {
        if !(a0.is_finite() && a0 > 0.0) {
            return Err(Error::Domain(format!("a0 = {a0} must be > 0")));
        }
        if !a1.is_finite() {
            return Err(Error::Domain(format!("a1 = {a1} must be finite")));
        }
        Ok(DampingPair { a0, a1 })
    }

    /// Pair used by the undamped baselines; skips the `a0 > 0` check.
    pub fn undamped(a1: f64) -> Self {
        DampingPair { a0: 0.0, a1 }
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn a1(&self) -> f64 {
        self.a1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Feasible,
    Infeasible,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Feasible => "feasible",
            Verdict::Infeasible => "infeasible",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityCertificate {
    pub verdict: Verdict,
    pub a0: f64,
    pub a1: f64,
    pub d: f64,
    pub tau_bar: f64,
    /// `sqrt(1-d) a0 - |a1|`.
    pub margin: f64,
    /// Open interval for `ξ`; `None` when infeasible.
    pub xi_interval: Option<(f64, f64)>,
    pub xi_chosen: f64,
    /// Supremum for `λ`; infinite when `a1 = 0`.
    pub lambda_bound: f64,
    pub lambda_cap: f64,
    pub lambda_chosen: f64,
}

impl FeasibilityCertificate {
    pub fn is_feasible(&self) -> bool {
        self.verdict == Verdict::Feasible
    }

    /// Flat `key=value` block.
    pub fn to_kv(&self) -> String {
        let (lo, hi) = match self.xi_interval {
            Some((lo, hi)) => (format!("{lo:?}"), format!("{hi:?}")),
            None => ("none".into(), "none".into()),
        };
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            s.push_str(k);
            s.push('=');
            s.push_str(&v);
            s.push('\n');
        };
        kv("verdict", self.verdict.to_string());
        kv("a0", format!("{:?}", self.a0));
        kv("a1", format!("{:?}", self.a1));
        kv("d", format!("{:?}", self.d));
        kv("tau_bar", format!("{:?}", self.tau_bar));
        kv("margin", format!("{:?}", self.margin));
        kv("xi_lo", lo);
        kv("xi_hi", hi);
        kv("xi_chosen", format!("{:?}", self.xi_chosen));
        kv(
            "xi_rule",
            "midpoint of the admissible interval (convention)".into(),
        );
        kv("lambda_bound", fmt_bound(self.lambda_bound));
        kv("lambda_cap", format!("{:?}", self.lambda_cap));
        kv("lambda_chosen", format!("{:?}", self.lambda_chosen));
        kv(
            "lambda_rule",
            "half of min(lambda_bound, lambda_cap) (convention)".into(),
        );
        s
    }
}

fn fmt_bound(x: f64) -> String {
    if x.is_infinite() {
        "inf".into()
    } else {
        format!("{x:?}")
    }
}

/// Certificate for raw parameters. `d < 1`, `tau_bar > 0`.
///
/// Infeasible certificates still carry usable weights so that unstable
/// regimes can be simulated: `ξ = |a1|/sqrt(1-d)` and `λ = 0`.
pub fn certify_raw(a0: f64, a1: f64, d: f64, tau_bar: f64) -> FeasibilityCertificate {
    assert!(d < 1.0 && tau_bar > 0.0);
    let s = (1.0 - d).sqrt();
    let abs_a1 = a1.abs();
    let margin = s * a0 - abs_a1;
    let lambda_cap = 10.0 / tau_bar;
    let xi_lo = abs_a1 / s;
    let xi_hi = 2.0 * a0 - abs_a1 / s;
    if margin > 0.0 && xi_lo < xi_hi {
        let xi = 0.5 * (xi_lo + xi_hi);
        let lambda_bound = if a1 == 0.0 {
            f64::INFINITY
        } else {
            (abs_a1 / (xi * s)).ln().abs() / tau_bar
        };
        FeasibilityCertificate {
            verdict: Verdict::Feasible,
            a0,
            a1,
            d,
            tau_bar,
            margin,
            xi_interval: Some((xi_lo, xi_hi)),
            xi_chosen: xi,
            lambda_bound,
            lambda_cap,
            lambda_chosen: 0.5 * lambda_bound.min(lambda_cap),
        }
    } else {
        FeasibilityCertificate {
            verdict: Verdict::Infeasible,
            a0,
            a1,
            d,
            tau_bar,
            margin,
            xi_interval: None,
            xi_chosen: xi_lo,
            lambda_bound: 0.0,
            lambda_cap,
            lambda_chosen: 0.0,
        }
    }
}

pub fn certify(pair: &DampingPair, profile: &DelayProfile) -> FeasibilityCertificate {
    certify_raw(
        pair.a0(),
        pair.a1(),
        profile.speed_bound(),
        profile.tau_max(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryRow {
    pub a1: f64,
    pub verdict: Verdict,
    pub margin: f64,
}

/// Verdicts along a line of `a1` values at fixed `a0` and `d`.
pub fn sweep_boundary(a0: f64, d: f64, a1_values: &[f64]) -> Vec<BoundaryRow> {
    a1_values
        .iter()
        .map(|&a1| {
            let c = certify_raw(a0, a1, d, 1.0);
            BoundaryRow {
                a1,
                verdict: c.verdict,
                margin: c.margin,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feasible_example() {
        let c = certify_raw(1.0, 0.5, 0.0, 1.0);
        assert!(c.is_feasible());
        assert_eq!(c.xi_interval, Some((0.5, 1.5)));
        assert_eq!(c.xi_chosen, 1.0);
        assert!((c.lambda_bound - 0.5f64.ln().abs()).abs() < 1e-15);
        assert!((c.lambda_bound - std::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(c.lambda_chosen, 0.5 * c.lambda_bound);
    }

    #[test]
    fn infeasible_example() {
        let c = certify_raw(1.0, 1.2, 0.19, 1.0);
        assert_eq!(c.verdict, Verdict::Infeasible);
        assert!((c.margin + 0.3).abs() < 1e-12);
        assert_eq!(c.xi_interval, None);
    }

    #[test]
    fn zero_feedback_example() {
        let c = certify_raw(1.0, 0.0, 0.0, 2.0);
        assert!(c.is_feasible());
        assert_eq!(c.xi_interval, Some((0.0, 2.0)));
        assert!(c.lambda_bound.is_infinite());
        assert_eq!(c.lambda_chosen, 0.5 * c.lambda_cap);
        assert_eq!(c.lambda_cap, 5.0);
        assert!(c.to_kv().contains("lambda_bound=inf\n"));
    }

    #[test]
    fn boundary_sweep() {
        let rows = sweep_boundary(1.0, 0.0, &[0.9, 0.99, 1.01]);
        let v: Vec<_> = rows.iter().map(|r| r.verdict).collect();
        assert_eq!(
            v,
            [Verdict::Feasible, Verdict::Feasible, Verdict::Infeasible]
        );
        let grid: Vec<f64> = (-20..=20).map(|i| i as f64 * 0.1).collect();
        let rows = sweep_boundary(1.3, 0.4, &grid);
        for (r, m) in rows.iter().zip(rows.iter().rev()) {
            assert_eq!(r.verdict, m.verdict);
            assert_eq!(r.margin, m.margin);
        }
        // approaching d -> 1 kills feasibility for fixed a1 != 0
        let last = (1..50)
            .map(|k| 1.0 - 0.5f64.powi(k))
            .map(|d| certify_raw(1.0, 0.1, d, 1.0).verdict)
            .next_back()
            .unwrap();
        assert_eq!(last, Verdict::Infeasible);
    }

    #[test]
    fn certificate_from_profile() {
        let pair = DampingPair::new(1.0, -0.5).unwrap();
        let prof = DelayProfile::sinusoidal(1.0, 0.3, 1.0).unwrap();
        let c = certify(&pair, &prof);
        assert!(c.is_feasible());
        assert_eq!(c.tau_bar, 1.3);
        assert!(DampingPair::new(0.0, 0.1).is_err());
    }
}
