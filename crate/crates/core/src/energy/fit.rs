//! Least-squares fit of `log E = log K - k X(t)` with `X(t) = ∫_{t0}^t ξ`.

use crate::error::{Error, Result};
use crate::kernel::DecayWitness;

#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub k_fit: f64,
    pub big_k: f64,
    pub r2: f64,
    pub t0: f64,
    pub t_end: f64,
    pub witness: DecayWitness,
    pub points: usize,
    /// `max E(t) / (K e^{-k X(t)})` over the window.
    pub envelope_ratio: f64,
    pub positive_residuals: usize,
    pub negative_residuals: usize,
}

impl DecayFit {
    pub fn abscissa(&self, t: f64) -> f64 {
        self.witness.integral(self.t0, t)
    }

    pub fn predict(&self, t: f64) -> f64 {
        self.big_k * (-self.k_fit * self.abscissa(t)).exp()
    }

    /// Pointwise `E(t) <= slack · K e^{-k X(t)}` on the window.
    pub fn envelope_holds(&self, slack: f64) -> bool {
        self.envelope_ratio <= slack
    }

    pub fn residuals_sign_mixed(&self) -> bool {
        self.positive_residuals > 0 && self.negative_residuals > 0
    }

    pub fn to_kv(&self) -> String {
        let (form, a) = match self.witness {
            DecayWitness::Constant(a) => ("constant", a),
            DecayWitness::Hyperbolic(a) => ("hyperbolic", a),
        };
        format!(
            "witness={form}\nwitness_a={a:?}\nt0={:?}\nt_end={:?}\npoints={}\nK_fit={:?}\nk_fit={:?}\nR2={:?}\nenvelope_ratio={:?}\n",
            self.t0, self.t_end, self.points, self.big_k, self.k_fit, self.r2, self.envelope_ratio
        )
    }
}

/// Fits the decay law on `t0 <= t <= t_end` (or the end of the series).
pub fn fit_decay(
    series: &[(f64, f64)],
    witness: &DecayWitness,
    t0: f64,
    t_end: Option<f64>,
) -> Result<DecayFit> {
    let t_end = t_end.unwrap_or(f64::INFINITY);
    let window: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|&(t, _)| t >= t0 && t <= t_end)
        .collect();
    if window.len() < 3 {
        return Err(Error::Fit(format!(
            "only {} samples in the window [{t0}, {t_end}]",
            window.len()
        )));
    }
    if let Some(&(t, e)) = window.iter().find(|&&(_, e)| e.is_nan() || e <= 0.0) {
        return Err(Error::Fit(format!(
            "E = {e} at t = {t} is not positive; start the window before the energy reaches the noise floor"
        )));
    }
    let xs: Vec<f64> = window
        .iter()
        .map(|&(t, _)| witness.integral(t0, t))
        .collect();
    let ys: Vec<f64> = window.iter().map(|&(_, e)| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit(
            "window has no spread in the decay abscissa".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut ss_res = 0.0;
    let mut pos = 0;
    let mut neg = 0;
    let mut envelope_ratio = 0.0f64;
    for (x, y) in xs.iter().zip(&ys) {
        let r = y - (intercept + slope * x);
        ss_res += r * r;
        if r > 0.0 {
            pos += 1;
        } else if r < 0.0 {
            neg += 1;
        }
        envelope_ratio = envelope_ratio.max(r.exp());
    }
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    let last_t = window.last().unwrap().0;
    Ok(DecayFit {
        k_fit: -slope,
        big_k: intercept.exp(),
        r2,
        t0,
        t_end: last_t,
        witness: *witness,
        points: window.len(),
        envelope_ratio,
        positive_residuals: pos,
        negative_residuals: neg,
    })
}
