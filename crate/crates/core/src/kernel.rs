//! Relaxation kernels `g` and the decay witnesses `ξ` that bound their
//! logarithmic derivative.
//!
//! Every kernel in the catalog has closed-form values, derivatives and tail
//! masses. Constructors reject kernels whose total mass is not below one, so
//! a constructed kernel always leaves a positive residual stiffness
//! `l = 1 - ∫₀^∞ g`.

use crate::error::{Error, Result};

/// One exponential mode `c · e^{-a t}` of a Prony series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PronyMode {
    pub amplitude: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RelaxationKernel {
    /// `g(t) = Σ cᵢ e^{-aᵢ t}`.
    PronySum(Vec<PronyMode>),
    /// `g(t) = g₀ (1 + t)^{-p}`.
    PowerLaw { amplitude: f64, exponent: f64 },
    /// No memory at all.
    Zero,
}

impl RelaxationKernel {
    pub fn prony(modes: &[(f64, f64)]) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::InvalidKernel(
                "prony kernel needs at least one mode (use the zero kernel for no memory)".into(),
            ));
        }
        let mut out = Vec::with_capacity(modes.len());
        for (i, &(c, a)) in modes.iter().enumerate() {
            if !(c.is_finite() && c >= 0.0) {
                return Err(Error::InvalidKernel(format!(
                    "mode {i}: amplitude {c} must be finite and >= 0"
                )));
            }
            if !(a.is_finite() && a > 0.0) {
                return Err(Error::InvalidKernel(format!(
                    "mode {i}: rate {a} must be finite and > 0"
                )));
            }
            out.push(PronyMode {
                amplitude: c,
                rate: a,
            });
        }
        if out.iter().all(|m| m.amplitude == 0.0) {
            return Err(Error::InvalidKernel(
                "all prony amplitudes are zero; g must be positive".into(),
            ));
        }
        let k = RelaxationKernel::PronySum(out);
        k.check_residual_stiffness()?;
        Ok(k)
    }

    pub fn power_law(amplitude: f64, exponent: f64) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude > 0.0) {
            return Err(Error::InvalidKernel(format!(
                "power-law amplitude {amplitude} must be > 0"
            )));
        }
        if !(exponent.is_finite() && exponent > 1.0) {
            return Err(Error::InvalidKernel(format!(
                "power-law exponent {exponent} must be > 1 for a finite mass"
            )));
        }
        let k = RelaxationKernel::PowerLaw {
            amplitude,
            exponent,
        };
        k.check_residual_stiffness()?;
        Ok(k)
    }

    fn check_residual_stiffness(&self) -> Result<()> {
        let mass = self.total_mass();
        if mass >= 1.0 {
            return Err(Error::InvalidKernel(format!(
                "total mass {mass} leaves l = {} <= 0",
                1.0 - mass
            )));
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, RelaxationKernel::Zero)
    }

    /// Modes of a Prony kernel, empty for the zero kernel, `None` otherwise.
    pub fn prony_modes(&self) -> Option<&[PronyMode]> {
        match self {
            RelaxationKernel::PronySum(m) => Some(m),
            RelaxationKernel::Zero => Some(&[]),
            RelaxationKernel::PowerLaw { .. } => None,
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.value(t))
    }

    /// Unchecked `g(t)`; callers guarantee `t >= 0`.
    pub(crate) fn value(&self, t: f64) -> f64 {
        match self {
            RelaxationKernel::PronySum(modes) => modes
                .iter()
                .map(|m| m.amplitude * (-m.rate * t).exp())
                .sum(),
            RelaxationKernel::PowerLaw {
                amplitude,
                exponent,
            } => amplitude * (1.0 + t).powf(-exponent),
            RelaxationKernel::Zero => 0.0,
        }
    }

    pub fn derivative(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(match self {
            RelaxationKernel::PronySum(modes) => modes
                .iter()
                .map(|m| -m.amplitude * m.rate * (-m.rate * t).exp())
                .sum(),
            RelaxationKernel::PowerLaw {
                amplitude,
                exponent,
            } => -exponent * amplitude * (1.0 + t).powf(-exponent - 1.0),
            RelaxationKernel::Zero => 0.0,
        })
    }

    /// `∫_t^∞ g(s) ds` in closed form.
    pub fn mass_tail(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(match self {
            RelaxationKernel::PronySum(modes) => modes
                .iter()
                .map(|m| m.amplitude / m.rate * (-m.rate * t).exp())
                .sum(),
            RelaxationKernel::PowerLaw {
                amplitude,
                exponent,
            } => amplitude / (exponent - 1.0) * (1.0 + t).powf(1.0 - exponent),
            RelaxationKernel::Zero => 0.0,
        })
    }

    pub fn total_mass(&self) -> f64 {
        self.mass_tail(0.0).expect("t = 0 is in the domain")
    }

    /// `∫₀^t g(s) ds`.
    pub fn mass_up_to(&self, t: f64) -> Result<f64> {
        Ok(self.total_mass() - self.mass_tail(t)?)
    }

    /// Residual stiffness `l = 1 - ∫₀^∞ g`.
    pub fn residual_stiffness(&self) -> f64 {
        1.0 - self.total_mass()
    }

    /// The witness that makes `g' <= -ξ g` hold with the tightest constant
    /// the catalog allows.
    pub fn canonical_witness(&self) -> DecayWitness {
        match self {
            RelaxationKernel::PronySum(modes) => DecayWitness::Constant(
                modes
                    .iter()
                    .filter(|m| m.amplitude > 0.0)
                    .map(|m| m.rate)
                    .fold(f64::INFINITY, f64::min),
            ),
            RelaxationKernel::PowerLaw { exponent, .. } => DecayWitness::Hyperbolic(*exponent),
            RelaxationKernel::Zero => DecayWitness::Constant(1.0),
        }
    }
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("kernel evaluated at t = {t} < 0")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayWitness {
    /// `ξ(t) = a`.
    Constant(f64),
    /// `ξ(t) = a / (1 + t)`.
    Hyperbolic(f64),
}

impl DecayWitness {
    pub fn constant(a: f64) -> Result<Self> {
        Self::check_rate(a)?;
        Ok(DecayWitness::Constant(a))
    }

    pub fn hyperbolic(a: f64) -> Result<Self> {
        Self::check_rate(a)?;
        Ok(DecayWitness::Hyperbolic(a))
    }

    fn check_rate(a: f64) -> Result<()> {
        if a.is_finite() && a > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidKernel(format!(
                "decay witness coefficient {a} must be > 0"
            )))
        }
    }

    pub fn coefficient(&self) -> f64 {
        match *self {
            DecayWitness::Constant(a) | DecayWitness::Hyperbolic(a) => a,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            DecayWitness::Constant(a) => a,
            DecayWitness::Hyperbolic(a) => a / (1.0 + t),
        }
    }

    /// `∫_{t0}^{t} ξ(s) ds`.
    pub fn integral(&self, t0: f64, t: f64) -> f64 {
        match *self {
            DecayWitness::Constant(a) => a * (t - t0),
            DecayWitness::Hyperbolic(a) => a * ((1.0 + t) / (1.0 + t0)).ln(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WitnessVerdict {
    Holds,
    ViolatedAt(f64),
}

impl WitnessVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, WitnessVerdict::Holds)
    }
}

/// Log-spaced sample times on `[0, t_max]`, starting exactly at 0.
pub fn log_spaced_times(t_max: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && t_max > 0.0);
    let top = (1.0 + t_max).ln();
    (0..n)
        .map(|i| (top * i as f64 / (n - 1) as f64).exp() - 1.0)
        .collect()
}

/// Default sample grid for the witness check: 512 log-spaced points on
/// `[0, 10 τ̄ + 50]`.
pub fn default_witness_samples(tau_bar: f64) -> Vec<f64> {
    log_spaced_times(10.0 * tau_bar + 50.0, 512)
}

const WITNESS_REL_TOL: f64 = 1e-12;

/// Checks `g'(t) <= -ξ(t) g(t)` at every sample time using the closed-form
/// derivative. Equality cases are accepted up to a relative rounding slack.
pub fn check_witness(
    kernel: &RelaxationKernel,
    witness: &DecayWitness,
    samples: &[f64],
) -> Result<WitnessVerdict> {
    if kernel.is_zero() {
        return Err(Error::Inapplicable(
            "the zero kernel has no decay condition to verify".into(),
        ));
    }
    for &t in samples {
        let dg = kernel.derivative(t)?;
        let bound = -witness.eval(t) * kernel.value(t);
        if dg > bound + WITNESS_REL_TOL * bound.abs() {
            return Ok(WitnessVerdict::ViolatedAt(t));
        }
    }
    Ok(WitnessVerdict::Holds)
}
