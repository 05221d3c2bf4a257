//! Energy and Lyapunov functionals along the discrete trajectory.
//!
//! The energy has four parts:
//!
//! ```text
//! E = ½‖u_t‖² + ½(1 - ∫₀^t g)‖∇u‖² + ½(g∘∇u) + ξ/2 ∫_{t-τ(t)}^t e^{λ(s-t)} ‖u_t(s)‖² ds
//! ```
//!
//! with `(g∘∇u)(t) = ∫_Ω ∫₀^t g(t-s) |∇u(t) - ∇u(s)|² ds dx`. The memory
//! part is expanded as `G₀‖∇u‖² - 2⟨∇u, ∇M⟩ + m₂`, where `M`, `m₂` and
//! `G₀` all come from the same trapezoid quadrature, so the expansion is a
//! nonnegative sum of squares up to rounding.

mod fit;

pub use fit::{fit_decay, DecayFit};

use crate::error::{Error, Result};
use crate::kernel::DecayWitness;
use crate::solver::Simulation;

/// Weights `ξ` and `λ` of the delay integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyWeights {
    pub xi: f64,
    pub lambda: f64,
}

/// `N`, `ε` of `L = N E + ε I + K`, and the surrogate `C₇` of
/// `F = ξ(t) L + C₇ E`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovWeights {
    pub n: f64,
    pub eps: f64,
    pub c7: f64,
}

impl Default for LyapunovWeights {
    fn default() -> Self {
        LyapunovWeights {
            n: 10.0,
            eps: 0.01,
            c7: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyParts {
    pub kinetic: f64,
    pub elastic: f64,
    pub memory: f64,
    pub delay: f64,
}

impl EnergyParts {
    pub fn total(&self) -> f64 {
        self.kinetic + self.elastic + self.memory + self.delay
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRecord {
    pub t: f64,
    pub e: f64,
    pub kinetic: f64,
    pub elastic: f64,
    pub memory: f64,
    pub delay: f64,
    pub i: f64,
    pub k: f64,
    pub l: f64,
    pub f: f64,
}

pub const CSV_HEADER: &str = "t,E,kinetic,elastic,memory,delay,I,K,L,F";

impl EnergyRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            self.t,
            self.e,
            self.kinetic,
            self.elastic,
            self.memory,
            self.delay,
            self.i,
            self.k,
            self.l,
            self.f
        )
    }

    pub fn parts(&self) -> EnergyParts {
        EnergyParts {
            kinetic: self.kinetic,
            elastic: self.elastic,
            memory: self.memory,
            delay: self.delay,
        }
    }
}

pub fn energy(sim: &Simulation, weights: &EnergyWeights) -> Result<EnergyParts> {
    let grid = sim.grid();
    let st = sim.state();
    let u = st.u().values();
    let v = st.v().values();
    let mem = st.convolution().snapshot();
    let grad_sq = grid.grad_inner_slices(u, u);
    let cross = grid.grad_inner_slices(u, mem.field.values());
    let kinetic = 0.5 * grid.norm_sq_slice(v);
    let elastic = 0.5 * (1.0 - mem.mass) * grad_sq;
    let memory = (0.5 * (mem.mass * grad_sq - 2.0 * cross + mem.grad_sq)).max(0.0);
    let delay = if weights.xi == 0.0 {
        0.0
    } else {
        let tau = sim.setup().delay.tau(sim.time());
        0.5 * weights.xi * st.history().weighted_window_integral(tau, weights.lambda)?
    };
    Ok(EnergyParts {
        kinetic,
        elastic,
        memory,
        delay,
    })
}

/// `(I, K, L)` with `I = ⟨u, u_t⟩`, `K = -⟨u_t, ∫₀^t g(t-s)(u(t) - u(s)) ds⟩`.
pub fn lyapunov(sim: &Simulation, e: f64, weights: &LyapunovWeights) -> (f64, f64, f64) {
    let grid = sim.grid();
    let st = sim.state();
    let u = st.u().values();
    let v = st.v().values();
    let mem = st.convolution().snapshot();
    let i = grid.inner_slices(u, v);
    let k = -grid.cell_volume()
        * v.iter()
            .zip(u)
            .zip(mem.field.values())
            .map(|((v, u), m)| v * (mem.mass * u - m))
            .sum::<f64>();
    let l = weights.n * e + weights.eps * i + k;
    (i, k, l)
}

pub fn record(
    sim: &Simulation,
    weights: &EnergyWeights,
    lyap: &LyapunovWeights,
    witness: &DecayWitness,
) -> Result<EnergyRecord> {
    let t = sim.time();
    let parts = energy(sim, weights)?;
    let e = parts.total();
    let (i, k, l) = lyapunov(sim, e, lyap);
    Ok(EnergyRecord {
        t,
        e,
        kinetic: parts.kinetic,
        elastic: parts.elastic,
        memory: parts.memory,
        delay: parts.delay,
        i,
        k,
        l,
        f: witness.eval(t) * l + lyap.c7 * e,
    })
}

pub const DEFAULT_MONOTONE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotoneReport {
    /// Largest `(E_{j+1} - E_j)⁺ / E_0`.
    pub max_uptick: f64,
    /// Time at the end of the interval with the largest uptick.
    pub at: Option<f64>,
    pub pass: bool,
}

pub fn check_monotone(series: &[EnergyRecord], tol: f64) -> MonotoneReport {
    let e0 = series.first().map_or(0.0, |r| r.e);
    let mut max_uptick = 0.0;
    let mut at = None;
    for w in series.windows(2) {
        let up = (w[1].e - w[0].e).max(0.0);
        let rel = if e0 > 0.0 { up / e0 } else { up };
        if rel > max_uptick {
            max_uptick = rel;
            at = Some(w[1].t);
        }
    }
    MonotoneReport {
        max_uptick,
        at,
        pass: max_uptick <= tol,
    }
}

/// Outputs with `E <= threshold · E(0)` are left out of ratio statistics.
pub const SIGNAL_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichReport {
    pub beta1: f64,
    pub beta2: f64,
    pub samples: usize,
    pub pass: bool,
}

/// Observed bounds `β₁ E <= L <= β₂ E`.
pub fn check_sandwich(series: &[EnergyRecord]) -> Result<SandwichReport> {
    let e0 = series.first().map_or(0.0, |r| r.e);
    let floor = SIGNAL_THRESHOLD * e0;
    let mut beta1 = f64::INFINITY;
    let mut beta2 = f64::NEG_INFINITY;
    let mut samples = 0;
    for r in series.iter().filter(|r| r.e > floor && r.e > 0.0) {
        let q = r.l / r.e;
        beta1 = beta1.min(q);
        beta2 = beta2.max(q);
        samples += 1;
    }
    if samples == 0 {
        return Err(Error::InsufficientSignal(
            "energy is below the signal threshold at every output".into(),
        ));
    }
    Ok(SandwichReport {
        beta1,
        beta2,
        samples,
        pass: beta1 > 0.0 && beta2.is_finite(),
    })
}
