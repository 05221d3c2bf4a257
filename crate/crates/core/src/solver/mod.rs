//! Leapfrog time stepping of the damped viscoelastic wave equation with a
//! delayed velocity feedback:
//!
//! ```text
//! u_tt - Δu + ∫₀^t g(t-s) Δu(s) ds + a0 u_t + a1 u_t(t - τ(t)) = 0
//! ```
//!
//! The `a0` term is semi-implicit (centered velocity folded into the
//! update), the memory and delay terms are explicit.

mod convolution;
mod run;

pub use convolution::{ConvolutionEngine, EngineMode, MemorySnapshot};
pub use run::{choose_dt, run, run_setup, setup_for, RunOutput, Snapshot};

use crate::delay::{DelayProfile, HistoryBuffer, TransportField};
use crate::error::{Error, Result};
use crate::feasibility::DampingPair;
use crate::field::{Grid, GridFunction, Profile};
use crate::kernel::RelaxationKernel;

/// `max |u|` above this aborts the run.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

/// Where the pre-history `f0(x, s)`, `s < 0`, comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum HistoryShape {
    /// Constant extension of the initial velocity.
    InitialVelocity,
    Profile(Profile),
}

/// `f0(x, s) = e^{rate s} · shape(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HistorySpec {
    pub shape: HistoryShape,
    pub rate: f64,
}

impl Default for HistorySpec {
    fn default() -> Self {
        HistorySpec {
            shape: HistoryShape::InitialVelocity,
            rate: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub u0: Profile,
    pub u1: Profile,
    pub f0: HistorySpec,
}

impl Default for InitialData {
    fn default() -> Self {
        InitialData {
            u0: Profile::Sine {
                modes: vec![1],
                amplitude: 1.0,
            },
            u1: Profile::Zero,
            f0: HistorySpec::default(),
        }
    }
}

/// Everything needed to build a [`Simulation`].
#[derive(Debug, Clone)]
pub struct SimSetup {
    pub grid: Grid,
    pub kernel: RelaxationKernel,
    pub delay: DelayProfile,
    pub pair: DampingPair,
    pub engine: EngineMode,
    pub dt: f64,
    /// Pre-sampled `u0`, `u1` and the spatial factor of `f0`.
    pub u0: GridFunction,
    pub u1: GridFunction,
    pub history_shape: GridFunction,
    pub history_rate: f64,
    /// Resolution of the transport cross-check, if enabled.
    pub transport_n_rho: Option<usize>,
    /// Keep velocity snapshots in the history ring even when `a1 = 0`.
    pub delay_buffer: bool,
}

impl SimSetup {
    pub fn new(
        grid: Grid,
        kernel: RelaxationKernel,
        delay: DelayProfile,
        pair: DampingPair,
        engine: EngineMode,
        dt: f64,
        init: &InitialData,
    ) -> Self {
        let u0 = init.u0.sample(&grid);
        let u1 = init.u1.sample(&grid);
        let history_shape = match &init.f0.shape {
            HistoryShape::InitialVelocity => u1.clone(),
            HistoryShape::Profile(p) => p.sample(&grid),
        };
        SimSetup {
            grid,
            kernel,
            delay,
            pair,
            engine,
            dt,
            u0,
            u1,
            history_shape,
            history_rate: init.f0.rate,
            transport_n_rho: None,
            delay_buffer: true,
        }
    }

    /// Multiplies all initial data by `alpha`.
    pub fn scale_data(&mut self, alpha: f64) {
        self.u0 = self.u0.scaled(alpha);
        self.u1 = self.u1.scaled(alpha);
        self.history_shape = self.history_shape.scaled(alpha);
    }

    fn history(&self) -> impl Fn(f64, &mut [f64]) + '_ {
        move |s, out| {
            let w = (self.history_rate * s).exp();
            for (o, x) in out.iter_mut().zip(self.history_shape.values()) {
                *o = w * x;
            }
        }
    }
}

/// Discrete state complete at `t_n`: `u = uⁿ`, `v = vⁿ`, the convolution
/// at `t_n`, history through `t_n`, plus the already computed `uⁿ⁺¹`.
pub struct SimState {
    step: usize,
    u: GridFunction,
    u_next: GridFunction,
    v: GridFunction,
    conv: ConvolutionEngine,
    buf: HistoryBuffer,
    transport: Option<TransportField>,
}

impl SimState {
    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn u(&self) -> &GridFunction {
        &self.u
    }

    pub fn u_next(&self) -> &GridFunction {
        &self.u_next
    }

    /// Centered velocity `(uⁿ⁺¹ - uⁿ⁻¹) / 2dt` (exactly `u1` at `t = 0`).
    pub fn v(&self) -> &GridFunction {
        &self.v
    }

    pub fn convolution(&self) -> &ConvolutionEngine {
        &self.conv
    }

    pub fn history(&self) -> &HistoryBuffer {
        &self.buf
    }

    pub fn transport(&self) -> Option<&TransportField> {
        self.transport.as_ref()
    }
}

pub struct Simulation {
    setup: SimSetup,
    state: SimState,
    force: Vec<f64>,
    memory: Vec<f64>,
    scratch: Vec<f64>,
    delayed: Vec<f64>,
    spare: GridFunction,
}

impl Simulation {
    pub fn new(setup: SimSetup) -> Result<Self> {
        let grid = setup.grid;
        let dt = setup.dt;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Domain(format!("time step {dt} must be > 0")));
        }
        if dt > setup.delay.tau_min() {
            return Err(Error::Domain(format!(
                "time step {dt} exceeds the minimal delay {}",
                setup.delay.tau_min()
            )));
        }
        if setup.engine == EngineMode::Recursive && setup.kernel.prony_modes().is_none() {
            return Err(Error::InvalidKernel(
                "recursive engine requires Prony kernel".into(),
            ));
        }
        for f in [&setup.u0, &setup.u1, &setup.history_shape] {
            if f.shape() != grid.shape() {
                return Err(Error::ShapeMismatch {
                    left: f.shape(),
                    right: grid.shape(),
                });
            }
        }
        let a0 = setup.pair.a0();
        let a1 = setup.pair.a1();
        let tau0 = setup.delay.tau(0.0);
        let store_fields = setup.delay_buffer || a1 != 0.0 || setup.transport_n_rho.is_some();
        let mut buf = HistoryBuffer::new(grid, dt, setup.delay.tau_max(), store_fields);
        buf.seed(tau0, &setup.u1, setup.history());
        let transport = setup
            .transport_n_rho
            .map(|n_rho| TransportField::new(grid, n_rho, tau0, &setup.u1, setup.history()));
        let conv = ConvolutionEngine::new(grid, &setup.kernel, setup.engine, dt, &setup.u0);

        // u¹ from the fictitious level u⁻¹ = u¹ - 2 dt u1, which makes the
        // centered velocity at t = 0 exactly u1.
        let n = grid.len();
        let mut force = vec![0.0; n];
        grid.laplacian_into(setup.u0.values(), &mut force);
        if a1 != 0.0 {
            let mut delayed = vec![0.0; n];
            buf.delayed_velocity_into(0.0, tau0, &mut delayed)?;
            for (f, d) in force.iter_mut().zip(&delayed) {
                *f -= a1 * d;
            }
        }
        let mut u_next = grid.zeros();
        let c1 = dt * (1.0 - 0.5 * a0 * dt);
        let c2 = 0.5 * dt * dt;
        for (((o, u0), u1), f) in u_next
            .values_mut()
            .iter_mut()
            .zip(setup.u0.values())
            .zip(setup.u1.values())
            .zip(&force)
        {
            *o = u0 + c1 * u1 + c2 * f;
        }
        check_divergence(&u_next, dt)?;

        let state = SimState {
            step: 0,
            u: setup.u0.clone(),
            u_next,
            v: setup.u1.clone(),
            conv,
            buf,
            transport,
        };
        Ok(Simulation {
            setup,
            state,
            force,
            memory: vec![0.0; n],
            scratch: vec![0.0; n],
            delayed: vec![0.0; n],
            spare: grid.zeros(),
        })
    }

    pub fn setup(&self) -> &SimSetup {
        &self.setup
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn grid(&self) -> &Grid {
        &self.setup.grid
    }

    pub fn dt(&self) -> f64 {
        self.setup.dt
    }

    pub fn time(&self) -> f64 {
        self.state.step as f64 * self.setup.dt
    }

    /// Memory term `∫₀^t g(t-s) Δu(s) ds` at the current time.
    pub fn memory_force(&self) -> GridFunction {
        self.state.conv.memory_force()
    }

    /// Advances the complete state from `t_n` to `t_{n+1}`.
    pub fn step(&mut self) -> Result<()> {
        let grid = self.setup.grid;
        let dt = self.setup.dt;
        let a0 = self.setup.pair.a0();
        let a1 = self.setup.pair.a1();
        let st = &mut self.state;
        let t_next = (st.step + 1) as f64 * dt;

        st.conv.advance(st.u_next.values());
        grid.laplacian_into(st.u_next.values(), &mut self.force);
        st.conv
            .memory_force_into(&mut self.scratch, &mut self.memory);
        for (f, m) in self.force.iter_mut().zip(&self.memory) {
            *f -= m;
        }
        if a1 != 0.0 {
            let tau = self.setup.delay.tau(t_next);
            st.buf
                .delayed_velocity_into(t_next, tau, &mut self.delayed)?;
            for (f, d) in self.force.iter_mut().zip(&self.delayed) {
                *f -= a1 * d;
            }
        }

        // (1 + a0 dt/2) uⁿ⁺² = 2 uⁿ⁺¹ - (1 - a0 dt/2) uⁿ + dt² F
        let lo = 1.0 - 0.5 * a0 * dt;
        let inv_hi = 1.0 / (1.0 + 0.5 * a0 * dt);
        let dt2 = dt * dt;
        let inv_2dt = 0.5 / dt;
        let mut u_new = std::mem::replace(&mut self.spare, GridFunction::zeros((0, 0)));
        for ((((un, v), &prev), &cur), &f) in u_new
            .values_mut()
            .iter_mut()
            .zip(st.v.values_mut())
            .zip(st.u.values())
            .zip(st.u_next.values())
            .zip(&self.force)
        {
            *un = (2.0 * cur - lo * prev + dt2 * f) * inv_hi;
            *v = (*un - prev) * inv_2dt;
        }
        st.buf.push(st.step as i64 + 1, st.v.values());
        if let Some(z) = st.transport.as_mut() {
            let t_now = st.step as f64 * dt;
            z.step(
                self.setup.delay.tau(t_now),
                self.setup.delay.rate(t_now),
                st.v.values(),
                dt,
            )?;
        }
        // rotate: uⁿ⁺¹ -> u, uⁿ⁺² -> u_next, uⁿ's storage -> spare
        let old_u = std::mem::replace(&mut st.u, std::mem::replace(&mut st.u_next, u_new));
        self.spare = old_u;
        st.step += 1;
        check_divergence(&st.u_next, t_next)
    }
}

fn check_divergence(u: &GridFunction, t: f64) -> Result<()> {
    let max_abs = u.max_abs();
    if !u.is_finite() || max_abs > DIVERGENCE_THRESHOLD {
        return Err(Error::Divergence {
            t,
            max_abs: if u.is_finite() {
                max_abs
            } else {
                f64::INFINITY
            },
        });
    }
    Ok(())
}
