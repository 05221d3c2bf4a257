//! Time-varying delays and the two representations of the delayed velocity:
//! a ring buffer of past velocity snapshots (the production path) and the
//! rescaled transport variable `z(x, ρ, t) = u_t(x, t - τ(t) ρ)` advected on
//! `ρ ∈ [0, 1]` (a cross-check).

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::field::{Grid, GridFunction};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DelayProfile {
    Constant {
        tau: f64,
    },
    /// `τ(t) = center + amplitude · sin(frequency · t)`.
    Sinusoidal {
        center: f64,
        amplitude: f64,
        frequency: f64,
    },
}

impl DelayProfile {
    pub fn constant(tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::InvalidDelay(format!("tau = {tau} must be > 0")));
        }
        Ok(DelayProfile::Constant { tau })
    }

    pub fn sinusoidal(center: f64, amplitude: f64, frequency: f64) -> Result<Self> {
        let mut problems = Vec::new();
        if !(center.is_finite() && center > 0.0) {
            problems.push(format!("tau = {center} must be > 0"));
        }
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            problems.push(format!("amp = {amplitude} must be >= 0"));
        }
        if !(frequency.is_finite() && frequency >= 0.0) {
            problems.push(format!("omega = {frequency} must be >= 0"));
        }
        if problems.is_empty() {
            if center - amplitude <= 0.0 {
                problems.push(format!(
                    "tau0 = tau - amp = {} must be > 0",
                    center - amplitude
                ));
            }
            let d = amplitude * frequency;
            if d >= 1.0 {
                problems.push(format!(
                    "d = {d} >= 1 violates the delay-speed bound tau'(t) <= d < 1"
                ));
            }
        }
        if !problems.is_empty() {
            return Err(Error::InvalidDelay(problems.join("; ")));
        }
        Ok(DelayProfile::Sinusoidal {
            center,
            amplitude,
            frequency,
        })
    }

    pub fn tau(&self, t: f64) -> f64 {
        match *self {
            DelayProfile::Constant { tau } => tau,
            DelayProfile::Sinusoidal {
                center,
                amplitude,
                frequency,
            } => center + amplitude * (frequency * t).sin(),
        }
    }

    /// `τ'(t)`.
    pub fn rate(&self, t: f64) -> f64 {
        match *self {
            DelayProfile::Constant { .. } => 0.0,
            DelayProfile::Sinusoidal {
                amplitude,
                frequency,
                ..
            } => amplitude * frequency * (frequency * t).cos(),
        }
    }

    /// Lower bound `τ₀`.
    pub fn tau_min(&self) -> f64 {
        match *self {
            DelayProfile::Constant { tau } => tau,
            DelayProfile::Sinusoidal {
                center, amplitude, ..
            } => center - amplitude,
        }
    }

    /// Upper bound `τ̄`.
    pub fn tau_max(&self) -> f64 {
        match *self {
            DelayProfile::Constant { tau } => tau,
            DelayProfile::Sinusoidal {
                center, amplitude, ..
            } => center + amplitude,
        }
    }

    /// Slope bound `d = sup τ'`.
    pub fn speed_bound(&self) -> f64 {
        match *self {
            DelayProfile::Constant { .. } => 0.0,
            DelayProfile::Sinusoidal {
                amplitude,
                frequency,
                ..
            } => amplitude * frequency,
        }
    }
}

struct Slot {
    index: i64,
    field: Vec<f64>,
    norm_sq: f64,
}

/// Ring of past velocity snapshots at times `k · dt`.
///
/// Every slot carries the discrete `‖v‖²` of its snapshot, so the delay
/// integral of the energy never touches full fields. Field storage can be
/// switched off when only those scalars are needed.
pub struct HistoryBuffer {
    grid: Grid,
    dt: f64,
    capacity: usize,
    store_fields: bool,
    slots: VecDeque<Slot>,
}

/// Offsets closer than this (in units of `dt`) to a stored time snap to it.
const SNAP: f64 = 1e-9;

impl HistoryBuffer {
    pub fn new(grid: Grid, dt: f64, tau_max: f64, store_fields: bool) -> Self {
        assert!(dt > 0.0 && tau_max > 0.0);
        let capacity = (tau_max / dt).ceil() as usize + 2;
        HistoryBuffer {
            grid,
            dt,
            capacity,
            store_fields,
            slots: VecDeque::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn stores_fields(&self) -> bool {
        self.store_fields
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn oldest_time(&self) -> Option<f64> {
        self.slots.front().map(|s| s.index as f64 * self.dt)
    }

    pub fn newest_time(&self) -> Option<f64> {
        self.slots.back().map(|s| s.index as f64 * self.dt)
    }

    pub fn newest_index(&self) -> Option<i64> {
        self.slots.back().map(|s| s.index)
    }

    /// Fills slots at `t = -K dt, …, -dt, 0` with `K = ceil(τ(0)/dt)`. The
    /// pre-history comes from `history(s, out)`; the slot at `t = 0` holds
    /// `u1`.
    pub fn seed(&mut self, tau0: f64, u1: &GridFunction, mut history: impl FnMut(f64, &mut [f64])) {
        assert!(self.slots.is_empty(), "seed requires an empty buffer");
        let k_max = (tau0 / self.dt - SNAP).ceil().max(0.0) as i64;
        let mut scratch = vec![0.0; self.grid.len()];
        for k in (1..=k_max).rev() {
            history(-(k as f64) * self.dt, &mut scratch);
            self.push(-k, &scratch);
        }
        self.push(0, u1.values());
    }

    /// Appends the snapshot for time `index · dt`, evicting the oldest slot
    /// when full.
    pub fn push(&mut self, index: i64, field: &[f64]) {
        if let Some(newest) = self.newest_index() {
            assert_eq!(index, newest + 1, "history snapshots must be contiguous");
        }
        let norm_sq = self.grid.norm_sq_slice(field);
        let mut slot = if self.slots.len() == self.capacity {
            self.slots.pop_front().unwrap()
        } else {
            Slot {
                index,
                field: Vec::new(),
                norm_sq: 0.0,
            }
        };
        slot.index = index;
        slot.norm_sq = norm_sq;
        if self.store_fields {
            slot.field.clear();
            slot.field.extend_from_slice(field);
        }
        self.slots.push_back(slot);
    }

    fn locate(&self, s: f64) -> Result<(usize, f64)> {
        let (front, back) = match (self.slots.front(), self.slots.back()) {
            (Some(f), Some(b)) => (f.index, b.index),
            _ => {
                return Err(Error::Coverage {
                    requested: s,
                    oldest: f64::NAN,
                    newest: f64::NAN,
                })
            }
        };
        let mut p = s / self.dt;
        let nearest = p.round();
        if (p - nearest).abs() < SNAP {
            p = nearest;
        }
        let k0 = p.floor();
        let w = p - k0;
        let k0 = k0 as i64;
        let in_range = k0 >= front && (k0 < back || (k0 == back && w == 0.0));
        if !in_range {
            return Err(Error::Coverage {
                requested: s,
                oldest: front as f64 * self.dt,
                newest: back as f64 * self.dt,
            });
        }
        Ok(((k0 - front) as usize, w))
    }

    /// `u_t(·, t - τ)` by linear interpolation between bracketing snapshots.
    pub fn delayed_velocity(&self, t: f64, tau: f64) -> Result<GridFunction> {
        let mut out = self.grid.zeros();
        self.delayed_velocity_into(t, tau, out.values_mut())?;
        Ok(out)
    }

    pub fn delayed_velocity_into(&self, t: f64, tau: f64, out: &mut [f64]) -> Result<()> {
        assert!(
            self.store_fields,
            "history buffer was built without field storage"
        );
        let (pos, w) = self.locate(t - tau)?;
        let a = &self.slots[pos].field;
        if w == 0.0 {
            out.copy_from_slice(a);
        } else {
            let b = &self.slots[pos + 1].field;
            for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
                *o = (1.0 - w) * x + w * y;
            }
        }
        Ok(())
    }

    /// Interpolated `‖v(s)‖²`.
    pub fn norm_sq_at(&self, s: f64) -> Result<f64> {
        let (pos, w) = self.locate(s)?;
        let a = self.slots[pos].norm_sq;
        if w == 0.0 {
            Ok(a)
        } else {
            Ok((1.0 - w) * a + w * self.slots[pos + 1].norm_sq)
        }
    }

    /// Trapezoid approximation of `∫_{t-τ}^{t} e^{λ(s-t)} ‖v(s)‖² ds`, where
    /// `t` is the newest buffered time.
    pub fn weighted_window_integral(&self, tau: f64, lambda: f64) -> Result<f64> {
        let newest = match self.newest_index() {
            Some(i) => i,
            None => return Ok(0.0),
        };
        let t = newest as f64 * self.dt;
        let lower = t - tau;
        let (pos, w) = self.locate(lower)?;
        let weight = |s: f64| (lambda * (s - t)).exp();
        let mut sum = 0.0;
        // partial first cell [lower, t_{pos+1}]
        let mut j = pos;
        if w > 0.0 {
            let f_lo = self.norm_sq_at(lower)? * weight(lower);
            let s1 = self.slots[pos + 1].index as f64 * self.dt;
            let f1 = self.slots[pos + 1].norm_sq * weight(s1);
            sum += 0.5 * (1.0 - w) * self.dt * (f_lo + f1);
            j = pos + 1;
        }
        let last = self.slots.len() - 1;
        for k in j..last {
            let s0 = self.slots[k].index as f64 * self.dt;
            let s1 = s0 + self.dt;
            sum += 0.5
                * self.dt
                * (self.slots[k].norm_sq * weight(s0) + self.slots[k + 1].norm_sq * weight(s1));
        }
        Ok(sum)
    }
}

/// Transport variable `z` on `Ω × {0, Δρ, …, 1}`.
pub struct TransportField {
    grid: Grid,
    n_rho: usize,
    /// Row `j` holds `z(·, j Δρ)`.
    z: Vec<f64>,
}

impl TransportField {
    pub const DEFAULT_N_RHO: usize = 64;

    /// Initializes `z(x, ρ, 0) = f₀(x, -ρ τ(0))` and `z(x, 0, 0) = u₁(x)`.
    pub fn new(
        grid: Grid,
        n_rho: usize,
        tau0: f64,
        u1: &GridFunction,
        mut history: impl FnMut(f64, &mut [f64]),
    ) -> Self {
        assert!(n_rho >= 1);
        let m = grid.len();
        let mut z = vec![0.0; (n_rho + 1) * m];
        z[..m].copy_from_slice(u1.values());
        for j in 1..=n_rho {
            let rho = j as f64 / n_rho as f64;
            history(-rho * tau0, &mut z[j * m..(j + 1) * m]);
        }
        TransportField { grid, n_rho, z }
    }

    pub fn n_rho(&self) -> usize {
        self.n_rho
    }

    pub fn d_rho(&self) -> f64 {
        1.0 / self.n_rho as f64
    }

    pub fn row(&self, j: usize) -> &[f64] {
        let m = self.grid.len();
        &self.z[j * m..(j + 1) * m]
    }

    /// `z(·, 1, t)`, the transported stand-in for `u_t(·, t - τ(t))`.
    pub fn outflow(&self) -> &[f64] {
        self.row(self.n_rho)
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.z
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// One explicit upwind step of `τ z_t + (1 - τ' ρ) z_ρ = 0` with inflow
    /// `z(·, 0) = v_now`. The wind `(1 - τ'ρ)/τ` is positive since `d < 1`.
    pub fn step(&mut self, tau: f64, tau_rate: f64, v_now: &[f64], dt: f64) -> Result<()> {
        let d_rho = self.d_rho();
        let max_speed = 1.0f64.max(1.0 - tau_rate) / tau;
        let courant_step = dt * max_speed;
        if courant_step > d_rho * (1.0 + 1e-12) {
            return Err(Error::TransportCfl {
                courant_step,
                d_rho,
                suggested_n_rho: (1.0 / courant_step).floor() as usize,
            });
        }
        let m = self.grid.len();
        for j in (1..=self.n_rho).rev() {
            let rho = j as f64 * d_rho;
            let nu = dt * (1.0 - tau_rate * rho) / (tau * d_rho);
            let (head, tail) = self.z.split_at_mut(j * m);
            let upstream = &head[(j - 1) * m..];
            for (zj, zu) in tail[..m].iter_mut().zip(upstream) {
                *zj -= nu * (*zj - zu);
            }
        }
        self.z[..m].copy_from_slice(v_now);
        Ok(())
    }

    /// Sup-norm gap between `z(·, 1, t)` and the buffered `u_t(·, t - τ)`.
    pub fn consistency_error(&self, buf: &HistoryBuffer, t: f64, tau: f64) -> Result<f64> {
        let delayed = buf.delayed_velocity(t, tau)?;
        Ok(self
            .outflow()
            .iter()
            .zip(delayed.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}
