//! The memory term `∫₀^t g(t-s) u(s) ds` and its companions.
//!
//! Both engines apply the trapezoid rule on the step grid `s_j = j dt`. The
//! recursive engine propagates each Prony mode exactly between steps, so the
//! two engines compute the same quadrature and differ only by rounding.
//!
//! Only the `u`-weighted field is stored: by linearity the Laplacian and
//! gradient-weighted accumulators are the Laplacian and gradient of it.

use crate::field::{Grid, GridFunction};
use crate::kernel::{PronyMode, RelaxationKernel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineMode {
    Recursive,
    Direct,
}

struct ModeState {
    mode: PronyMode,
    decay: f64,
    /// `∫ cᵢ e^{-aᵢ(t-s)} u(s) ds`
    field: Vec<f64>,
    /// `∫ cᵢ e^{-aᵢ(t-s)} ‖∇u(s)‖² ds`
    grad_sq: f64,
    /// `∫ cᵢ e^{-aᵢ(t-s)} ds`
    mass: f64,
}

enum Engine {
    Recursive {
        modes: Vec<ModeState>,
        prev_u: Vec<f64>,
        prev_grad_sq: f64,
    },
    Direct {
        kernel: RelaxationKernel,
        history: Vec<Vec<f64>>,
        grad_sq: Vec<f64>,
    },
}

pub struct ConvolutionEngine {
    grid: Grid,
    dt: f64,
    steps: usize,
    engine: Engine,
}

/// Quadrature values at the current time.
#[derive(Debug, Clone)]
pub struct MemorySnapshot {
    /// `Σ w_j g(t - s_j) u_j`
    pub field: GridFunction,
    /// `Σ w_j g(t - s_j) ‖∇u_j‖²`
    pub grad_sq: f64,
    /// `Σ w_j g(t - s_j)`, the discrete `∫₀^t g`.
    pub mass: f64,
}

impl ConvolutionEngine {
    /// Starts the convolution at `t = 0` with `u(0) = u0`.
    ///
    /// Panics if `mode` is `Recursive` and the kernel is a power law; config
    /// validation rejects that combination.
    pub fn new(
        grid: Grid,
        kernel: &RelaxationKernel,
        mode: EngineMode,
        dt: f64,
        u0: &GridFunction,
    ) -> Self {
        let g0 = grid.grad_sq(u0).expect("u0 matches the grid");
        let engine = match mode {
            EngineMode::Recursive => {
                let modes = kernel
                    .prony_modes()
                    .expect("recursive engine requires a Prony kernel")
                    .iter()
                    .map(|&m| ModeState {
                        mode: m,
                        decay: (-m.rate * dt).exp(),
                        field: vec![0.0; grid.len()],
                        grad_sq: 0.0,
                        mass: 0.0,
                    })
                    .collect();
                Engine::Recursive {
                    modes,
                    prev_u: u0.values().to_vec(),
                    prev_grad_sq: g0,
                }
            }
            EngineMode::Direct => Engine::Direct {
                kernel: kernel.clone(),
                history: vec![u0.values().to_vec()],
                grad_sq: vec![g0],
            },
        };
        ConvolutionEngine {
            grid,
            dt,
            steps: 0,
            engine,
        }
    }

    pub fn mode(&self) -> EngineMode {
        match self.engine {
            Engine::Recursive { .. } => EngineMode::Recursive,
            Engine::Direct { .. } => EngineMode::Direct,
        }
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    /// Moves the convolution from `t` to `t + dt`, `u_new = u(t + dt)`.
    pub fn advance(&mut self, u_new: &[f64]) {
        let dt = self.dt;
        let gs_new = self.grid.grad_inner_slices(u_new, u_new);
        match &mut self.engine {
            Engine::Recursive {
                modes,
                prev_u,
                prev_grad_sq,
            } => {
                for m in modes.iter_mut() {
                    let c = m.mode.amplitude;
                    let e = m.decay;
                    let half = 0.5 * dt * c;
                    for ((x, &old), &new) in m.field.iter_mut().zip(prev_u.iter()).zip(u_new) {
                        *x = e * *x + half * (e * old + new);
                    }
                    m.grad_sq = e * m.grad_sq + half * (e * *prev_grad_sq + gs_new);
                    m.mass = e * m.mass + half * (e + 1.0);
                }
                prev_u.copy_from_slice(u_new);
                *prev_grad_sq = gs_new;
            }
            Engine::Direct {
                history, grad_sq, ..
            } => {
                history.push(u_new.to_vec());
                grad_sq.push(gs_new);
            }
        }
        self.steps += 1;
    }

    pub fn snapshot(&self) -> MemorySnapshot {
        let mut field = self.grid.zeros();
        let (grad_sq, mass) = self.accumulate(field.values_mut());
        MemorySnapshot {
            field,
            grad_sq,
            mass,
        }
    }

    fn accumulate(&self, out: &mut [f64]) -> (f64, f64) {
        out.fill(0.0);
        match &self.engine {
            Engine::Recursive { modes, .. } => {
                let mut gs = 0.0;
                let mut mass = 0.0;
                for m in modes {
                    for (o, x) in out.iter_mut().zip(&m.field) {
                        *o += x;
                    }
                    gs += m.grad_sq;
                    mass += m.mass;
                }
                (gs, mass)
            }
            Engine::Direct {
                kernel,
                history,
                grad_sq,
            } => {
                let n = self.steps;
                if n == 0 {
                    return (0.0, 0.0);
                }
                let mut gs = 0.0;
                let mut mass = 0.0;
                for (j, (u_j, gs_j)) in history.iter().zip(grad_sq).enumerate() {
                    let w = if j == 0 || j == n {
                        0.5 * self.dt
                    } else {
                        self.dt
                    };
                    let wg = w * kernel.value((n - j) as f64 * self.dt);
                    for (o, x) in out.iter_mut().zip(u_j) {
                        *o += wg * x;
                    }
                    gs += wg * gs_j;
                    mass += wg;
                }
                (gs, mass)
            }
        }
    }

    /// `∫₀^t g(t-s) Δu(s) ds` at the current time.
    pub fn memory_force(&self) -> GridFunction {
        let mut acc = vec![0.0; self.grid.len()];
        self.accumulate(&mut acc);
        let mut out = self.grid.zeros();
        self.grid.laplacian_into(&acc, out.values_mut());
        out
    }

    /// Same as [`memory_force`](Self::memory_force) into a caller buffer;
    /// `scratch` must have the grid length.
    pub(crate) fn memory_force_into(&self, scratch: &mut [f64], out: &mut [f64]) {
        self.accumulate(scratch);
        self.grid.laplacian_into(scratch, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_grid() -> Grid {
        Grid::line(1.0, 1).unwrap()
    }

    fn one() -> GridFunction {
        GridFunction::from_values((1, 1), vec![1.0]).unwrap()
    }

    #[test]
    fn empty_interval_is_zero() {
        let g = Grid::line(1.0, 8).unwrap();
        let k = RelaxationKernel::prony(&[(0.3, 2.0)]).unwrap();
        let u0 = g.sample(|x, _| x);
        for mode in [EngineMode::Recursive, EngineMode::Direct] {
            let e = ConvolutionEngine::new(g, &k, mode, 0.01, &u0);
            let s = e.snapshot();
            assert_eq!(s.mass, 0.0);
            assert_eq!(s.grad_sq, 0.0);
            assert!(s.field.values().iter().all(|&v| v == 0.0));
            assert!(e.memory_force().values().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn constant_integrand_matches_closed_form() {
        let (c, a) = (0.4, 1.3);
        let k = RelaxationKernel::prony(&[(c, a)]).unwrap();
        let dt = 1e-3;
        let mut e = ConvolutionEngine::new(scalar_grid(), &k, EngineMode::Recursive, dt, &one());
        for n in 1..=3000 {
            e.advance(&[1.0]);
            let t = n as f64 * dt;
            let exact = c / a * (1.0 - (-a * t).exp());
            let s = e.snapshot();
            // trapezoid error: dt² t max|g''|/12
            assert!((s.field.values()[0] - exact).abs() < 1e-7);
            assert!((s.mass - exact).abs() < 1e-7);
        }
        // the trapezoid value itself is reproduced to rounding
        let n = 3000;
        let trap: f64 = (0..=n)
            .map(|j| {
                let w = if j == 0 || j == n { 0.5 * dt } else { dt };
                w * c * (-a * (n - j) as f64 * dt).exp()
            })
            .sum();
        assert!((e.snapshot().mass - trap).abs() < 1e-10 * trap);
    }

    #[test]
    fn modes_add_linearly() {
        let dt = 0.01;
        let both = RelaxationKernel::prony(&[(0.2, 1.0), (0.1, 3.0)]).unwrap();
        let first = RelaxationKernel::prony(&[(0.2, 1.0)]).unwrap();
        let second = RelaxationKernel::prony(&[(0.1, 3.0)]).unwrap();
        let g = Grid::line(1.0, 4).unwrap();
        let u0 = g.sample(|x, _| x * (1.0 - x));
        let mut engines: Vec<_> = [&both, &first, &second]
            .iter()
            .map(|k| ConvolutionEngine::new(g, k, EngineMode::Recursive, dt, &u0))
            .collect();
        for n in 1..200 {
            let u = g.sample(|x, _| x * (1.0 - x) * (n as f64 * dt).cos());
            for e in &mut engines {
                e.advance(u.values());
            }
        }
        let s: Vec<_> = engines.iter().map(|e| e.snapshot()).collect();
        assert!((s[0].mass - s[1].mass - s[2].mass).abs() < 1e-15);
        assert!((s[0].grad_sq - s[1].grad_sq - s[2].grad_sq).abs() < 1e-14);
        for i in 0..4 {
            let sum = s[1].field.values()[i] + s[2].field.values()[i];
            assert!((s[0].field.values()[i] - sum).abs() < 1e-15);
        }
    }

    #[test]
    fn engines_agree() {
        let g = Grid::line(1.0, 16).unwrap();
        let k = RelaxationKernel::prony(&[(0.3, 0.7), (0.2, 4.0)]).unwrap();
        let dt = 0.01;
        let u0 = g.sample(|x, _| (3.0 * x).sin());
        let mut rec = ConvolutionEngine::new(g, &k, EngineMode::Recursive, dt, &u0);
        let mut dir = ConvolutionEngine::new(g, &k, EngineMode::Direct, dt, &u0);
        for n in 1..300 {
            let t = n as f64 * dt;
            let u = g.sample(|x, _| (3.0 * x).sin() * (1.0 + t).recip() + x * t.sin());
            rec.advance(u.values());
            dir.advance(u.values());
            let (a, b) = (rec.memory_force(), dir.memory_force());
            let scale = b.max_abs();
            for (x, y) in a.values().iter().zip(b.values()) {
                assert!((x - y).abs() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn frozen_history_gives_mass_times_laplacian() {
        let g = Grid::line(1.0, 20).unwrap();
        let k = RelaxationKernel::prony(&[(0.5, 1.0)]).unwrap();
        let u = g.sample(|x, _| (std::f64::consts::PI * x).sin());
        let lap = g.laplacian(&u).unwrap();
        let dt = 1e-3;
        let mut e = ConvolutionEngine::new(g, &k, EngineMode::Recursive, dt, &u);
        let n = 5000;
        for _ in 0..n {
            e.advance(u.values());
        }
        let mass = k.mass_up_to(n as f64 * dt).unwrap();
        let f = e.memory_force();
        for (m, l) in f.values().iter().zip(lap.values()) {
            assert!((m - mass * l).abs() < 1e-6 * l.abs().max(1.0));
        }
    }
}
