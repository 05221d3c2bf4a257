//! Orchestration of one configured run: seed, step, sample.

use crate::config::RunConfig;
use crate::delay::DelayProfile;
use crate::energy::{self, fit_decay, DecayFit, EnergyRecord, EnergyWeights};
use crate::error::{Error, Result};
use crate::feasibility::{certify, FeasibilityCertificate};
use crate::field::{Grid, GridFunction};

use super::{SimSetup, Simulation};

/// Field sample taken at the step nearest to a requested time.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub requested: f64,
    pub t: f64,
    pub u: GridFunction,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub certificate: FeasibilityCertificate,
    pub dt: f64,
    pub steps: usize,
    pub records: Vec<EnergyRecord>,
    /// `(t, sup |z(·,1,t) - u_t(·, t-τ(t))|)` at output times.
    pub transport_errors: Vec<(f64, f64)>,
    pub snapshots: Vec<Snapshot>,
    /// `(t, max |u|)` if the run was aborted.
    pub divergence: Option<(f64, f64)>,
}

impl RunOutput {
    pub fn energy_series(&self) -> Vec<(f64, f64)> {
        self.records.iter().map(|r| (r.t, r.e)).collect()
    }

    pub fn final_energy(&self) -> Option<f64> {
        self.records.last().map(|r| r.e)
    }

    /// Decay fit on `[t0, end]` with the configured witness.
    pub fn fit(&self, cfg: &RunConfig) -> Result<DecayFit> {
        fit_decay(&self.energy_series(), &cfg.witness, cfg.energy.t0, None)
    }
}

/// Uniform step `dt = t_end / n` with `dt <= min(safety · h / sqrt(dim), τ₀ / 8)`.
pub fn choose_dt(grid: &Grid, dt_safety: f64, delay: &DelayProfile, t_end: f64) -> (f64, usize) {
    let cfl = dt_safety * grid.spacing() / (grid.dim() as f64).sqrt();
    let dt_max = cfl.min(delay.tau_min() / 8.0);
    let n = (t_end / dt_max).ceil().max(1.0) as usize;
    (t_end / n as f64, n)
}

pub fn setup_for(cfg: &RunConfig, dt: f64) -> SimSetup {
    let mut setup = SimSetup::new(
        cfg.grid,
        cfg.kernel.clone(),
        cfg.delay,
        cfg.pair,
        cfg.solver.engine,
        dt,
        &cfg.init,
    );
    if cfg.solver.transport_check {
        setup.transport_n_rho = Some(cfg.solver.n_rho);
    }
    setup
}

/// Runs a validated configuration to `t_end`. Divergence stops the run and
/// is reported in [`RunOutput::divergence`] with everything sampled so far.
pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    let (dt, steps) = choose_dt(
        &cfg.grid,
        cfg.solver.dt_safety,
        &cfg.delay,
        cfg.solver.t_end,
    );
    run_setup(cfg, setup_for(cfg, dt), steps)
}

/// Same as [`run`] with an explicit setup and step count.
pub fn run_setup(cfg: &RunConfig, setup: SimSetup, steps: usize) -> Result<RunOutput> {
    let certificate = certify(&setup.pair, &setup.delay);
    let weights = EnergyWeights {
        xi: certificate.xi_chosen,
        lambda: certificate.lambda_chosen,
    };
    let lyap = cfg.energy.lyapunov;
    let dt = setup.dt;
    let every = cfg.solver.output_every.max(1);
    let snap_steps: Vec<(f64, usize)> = cfg
        .solver
        .snapshots
        .iter()
        .map(|&ts| (ts, ((ts / dt).round() as usize).min(steps)))
        .collect();

    let mut out = RunOutput {
        certificate,
        dt,
        steps,
        records: Vec::new(),
        transport_errors: Vec::new(),
        snapshots: Vec::new(),
        divergence: None,
    };
    let mut sim = match Simulation::new(setup) {
        Ok(s) => s,
        Err(Error::Divergence { t, max_abs }) => {
            out.divergence = Some((t, max_abs));
            return Ok(out);
        }
        Err(e) => return Err(e),
    };
    let sample = |sim: &Simulation, out: &mut RunOutput| -> Result<()> {
        out.records
            .push(energy::record(sim, &weights, &lyap, &cfg.witness)?);
        if let Some(z) = sim.state().transport() {
            let t = sim.time();
            let err = z.consistency_error(sim.state().history(), t, sim.setup().delay.tau(t))?;
            out.transport_errors.push((t, err));
        }
        Ok(())
    };
    let snap = |sim: &Simulation, out: &mut RunOutput| {
        let n = sim.state().step_index();
        for &(ts, k) in &snap_steps {
            if k == n {
                out.snapshots.push(Snapshot {
                    requested: ts,
                    t: sim.time(),
                    u: sim.state().u().clone(),
                });
            }
        }
    };

    sample(&sim, &mut out)?;
    snap(&sim, &mut out);
    for n in 1..=steps {
        match sim.step() {
            Ok(()) => {}
            Err(Error::Divergence { t, max_abs }) => {
                out.divergence = Some((t, max_abs));
                return Ok(out);
            }
            Err(e) => return Err(e),
        }
        if n % every == 0 || n == steps {
            sample(&sim, &mut out)?;
        }
        snap(&sim, &mut out);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn dt_divides_the_horizon() {
        let g = Grid::line(1.0, 100).unwrap();
        let d = DelayProfile::constant(1.0).unwrap();
        let (dt, n) = choose_dt(&g, 0.5, &d, 1.0);
        assert_eq!(n, 202);
        assert!((dt * n as f64 - 1.0).abs() < 1e-15);
        // a short delay takes over
        let d = DelayProfile::constant(0.01).unwrap();
        let (dt, _) = choose_dt(&g, 0.5, &d, 1.0);
        assert!(dt <= 0.01 / 8.0);
        let g2 = Grid::rect(1.0, 1.0, 50, 50).unwrap();
        let (dt, _) = choose_dt(&g2, 1.0, &DelayProfile::constant(1.0).unwrap(), 1.0);
        assert!(dt <= 1.0 / 50.0 / 2f64.sqrt());
    }

    #[test]
    fn zero_data_gives_zero_records() {
        let cfg = parse_config(
            "a0 = 1\na1 = 0.5\nt_end = 2.0\n[grid]\nn = 32\n[init]\nu0 = { form = \"zero\" }\n",
        )
        .unwrap();
        let out = run(&cfg).unwrap();
        assert!(out.records.len() > 2);
        for r in &out.records {
            assert_eq!(r.e, 0.0);
            assert_eq!(r.l, 0.0);
        }
    }

    #[test]
    fn output_cadence_and_snapshots() {
        let cfg = parse_config(
            "a0 = 1\na1 = 0.5\nt_end = 1.0\noutput_every = 7\nsnapshots = [0.0, 0.5, 1.0]\n[grid]\nn = 16\n",
        )
        .unwrap();
        let out = run(&cfg).unwrap();
        assert_eq!(out.records[0].t, 0.0);
        assert!((out.records.last().unwrap().t - 1.0).abs() < 1e-12);
        assert_eq!(out.records.len(), 1 + out.steps.div_ceil(7));
        assert_eq!(out.snapshots.len(), 3);
        assert!((out.snapshots[1].t - 0.5).abs() <= out.dt / 2.0);
    }

    #[test]
    fn unstable_run_reports_divergence() {
        let cfg = parse_config(
            "a0 = 0.1\na1 = 1.0\nt_end = 400.0\noutput_every = 50\n[grid]\nn = 32\n[kernel]\nform = \"zero\"\n",
        )
        .unwrap();
        let out = run(&cfg).unwrap();
        assert!(!out.certificate.is_feasible());
        let (t, m) = out.divergence.expect("grows past the threshold");
        assert!(t > 0.0 && m > 1e12);
        assert!(!out.records.is_empty());
    }
}
