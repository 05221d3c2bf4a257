//! Run configuration: a flat, sectioned TOML document.
//!
//! ```toml
//! a0 = 1.0
//! a1 = 0.5
//! t_end = 40.0
//!
//! [grid]
//! dim = 1
//! L = 1.0
//! n = 256
//!
//! [kernel]
//! form = "prony"
//! modes = [[0.5, 1.0]]
//!
//! [delay]
//! form = "sin"
//! tau = 1.0
//! amp = 0.3
//! omega = 1.0
//! ```
//!
//! Parsing collects every violation instead of stopping at the first one,
//! and unknown keys are violations.

use toml::{Table, Value};

use crate::delay::DelayProfile;
use crate::energy::LyapunovWeights;
use crate::error::{Error, Result};
use crate::feasibility::DampingPair;
use crate::field::{Grid, Profile};
use crate::kernel::{DecayWitness, RelaxationKernel};
use crate::solver::{EngineMode, HistoryShape, HistorySpec, InitialData};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnapshotFormat {
    Csv,
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverControls {
    pub dt_safety: f64,
    pub t_end: f64,
    pub output_every: usize,
    pub engine: EngineMode,
    pub snapshots: Vec<f64>,
    pub snapshot_format: SnapshotFormat,
    pub transport_check: bool,
    pub n_rho: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyControls {
    pub lyapunov: LyapunovWeights,
    /// Start of the decay-fit window.
    pub t0: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: Grid,
    pub kernel: RelaxationKernel,
    pub witness: DecayWitness,
    pub delay: DelayProfile,
    pub pair: DampingPair,
    pub solver: SolverControls,
    pub energy: EnergyControls,
    pub init: InitialData,
}

const TOP_KEYS: &[&str] = &[
    "a0",
    "a1",
    "t_end",
    "dt_safety",
    "output_every",
    "engine",
    "snapshots",
    "snapshot_format",
    "transport_check",
    "n_rho",
    "grid",
    "kernel",
    "witness",
    "delay",
    "energy",
    "init",
];

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(vec![format!("syntax: {}", e.message())]))?;
    parse_table(&table)
}

struct Errors(Vec<String>);

impl Errors {
    fn push(&mut self, path: &str, msg: impl AsRef<str>) {
        self.0.push(format!("{path}: {}", msg.as_ref()));
    }

    fn unknown_keys(&mut self, t: &Table, path: &str, allowed: &[&str]) {
        for k in t.keys() {
            if !allowed.contains(&k.as_str()) {
                let full = if path.is_empty() {
                    k.clone()
                } else {
                    format!("{path}.{k}")
                };
                self.0.push(format!("{full}: unknown key"));
            }
        }
    }

    fn float(&mut self, t: &Table, path: &str, key: &str) -> Option<f64> {
        let full = join(path, key);
        match t.get(key)? {
            Value::Float(x) => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            other => {
                self.push(
                    &full,
                    format!("expected a number, got {}", other.type_str()),
                );
                None
            }
        }
    }

    fn float_or(&mut self, t: &Table, path: &str, key: &str, default: f64) -> f64 {
        self.float(t, path, key).unwrap_or(default)
    }

    fn int(&mut self, t: &Table, path: &str, key: &str) -> Option<i64> {
        match t.get(key)? {
            Value::Integer(i) => Some(*i),
            other => {
                self.push(
                    &join(path, key),
                    format!("expected an integer, got {}", other.type_str()),
                );
                None
            }
        }
    }

    fn count_or(&mut self, t: &Table, path: &str, key: &str, default: usize) -> usize {
        match self.int(t, path, key) {
            None => default,
            Some(i) if i >= 1 => i as usize,
            Some(i) => {
                self.push(&join(path, key), format!("{i} must be >= 1"));
                default
            }
        }
    }

    fn string(&mut self, t: &Table, path: &str, key: &str) -> Option<String> {
        match t.get(key)? {
            Value::String(s) => Some(s.clone()),
            other => {
                self.push(
                    &join(path, key),
                    format!("expected a string, got {}", other.type_str()),
                );
                None
            }
        }
    }

    fn boolean_or(&mut self, t: &Table, path: &str, key: &str, default: bool) -> bool {
        match t.get(key) {
            None => default,
            Some(Value::Boolean(b)) => *b,
            Some(other) => {
                self.push(
                    &join(path, key),
                    format!("expected a boolean, got {}", other.type_str()),
                );
                default
            }
        }
    }

    fn floats(&mut self, v: &Value, path: &str) -> Option<Vec<f64>> {
        let arr = match v {
            Value::Array(a) => a,
            other => {
                self.push(path, format!("expected an array, got {}", other.type_str()));
                return None;
            }
        };
        let mut out = Vec::with_capacity(arr.len());
        for (i, x) in arr.iter().enumerate() {
            match x {
                Value::Float(f) => out.push(*f),
                Value::Integer(n) => out.push(*n as f64),
                other => {
                    self.push(
                        &format!("{path}[{i}]"),
                        format!("expected a number, got {}", other.type_str()),
                    );
                    return None;
                }
            }
        }
        Some(out)
    }

    fn section<'a>(&mut self, t: &'a Table, key: &str) -> Option<&'a Table> {
        match t.get(key)? {
            Value::Table(s) => Some(s),
            other => {
                self.push(key, format!("expected a table, got {}", other.type_str()));
                None
            }
        }
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

pub fn parse_table(t: &Table) -> Result<RunConfig> {
    let mut errs = Errors(Vec::new());
    errs.unknown_keys(t, "", TOP_KEYS);
    let empty = Table::new();

    let grid = parse_grid(errs.section(t, "grid").unwrap_or(&empty), &mut errs);
    let kernel = parse_kernel(errs.section(t, "kernel").unwrap_or(&empty), &mut errs);
    let delay = parse_delay(errs.section(t, "delay").unwrap_or(&empty), &mut errs);
    let witness = parse_witness(
        errs.section(t, "witness").unwrap_or(&empty),
        kernel.as_ref(),
        &mut errs,
    );

    let a0 = errs.float(t, "", "a0");
    let a1 = errs.float(t, "", "a1");
    if a0.is_none() && !t.contains_key("a0") {
        errs.push("a0", "required");
    }
    if a1.is_none() && !t.contains_key("a1") {
        errs.push("a1", "required");
    }
    let pair = match (a0, a1) {
        (Some(a0), Some(a1)) => match DampingPair::new(a0, a1) {
            Ok(p) => Some(p),
            Err(e) => {
                errs.push("damping", inner_msg(&e));
                None
            }
        },
        _ => None,
    };

    let solver = parse_solver(t, kernel.as_ref(), &mut errs);
    let energy = parse_energy(
        errs.section(t, "energy").unwrap_or(&empty),
        delay.as_ref(),
        &mut errs,
    );
    let init = parse_init(
        errs.section(t, "init").unwrap_or(&empty),
        grid.as_ref(),
        &mut errs,
    );
    if let (Some(s), Some(d)) = (&solver, &delay) {
        for (i, &ts) in s.snapshots.iter().enumerate() {
            if !(0.0..=s.t_end).contains(&ts) {
                errs.push(
                    &format!("snapshots[{i}]"),
                    format!("time {ts} outside [0, t_end = {}]", s.t_end),
                );
            }
        }
        let _ = d;
    }

    match (grid, kernel, witness, delay, pair, solver, energy, init) {
        (
            Some(grid),
            Some(kernel),
            Some(witness),
            Some(delay),
            Some(pair),
            Some(solver),
            Some(energy),
            Some(init),
        ) if errs.0.is_empty() => Ok(RunConfig {
            grid,
            kernel,
            witness,
            delay,
            pair,
            solver,
            energy,
            init,
        }),
        _ => {
            if errs.0.is_empty() {
                errs.0.push("invalid configuration".into());
            }
            Err(Error::Config(errs.0))
        }
    }
}

/// Constructor messages without the error-kind prefix.
fn inner_msg(e: &Error) -> String {
    match e {
        Error::InvalidKernel(m)
        | Error::InvalidDelay(m)
        | Error::InvalidGrid(m)
        | Error::Domain(m) => m.clone(),
        other => other.to_string(),
    }
}

fn parse_grid(t: &Table, errs: &mut Errors) -> Option<Grid> {
    let dim = errs.int(t, "grid", "dim").unwrap_or(1);
    let r = match dim {
        1 => {
            errs.unknown_keys(t, "grid", &["dim", "L", "n"]);
            let l = errs.float_or(t, "grid", "L", 1.0);
            let n = errs.count_or(t, "grid", "n", 256);
            Grid::line(l, n)
        }
        2 => {
            errs.unknown_keys(t, "grid", &["dim", "Lx", "Ly", "nx", "ny"]);
            let lx = errs.float_or(t, "grid", "Lx", 1.0);
            let ly = errs.float_or(t, "grid", "Ly", 1.0);
            let nx = errs.count_or(t, "grid", "nx", 64);
            let ny = errs.count_or(t, "grid", "ny", 64);
            Grid::rect(lx, ly, nx, ny)
        }
        d => {
            errs.push("grid.dim", format!("{d} must be 1 or 2"));
            return None;
        }
    };
    r.map_err(|e| errs.push("grid", inner_msg(&e))).ok()
}

fn parse_kernel(t: &Table, errs: &mut Errors) -> Option<RelaxationKernel> {
    let form = errs
        .string(t, "kernel", "form")
        .unwrap_or_else(|| "prony".into());
    let r = match form.as_str() {
        "prony" => {
            errs.unknown_keys(t, "kernel", &["form", "modes"]);
            let modes = match t.get("modes") {
                None => vec![(0.5, 1.0)],
                Some(Value::Array(rows)) => {
                    let mut out = Vec::new();
                    for (i, row) in rows.iter().enumerate() {
                        let p = format!("kernel.modes[{i}]");
                        match errs.floats(row, &p) {
                            Some(v) if v.len() == 2 => out.push((v[0], v[1])),
                            Some(v) => {
                                errs.push(&p, format!("expected [c, a], got {} numbers", v.len()))
                            }
                            None => {}
                        }
                    }
                    out
                }
                Some(other) => {
                    errs.push(
                        "kernel.modes",
                        format!(
                            "expected an array of [c, a] pairs, got {}",
                            other.type_str()
                        ),
                    );
                    return None;
                }
            };
            RelaxationKernel::prony(&modes)
        }
        "power" => {
            errs.unknown_keys(t, "kernel", &["form", "g0", "p"]);
            let g0 = errs.float_or(t, "kernel", "g0", 0.5);
            let p = errs.float_or(t, "kernel", "p", 2.0);
            RelaxationKernel::power_law(g0, p)
        }
        "zero" => {
            errs.unknown_keys(t, "kernel", &["form"]);
            Ok(RelaxationKernel::Zero)
        }
        other => {
            errs.push(
                "kernel.form",
                format!("unknown form {other:?} (expected prony, power, zero)"),
            );
            return None;
        }
    };
    r.map_err(|e| errs.push("kernel", inner_msg(&e))).ok()
}

fn parse_witness(
    t: &Table,
    kernel: Option<&RelaxationKernel>,
    errs: &mut Errors,
) -> Option<DecayWitness> {
    errs.unknown_keys(t, "witness", &["form", "a"]);
    let canonical = kernel.map(|k| k.canonical_witness());
    let form = errs.string(t, "witness", "form");
    let a = errs.float(t, "witness", "a");
    let a_default = canonical.map_or(1.0, |w| w.coefficient());
    let r = match form.as_deref() {
        None => match (canonical, a) {
            (Some(DecayWitness::Hyperbolic(_)), Some(a)) => DecayWitness::hyperbolic(a),
            (_, Some(a)) => DecayWitness::constant(a),
            (Some(w), None) => Ok(w),
            (None, None) => return None,
        },
        Some("constant") => DecayWitness::constant(a.unwrap_or(a_default)),
        Some("hyperbolic") => DecayWitness::hyperbolic(a.unwrap_or(a_default)),
        Some(other) => {
            errs.push(
                "witness.form",
                format!("unknown form {other:?} (expected constant, hyperbolic)"),
            );
            return None;
        }
    };
    r.map_err(|e| errs.push("witness", inner_msg(&e))).ok()
}

fn parse_delay(t: &Table, errs: &mut Errors) -> Option<DelayProfile> {
    let form = errs
        .string(t, "delay", "form")
        .unwrap_or_else(|| "constant".into());
    let r = match form.as_str() {
        "constant" => {
            errs.unknown_keys(t, "delay", &["form", "tau"]);
            DelayProfile::constant(errs.float_or(t, "delay", "tau", 1.0))
        }
        "sin" => {
            errs.unknown_keys(t, "delay", &["form", "tau", "amp", "omega"]);
            let tau = errs.float_or(t, "delay", "tau", 1.0);
            let amp = errs.float_or(t, "delay", "amp", 0.0);
            let omega = errs.float_or(t, "delay", "omega", 0.0);
            DelayProfile::sinusoidal(tau, amp, omega)
        }
        other => {
            errs.push(
                "delay.form",
                format!("unknown form {other:?} (expected constant, sin)"),
            );
            return None;
        }
    };
    r.map_err(|e| errs.push("delay", inner_msg(&e))).ok()
}

fn parse_solver(
    t: &Table,
    kernel: Option<&RelaxationKernel>,
    errs: &mut Errors,
) -> Option<SolverControls> {
    let dt_safety = errs.float_or(t, "", "dt_safety", 0.5);
    if !(dt_safety > 0.0 && dt_safety <= 1.0) {
        errs.push("dt_safety", format!("{dt_safety} must be in (0, 1]"));
    }
    let t_end = errs.float_or(t, "", "t_end", 40.0);
    if !(t_end.is_finite() && t_end > 0.0) {
        errs.push("t_end", format!("{t_end} must be > 0"));
    }
    let output_every = errs.count_or(t, "", "output_every", 10);
    let default_engine = match kernel {
        Some(RelaxationKernel::PowerLaw { .. }) => EngineMode::Direct,
        _ => EngineMode::Recursive,
    };
    let engine = match errs.string(t, "", "engine").as_deref() {
        None => default_engine,
        Some("recursive") => EngineMode::Recursive,
        Some("direct") => EngineMode::Direct,
        Some(other) => {
            errs.push(
                "engine",
                format!("unknown engine {other:?} (expected recursive, direct)"),
            );
            default_engine
        }
    };
    if engine == EngineMode::Recursive && matches!(kernel, Some(RelaxationKernel::PowerLaw { .. }))
    {
        errs.push("engine", "recursive engine requires Prony kernel");
    }
    let snapshots = match t.get("snapshots") {
        None => Vec::new(),
        Some(v) => errs.floats(v, "snapshots").unwrap_or_default(),
    };
    let snapshot_format = match errs.string(t, "", "snapshot_format").as_deref() {
        None | Some("csv") => SnapshotFormat::Csv,
        Some("bin") => SnapshotFormat::Binary,
        Some(other) => {
            errs.push(
                "snapshot_format",
                format!("unknown format {other:?} (expected csv, bin)"),
            );
            SnapshotFormat::Csv
        }
    };
    let transport_check = errs.boolean_or(t, "", "transport_check", false);
    let n_rho = errs.count_or(t, "", "n_rho", 64);
    Some(SolverControls {
        dt_safety,
        t_end,
        output_every,
        engine,
        snapshots,
        snapshot_format,
        transport_check,
        n_rho,
    })
}

fn parse_energy(
    t: &Table,
    delay: Option<&DelayProfile>,
    errs: &mut Errors,
) -> Option<EnergyControls> {
    errs.unknown_keys(t, "energy", &["N", "eps", "t0", "C7"]);
    let d = LyapunovWeights::default();
    let n = errs.float_or(t, "energy", "N", d.n);
    let eps = errs.float_or(t, "energy", "eps", d.eps);
    let c7 = errs.float_or(t, "energy", "C7", d.c7);
    if n.is_nan() || n <= 0.0 {
        errs.push("energy.N", format!("{n} must be > 0"));
    }
    if eps.is_nan() || eps < 0.0 {
        errs.push("energy.eps", format!("{eps} must be >= 0"));
    }
    let t0 = match errs.float(t, "energy", "t0") {
        Some(t0) => {
            if t0.is_nan() || t0 < 0.0 {
                errs.push("energy.t0", format!("{t0} must be >= 0"));
            }
            t0
        }
        None => 2.0 * delay?.tau_max(),
    };
    Some(EnergyControls {
        lyapunov: LyapunovWeights { n, eps, c7 },
        t0,
    })
}

fn parse_profile(
    v: &Value,
    path: &str,
    grid: Option<&Grid>,
    allow_u1: bool,
    errs: &mut Errors,
) -> Option<Option<Profile>> {
    let t = match v {
        Value::Table(t) => t,
        other => {
            errs.push(path, format!("expected a table, got {}", other.type_str()));
            return None;
        }
    };
    let mut allowed = vec!["form"];
    if allow_u1 {
        allowed.push("rate");
    }
    let form = match errs.string(t, path, "form") {
        Some(f) => f,
        None => {
            errs.push(path, "missing form");
            return None;
        }
    };
    let profile = match form.as_str() {
        "zero" => {
            errs.unknown_keys(t, path, &allowed);
            Profile::Zero
        }
        "u1" if allow_u1 => {
            errs.unknown_keys(t, path, &allowed);
            return Some(None);
        }
        "sine" => {
            allowed.extend(["modes", "amp"]);
            errs.unknown_keys(t, path, &allowed);
            let modes = match t.get("modes") {
                None => vec![1; grid.map_or(1, |g| g.dim())],
                Some(v) => {
                    let m = errs.floats(v, &join(path, "modes"))?;
                    if m.iter().any(|&k| k < 1.0 || k.fract() != 0.0) {
                        errs.push(&join(path, "modes"), "mode numbers must be integers >= 1");
                        return None;
                    }
                    m.into_iter().map(|k| k as u32).collect()
                }
            };
            Profile::Sine {
                modes,
                amplitude: errs.float_or(t, path, "amp", 1.0),
            }
        }
        "gaussian" => {
            allowed.extend(["center", "width", "amp"]);
            errs.unknown_keys(t, path, &allowed);
            let center = match t.get("center") {
                None => {
                    let (lx, ly) = grid.map_or((1.0, 0.0), |g| g.extents());
                    if grid.map_or(1, |g| g.dim()) == 2 {
                        vec![lx / 2.0, ly / 2.0]
                    } else {
                        vec![lx / 2.0]
                    }
                }
                Some(v) => errs.floats(v, &join(path, "center"))?,
            };
            Profile::Gaussian {
                center,
                width: errs.float_or(t, path, "width", 0.1),
                amplitude: errs.float_or(t, path, "amp", 1.0),
            }
        }
        other => {
            errs.push(
                &join(path, "form"),
                format!(
                    "unknown form {other:?} (expected sine, gaussian, zero{})",
                    if allow_u1 { ", u1" } else { "" }
                ),
            );
            return None;
        }
    };
    if let Some(g) = grid {
        if let Err(m) = profile.validate(g) {
            errs.push(path, m);
            return None;
        }
    }
    Some(Some(profile))
}

fn parse_init(t: &Table, grid: Option<&Grid>, errs: &mut Errors) -> Option<InitialData> {
    errs.unknown_keys(t, "init", &["u0", "u1", "f0"]);
    let defaults = InitialData::default();
    let u0 = match t.get("u0") {
        None => match grid {
            Some(g) => Profile::Sine {
                modes: vec![1; g.dim()],
                amplitude: 1.0,
            },
            None => defaults.u0,
        },
        Some(v) => parse_profile(v, "init.u0", grid, false, errs)??,
    };
    let u1 = match t.get("u1") {
        None => defaults.u1,
        Some(v) => parse_profile(v, "init.u1", grid, false, errs)??,
    };
    let f0 = match t.get("f0") {
        None => HistorySpec::default(),
        Some(v) => {
            let shape = match parse_profile(v, "init.f0", grid, true, errs)? {
                None => HistoryShape::InitialVelocity,
                Some(p) => HistoryShape::Profile(p),
            };
            let rate = v
                .as_table()
                .and_then(|t| errs.float(t, "init.f0", "rate"))
                .unwrap_or(0.0);
            HistorySpec { shape, rate }
        }
    };
    Some(InitialData { u0, u1, f0 })
}

fn profile_table(p: &Profile) -> Table {
    let mut t = Table::new();
    match p {
        Profile::Zero => {
            t.insert("form".into(), "zero".into());
        }
        Profile::Sine { modes, amplitude } => {
            t.insert("form".into(), "sine".into());
            t.insert(
                "modes".into(),
                Value::Array(modes.iter().map(|&k| Value::Integer(k as i64)).collect()),
            );
            t.insert("amp".into(), Value::Float(*amplitude));
        }
        Profile::Gaussian {
            center,
            width,
            amplitude,
        } => {
            t.insert("form".into(), "gaussian".into());
            t.insert(
                "center".into(),
                Value::Array(center.iter().map(|&c| Value::Float(c)).collect()),
            );
            t.insert("width".into(), Value::Float(*width));
            t.insert("amp".into(), Value::Float(*amplitude));
        }
    }
    t
}

impl RunConfig {
    pub fn to_table(&self) -> Table {
        let mut t = Table::new();
        t.insert("a0".into(), Value::Float(self.pair.a0()));
        t.insert("a1".into(), Value::Float(self.pair.a1()));
        let s = &self.solver;
        t.insert("t_end".into(), Value::Float(s.t_end));
        t.insert("dt_safety".into(), Value::Float(s.dt_safety));
        t.insert("output_every".into(), Value::Integer(s.output_every as i64));
        t.insert(
            "engine".into(),
            match s.engine {
                EngineMode::Recursive => "recursive",
                EngineMode::Direct => "direct",
            }
            .into(),
        );
        t.insert(
            "snapshots".into(),
            Value::Array(s.snapshots.iter().map(|&x| Value::Float(x)).collect()),
        );
        t.insert(
            "snapshot_format".into(),
            match s.snapshot_format {
                SnapshotFormat::Csv => "csv",
                SnapshotFormat::Binary => "bin",
            }
            .into(),
        );
        t.insert("transport_check".into(), Value::Boolean(s.transport_check));
        t.insert("n_rho".into(), Value::Integer(s.n_rho as i64));

        let mut g = Table::new();
        match self.grid {
            Grid::Line { length, n } => {
                g.insert("dim".into(), Value::Integer(1));
                g.insert("L".into(), Value::Float(length));
                g.insert("n".into(), Value::Integer(n as i64));
            }
            Grid::Rect { lx, ly, nx, ny } => {
                g.insert("dim".into(), Value::Integer(2));
                g.insert("Lx".into(), Value::Float(lx));
                g.insert("Ly".into(), Value::Float(ly));
                g.insert("nx".into(), Value::Integer(nx as i64));
                g.insert("ny".into(), Value::Integer(ny as i64));
            }
        }
        t.insert("grid".into(), Value::Table(g));

        let mut k = Table::new();
        match &self.kernel {
            RelaxationKernel::PronySum(modes) => {
                k.insert("form".into(), "prony".into());
                k.insert(
                    "modes".into(),
                    Value::Array(
                        modes
                            .iter()
                            .map(|m| {
                                Value::Array(vec![Value::Float(m.amplitude), Value::Float(m.rate)])
                            })
                            .collect(),
                    ),
                );
            }
            RelaxationKernel::PowerLaw {
                amplitude,
                exponent,
            } => {
                k.insert("form".into(), "power".into());
                k.insert("g0".into(), Value::Float(*amplitude));
                k.insert("p".into(), Value::Float(*exponent));
            }
            RelaxationKernel::Zero => {
                k.insert("form".into(), "zero".into());
            }
        }
        t.insert("kernel".into(), Value::Table(k));

        let mut w = Table::new();
        let (form, a) = match self.witness {
            DecayWitness::Constant(a) => ("constant", a),
            DecayWitness::Hyperbolic(a) => ("hyperbolic", a),
        };
        w.insert("form".into(), form.into());
        w.insert("a".into(), Value::Float(a));
        t.insert("witness".into(), Value::Table(w));

        let mut d = Table::new();
        match self.delay {
            DelayProfile::Constant { tau } => {
                d.insert("form".into(), "constant".into());
                d.insert("tau".into(), Value::Float(tau));
            }
            DelayProfile::Sinusoidal {
                center,
                amplitude,
                frequency,
            } => {
                d.insert("form".into(), "sin".into());
                d.insert("tau".into(), Value::Float(center));
                d.insert("amp".into(), Value::Float(amplitude));
                d.insert("omega".into(), Value::Float(frequency));
            }
        }
        t.insert("delay".into(), Value::Table(d));

        let mut e = Table::new();
        let l = &self.energy.lyapunov;
        e.insert("N".into(), Value::Float(l.n));
        e.insert("eps".into(), Value::Float(l.eps));
        e.insert("C7".into(), Value::Float(l.c7));
        e.insert("t0".into(), Value::Float(self.energy.t0));
        t.insert("energy".into(), Value::Table(e));

        let mut i = Table::new();
        i.insert("u0".into(), Value::Table(profile_table(&self.init.u0)));
        i.insert("u1".into(), Value::Table(profile_table(&self.init.u1)));
        let mut f0 = match &self.init.f0.shape {
            HistoryShape::InitialVelocity => {
                let mut t = Table::new();
                t.insert("form".into(), "u1".into());
                t
            }
            HistoryShape::Profile(p) => profile_table(p),
        };
        f0.insert("rate".into(), Value::Float(self.init.f0.rate));
        i.insert("f0".into(), Value::Table(f0));
        t.insert("init".into(), Value::Table(i));
        t
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&self.to_table()).expect("plain tables always serialize")
    }
}

/// Parses a command-line value: integer, float, boolean, or bare string.
pub fn parse_scalar(s: &str) -> Value {
    let s = s.trim();
    if let Ok(i) = s.parse::<i64>() {
        Value::Integer(i)
    } else if let Ok(f) = s.parse::<f64>() {
        Value::Float(f)
    } else if let Ok(b) = s.parse::<bool>() {
        Value::Boolean(b)
    } else {
        Value::String(s.to_string())
    }
}

/// Sets a dotted path (`"a1"`, `"delay.tau"`) in a config table, creating
/// the section if needed.
pub fn set_path(t: &mut Table, path: &str, value: Value) -> Result<()> {
    let parts: Vec<&str> = path.split('.').collect();
    match parts.as_slice() {
        [key] if TOP_KEYS.contains(key) => {
            t.insert(key.to_string(), value);
            Ok(())
        }
        [section, key] if TOP_KEYS.contains(section) => {
            let entry = t
                .entry(section.to_string())
                .or_insert_with(|| Value::Table(Table::new()));
            match entry {
                Value::Table(s) => {
                    s.insert(key.to_string(), value);
                    Ok(())
                }
                _ => Err(Error::Config(vec![format!("{section}: not a table")])),
            }
        }
        _ => Err(Error::Config(vec![format!(
            "{path}: not a configurable parameter"
        )])),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn violations(text: &str) -> Vec<String> {
        match parse_config(text) {
            Err(Error::Config(v)) => v,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let c = parse_config("a0 = 1.0\na1 = 0.5\n").unwrap();
        assert_eq!(
            c.grid,
            Grid::Line {
                length: 1.0,
                n: 256
            }
        );
        assert_eq!(c.kernel, RelaxationKernel::prony(&[(0.5, 1.0)]).unwrap());
        assert_eq!(c.witness, DecayWitness::Constant(1.0));
        assert_eq!(c.delay, DelayProfile::Constant { tau: 1.0 });
        assert_eq!(c.solver.engine, EngineMode::Recursive);
        assert_eq!(c.solver.t_end, 40.0);
        assert_eq!(c.solver.dt_safety, 0.5);
        assert_eq!(c.solver.n_rho, 64);
        assert_eq!(c.energy.t0, 2.0);
        assert_eq!(c.energy.lyapunov, LyapunovWeights::default());
        assert_eq!(c.init, InitialData::default());
    }

    #[test]
    fn fast_delay_is_reported() {
        let v = violations(
            "a0 = 1\na1 = 0.5\ndelay = { form = \"sin\", tau = 1.0, amp = 0.6, omega = 2.0 }\n",
        );
        assert_eq!(v.len(), 1);
        assert!(v[0].starts_with("delay: d = 1.2"), "{v:?}");
    }

    #[test]
    fn power_law_needs_direct_engine() {
        let v = violations(
            "a0 = 1\na1 = 0\nengine = \"recursive\"\nkernel = { form = \"power\", g0 = 0.5, p = 2 }\n",
        );
        assert!(v
            .iter()
            .any(|m| m.contains("recursive engine requires Prony kernel")));
        let ok = parse_config("a0 = 1\na1 = 0\nkernel = { form = \"power\" }\n").unwrap();
        assert_eq!(ok.solver.engine, EngineMode::Direct);
        assert_eq!(ok.witness, DecayWitness::Hyperbolic(2.0));
    }

    #[test]
    fn all_violations_are_collected() {
        let v = violations(
            "a0 = -1\na1 = 0.5\nbogus = 3\ndt_safety = 2\n[grid]\nn = 0\nwhat = 1\n[kernel]\nmodes = [[2.0, 1.0]]\n",
        );
        let joined = v.join("\n");
        assert!(joined.contains("bogus: unknown key"));
        assert!(joined.contains("grid.what: unknown key"));
        assert!(joined.contains("grid.n"));
        assert!(joined.contains("dt_safety"));
        assert!(joined.contains("kernel:"));
        assert!(joined.contains("damping: a0"));
        assert!(v.len() >= 6, "{v:?}");
    }

    #[test]
    fn missing_damping_is_reported() {
        let v = violations("t_end = 1.0\n");
        assert!(v.contains(&"a0: required".to_string()));
        assert!(v.contains(&"a1: required".to_string()));
    }

    #[test]
    fn round_trip() {
        let text = r#"
a0 = 1.0
a1 = -0.5
t_end = 12.5
snapshots = [1.0, 2.5]
transport_check = true
n_rho = 128

[grid]
dim = 2
Lx = 1.0
Ly = 2.0
nx = 9
ny = 19

[kernel]
form = "prony"
modes = [[0.25, 1.0], [0.1, 3.0]]

[witness]
form = "hyperbolic"
a = 0.7

[delay]
form = "sin"
tau = 1.0
amp = 0.3
omega = 1.0

[energy]
N = 20
eps = 0.02

[init]
u0 = { form = "gaussian", center = [0.5, 1.0], width = 0.2 }
u1 = { form = "sine", modes = [1, 2], amp = 0.5 }
f0 = { form = "zero", rate = 1.0 }
"#;
        let a = parse_config(text).unwrap();
        let b = parse_config(&a.to_toml_string()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn set_path_updates_sections() {
        let mut t: Table = "a0 = 1\na1 = 0.5\n".parse().unwrap();
        set_path(&mut t, "a1", parse_scalar("0.25")).unwrap();
        set_path(&mut t, "delay.tau", parse_scalar("2")).unwrap();
        set_path(&mut t, "witness.form", parse_scalar("hyperbolic")).unwrap();
        let c = parse_table(&t).unwrap();
        assert_eq!(c.pair.a1(), 0.25);
        assert_eq!(c.delay.tau_max(), 2.0);
        assert!(matches!(c.witness, DecayWitness::Hyperbolic(_)));
        assert!(set_path(&mut t, "nope.x", Value::Integer(1)).is_err());
    }
}
