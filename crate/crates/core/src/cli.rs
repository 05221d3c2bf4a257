//! Command-line front end: `simulate`, `sweep`, `check-feasibility`,
//! `fit-decay`.
//!
//! Exit codes: 0 ok, 1 configuration or input error, 2 infeasible
//! (`check-feasibility` only), 3 divergence.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::config::{parse_config, parse_scalar, parse_table, set_path, RunConfig, SnapshotFormat};
use crate::energy::{fit_decay, DecayFit, CSV_HEADER};
use crate::error::{Error, Result};
use crate::feasibility::certify;
use crate::kernel::{check_witness, default_witness_samples, DecayWitness, WitnessVerdict};
use crate::solver::{run, RunOutput};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_INFEASIBLE: u8 = 2;
pub const EXIT_DIVERGED: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "vds",
    version,
    about = "Viscoelastic wave equation with delayed damping"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one configuration and write energy.csv, certificate.txt, fit.txt.
    Simulate {
        config: PathBuf,
        /// Output directory.
        #[arg(long, env = "VDS_OUT", default_value = "out")]
        out: PathBuf,
    },
    /// Run a template configuration over a list of values of one parameter.
    Sweep {
        config: PathBuf,
        /// Dotted parameter path, e.g. `a1` or `delay.tau`.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<String>,
        /// Worker threads (default: available cores).
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long, env = "VDS_OUT", default_value = "out")]
        out: PathBuf,
    },
    /// Print the feasibility certificate; exit 2 if infeasible.
    CheckFeasibility { config: PathBuf },
    /// Refit an existing energy.csv.
    FitDecay {
        energy: PathBuf,
        #[arg(long)]
        t0: Option<f64>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long, value_enum)]
        witness: Option<WitnessForm>,
        /// Witness coefficient `a`.
        #[arg(long)]
        a: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WitnessForm {
    Constant,
    Hyperbolic,
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    ExitCode::from(dispatch(cli.command))
}

pub fn dispatch(cmd: Command) -> u8 {
    let r = match cmd {
        Command::Simulate { config, out } => cmd_simulate(&config, &out),
        Command::Sweep {
            config,
            param,
            values,
            jobs,
            out,
        } => cmd_sweep(&config, &param, &values, jobs, &out),
        Command::CheckFeasibility { config } => cmd_check_feasibility(&config),
        Command::FitDecay {
            energy,
            t0,
            t_end,
            witness,
            a,
        } => cmd_fit_decay(&energy, t0, t_end, witness, a),
    };
    match r {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    parse_config(&read(path)?)
}

/// Writes `path` through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn energy_csv(out: &RunOutput) -> String {
    let mut s = String::with_capacity(64 * (out.records.len() + 1));
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in &out.records {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

fn witness_line(cfg: &RunConfig) -> String {
    let samples = default_witness_samples(cfg.delay.tau_max());
    match check_witness(&cfg.kernel, &cfg.witness, &samples) {
        Ok(WitnessVerdict::Holds) => "witness_check=holds\n".into(),
        Ok(WitnessVerdict::ViolatedAt(t)) => {
            format!("witness_check=violated\nwitness_violated_at={t:?}\n")
        }
        Err(_) => "witness_check=not_applicable\n".into(),
    }
}

fn snapshot_bytes(cfg: &RunConfig, snap: &crate::solver::Snapshot) -> Vec<u8> {
    let (lx, ly) = cfg.grid.extents();
    let (nx, ny) = cfg.grid.shape();
    let header = if cfg.grid.dim() == 1 {
        format!("# dim=1 extents={lx:?} counts={nx} t={:?}\n", snap.t)
    } else {
        format!(
            "# dim=2 extents={lx:?},{ly:?} counts={nx},{ny} t={:?}\n",
            snap.t
        )
    };
    let mut bytes = header.into_bytes();
    let vals = snap.u.values();
    match cfg.solver.snapshot_format {
        SnapshotFormat::Csv => {
            for row in vals.chunks(nx) {
                let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
                bytes.extend_from_slice(line.join(",").as_bytes());
                bytes.push(b'\n');
            }
        }
        SnapshotFormat::Binary => {
            for v in vals {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    bytes
}

/// Everything `simulate` writes, for one finished (or aborted) run.
pub fn write_run(cfg: &RunConfig, out: &RunOutput, dir: &Path) -> Result<Option<DecayFit>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_atomic(&dir.join("energy.csv"), energy_csv(out).as_bytes())?;

    let mut cert = out.certificate.to_kv();
    cert.push_str(&witness_line(cfg));
    cert.push_str(&format!("dt={:?}\nsteps={}\n", out.dt, out.steps));
    if !out.transport_errors.is_empty() {
        let max = out.transport_errors.iter().map(|e| e.1).fold(0.0, f64::max);
        cert.push_str(&format!("delay_consistency_error={max:?}\n"));
    }
    write_atomic(&dir.join("certificate.txt"), cert.as_bytes())?;

    let ext = match cfg.solver.snapshot_format {
        SnapshotFormat::Csv => "csv",
        SnapshotFormat::Binary => "bin",
    };
    for snap in &out.snapshots {
        let name = format!("snapshot_t{:?}.{ext}", snap.requested);
        write_atomic(&dir.join(name), &snapshot_bytes(cfg, snap))?;
    }

    let (fit, fit_text) = match out.divergence {
        Some((t, m)) => (
            None,
            format!("status=diverged\ndiverged_at={t:?}\nmax_abs={m:?}\n"),
        ),
        None => match out.fit(cfg) {
            Ok(f) => {
                let mut s = format!("status=ok\n{}", f.to_kv());
                if !out.certificate.is_feasible() {
                    s.push_str("decay_assertions=omitted (infeasible parameters)\n");
                }
                (Some(f), s)
            }
            Err(e) => (None, format!("status=error\nerror={e}\n")),
        },
    };
    write_atomic(&dir.join("fit.txt"), fit_text.as_bytes())?;
    Ok(fit)
}

pub fn cmd_simulate(config: &Path, dir: &Path) -> Result<u8> {
    let cfg = load_config(config)?;
    let out = run(&cfg)?;
    write_run(&cfg, &out, dir)?;
    if let Some((t, m)) = out.divergence {
        eprintln!("diverged at t = {t:?} (max |u| = {m:e})");
        return Ok(EXIT_DIVERGED);
    }
    Ok(EXIT_OK)
}

pub const SUMMARY_HEADER: &str = "param,value,verdict,margin,k_fit,r2,final_E,status";

fn csv_field(s: &str) -> String {
    s.replace([',', '\n', '\r'], ";")
}

fn sweep_one(template: &toml::Table, param: &str, value: &str, dir: &Path) -> String {
    let blank = |status: String| {
        format!(
            "{},{},,,,,,{}",
            csv_field(param),
            csv_field(value),
            csv_field(&status)
        )
    };
    let mut table = template.clone();
    if let Err(e) = set_path(&mut table, param, parse_scalar(value)) {
        return blank(format!("config error: {e}"));
    }
    let cfg = match parse_table(&table) {
        Ok(c) => c,
        Err(e) => return blank(format!("config error: {e}")),
    };
    let out = match run(&cfg) {
        Ok(o) => o,
        Err(e) => return blank(format!("error: {e}")),
    };
    let cert = &out.certificate;
    let run_dir = dir.join(format!("{}={}", param, value));
    let fit = match write_run(&cfg, &out, &run_dir) {
        Ok(f) => f,
        Err(e) => return blank(format!("error: {e}")),
    };
    let (k, r2) = match &fit {
        Some(f) => (format!("{:?}", f.k_fit), format!("{:?}", f.r2)),
        None => (String::new(), String::new()),
    };
    let status = match out.divergence {
        Some((t, _)) => format!("diverged at t={t:?}"),
        None if fit.is_none() => "fit failed".to_string(),
        None => "ok".to_string(),
    };
    format!(
        "{},{},{},{:?},{},{},{},{}",
        csv_field(param),
        csv_field(value),
        cert.verdict,
        cert.margin,
        k,
        r2,
        out.final_energy()
            .map_or(String::new(), |e| format!("{e:?}")),
        csv_field(&status)
    )
}

pub fn cmd_sweep(
    config: &Path,
    param: &str,
    values: &[String],
    jobs: Option<usize>,
    dir: &Path,
) -> Result<u8> {
    let values: Vec<&str> = values
        .iter()
        .map(|v| v.trim())
        .filter(|v| !v.is_empty())
        .collect();
    if values.is_empty() {
        return Err(Error::Config(vec!["sweep: empty value list".into()]));
    }
    let text = read(config)?;
    let template: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(vec![format!("syntax: {}", e.message())]))?;
    // the axis must name a real parameter of a valid template
    parse_table(&template)?;
    set_path(&mut template.clone(), param, toml::Value::Integer(0))?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(vec![format!("jobs: {e}")]))?;
    let rows: Vec<String> = pool.install(|| {
        values
            .par_iter()
            .map(|v| sweep_one(&template, param, v, dir))
            .collect()
    });
    let mut summary = String::from(SUMMARY_HEADER);
    summary.push('\n');
    for r in rows {
        summary.push_str(&r);
        summary.push('\n');
    }
    write_atomic(&dir.join("summary.csv"), summary.as_bytes())?;
    print!("{summary}");
    Ok(EXIT_OK)
}

pub fn cmd_check_feasibility(config: &Path) -> Result<u8> {
    let cfg = load_config(config)?;
    let cert = certify(&cfg.pair, &cfg.delay);
    print!("{}", cert.to_kv());
    Ok(if cert.is_feasible() {
        EXIT_OK
    } else {
        EXIT_INFEASIBLE
    })
}

/// Reads `(t, E)` from an energy.csv.
pub fn read_energy_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = read(path)?;
    let bad = |msg: String| Error::Parse {
        path: path.to_path_buf(),
        msg,
    };
    let mut lines = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| bad("empty file".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    let ti = cols.iter().position(|c| *c == "t");
    let ei = cols.iter().position(|c| *c == "E");
    let (ti, ei) = match (ti, ei) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(bad("header lacks t and E columns".into())),
    };
    lines
        .enumerate()
        .map(|(i, l)| {
            let f: Vec<&str> = l.split(',').collect();
            let get = |k: usize| -> Result<f64> {
                f.get(k)
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| bad(format!("row {}: unreadable value", i + 2)))
            };
            Ok((get(ti)?, get(ei)?))
        })
        .collect()
}

/// Witness and window recorded by a previous fit next to the energy file.
fn previous_fit(energy: &Path) -> (Option<DecayWitness>, Option<f64>) {
    let Some(dir) = energy.parent() else {
        return (None, None);
    };
    let Ok(text) = fs::read_to_string(dir.join("fit.txt")) else {
        return (None, None);
    };
    let get = |k: &str| {
        text.lines()
            .find_map(|l| l.strip_prefix(k).and_then(|r| r.strip_prefix('=')))
    };
    let a = get("witness_a").and_then(|s| s.parse().ok());
    let w = match (get("witness"), a) {
        (Some("constant"), Some(a)) => DecayWitness::constant(a).ok(),
        (Some("hyperbolic"), Some(a)) => DecayWitness::hyperbolic(a).ok(),
        _ => None,
    };
    (w, get("t0").and_then(|s| s.parse().ok()))
}

pub fn cmd_fit_decay(
    energy: &Path,
    t0: Option<f64>,
    t_end: Option<f64>,
    form: Option<WitnessForm>,
    a: Option<f64>,
) -> Result<u8> {
    let series = read_energy_csv(energy)?;
    let (prev_w, prev_t0) = previous_fit(energy);
    let prev_a = prev_w.map(|w| w.coefficient());
    let witness = match (form, prev_w) {
        (Some(WitnessForm::Constant), _) => DecayWitness::constant(a.or(prev_a).unwrap_or(1.0))?,
        (Some(WitnessForm::Hyperbolic), _) => {
            DecayWitness::hyperbolic(a.or(prev_a).unwrap_or(1.0))?
        }
        (None, Some(DecayWitness::Constant(p))) => DecayWitness::constant(a.unwrap_or(p))?,
        (None, Some(DecayWitness::Hyperbolic(p))) => DecayWitness::hyperbolic(a.unwrap_or(p))?,
        (None, None) => DecayWitness::constant(a.unwrap_or(1.0))?,
    };
    let t0 = t0.or(prev_t0).unwrap_or(0.0);
    let fit = fit_decay(&series, &witness, t0, t_end)?;
    print!("{}", fit.to_kv());
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn sweep_values_split_on_commas() {
        let cli = Cli::try_parse_from([
            "vds",
            "sweep",
            "c.toml",
            "--param",
            "a1",
            "--values",
            "0,0.25,0.5",
        ])
        .unwrap();
        match cli.command {
            Command::Sweep { values, .. } => assert_eq!(values, ["0", "0.25", "0.5"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn csv_fields_never_split() {
        assert_eq!(csv_field("a,b\nc"), "a;b;c");
    }
}
