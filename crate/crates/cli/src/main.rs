//! Command-line front end: single runs, parameter sweeps, material-parameter
//! derivation and the verification suite.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::{Arc, Mutex};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use coreshell::config::{config_diff, expand_sweep, MaterialConfig, RunConfig};
use coreshell::driver::Termination;
use coreshell::output::{write_failure, PatternRecord, RunWriter};
use coreshell::{verify, Error};

/// Environment variable that sets the root for relative output directories.
const OUTPUT_ROOT_VAR: &str = "CORESHELL_OUTPUT_ROOT";

#[derive(Parser)]
#[command(name = "coreshell", version, about = "Chemo-mechanical fracture of core-shell electrode particles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunFlags {
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Field snapshot every n accepted steps (0: first and last only).
    #[arg(long)]
    snapshot_every: Option<usize>,
    /// Worker threads for sweep members.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Serial, order-fixed reductions. The solvers are already serial, so this only records the request.
    #[arg(long)]
    deterministic: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation.
    Run {
        config: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// One run per value of a parameter, other settings shared.
    Sweep {
        config: PathBuf,
        /// `param=v1,v2,...`; aliases: hbar, R (um), C, abar, bonding, crack, coarsening, degrade.
        #[arg(long)]
        vary: String,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Print G_c and the phase-field length scale from K_c, E, nu and sigma_c.
    Derive {
        /// TOML file of named material tables; defaults to the NMC811/NMC532 indentation data.
        materials: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Run the analytic-oracle verification suite.
    Check {
        #[arg(long)]
        json: bool,
    },
}

/// Failure classes mapped onto exit codes 1 and 2.
enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::UnknownKeys(_) | Error::Parameter(_) | Error::Geometry(_) | Error::Ocp(_) => {
                Failure::Config(e.into())
            }
            _ => Failure::Runtime(e.into()),
        }
    }
}

/// Log sink duplicating records to standard output and a file.
struct Tee {
    file: Arc<Mutex<Option<File>>>,
}

impl Write for Tee {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        std::io::stdout().write_all(buf)?;
        if let Some(f) = self.file.lock().expect("log lock").as_mut() {
            f.write_all(buf)?;
        }
        Ok(buf.len())
    }

    fn flush(&mut self) -> std::io::Result<()> {
        std::io::stdout().flush()?;
        if let Some(f) = self.file.lock().expect("log lock").as_mut() {
            f.flush()?;
        }
        Ok(())
    }
}

fn init_logging() -> Arc<Mutex<Option<File>>> {
    let file = Arc::new(Mutex::new(None));
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Pipe(Box::new(Tee { file: file.clone() })))
        .init();
    file
}

fn open_log(slot: &Arc<Mutex<Option<File>>>, dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join("run.log");
    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    *slot.lock().expect("log lock") = Some(f);
    Ok(())
}

fn output_dir(dir: &Path) -> PathBuf {
    if dir.is_absolute() {
        return dir.to_path_buf();
    }
    match std::env::var_os(OUTPUT_ROOT_VAR) {
        Some(root) => PathBuf::from(root).join(dir),
        None => dir.to_path_buf(),
    }
}

fn load(config: &Path, flags: &RunFlags) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::from_file(config)?;
    if let Some(dir) = &flags.output_dir {
        cfg.output.dir = dir.clone();
    }
    if let Some(n) = flags.snapshot_every {
        cfg.output.snapshot_every = n;
    }
    cfg.output.dir = output_dir(&cfg.output.dir);
    cfg.resolve()?;
    Ok(cfg)
}

/// Runs one configuration into its output directory.
fn execute(cfg: &RunConfig, base: Option<&RunConfig>) -> Result<PatternRecord, Failure> {
    let dir = cfg.output.dir.clone();
    let mut sim = cfg.build()?;
    log::info!(
        "{}: {} elements, {} nodes, J0 = {:.4e} mol/m^2/s, output {}",
        cfg.output.name,
        sim.mesh.n_elements(),
        sim.mesh.n_nodes(),
        sim.j0,
        dir.display()
    );
    let mut writer = RunWriter::new(&dir, cfg.output.snapshot_every)?;
    let result = match sim.run(&mut writer) {
        Ok(r) => r,
        Err(e) => {
            let _ = write_failure(&dir, &e);
            return Err(e.into());
        }
    };
    let diff = match base {
        Some(b) => Some(config_diff(b, cfg)?),
        None => None,
    };
    writer.finish(&sim, &result, cfg, diff)?;
    let record = PatternRecord::new(&cfg.output.name, &result);
    log::info!(
        "{}: {:?}, final SOL {:.4}, pattern {}, wall {:.1} s",
        cfg.output.name,
        result.termination,
        record.final_sol,
        record.pattern,
        result.wall_seconds
    );
    if let Termination::Aborted(reason) = &result.termination {
        return Err(Failure::Runtime(anyhow::anyhow!("run aborted: {reason}")));
    }
    Ok(record)
}

fn run(config: &Path, flags: &RunFlags, log: &Arc<Mutex<Option<File>>>) -> Result<(), Failure> {
    let cfg = load(config, flags)?;
    open_log(log, &cfg.output.dir).map_err(Failure::Runtime)?;
    if flags.deterministic {
        log::info!("deterministic mode requested");
    }
    let record = execute(&cfg, None)?;
    println!("{}", serde_json::to_string(&record).expect("serialisable record"));
    Ok(())
}

fn sweep(config: &Path, vary: &str, flags: &RunFlags, log: &Arc<Mutex<Option<File>>>) -> Result<(), Failure> {
    let base = load(config, flags)?;
    let members = expand_sweep(&base, vary)?;
    for m in &members {
        m.config.resolve()?;
    }
    open_log(log, &base.output.dir).map_err(Failure::Runtime)?;
    log::info!("sweep over {vary}: {} members, {} threads", members.len(), flags.threads.max(1));
    let queue = Mutex::new(members.iter().enumerate().collect::<Vec<_>>());
    let results: Mutex<BTreeMap<usize, Result<PatternRecord, String>>> = Mutex::new(BTreeMap::new());
    std::thread::scope(|s| {
        for _ in 0..flags.threads.max(1).min(members.len()) {
            s.spawn(|| loop {
                let Some((i, m)) = queue.lock().expect("queue").pop() else { break };
                let out = execute(&m.config, Some(&base)).map_err(|f| match f {
                    Failure::Config(e) | Failure::Runtime(e) => format!("{e:#}"),
                });
                results.lock().expect("results").insert(i, out);
            });
        }
    });
    let results = results.into_inner().expect("results");
    let mut summary = Vec::new();
    let mut failed = 0;
    for (i, m) in members.iter().enumerate() {
        match &results[&i] {
            Ok(r) => {
                println!("{:<20} pattern {:<10} final SOL {:.4}", m.label, r.pattern, r.final_sol);
                summary.push(serde_json::json!({ "member": m.label, "dir": m.config.output.dir, "record": r }));
            }
            Err(e) => {
                failed += 1;
                println!("{:<20} failed: {e}", m.label);
                summary.push(serde_json::json!({ "member": m.label, "dir": m.config.output.dir, "error": e }));
            }
        }
    }
    let path = base.output.dir.join("sweep.json");
    let body = serde_json::to_string_pretty(&summary).expect("serialisable summary");
    fs::write(&path, body + "\n")
        .with_context(|| format!("writing {}", path.display()))
        .map_err(Failure::Runtime)?;
    if failed > 0 {
        return Err(Failure::Runtime(anyhow::anyhow!("{failed} of {} sweep members failed", members.len())));
    }
    Ok(())
}

fn derive(materials: Option<&Path>, json: bool) -> Result<(), Failure> {
    let table: BTreeMap<String, MaterialConfig> = match materials {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))
                .map_err(Failure::Config)?;
            let value: toml::Value = text.parse().map_err(|e: toml::de::Error| Failure::Config(e.into()))?;
            let mut unknown = Vec::new();
            let t = serde_ignored::deserialize(value, |p| unknown.push(p.to_string()))
                .map_err(|e: toml::de::Error| Failure::Config(e.into()))?;
            if !unknown.is_empty() {
                return Err(Error::UnknownKeys(unknown).into());
            }
            t
        }
        None => {
            let m = |k_c, youngs| MaterialConfig {
                youngs: Some(youngs),
                poisson: Some(0.253),
                k_c: Some(k_c),
                sigma_c: Some(184.0),
                ..MaterialConfig::default()
            };
            BTreeMap::from([("core (NMC811)".to_string(), m(0.271, 230e9)), ("shell (NMC532)".to_string(), m(0.296, 201e9))])
        }
    };
    let mut rows = BTreeMap::new();
    for (name, m) in &table {
        let d = m
            .derive(name)?
            .ok_or_else(|| Failure::Config(anyhow::anyhow!("{name}: k_c is required")))?;
        rows.insert(name.clone(), d);
    }
    if json {
        println!("{}", serde_json::to_string_pretty(&rows).expect("serialisable"));
        return Ok(());
    }
    println!(
        "{:<16} {:>12} {:>9} {:>7} {:>12} {:>10} {:>10} {:>9}",
        "material", "K_c MPa m^.5", "E GPa", "nu", "sigma_c MPa", "G_c N/m", "l_ch um", "l um"
    );
    for (name, d) in &rows {
        let um = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{:.4}", v * 1e6));
        println!(
            "{:<16} {:>12.3} {:>9.1} {:>7.3} {:>12} {:>10.4} {:>10} {:>9}",
            name,
            d.k_c,
            d.youngs / 1e9,
            d.poisson,
            d.sigma_c.map_or("-".to_string(), |s| format!("{s:.1}")),
            d.g_c,
            um(d.l_ch),
            um(d.ell)
        );
    }
    Ok(())
}

fn check(json: bool) -> Result<(), Failure> {
    let checks = verify::run_all();
    if json {
        println!("{}", serde_json::to_string_pretty(&checks).expect("serialisable"));
    } else {
        for c in &checks {
            println!(
                "{} {:<32} error {:.3e} (tol {:.1e}, {:.1} s) {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.error,
                c.tolerance,
                c.seconds,
                c.detail
            );
        }
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(Failure::Runtime(anyhow::anyhow!("{failed} verification checks failed")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let log = init_logging();
    let outcome = match &cli.command {
        Command::Run { config, flags } => run(config, flags, &log),
        Command::Sweep { config, vary, flags } => sweep(config, vary, flags, &log),
        Command::Derive { materials, json } => derive(materials.as_deref(), *json),
        Command::Check { json } => check(*json),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("configuration error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
