mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use esym_core::integrator::{invariant_report, Status};
use esym_core::verify::{all_passed, verify, VerifyOptions};
use esym_core::{build_scenario, scenario_names, Params};
use serde_json::{json, Value};

use config::{parse_pairs, Format, RunConfig};
use output::{write_json, Table};

#[derive(Parser)]
#[command(name = "esym", version, about = "Hamiltonian flows on E-symplectic manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in scenarios.
    List {
        #[arg(long)]
        json: bool,
    },
    /// Integrate a scenario described by a TOML config (or a trajectory JSON).
    Run {
        #[arg(long, short)]
        config: PathBuf,
        /// Output directory (default: the config's `output.dir`, else `.`).
        #[arg(long, short)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Column pairs `a:b` to write as plot data, comma separated.
        #[arg(long)]
        plot: Vec<String>,
    },
    /// Run the numerical self-checks: `all`, a module, or a scenario name.
    Verify {
        #[arg(default_value = "all")]
        scope: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        samples: usize,
        /// Flip the momentum-charge sign of the coupled bivector.
        #[arg(long)]
        inject_fault: bool,
        #[arg(long)]
        json: bool,
    },
    /// Re-export a trajectory JSON as CSV and/or plot data.
    Export {
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long, short)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[arg(long)]
        plot: Vec<String>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ESYM_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let res = match cli.command {
        Command::List { json } => list(json),
        Command::Run {
            config,
            out,
            format,
            seed,
            plot,
        } => run(&config, out, format, seed, &plot),
        Command::Verify {
            scope,
            seed,
            samples,
            inject_fault,
            json,
        } => run_verify(
            &scope,
            VerifyOptions {
                seed,
                samples,
                inject_fault,
            },
            json,
        ),
        Command::Export {
            input,
            out,
            format,
            plot,
        } => export(&input, out, format, &plot),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn list(as_json: bool) -> Result<u8> {
    let mut entries = Vec::new();
    for name in scenario_names() {
        let s = build_scenario(name, &Params::new())?;
        entries.push(json!({
            "name": s.name,
            "description": s.provenance,
            "frame": s.frame.family(),
            "state": s.state_names(),
            "params": s.params,
        }));
    }
    if as_json {
        println!("{}", serde_json::to_string_pretty(&entries)?);
    } else {
        for e in &entries {
            println!("{:<22} {}", e["name"].as_str().unwrap_or(""), e["description"].as_str().unwrap_or(""));
        }
    }
    Ok(0)
}

fn run(path: &Path, out: Option<PathBuf>, format: Option<Format>, seed: Option<u64>, plot: &[String]) -> Result<u8> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let (spec, resolved) = cfg.resolve()?;
    let dir = out.or_else(|| cfg.output.dir.clone()).unwrap_or_else(|| PathBuf::from("."));
    let format = format.or(cfg.output.format).unwrap_or(Format::Both);
    let mut pairs = parse_pairs(&cfg.output.plot)?;
    pairs.extend(parse_pairs(plot)?);
    std::fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;

    log::info!("running {} over T = {}", spec.name, spec.integrator.horizon);
    let traj = spec.run().with_context(|| format!("integrating {}", spec.name))?;
    let report = invariant_report(&traj)?;
    let meta = json!({
        "scenario": spec.name,
        "description": spec.provenance,
        "version": env!("CARGO_PKG_VERSION"),
        "config": resolved,
    });
    let doc = traj.to_json(meta.clone());
    let stem = spec.name.clone();
    let mut written = Vec::new();
    if format.csv() {
        let p = dir.join(format!("{stem}.csv"));
        let f = std::fs::File::create(&p).with_context(|| format!("cannot write {}", p.display()))?;
        traj.write_csv(std::io::BufWriter::new(f))?;
        written.push(p);
    }
    if format.json() {
        let p = dir.join(format!("{stem}.json"));
        write_json(&p, &doc)?;
        written.push(p);
    }
    let rp = dir.join(format!("{stem}_report.json"));
    write_json(&rp, &json!({ "meta": meta, "status": traj.status.as_str(), "report": report }))?;
    written.push(rp);
    if !pairs.is_empty() {
        let table = Table::from_json(&doc)?;
        for (a, b) in &pairs {
            written.extend(table.write_plot(&dir, &stem, a, b)?);
        }
    }

    println!("{}: {} at t = {:.6} ({} samples)", spec.name, traj.status.as_str(), report.final_time, report.samples);
    for c in &report.channels {
        println!("  {:<12} initial {:>13.6e}  max rel drift {:.3e}", c.name, c.initial, c.max_rel_drift);
    }
    for p in &written {
        println!("  wrote {}", p.display());
    }
    Ok(match traj.status {
        Status::Completed => 0,
        Status::LeftRegion | Status::StepUnderflow => {
            eprintln!("warning: integration stopped early ({})", traj.status.as_str());
            2
        }
    })
}

fn run_verify(scope: &str, opts: VerifyOptions, as_json: bool) -> Result<u8> {
    let checks = verify(scope, &opts)?;
    let ok = all_passed(&checks);
    if as_json {
        println!("{}", serde_json::to_string_pretty(&json!({ "passed": ok, "checks": checks }))?);
    } else {
        for c in &checks {
            let tag = match (c.passed, c.informational) {
                (true, _) => "PASS",
                (false, false) => "FAIL",
                (false, true) => "INFO",
            };
            println!(
                "{tag} {:<12} {:<48} {:>11.3e} (tol {:.1e})",
                c.suite, c.name, c.measured, c.tolerance
            );
        }
        let failed = checks.iter().filter(|c| !c.passed && !c.informational).count();
        println!("{} checks, {} failed", checks.len(), failed);
    }
    Ok(if ok { 0 } else { 1 })
}

fn export(input: &Path, out: Option<PathBuf>, format: Format, plot: &[String]) -> Result<u8> {
    let text = std::fs::read_to_string(input).with_context(|| format!("cannot read {}", input.display()))?;
    let doc: Value = serde_json::from_str(&text).with_context(|| format!("invalid JSON in {}", input.display()))?;
    let table = Table::from_json(&doc)?;
    let dir = out.unwrap_or_else(|| input.parent().map(Path::to_path_buf).unwrap_or_default());
    std::fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let stem = doc
        .pointer("/meta/scenario")
        .and_then(Value::as_str)
        .map(str::to_string)
        .or_else(|| input.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .unwrap_or_else(|| "trajectory".into());
    if format.csv() {
        let p = dir.join(format!("{stem}.csv"));
        table.write_csv(&p)?;
        println!("wrote {}", p.display());
    }
    if format.json() {
        let p = dir.join(format!("{stem}.json"));
        if p != input {
            write_json(&p, &doc)?;
            println!("wrote {}", p.display());
        }
    }
    for (a, b) in parse_pairs(plot)? {
        for p in table.write_plot(&dir, &stem, &a, &b)? {
            println!("wrote {}", p.display());
        }
    }
    Ok(0)
}
