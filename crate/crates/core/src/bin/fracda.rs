use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fracda_core::config::RunConfig;
use fracda_core::harness::{self, RunOptions, SweepOptions};
use fracda_core::verify::{self, Suite, VerifyOptions};
use fracda_core::Error;

#[derive(Parser, Debug)]
#[command(name = "fracda", version, about = "Fractional Navier-Stokes data assimilation simulator")]
struct Cli {
    /// Output directory (defaults to the config's output.dir, then ./fracda-out/<config name>).
    #[arg(long, global = true, env = "FRACDA_OUT")]
    out: Option<PathBuf>,

    /// Worker threads for sweeps.
    #[arg(long, global = true, env = "FRACDA_THREADS")]
    threads: Option<usize>,

    /// Overrides the run seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Reject inadmissible alpha even if the config allows it.
    #[arg(long, global = true)]
    strict_admissibility: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one configured experiment.
    Run(RunArgs),
    /// Run a parameter sweep and write summary.csv.
    Sweep(SweepArgs),
    /// Run self-check suites.
    Verify(VerifyArgs),
    /// Recompute report.toml for an existing run directory.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Continue from a checkpoint directory holding u.ckpt and v.ckpt.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Parameter override `name=value`, repeatable.
    #[arg(long = "set", value_name = "NAME=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Sweep axis `name=v1,v2,...`, repeatable; replaces the config entry of the same name.
    #[arg(long = "sweep", value_name = "NAME=V1,V2")]
    axes: Vec<String>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// core, interp, integrator, inequalities or all.
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, hide = true)]
    corrupt_reality: bool,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Run directory containing config.toml and series.csv.
    #[arg(long)]
    run: PathBuf,
}

fn default_out(cli_out: &Option<PathBuf>, cfg: &RunConfig, config_path: &Path) -> PathBuf {
    if let Some(o) = cli_out {
        return o.clone();
    }
    if let Some(d) = &cfg.output.dir {
        return d.clone();
    }
    let stem = config_path.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
    PathBuf::from("fracda-out").join(stem)
}

fn load(cli: &Cli, path: &Path) -> Result<RunConfig, Error> {
    let mut cfg = RunConfig::load(path, cli.strict_admissibility)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn cmd_run(cli: &Cli, args: &RunArgs) -> Result<ExitCode, Error> {
    let mut cfg = load(cli, &args.config)?;
    for o in &args.overrides {
        let (name, value) = o
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override '{o}' is not name=value")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|e| Error::Config(format!("override '{o}': {e}")))?;
        cfg.set_param(name.trim(), value)?;
    }
    let opts = RunOptions {
        out_dir: default_out(&cli.out, &cfg, &args.config),
        strict_admissibility: cli.strict_admissibility,
        resume: args.resume.clone(),
        quiet: false,
    };
    let summary = harness::execute(&cfg, &opts)?;
    let r = &summary.report;
    println!("out: {}", summary.out_dir.display());
    println!(
        "steps={} samples={} status={} elapsed={:.2}s",
        r.run.steps, r.run.samples, r.run.status, r.run.elapsed_seconds
    );
    for (name, d) in [("l2", &r.decay_l2), ("valpha", &r.decay_valpha)] {
        match (d.rate, d.r_squared, d.decades) {
            (Some(rate), Some(r2), Some(dec)) => {
                println!("decay_{name}: rate={rate:.6} r2={r2:.6} decades={dec:.2}")
            }
            _ => println!("decay_{name}: no decay window"),
        }
    }
    if let Some(t) = &r.threshold {
        println!(
            "threshold: mu*h^2*c0={:e} nu={:e} ok={} mu_l2_required={:e}",
            t.h_condition_lhs, t.nu, t.h_condition_ok, t.mu_l2_required
        );
    }
    match summary.failure {
        Some(e) => {
            eprintln!("error: {e}");
            Ok(ExitCode::FAILURE)
        }
        None => Ok(ExitCode::SUCCESS),
    }
}

fn cmd_sweep(cli: &Cli, args: &SweepArgs) -> Result<ExitCode, Error> {
    let cfg = load(cli, &args.config)?;
    let extra = args
        .axes
        .iter()
        .map(|a| harness::parse_sweep_arg(a))
        .collect::<Result<Vec<_>, _>>()?;
    let axes = harness::merge_axes(&cfg, &extra);
    let opts = SweepOptions {
        out_dir: default_out(&cli.out, &cfg, &args.config),
        threads: cli.threads,
        strict_admissibility: cli.strict_admissibility,
    };
    let summary = harness::sweep(&cfg, &axes, &opts)?;
    println!("summary: {}", opts.out_dir.join("summary.csv").display());
    for row in &summary.rows {
        let params: Vec<String> = summary.names.iter().zip(&row.params).map(|(n, v)| format!("{n}={v}")).collect();
        let rate = row
            .report
            .as_ref()
            .and_then(|r| r.decay_l2.rate)
            .map_or("none".to_string(), |r| format!("{r:.6}"));
        println!("run {:03} {} status={} l2_rate={rate}", row.index, params.join(" "), row.status);
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(cli: &Cli, args: &VerifyArgs) -> Result<ExitCode, Error> {
    let suites: Vec<Suite> = if args.suite == "all" {
        Suite::ALL.to_vec()
    } else {
        vec![args.suite.parse()?]
    };
    let opts = VerifyOptions {
        corrupt_reality: args.corrupt_reality,
        out_dir: cli.out.clone(),
    };
    let mut ok = true;
    for suite in suites {
        let report = verify::run_suite(suite, &opts)?;
        for check in &report.checks {
            println!("{check}");
        }
        for rec in &report.records {
            println!(
                "RECORD {} lhs={:e} rhs={:e} ratio={:e}",
                rec.name, rec.lhs, rec.rhs_without_constant, rec.ratio
            );
        }
        ok &= report.passed();
    }
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn cmd_report(args: &ReportArgs) -> Result<ExitCode, Error> {
    let report = harness::report_dir(&args.run)?;
    let text = report.to_toml()?;
    std::fs::write(args.run.join("report.recomputed.toml"), &text)?;
    print!("{text}");
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => cmd_run(&cli, a),
        Command::Sweep(a) => cmd_sweep(&cli, a),
        Command::Verify(a) => cmd_verify(&cli, a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
