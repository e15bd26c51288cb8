use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use shocklab::config::{validate_config, ExperimentConfig};
use shocklab::experiments::{run_contraction, run_lemmas, run_nu_sweep, run_simulation, thread_pool, Setup};
use shocklab::io::{self, RunDir};
use shocklab::poincare::stress_search;
use shocklab::profile::{solve_profile_vu, tail_diagnostics, Formulation};
use shocklab::ShockError;

/// Weighted relative-entropy experiments for viscous shocks.
#[derive(Debug, Parser)]
#[command(name = "shocklab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the viscous shock profile and export it.
    Profile(Common),
    /// Evolve the perturbed profile without the shift.
    Simulate(Common),
    /// Evolve with the shift and track the weighted entropy.
    Contraction(Common),
    /// Vanishing-viscosity sweep over the configured viscosities.
    Sweep(Common),
    /// Randomized search for the nonlinear Poincare-type inequality.
    Poincare(Common),
    /// Empirical constants of the relative-entropy inequalities.
    Lemmas(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// JSON experiment configuration.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Overrides the configured seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Self::Profile(_) => "profile",
            Self::Simulate(_) => "simulate",
            Self::Contraction(_) => "contraction",
            Self::Sweep(_) => "sweep",
            Self::Poincare(_) => "poincare",
            Self::Lemmas(_) => "lemmas",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Self::Profile(c)
            | Self::Simulate(c)
            | Self::Contraction(c)
            | Self::Sweep(c)
            | Self::Poincare(c)
            | Self::Lemmas(c) => c,
        }
    }
}

fn load_config(path: &Path, seed: Option<u64>) -> shocklab::Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ShockError::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
    let mut raw = ExperimentConfig::from_json(&text)?;
    if let Some(s) = seed {
        raw.seed = s;
    }
    validate_config(raw)
}

fn run(cmd: &Command) -> shocklab::Result<String> {
    let common = cmd.common();
    let cfg = load_config(&common.config, common.seed)?;
    let mut out = RunDir::create(&common.out)?;
    let mut notes = Vec::new();
    let line = match cmd {
        Command::Profile(_) => {
            let s = Setup::new(&cfg)?;
            let profile = match Formulation::from(cfg.formulation) {
                Formulation::Vh => (*s.profile).clone(),
                Formulation::Vu => solve_profile_vu(&s.model, &s.ends, cfg.resolved_extent()?, cfg.dx)?,
            };
            io::write_profile_csv(&out.path("profile.csv")?, &profile)?;
            let tails = tail_diagnostics(&profile)?;
            out.json(
                "profile.json",
                &json!({
                    "ends": s.ends,
                    "eps": s.eps,
                    "ode_residual": profile.ode_residual(),
                    "first_integral_residual": profile.first_integral_residual(),
                    "tails": tails,
                }),
            )?;
            format!("profile: eps = {}, sigma = {}, {} nodes", s.eps, s.ends.sigma, profile.grid.n)
        }
        Command::Simulate(_) => {
            let o = run_simulation(&cfg)?;
            io::write_snapshot_csv(&out.path("snapshot_initial.csv")?, &o.initial)?;
            io::write_snapshot_csv(&out.path("snapshot_final.csv")?, &o.state)?;
            let (mass, momentum) = o.state.totals();
            out.json(
                "simulation.json",
                &json!({
                    "steps": o.steps,
                    "time": o.state.time,
                    "field_b": io::field_b_name(o.state.formulation),
                    "totals": [mass, momentum],
                }),
            )?;
            format!("simulate: {} steps to t = {}", o.steps, o.state.time)
        }
        Command::Contraction(_) => {
            let o = run_contraction(&cfg)?;
            io::write_trajectory_csv(&out.path("trajectory.csv")?, &o.trajectory)?;
            io::write_reports_csv(&out.path("functionals.csv")?, &o.reports)?;
            io::write_snapshot_csv(&out.path("snapshot_final.csv")?, &o.state)?;
            out.json("contraction.json", &json!({ "summary": o.summary, "contracting": o.summary.contracting() }))?;
            format!(
                "contraction: E(0) = {:e}, E(T) = {:e}, contracting = {}",
                o.summary.initial_entropy,
                o.summary.final_entropy,
                o.summary.contracting()
            )
        }
        Command::Sweep(_) => {
            let r = run_nu_sweep(&cfg)?;
            out.json("sweep.json", &r)?;
            for (k, e) in r.entries.iter().enumerate() {
                let p = out.path(&format!("shift_{k}.csv"))?;
                write_shift_series(&p, e.nu, &e.shift_series)?;
            }
            notes.push(("truncation_rule".to_owned(), r.truncation_rule.clone()));
            format!("sweep: {} entries, {} failures", r.entries.len(), r.failures.len())
        }
        Command::Poincare(_) => {
            let r = thread_pool()?.install(|| stress_search(&cfg.stress_config()))?;
            out.json("poincare.json", &r)?;
            format!("poincare: max LHS = {:e}, threshold = {:?}", r.max_lhs, r.empirical_delta_threshold)
        }
        Command::Lemmas(_) => {
            let reports = run_lemmas(&cfg)?;
            out.json("lemmas.json", &reports)?;
            let passed = reports.iter().filter(|r| r.passed()).count();
            format!("lemmas: {passed}/{} passed", reports.len())
        }
    };
    out.finish(cmd.name(), &cfg, notes)?;
    Ok(line)
}

fn write_shift_series(path: &Path, nu: f64, series: &[(f64, f64)]) -> shocklab::Result<()> {
    let rows: Vec<String> = std::iter::once("nu,t,X_minus_sigma_t".to_owned())
        .chain(series.iter().map(|(t, x)| format!("{nu},{t},{x}")))
        .collect();
    std::fs::write(path, rows.join("\n") + "\n").map_err(|e| ShockError::Io(format!("{}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli.command) {
        Ok(line) => {
            println!("{line}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
