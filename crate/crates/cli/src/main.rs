//! `sim` — command-line front end: n-body runs from JSON configs, randomized
//! invariant check suites, the Mercury perihelion scenario, and single-event
//! field probes.
//!
//! Exit codes: 0 success, 1 config/usage error, 2 numerical failure
//! (singular field, non-convergence, history exhaustion), 3 property-suite
//! failure.

mod config;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use config::{ResolvedRun, RunConfig, ScenarioSpec};
use lwsim::checks::{self, CheckReport};
use lwsim::dynamics::{simulate, Trajectory};
use lwsim::fields::{lw_field, lw_potential, SourceParticle};
use lwsim::retarded::retarded_state;
use lwsim::scenarios::{self, MercuryConfig, OrbitSpec, MERCURY_REFERENCE_ARCSEC_PER_CENTURY};
use lwsim::{SimError, Tolerances, Vec3};
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "sim",
    version,
    about = "Relativistic retarded-interaction simulator"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate the system described by a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config's output.directory).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Echo the resolved config as canonical JSON and exit.
        #[arg(long)]
        dump_config: bool,
    },
    /// Run a randomized invariant suite and compare residuals to thresholds.
    Check {
        #[arg(value_enum)]
        which: CheckKind,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        cases: usize,
        /// Negative control: corrupt the analytic field sign (must fail).
        #[arg(long, hide = true)]
        corrupt_sign: bool,
    },
    /// Mercury perihelion-advance scenario with amplified relativity.
    Mercury {
        #[arg(long, default_value_t = 10)]
        orbits: u32,
        /// Multiplier on the 1/c^2 advance (c is reduced by sqrt(amplify)).
        #[arg(long, default_value_t = 1e4)]
        amplify: f64,
        /// Verify the 1/c^2 scaling with a second run and report the
        /// true-constants advance.
        #[arg(long)]
        extrapolate: bool,
    },
    /// Evaluate potential and field of one source at one event.
    Probe {
        #[arg(long)]
        config: PathBuf,
        /// Observer event as "t,x,y,z".
        #[arg(long)]
        event: String,
        /// Label of the source particle.
        #[arg(long)]
        source: String,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CheckKind {
    Normalization,
    Gauge,
    Bianchi,
    Maxwell,
    Covariance,
    Oracle,
}

enum Failure {
    Usage(String),
    Numerical(String),
    Property,
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Numerical(_) => 2,
            Failure::Property => 3,
        }
    }
}

fn numerical(e: SimError) -> Failure {
    Failure::Numerical(e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(1);
        }
    };
    let result = match cli.cmd {
        Cmd::Run {
            config,
            out,
            dump_config,
        } => cmd_run(&config, out.as_deref(), dump_config),
        Cmd::Check {
            which,
            seed,
            cases,
            corrupt_sign,
        } => cmd_check(which, seed, cases, corrupt_sign),
        Cmd::Mercury {
            orbits,
            amplify,
            extrapolate,
        } => cmd_mercury(orbits, amplify, extrapolate),
        Cmd::Probe {
            config,
            event,
            source,
        } => cmd_probe(&config, &event, &source),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(msg) => eprintln!("error: {msg}"),
                Failure::Numerical(msg) => eprintln!("numerical failure: {msg}"),
                Failure::Property => eprintln!("property suite failed"),
            }
            ExitCode::from(f.exit_code())
        }
    }
}

fn load_config(path: &Path) -> Result<ResolvedRun, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    let cfg = RunConfig::from_json(&text).map_err(Failure::Usage)?;
    cfg.resolve().map_err(Failure::Usage)
}

// ---------------------------------------------------------------- run

#[derive(Serialize)]
struct RunSummary {
    status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    failure_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    steps: u64,
    rows_written: usize,
    max_four_velocity_norm_residual: f64,
    max_orthogonality_residual: f64,
    warnings: Vec<String>,
    wall_seconds: f64,
}

fn cmd_run(path: &Path, out_override: Option<&Path>, dump_config: bool) -> Result<(), Failure> {
    let run = load_config(path)?;
    if dump_config {
        let text = serde_json::to_string_pretty(&run.resolved).expect("config serializes");
        println!("{text}");
        return Ok(());
    }
    let out_dir = out_override
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(&run.resolved.output.directory));
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| Failure::Usage(format!("cannot create {}: {e}", out_dir.display())))?;

    match run.resolved.scenario {
        ScenarioSpec::Nbody => run_nbody(&run, &out_dir),
        ScenarioSpec::Mercury { orbits, amplify } => {
            let report = mercury_report(orbits, amplify, false)?;
            let text = serde_json::to_string_pretty(&report).expect("report serializes");
            write_text(&out_dir.join("mercury.json"), &text)?;
            println!("{text}");
            Ok(())
        }
    }
}

fn run_nbody(run: &ResolvedRun, out_dir: &Path) -> Result<(), Failure> {
    let started = std::time::Instant::now();
    let result = simulate(&run.sim, &run.particles, &run.initial);
    let wall = started.elapsed().as_secs_f64();

    let formats = &run.resolved.output.formats;
    let summary_path = out_dir.join("summary.json");
    match result {
        Ok((traj, _histories)) => {
            let mut written = Vec::new();
            if formats.iter().any(|f| f == "csv") {
                let csv_path = out_dir.join("trajectory.csv");
                write_trajectory_csv(&csv_path, &traj)?;
                written.push(csv_path);
            }
            for w in &traj.diagnostics.warnings {
                eprintln!("warning: {w}");
            }
            if formats.iter().any(|f| f == "json") {
                let summary = RunSummary {
                    status: "ok".into(),
                    failure_time: None,
                    error: None,
                    steps: traj.diagnostics.steps,
                    rows_written: traj.rows.len() * traj.labels.len(),
                    max_four_velocity_norm_residual: traj.diagnostics.max_norm_residual,
                    max_orthogonality_residual: traj.diagnostics.max_orthogonality_residual,
                    warnings: traj.diagnostics.warnings.clone(),
                    wall_seconds: wall,
                };
                let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
                write_text(&summary_path, &text)?;
                written.push(summary_path);
            }
            let names: Vec<String> = written.iter().map(|p| p.display().to_string()).collect();
            println!(
                "wrote {} ({} steps)",
                names.join(" and "),
                traj.diagnostics.steps
            );
            Ok(())
        }
        Err(e) => {
            let summary = RunSummary {
                status: "failed".into(),
                failure_time: e.failure_time(),
                error: Some(e.to_string()),
                steps: 0,
                rows_written: 0,
                max_four_velocity_norm_residual: 0.0,
                max_orthogonality_residual: 0.0,
                warnings: Vec::new(),
                wall_seconds: wall,
            };
            let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
            write_text(&summary_path, &text)?;
            Err(numerical(e))
        }
    }
}

/// Full-precision float formatting for CSV: 17 significant digits,
/// locale-independent.
fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> Result<(), Failure> {
    let file = std::fs::File::create(path)
        .map_err(|e| Failure::Usage(format!("cannot create {}: {e}", path.display())))?;
    let mut w = std::io::BufWriter::new(file);
    let io_err = |e: std::io::Error| Failure::Usage(format!("write {}: {e}", path.display()));
    w.write_all(b"t,label,x,y,z,vx,vy,vz,gamma\n")
        .map_err(io_err)?;
    for row in &traj.rows {
        for (label, p) in traj.labels.iter().zip(&row.particles) {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                fmt(row.t),
                label,
                fmt(p.pos.x),
                fmt(p.pos.y),
                fmt(p.pos.z),
                fmt(p.vel.x),
                fmt(p.vel.y),
                fmt(p.vel.z),
                fmt(p.gamma)
            )
            .map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text.as_bytes())
        .map_err(|e| Failure::Usage(format!("write {}: {e}", path.display())))
}

// ---------------------------------------------------------------- check

fn cmd_check(which: CheckKind, seed: u64, cases: usize, corrupt_sign: bool) -> Result<(), Failure> {
    if cases == 0 {
        return Err(Failure::Usage("--cases must be >= 1".into()));
    }
    let threads = match std::env::var("SIM_THREADS") {
        Ok(v) => Some(v.parse::<usize>().ok().filter(|&n| n >= 1).ok_or_else(|| {
            Failure::Usage(format!("SIM_THREADS must be a positive integer, got '{v}'"))
        })?),
        Err(_) => None,
    };
    let tol = Tolerances::default();
    let report: CheckReport = checks::with_thread_cap(threads, || match which {
        CheckKind::Normalization => checks::normalization_suite(seed, cases, &tol),
        CheckKind::Gauge => checks::gauge_suite(seed, cases, &tol),
        CheckKind::Bianchi => checks::bianchi_suite(seed, cases, &tol),
        CheckKind::Maxwell => checks::maxwell_suite(seed, cases, &tol),
        CheckKind::Covariance => checks::covariance_suite(seed, cases, &tol),
        CheckKind::Oracle => checks::oracle_suite_with(seed, cases, &tol, corrupt_sign),
    });
    for ob in &report.observations {
        println!(
            "{} {}: {}: max residual {:.3e} vs threshold {:.1e}",
            if ob.pass { "PASS" } else { "FAIL" },
            report.name,
            ob.what,
            ob.max_residual,
            ob.threshold
        );
    }
    println!(
        "{}: suite '{}' ({} cases, seed {})",
        if report.pass { "PASS" } else { "FAIL" },
        report.name,
        report.cases,
        report.seed
    );
    if report.pass {
        Ok(())
    } else {
        Err(Failure::Property)
    }
}

// ---------------------------------------------------------------- mercury

#[derive(Serialize)]
struct MercuryOutput {
    orbits: u32,
    amplify: f64,
    report: scenarios::PrecessionReport,
    measured_vs_analytic_rel_error: f64,
    /// Measured advance divided by the amplification, in arcsec/century.
    descaled_arcsec_per_century: f64,
    reference_arcsec_per_century: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    extrapolation: Option<Extrapolation>,
}

#[derive(Serialize)]
struct Extrapolation {
    second_amplify: f64,
    /// Ratio of the two measured advances; 4 under exact 1/c^2 scaling.
    scaling_ratio: f64,
    scaling_ratio_expected: f64,
    extrapolated_arcsec_per_century: f64,
    reference_arcsec_per_century: f64,
    relative_error: f64,
}

fn mercury_report(orbits: u32, amplify: f64, extrapolate: bool) -> Result<MercuryOutput, Failure> {
    if orbits < 6 {
        return Err(Failure::Usage(format!(
            "--orbits must be >= 6 so at least 5 perihelia support the fit, got {orbits}"
        )));
    }
    if !(amplify >= 1.0) || !amplify.is_finite() {
        return Err(Failure::Usage(format!(
            "--amplify must be >= 1, got {amplify}"
        )));
    }
    let run_at = |amp: f64| -> Result<scenarios::PrecessionReport, Failure> {
        let orbit = OrbitSpec {
            amplify: amp,
            ..OrbitSpec::mercury()
        };
        scenarios::mercury_scenario(&MercuryConfig::new(orbit, orbits)).map_err(numerical)
    };
    let report = run_at(amplify)?;
    let rel = (report.advance_per_orbit - report.analytic_reference).abs()
        / report.analytic_reference.abs();
    let descaled = report.advance_arcsec_per_century / amplify;

    let extrapolation = if extrapolate {
        let second = run_at(4.0 * amplify)?;
        let ratio = second.advance_per_orbit / report.advance_per_orbit;
        let extrapolated = report.advance_arcsec_per_century / amplify;
        Some(Extrapolation {
            second_amplify: 4.0 * amplify,
            scaling_ratio: ratio,
            scaling_ratio_expected: 4.0,
            extrapolated_arcsec_per_century: extrapolated,
            reference_arcsec_per_century: MERCURY_REFERENCE_ARCSEC_PER_CENTURY,
            relative_error: (extrapolated - MERCURY_REFERENCE_ARCSEC_PER_CENTURY).abs()
                / MERCURY_REFERENCE_ARCSEC_PER_CENTURY,
        })
    } else {
        None
    };
    Ok(MercuryOutput {
        orbits,
        amplify,
        report,
        measured_vs_analytic_rel_error: rel,
        descaled_arcsec_per_century: descaled,
        reference_arcsec_per_century: MERCURY_REFERENCE_ARCSEC_PER_CENTURY,
        extrapolation,
    })
}

fn cmd_mercury(orbits: u32, amplify: f64, extrapolate: bool) -> Result<(), Failure> {
    let out = mercury_report(orbits, amplify, extrapolate)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&out).expect("report serializes")
    );
    Ok(())
}

// ---------------------------------------------------------------- probe

#[derive(Serialize)]
struct ProbeOutput {
    source: String,
    event_time: f64,
    event_position: [f64; 3],
    retarded_time: f64,
    denominator: f64,
    distance: f64,
    potential: [f64; 4],
    field: [[f64; 4]; 4],
}

fn cmd_probe(path: &Path, event: &str, source_label: &str) -> Result<(), Failure> {
    let run = load_config(path)?;
    let parts: Vec<f64> = event
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::Usage(format!("--event must be t,x,y,z: {e}")))?;
    if parts.len() != 4 {
        return Err(Failure::Usage(format!(
            "--event must have exactly 4 components, got {}",
            parts.len()
        )));
    }
    let (t_obs, x_obs) = (parts[0], Vec3::new(parts[1], parts[2], parts[3]));

    let idx = run
        .particles
        .iter()
        .position(|p| p.label == source_label)
        .ok_or_else(|| Failure::Usage(format!("no particle labeled '{source_label}'")))?;

    // Probe against the recorded history, so causal-range violations surface
    // as history exhaustion.
    let (_, histories) = simulate(&run.sim, &run.particles, &run.initial).map_err(numerical)?;
    let source = SourceParticle {
        q: run.particles[idx].q,
        worldline: histories[idx].clone(),
    };

    let cpl = &run.sim.coupling;
    let ev =
        retarded_state(cpl.c, t_obs, x_obs, &source.worldline, cpl.r_min()).map_err(numerical)?;
    let a = lw_potential(cpl, &source, t_obs, x_obs).map_err(numerical)?;
    let f = lw_field(cpl, &source, t_obs, x_obs).map_err(numerical)?;

    let out = ProbeOutput {
        source: source_label.into(),
        event_time: t_obs,
        event_position: x_obs.to_array(),
        retarded_time: ev.t_ret,
        denominator: ev.denom,
        distance: ev.r,
        potential: a.0,
        field: f.matrix(),
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&out).expect("probe serializes")
    );
    Ok(())
}
