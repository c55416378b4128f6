//! Command-line front end. Each subcommand reads one file and writes to the
//! given streams, so the whole interface is testable in process.
//!
//! Exit codes: 0 success, 1 validation failure, 2 unreadable or malformed
//! input, 3 engine failure.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::dynamics::{EquilibriumTrajectory, Termination};
use crate::engine::{compute_nash_flow, EngineError, TerminationPolicy};
use crate::io::{self, IoError};
use crate::network::{validate_network, Network};
use crate::num::{self, Extended, Q};
use crate::svg::{self, PlotKind};
use crate::thinflow::{solve_thin_flow_with, verify_thin_flow, SolveOptions};
use crate::validator;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_ENGINE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "nashflow", version, about = "Exact Nash flows over time with spillback")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a network file against the model assumptions.
    Validate { network: PathBuf },
    /// Compute the equilibrium trajectory of a network.
    Solve {
        network: PathBuf,
        /// Stop at this time (a rational or "inf").
        #[arg(long, value_parser = parse_extended_arg, default_value = "inf")]
        horizon: Extended,
        #[arg(long, default_value_t = 1000)]
        phase_cap: usize,
        /// Consecutive tiny steps tolerated before giving up.
        #[arg(long, default_value_t = 50)]
        stall: usize,
        /// Write the trajectory here; without it the trajectory goes to stdout
        /// and the summary to stderr.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a single spillback thin-flow instance.
    ThinFlow { instance: PathBuf },
    /// Run every validator check on an exported trajectory.
    Check { trajectory: PathBuf },
    /// Draw labels, queues or loads of an exported trajectory as SVG.
    Plot {
        trajectory: PathBuf,
        #[arg(long, value_enum, default_value_t = What::Labels)]
        what: What,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_parser = parse_rational_arg)]
        plot_horizon: Option<Q>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum What {
    Labels,
    Queues,
    Loads,
}

impl From<What> for PlotKind {
    fn from(w: What) -> Self {
        match w {
            What::Labels => PlotKind::Labels,
            What::Queues => PlotKind::Queues,
            What::Loads => PlotKind::Loads,
        }
    }
}

fn parse_extended_arg(s: &str) -> Result<Extended, String> {
    num::parse_extended(s).map_err(|e| e.to_string())
}

fn parse_rational_arg(s: &str) -> Result<Q, String> {
    num::parse_rational(s).map_err(|e| e.to_string())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    match execute(cli.command, out, err) {
        Ok(code) => code,
        Err(failure) => {
            let _ = writeln!(err, "error: {}", failure.message);
            failure.code
        }
    }
}

struct Failure {
    code: i32,
    message: String,
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure { code: EXIT_PARSE, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { code: EXIT_PARSE, message: e.to_string() }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents)
        .map_err(|e| Failure { code: EXIT_PARSE, message: format!("cannot write {}: {e}", path.display()) })
}

fn read_network(path: &Path, err: &mut dyn Write) -> Result<Result<crate::ValidatedNetwork, ()>, Failure> {
    let net: Network = io::parse_network(&io::read_text(path)?)?;
    Ok(match validate_network(&net) {
        Ok(v) => Ok(v),
        Err(violations) => {
            for v in violations {
                let _ = writeln!(err, "violation: {v}");
            }
            Err(())
        }
    })
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    match command {
        Command::Validate { network } => match read_network(&network, out)? {
            Ok(net) => {
                writeln!(out, "ok: {} nodes, {} arcs", net.node_count(), net.arc_count())?;
                Ok(EXIT_OK)
            }
            Err(()) => Ok(EXIT_INVALID),
        },
        Command::Solve { network, horizon, phase_cap, stall, out: target } => {
            let Ok(net) = read_network(&network, err)? else {
                return Ok(EXIT_INVALID);
            };
            let policy = TerminationPolicy { phase_cap, horizon, stall_repeats: stall, ..TerminationPolicy::default() };
            let traj = compute_nash_flow(&net, &policy).map_err(|e| Failure {
                code: if matches!(e, EngineError::InvalidPolicy(_)) { EXIT_PARSE } else { EXIT_ENGINE },
                message: e.to_string(),
            })?;
            let json = io::trajectory_to_json(&traj);
            let summary = solve_summary(&traj);
            match target {
                Some(path) => {
                    write_file(&path, &json)?;
                    write!(out, "{summary}")?;
                }
                None => {
                    write!(out, "{json}")?;
                    write!(err, "{summary}")?;
                }
            }
            Ok(EXIT_OK)
        }
        Command::ThinFlow { instance } => {
            let named = io::parse_thin_flow_instance(&io::read_text(&instance)?)?;
            let outcome = solve_thin_flow_with(&named.instance, &SolveOptions::default()).map_err(|e| Failure {
                code: match e {
                    crate::thinflow::ThinFlowError::InvalidInstance(_) => EXIT_PARSE,
                    crate::thinflow::ThinFlowError::NoSolutionFound => EXIT_ENGINE,
                },
                message: e.to_string(),
            })?;
            let report = verify_thin_flow(&named.instance, &outcome.solution);
            write!(out, "{}", io::to_json(&io::thin_flow_document(&named, &outcome, &report)))?;
            Ok(if report.is_valid() { EXIT_OK } else { EXIT_ENGINE })
        }
        Command::Check { trajectory } => {
            let traj = io::parse_trajectory(&io::read_text(&trajectory)?)?;
            let report = validator::validate_trajectory(&traj);
            write!(out, "{}", io::to_json(&report))?;
            for r in &report.results {
                writeln!(err, "{:?}: {}", r.check, if r.passed { "pass" } else { "FAIL" })?;
            }
            Ok(if report.passed() { EXIT_OK } else { EXIT_INVALID })
        }
        Command::Plot { trajectory, what, out: target, plot_horizon } => {
            if plot_horizon.as_ref().is_some_and(|h| *h <= num::zero()) {
                return Err(Failure { code: EXIT_PARSE, message: "plot horizon must be positive".into() });
            }
            let traj = io::parse_trajectory(&io::read_text(&trajectory)?)?;
            write_file(&target, &svg::render_svg(&traj, what.into(), plot_horizon.as_ref()))?;
            Ok(EXIT_OK)
        }
    }
}

fn plural(n: usize, word: &str) -> String {
    if n == 1 {
        format!("{n} {word}")
    } else {
        format!("{n} {word}s")
    }
}

/// One headline plus one line per phase listing `ℓ'` and `x'`, the spillback
/// factors below one, and the full arcs.
pub fn solve_summary(traj: &EquilibriumTrajectory) -> String {
    let net = traj.network();
    let phases = traj.phases();
    let mut head = vec![plural(phases.len(), "phase")];
    let bounds: Vec<String> = phases.iter().skip(1).map(|p| num::format_rational(&p.start)).collect();
    match bounds.len() {
        0 => {}
        1 => head.push(format!("boundary θ={}", bounds[0])),
        _ => head.push(format!("boundaries θ={}", bounds.join(", "))),
    }
    head.push(
        match traj.termination() {
            Termination::SteadyState => "steady state",
            Termination::Horizon => "horizon reached",
            Termination::PhaseCap => "phase cap reached",
            Termination::StalledProgress => "stalled",
        }
        .into(),
    );
    let mut s = head.join("; ");
    s.push('\n');
    for (i, p) in phases.iter().enumerate() {
        let end = phases.get(i + 1).map(|q| Extended::Finite(q.start.clone())).unwrap_or_else(|| traj.end().clone());
        let labels: Vec<String> = net
            .node_ids()
            .map(|v| format!("{}={}", net.node_name(v), num::format_rational(&p.label_rates[v.0])))
            .collect();
        let flows: Vec<String> =
            net.arc_ids().map(|e| format!("{}={}", net.arc(e).name, num::format_rational(&p.flow_rates[e.0]))).collect();
        s.push_str(&format!(
            "[{}, {})  ℓ': {}  x': {}",
            num::format_rational(&p.start),
            end,
            labels.join(" "),
            flows.join(" ")
        ));
        for v in net.node_ids() {
            if p.factors[v.0] < num::one() {
                s.push_str(&format!("  c_{} = {}", net.node_name(v), num::format_rational(&p.factors[v.0])));
            }
        }
        let full: Vec<&str> = net.arc_ids().filter(|e| p.spillback[e.0]).map(|e| net.arc(e).name.as_str()).collect();
        if !full.is_empty() {
            s.push_str(&format!("  full: {}", full.join(" ")));
        }
        s.push('\n');
    }
    s
}
