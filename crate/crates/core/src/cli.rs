//! Command-line front end. Exit codes: 0 success, 2 bad input, 3 calibration
//! found no satisfying grid point, 1 anything else.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::calibrate::{calibrate, load_constraints, CalibrationOutcome, SearchSpace};
use crate::corpus::{batch_score, emit_report, load_corpus, Corpus, ReportFormat};
use crate::error::{Error, Result};
use crate::files;
use crate::fixtures;
use crate::game::{
    check_resistance, estimate_adv, estimate_det, load_scenario, ChallengerPolicy, Estimate, Execution,
    ResistanceThresholds, ResistanceVerdict, TrialPlan, WatchdogStrategy,
};
use crate::model::{DetectorProfile, Mode, Taxonomy, WeightProfile};
use crate::service::{self, ServiceConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_EXHAUSTED: i32 = 3;

pub const DEFAULT_LISTEN: &str = "127.0.0.1:8731";
const DEFAULT_QUERIES: u32 = 4;

#[derive(Debug, Parser)]
#[command(name = "deceptive-risk", version, about = "Risk scoring for deceptive design patterns")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score the cases of a corpus file.
    Score(ScoreArgs),
    /// Estimate detection probability and adversary advantage for a scenario.
    Simulate(SimulateArgs),
    /// Search for weights and F-scores that satisfy band constraints.
    Calibrate(CalibrateArgs),
    /// Serve the scoring API on a local address.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Machine,
    Human,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Machine => ReportFormat::Machine,
            Format::Human => ReportFormat::Human,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    With,
    Baseline,
    Both,
}

impl ModeArg {
    fn modes(self) -> &'static [Mode] {
        match self {
            ModeArg::With => &[Mode::WithChallenger],
            ModeArg::Baseline => &[Mode::BaselineChallenger],
            ModeArg::Both => &Mode::BOTH,
        }
    }
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Score only this case.
    #[arg(long)]
    pub case: Option<String>,
    #[arg(long, value_enum, default_value_t = ModeArg::Both)]
    pub mode: ModeArg,
    /// Weight profile file; the shipped default if omitted.
    #[arg(long)]
    pub profile: Option<PathBuf>,
    /// Detector profile file; the shipped default if omitted.
    #[arg(long)]
    pub detector: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Machine)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Random,
    Heuristic,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// `builtin:NAME` or a scenario file.
    #[arg(long)]
    pub scenario: String,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = PolicyArg::Random)]
    pub policy: PolicyArg,
    /// Heuristic sensitivity for a cue class, as CUE=VALUE. Repeatable.
    #[arg(long = "sensitivity", value_parser = parse_sensitivity)]
    pub sensitivities: Vec<(String, f64)>,
    /// Watchdog queries per functionality; defaults to the scenario's value.
    #[arg(long)]
    pub queries: Option<u32>,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon_det: f64,
    #[arg(long, default_value_t = 0.05)]
    pub delta_adv: f64,
    /// Run trials on one thread.
    #[arg(long)]
    pub serial: bool,
    #[arg(long, value_enum, default_value_t = Format::Machine)]
    pub format: Format,
}

fn parse_sensitivity(s: &str) -> std::result::Result<(String, f64), String> {
    let (cue, value) = s.split_once('=').ok_or_else(|| format!("expected CUE=VALUE, got {s}"))?;
    let value: f64 = value.parse().map_err(|_| format!("not a number: {value}"))?;
    Ok((cue.to_string(), value))
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub constraints: PathBuf,
    /// Corpus the constraints refer to; the shipped reference cases if omitted.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    pub grid_step: f64,
    #[arg(long)]
    pub output_profile: Option<PathBuf>,
    #[arg(long)]
    pub output_detector: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Machine)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = DEFAULT_LISTEN)]
    pub listen: String,
    /// Extra weight profile files. Repeatable; the shipped default is always loaded.
    #[arg(long = "profile")]
    pub profiles: Vec<PathBuf>,
    /// Extra detector profile files. Repeatable.
    #[arg(long = "detector")]
    pub detectors: Vec<PathBuf>,
    #[arg(long)]
    pub taxonomy: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{}", e.render());
                    EXIT_INVALID
                }
            };
        }
    };
    match execute(cli.command, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error[{}]: {e}", e.code());
            if e.is_validation() {
                EXIT_INVALID
            } else {
                EXIT_FAILURE
            }
        }
    }
}

/// Entry point for the binary.
pub fn run_main() -> i32 {
    run(std::env::args_os(), &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

fn execute(command: Command, out: &mut dyn Write) -> Result<i32> {
    let (text, code) = match command {
        Command::Score(args) => (cmd_score(&args)?, EXIT_OK),
        Command::Simulate(args) => (cmd_simulate(&args)?, EXIT_OK),
        Command::Calibrate(args) => cmd_calibrate(&args)?,
        Command::Serve(args) => {
            cmd_serve(&args, out)?;
            return Ok(EXIT_OK);
        }
    };
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|source| Error::Io {
            path: PathBuf::from("<stdout>"),
            source,
        })?;
    Ok(code)
}

fn load_profile(path: Option<&Path>) -> Result<WeightProfile> {
    match path {
        Some(p) => WeightProfile::load(p),
        None => Ok(fixtures::default_profile()),
    }
}

fn load_detector(path: Option<&Path>) -> Result<DetectorProfile> {
    match path {
        Some(p) => DetectorProfile::load(p),
        None => Ok(fixtures::default_detector()),
    }
}

pub fn cmd_score(args: &ScoreArgs) -> Result<String> {
    let mut corpus = load_corpus(&args.corpus)?;
    if let Some(id) = &args.case {
        corpus = corpus.select(id)?;
    }
    let profile = load_profile(args.profile.as_deref())?;
    let detector = load_detector(args.detector.as_deref())?;
    let assessments = batch_score(&corpus, &profile, &detector, args.mode.modes())?;
    Ok(emit_report(&assessments, args.format.into()))
}

#[derive(Debug, Serialize)]
struct SimulationReport {
    scenario: String,
    trials: u64,
    seed: u64,
    watchdog: WatchdogStrategy,
    det: Estimate,
    challenger: Option<ChallengerPolicy>,
    adv: Option<Estimate>,
    thresholds: ResistanceThresholds,
    verdict: Option<ResistanceVerdict>,
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<String> {
    let scenario = load_scenario(&args.scenario)?;
    let thresholds = ResistanceThresholds::new(args.epsilon_det, args.delta_adv)?;
    let policy = match args.policy {
        PolicyArg::Random if !args.sensitivities.is_empty() => {
            return Err(Error::InvalidArgument("--sensitivity requires --policy heuristic".into()))
        }
        PolicyArg::Random => ChallengerPolicy::RandomClick,
        PolicyArg::Heuristic => ChallengerPolicy::Heuristic {
            sensitivities: args.sensitivities.iter().cloned().collect(),
        },
    };
    let queries = args
        .queries
        .or(scenario.queries_per_functionality)
        .unwrap_or(DEFAULT_QUERIES);
    let strategy = WatchdogStrategy::uniform(queries);
    let mut plan = TrialPlan::new(args.trials, args.seed);
    if args.serial {
        plan.execution = Execution::Serial;
    }

    let det = estimate_det(&strategy, &scenario.spec, &scenario.implementation, &plan)?;
    let (adv, verdict) = if scenario.has_interaction() {
        let adv = estimate_adv(&policy, &scenario.implementation, &plan)?;
        let verdict = check_resistance(&det, &adv, &thresholds)?;
        (Some(adv), Some(verdict))
    } else {
        (None, None)
    };
    let report = SimulationReport {
        scenario: scenario.name,
        trials: plan.trials,
        seed: plan.seed,
        watchdog: strategy,
        det,
        challenger: adv.map(|_| policy),
        adv,
        thresholds,
        verdict,
    };
    Ok(match args.format {
        Format::Machine => files::to_canonical_json(&report),
        Format::Human => human_simulation(&report),
    })
}

fn human_simulation(r: &SimulationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scenario: {}", r.scenario);
    let _ = writeln!(out, "trials: {} per estimate, seed {}", r.trials, r.seed);
    let _ = writeln!(
        out,
        "DET = {:.5} (std error {:.5}), watchdog with {} uniform queries per functionality",
        r.det.value, r.det.std_error, r.watchdog.queries_per_functionality
    );
    match (&r.adv, &r.challenger) {
        (Some(adv), Some(policy)) => {
            let name = match policy {
                ChallengerPolicy::RandomClick => "random-click challenger".to_string(),
                ChallengerPolicy::Heuristic { sensitivities } => {
                    let s: Vec<String> = sensitivities.iter().map(|(k, v)| format!("{k}={v}")).collect();
                    format!("heuristic challenger ({})", s.join(", "))
                }
            };
            let _ = writeln!(out, "ADV = {:.5} (std error {:.5}), {name}", adv.value, adv.std_error);
        }
        _ => {
            let _ = writeln!(out, "ADV = n/a (scenario has no interaction)");
        }
    }
    match &r.verdict {
        Some(v) => {
            let how = match (v.via_detection, v.via_advantage) {
                (true, true) => "resistant (detection and advantage branches)",
                (true, false) => "resistant (detection branch)",
                (false, true) => "resistant (advantage branch)",
                (false, false) => "not resistant",
            };
            let _ = writeln!(
                out,
                "verdict for this watchdog and challenger: {how}; epsilon_det {} margin {:+.5}, delta_adv {} margin {:+.5}",
                r.thresholds.epsilon_det, v.detection_margin, r.thresholds.delta_adv, v.advantage_margin
            );
        }
        None => {
            let _ = writeln!(out, "verdict: n/a");
        }
    }
    out
}

/// Returns the report and the exit code (0 found, 3 exhausted).
pub fn cmd_calibrate(args: &CalibrateArgs) -> Result<(String, i32)> {
    let constraints = load_constraints(&args.constraints)?;
    let corpus: Corpus = match &args.corpus {
        Some(p) => load_corpus(p)?,
        None => fixtures::reference_corpus(),
    };
    let space = SearchSpace::from_defaults(args.grid_step);
    let outcome = calibrate(&corpus, &constraints, &space)?;
    let code = match &outcome {
        CalibrationOutcome::Found(found) => {
            if let Some(p) = &args.output_profile {
                files::write_text(p, &found.profile.to_json())?;
            }
            if let Some(p) = &args.output_detector {
                files::write_text(p, &found.detector.to_json())?;
            }
            EXIT_OK
        }
        CalibrationOutcome::Exhausted(_) => EXIT_EXHAUSTED,
    };
    let text = match args.format {
        Format::Machine => files::to_canonical_json(&outcome),
        Format::Human => human_calibration(&outcome, args.grid_step),
    };
    Ok((text, code))
}

fn human_calibration(outcome: &CalibrationOutcome, step: f64) -> String {
    let mut out = String::new();
    match outcome {
        CalibrationOutcome::Found(f) => {
            let _ = writeln!(
                out,
                "found a satisfying profile at grid step {step} (grid point {}, {} case evaluations)",
                f.grid_points_examined, f.case_evaluations
            );
            let lv = &f.profile.level_values;
            let iv = &f.profile.imp_values;
            let _ = writeln!(out, "level values: low {} medium {} high {}", lv.low, lv.medium, lv.high);
            let _ = writeln!(
                out,
                "impact values: time_wasting {} privacy_breach {} financial_loss {}",
                iv.time_wasting, iv.privacy_breach, iv.financial_loss
            );
            for (category, f_score) in &f.detector.f_scores {
                let _ = writeln!(out, "f-score {category}: {f_score}");
            }
        }
        CalibrationOutcome::Exhausted(r) => {
            let _ = writeln!(
                out,
                "no satisfying profile at grid step {step} ({} grid points, {} case evaluations)",
                r.grid_points, r.case_evaluations
            );
            match &r.best {
                Some(best) => {
                    let _ = writeln!(out, "nearest miss fails {} constraint(s):", best.failures.len());
                    for failure in &best.failures {
                        let _ = writeln!(
                            out,
                            "- {}: got {:.4}, short by {:.4}",
                            failure.constraint, failure.actual, failure.shortfall
                        );
                    }
                }
                None => {
                    let _ = writeln!(out, "no valid profile exists on this grid");
                }
            }
        }
    }
    out
}

fn cmd_serve(args: &ServeArgs, out: &mut dyn Write) -> Result<()> {
    let taxonomy = match &args.taxonomy {
        Some(p) => Taxonomy::load(p)?,
        None => fixtures::default_taxonomy(),
    };
    let mut profiles = vec![fixtures::default_profile()];
    for p in &args.profiles {
        profiles.push(WeightProfile::load(p)?);
    }
    let mut detectors = vec![fixtures::default_detector()];
    for p in &args.detectors {
        detectors.push(DetectorProfile::load(p)?);
    }
    let config = ServiceConfig::new(taxonomy, profiles, detectors)?;
    service::serve_blocking(&args.listen, config, |addr| {
        let _ = writeln!(out, "listening on http://{addr}");
        let _ = out.flush();
    })
}
