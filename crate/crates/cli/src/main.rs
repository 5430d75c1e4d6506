// Copyright 2026 The galton-core Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! `galton`: plan schedules, run shots, and emit plot-ready data.
//!
//! Exit codes: 0 success, 1 other failure, 2 infeasible or malformed
//! target, 3 a shot used up `--max-attempts` without being accepted.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use galton_core::analysis::{
    gaussian_reference, probabilities, selection_curve, stats_centered, tv_distance, Convention,
};
use galton_core::circuit;
use galton_core::galton::{
    run_post_selected, run_shots, FourierMode, Resources, RunConfig, ShiftMode, Variant,
};
use galton_core::noise::{noisy_acceptance_exact, rejection_sweep, sample_noisy_shots, NoiseModel};
use galton_core::schedule::{plan_from_spec, shift_amount, Schedule, ScheduleReport, TargetSpec};
use galton_core::Error;
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "galton",
    version,
    about = "Gaussian state preparation by a coherent Galton board"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Plan a schedule from a target spec (JSON) and print the report.
    Plan {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run shots; records go to --out (or stdout), the summary to stderr.
    Run(RunArgs),
    /// Per-step probability of reading 0 given all earlier reads were 0.
    Curve {
        #[command(flatten)]
        sched: SchedArgs,
        #[command(flatten)]
        exec: ExecArgs,
        #[command(flatten)]
        io: OutArgs,
    },
    /// Ancilla rejection with and without an injected fault, swept over t and j.
    NoiseSweep {
        /// Register size.
        #[arg(long, default_value_t = 8)]
        n: usize,
        /// Step counts, comma separated.
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "25,50,75,100,125,150,175,200,225,250"
        )]
        ts: Vec<u64>,
        /// Fault qubits, comma separated; all qubits when omitted.
        #[arg(long, value_delimiter = ',')]
        js: Option<Vec<usize>>,
        #[command(flatten)]
        io: OutArgs,
    },
    /// Qubit counts with and without mid-circuit measurement and reuse.
    Resources {
        #[command(flatten)]
        sched: SchedArgs,
        #[arg(long, value_enum, default_value_t = VariantArg::Mcmr)]
        variant: VariantArg,
        #[command(flatten)]
        io: OutArgs,
    },
    /// Emit the single-transform circuit as OpenQASM 3 text.
    Export {
        #[command(flatten)]
        sched: SchedArgs,
        #[arg(long, value_enum, default_value_t = ShiftArg::Rounded)]
        shift: ShiftArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SchedArgs {
    /// Target spec (JSON); the schedule and shift are planned from it.
    #[arg(long, conflicts_with_all = ["schedule", "n1", "alpha"])]
    spec: Option<PathBuf>,
    /// Iterations per stage, comma separated.
    #[arg(long, value_delimiter = ',', requires = "n1")]
    schedule: Option<Vec<u32>>,
    /// Qubits in the first stage.
    #[arg(long)]
    n1: Option<usize>,
    /// Mean shift in grid units.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    alpha: f64,
}

#[derive(Args)]
struct ExecArgs {
    #[arg(long, value_enum, default_value_t = VariantArg::Mcmr)]
    variant: VariantArg,
    #[arg(long, value_enum, default_value_t = FourierArg::PerStage)]
    fourier: FourierArg,
    #[arg(long, value_enum, default_value_t = ShiftArg::Rounded)]
    shift: ShiftArg,
    /// Upper bound on simulated qubits.
    #[arg(long, env = "GALTON_MAX_QUBITS")]
    max_qubits: Option<usize>,
}

#[derive(Args)]
struct OutArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    sched: SchedArgs,
    #[command(flatten)]
    exec: ExecArgs,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    shots: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Attempts per shot before it counts as exhausted.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    max_attempts: u32,
    /// Per-gate fault rate; 0 disables the noise model.
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Also write the accepted state as CSV (index, re, im, prob).
    #[arg(long)]
    state_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Mcmr,
    McmrFree,
    Exact,
}

#[derive(Clone, Copy, ValueEnum)]
enum FourierArg {
    PerStage,
    SingleQft,
}

#[derive(Clone, Copy, ValueEnum)]
enum ShiftArg {
    None,
    Rounded,
    Exact,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Mcmr => Variant::Mcmr,
            VariantArg::McmrFree => Variant::McmrFree,
            VariantArg::Exact => Variant::ExactNoScaling,
        }
    }
}

impl From<FourierArg> for FourierMode {
    fn from(f: FourierArg) -> Self {
        match f {
            FourierArg::PerStage => FourierMode::PerStage,
            FourierArg::SingleQft => FourierMode::SingleQft,
        }
    }
}

impl From<ShiftArg> for ShiftMode {
    fn from(s: ShiftArg) -> Self {
        match s {
            ShiftArg::None => ShiftMode::None,
            ShiftArg::Rounded => ShiftMode::Rounded,
            ShiftArg::Exact => ShiftMode::Exact,
        }
    }
}

/// Failure that maps to a specific exit code.
#[derive(Debug)]
struct Exit(u8, String);

impl std::fmt::Display for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.1)
    }
}

impl std::error::Error for Exit {}

fn target_error(e: Error) -> anyhow::Error {
    match e {
        Error::Infeasible { .. } | Error::InvalidTarget(_) => {
            Exit(2, format!("target rejected: {e}")).into()
        }
        other => other.into(),
    }
}

fn read_spec(path: &Path) -> anyhow::Result<TargetSpec> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text)
        .map_err(|e| Exit(2, format!("target rejected: {}: {e}", path.display())).into())
}

fn load_schedule(a: &SchedArgs) -> anyhow::Result<Schedule> {
    if let Some(path) = &a.spec {
        let (s, grid, _) = plan_from_spec(&read_spec(path)?).map_err(target_error)?;
        let alpha = shift_amount(&s, &grid).alpha;
        return Ok(s.with_alpha(alpha));
    }
    match (&a.schedule, a.n1) {
        (Some(t), Some(n1)) => Ok(Schedule::new(n1, t.clone())?.with_alpha(a.alpha)),
        _ => bail!("give either --spec or --schedule with --n1"),
    }
}

fn config(s: Schedule, e: &ExecArgs) -> RunConfig {
    let mut cfg = RunConfig::new(s)
        .variant(e.variant.into())
        .fourier_mode(e.fourier.into())
        .shift(e.shift.into());
    if let Some(q) = e.max_qubits {
        cfg.max_qubits = q;
    }
    cfg
}

fn sink(out: &Option<PathBuf>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_rows<T: Serialize>(rows: &[T], io_args: &OutArgs) -> anyhow::Result<()> {
    let mut w = sink(&io_args.out)?;
    match io_args.format {
        Format::Csv => {
            let mut wtr = csv::Writer::from_writer(&mut w);
            for r in rows {
                wtr.serialize(r)?;
            }
            wtr.flush()?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, rows)?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn cmd_plan(spec: &Path, out: &Option<PathBuf>) -> anyhow::Result<()> {
    let spec = read_spec(spec)?;
    let (s, grid, warnings) = plan_from_spec(&spec).map_err(target_error)?;
    let report = ScheduleReport::new(&s, &grid, warnings);
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, &report)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct CsvRecord {
    shot: u64,
    attempts: u32,
    accepted: bool,
    ancilla_trace: String,
    total_qubits: usize,
    errors: usize,
}

#[derive(Serialize)]
struct RunSummary {
    shots: u64,
    accepted: u64,
    acceptance_rate: f64,
    acceptance_stderr: f64,
    acceptance_theory: f64,
    exhausted: u64,
    errored: Option<u64>,
    predicted_mean: f64,
    predicted_variance: f64,
    state_mean: Option<f64>,
    state_variance: Option<f64>,
    tv_gaussian: f64,
    wraparound_stages: Vec<usize>,
}

fn cmd_run(a: &RunArgs) -> anyhow::Result<()> {
    if !(0.0..1.0).contains(&a.epsilon) {
        bail!("--epsilon must lie in [0, 1)");
    }
    let cfg = config(load_schedule(&a.sched)?, &a.exec)
        .seed(a.seed)
        .max_attempts(a.max_attempts);
    if a.epsilon > 0.0 && cfg.variant == Variant::McmrFree {
        bail!("the noise model applies to the single-ancilla variants only");
    }
    if a.epsilon > 0.0 && a.max_attempts > 1 {
        bail!("noisy runs make one attempt per shot");
    }
    let s = cfg.effective_schedule();
    let post = run_post_selected(&cfg)?;

    let (records, errors): (Vec<_>, Vec<usize>) = if a.epsilon > 0.0 {
        let model = NoiseModel::new(a.epsilon)?;
        let noisy = sample_noisy_shots(&cfg, &model, a.shots)?;
        noisy
            .into_iter()
            .map(|n| (n.record, n.errors.len()))
            .unzip()
    } else {
        let recs = run_shots(&cfg, a.shots)?;
        let n = recs.len();
        (recs, vec![0; n])
    };

    let mut w = sink(&a.out)?;
    match a.format {
        Format::Json if a.epsilon > 0.0 => {
            for (r, e) in records.iter().zip(&errors) {
                serde_json::to_writer(&mut w, &serde_json::json!({ "record": r, "errors": e }))?;
                writeln!(w)?;
            }
        }
        Format::Json => {
            for r in &records {
                serde_json::to_writer(&mut w, r)?;
                writeln!(w)?;
            }
        }
        Format::Csv => {
            let mut wtr = csv::Writer::from_writer(&mut w);
            for (r, &e) in records.iter().zip(&errors) {
                wtr.serialize(CsvRecord {
                    shot: r.shot,
                    attempts: r.attempts,
                    accepted: r.accepted,
                    ancilla_trace: r
                        .ancilla_trace
                        .iter()
                        .map(|b| char::from(b'0' + b))
                        .collect(),
                    total_qubits: r.total_qubits,
                    errors: e,
                })?;
            }
            wtr.flush()?;
        }
    }
    w.flush()?;

    if let Some(p) = &a.state_out {
        post.state
            .write_csv(File::create(p).with_context(|| format!("creating {}", p.display()))?)?;
    }

    let accepted = records.iter().filter(|r| r.accepted).count() as u64;
    let rate = accepted as f64 / a.shots as f64;
    let exhausted = if a.max_attempts > 1 {
        a.shots - accepted
    } else {
        0
    };
    let theory = if a.epsilon > 0.0 {
        noisy_acceptance_exact(&cfg, &NoiseModel::new(a.epsilon)?)?
    } else {
        1.0 - (1.0 - post.acceptance).powi(a.max_attempts as i32)
    };
    let shift = match cfg.shift {
        ShiftMode::None => 0.0,
        ShiftMode::Rounded => s.applied_shift() as f64,
        ShiftMode::Exact => s.alpha,
    };
    let mean = s.predicted_mean() + shift;
    let var = s.predicted_variance();
    let st = stats_centered(&post.state, mean);
    let tv = if var > 0.0 {
        let reference = gaussian_reference(
            mean.rem_euclid(post.state.dim() as f64),
            var,
            post.state.dim(),
            Convention::BinIntegral,
        )?;
        tv_distance(&post.state.probabilities(), &probabilities(&reference))?
    } else {
        f64::NAN
    };
    let summary = RunSummary {
        shots: a.shots,
        accepted,
        acceptance_rate: rate,
        acceptance_stderr: (rate * (1.0 - rate) / a.shots as f64).sqrt(),
        acceptance_theory: theory,
        exhausted,
        errored: (a.epsilon > 0.0).then(|| errors.iter().filter(|&&e| e > 0).count() as u64),
        predicted_mean: mean,
        predicted_variance: var,
        state_mean: st.mean_amp,
        state_variance: st.var_amp,
        tv_gaussian: tv,
        wraparound_stages: s.wraparound_stages(),
    };
    eprintln!("{}", serde_json::to_string(&summary)?);
    if exhausted > 0 {
        return Err(Exit(
            3,
            format!(
                "{exhausted} of {} shots exhausted {} attempts",
                a.shots, a.max_attempts
            ),
        )
        .into());
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepCsv {
    t: u64,
    j: usize,
    kind: &'static str,
    p1_err: f64,
    p1_clean: f64,
}

fn cmd_noise_sweep(
    n: usize,
    ts: &[u64],
    js: &Option<Vec<usize>>,
    io_args: &OutArgs,
) -> anyhow::Result<()> {
    let js: Vec<usize> = js.clone().unwrap_or_else(|| (0..n).collect());
    let rows: Vec<SweepCsv> = rejection_sweep(n, ts, &js)?
        .into_iter()
        .map(|r| SweepCsv {
            t: r.t,
            j: r.j,
            kind: r.kind.label(),
            p1_err: r.p1_err,
            p1_clean: r.p1_clean,
        })
        .collect();
    write_rows(&rows, io_args)
}

#[derive(Serialize)]
struct ResourceRow {
    variant: &'static str,
    data_qubits: usize,
    ancillas: u64,
    total_qubits: u64,
}

fn cmd_resources(sched: &SchedArgs, variant: VariantArg, io_args: &OutArgs) -> anyhow::Result<()> {
    let s = load_schedule(sched)?;
    let s = match variant {
        VariantArg::Exact => s.exact_equivalent(),
        _ => s,
    };
    let row = |name, r: Resources| ResourceRow {
        variant: name,
        data_qubits: s.nm(),
        ancillas: r.ancillas,
        total_qubits: r.total,
    };
    let rows = [
        row("mcmr", Resources::mcmr(&s)),
        row("mcmr-free", Resources::mcmr_free(&s)),
    ];
    write_rows(&rows, io_args)
}

fn cmd_export(sched: &SchedArgs, shift: ShiftArg, out: &Option<PathBuf>) -> anyhow::Result<()> {
    let c = circuit::build(&load_schedule(sched)?, shift.into());
    let mut w = sink(out)?;
    w.write_all(c.to_qasm().as_bytes())?;
    w.flush()?;
    Ok(())
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.cmd {
        Cmd::Plan { spec, out } => cmd_plan(&spec, &out),
        Cmd::Run(a) => cmd_run(&a),
        Cmd::Curve { sched, exec, io } => {
            let cfg = config(load_schedule(&sched)?, &exec);
            write_rows(&selection_curve(&cfg)?, &io)
        }
        Cmd::NoiseSweep { n, ts, js, io } => cmd_noise_sweep(n, &ts, &js, &io),
        Cmd::Resources { sched, variant, io } => cmd_resources(&sched, variant, &io),
        Cmd::Export { sched, shift, out } => cmd_export(&sched, shift, &out),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<Exit>().map(|x| x.0).unwrap_or(1);
            ExitCode::from(code)
        }
    }
}
