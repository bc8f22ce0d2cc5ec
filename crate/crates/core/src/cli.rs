//! Command-line workflows over model and trajectory files.
//!
//! Exit codes: 0 success or convergence, 2 EM stopped at its iteration limit,
//! 3 unreadable or malformed input, 4 zero-probability evidence, 5 joint state
//! space over the cap, 1 anything else (including bad flags).

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::evidence::OcclusionPolicy;
use crate::experiment::{occlude_dataset, sample_dataset};
use crate::inference::{forward_backward, smoothed_marginal};
use crate::io::{parse_model, write_model, TrajectoryFile};
use crate::learning::{fit, record_log_likelihoods, sem, sem_from_scratch, EmConfig, FitResult, SemConfig};
use crate::network::{amalgamate, CtbnModel};
use crate::phase::{expand_phases, PhaseSpec, Topology, VariablePhases};
use crate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_MAX_ITERATIONS: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_ZERO_PROBABILITY: i32 = 4;
pub const EXIT_JOINT_CAP: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "ctbn", version, about = "Continuous time Bayesian networks: sampling, inference and learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample complete trajectories from a model.
    Generate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        horizon: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; standard output when absent.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Hide random windows of each variable's trajectory.
    Occlude {
        #[arg(long)]
        input: PathBuf,
        /// Fraction of each variable's timeline to hide.
        #[arg(long)]
        fraction: f64,
        #[arg(long, default_value_t = 0.25)]
        window: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Fit parameters by EM.
    Em(FitArgs),
    /// Fit structure and parameters by structural EM.
    Sem {
        #[command(flatten)]
        fit: FitArgs,
        #[arg(long, default_value_t = 2)]
        max_parents: usize,
        /// EM iterations between structure searches.
        #[arg(long, default_value_t = 5)]
        em_steps: usize,
    },
    /// Log-likelihood of each record and of the whole dataset.
    Score {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Posterior state marginals of one record at given times.
    Smooth {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 0)]
        record: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        times: Vec<f64>,
    },
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Model whose structure (and, with --restarts 0, parameters) seeds the fit.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    /// Random initialisations to try; 0 starts from the model's parameters.
    #[arg(long, default_value_t = 3)]
    restarts: usize,
    #[arg(long)]
    freeze_initial: bool,
    /// Phase expansion applied before fitting, e.g. `X=3:chain,Y=2` or `*=3`.
    #[arg(long)]
    phases: Option<String>,
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_FAILURE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(cli.command, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_) | Error::UnsupportedVersion(_) | Error::Io(_) => EXIT_PARSE,
        Error::ZeroProbabilityEvidence { .. } => EXIT_ZERO_PROBABILITY,
        Error::JointSpaceTooLarge { .. } => EXIT_JOINT_CAP,
        _ => EXIT_FAILURE,
    }
}

fn read(path: &Path) -> crate::Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn read_model(path: &Path) -> crate::Result<CtbnModel> {
    parse_model(&read(path)?).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        e => e,
    })
}

fn read_data(path: &Path) -> crate::Result<TrajectoryFile> {
    TrajectoryFile::parse(&read(path)?).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        e => e,
    })
}

fn emit(text: &str, output: Option<&Path>, stdout: &mut dyn Write) -> crate::Result<()> {
    match output {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => Ok(stdout.write_all(text.as_bytes())?),
    }
}

fn execute(command: Command, stdout: &mut dyn Write) -> crate::Result<i32> {
    match command {
        Command::Generate {
            model,
            count,
            horizon,
            seed,
            output,
        } => {
            let model = read_model(&model)?;
            let data = sample_dataset(&model, count, horizon, seed)?;
            emit(&TrajectoryFile::from_observed(&model, &data).to_text(), output.as_deref(), stdout)?;
            Ok(EXIT_OK)
        }
        Command::Occlude {
            input,
            fraction,
            window,
            seed,
            output,
        } => {
            let policy = OcclusionPolicy::new(fraction, window)?;
            let (names, labels, data) = read_data(&input)?.to_indexed();
            let hidden = occlude_dataset(&data, &policy, seed);
            emit(&TrajectoryFile::from_indexed(&names, &labels, &hidden).to_text(), output.as_deref(), stdout)?;
            Ok(EXIT_OK)
        }
        Command::Em(args) => {
            let (model, data, config) = prepare(&args)?;
            let result = fit(&model, &data, &config)?;
            finish(&result, &args.output, stdout)
        }
        Command::Sem {
            fit: args,
            max_parents,
            em_steps,
        } => {
            let (model, data, em) = prepare(&args)?;
            let config = SemConfig {
                em,
                max_parents,
                em_steps,
                ..SemConfig::default()
            };
            let result = if args.restarts == 0 {
                sem(&model, &data, &config)?
            } else {
                sem_from_scratch(&model, &data, &config)?
            };
            finish(&result, &args.output, stdout)
        }
        Command::Score { model, data } => {
            let model = read_model(&model)?;
            let data = read_data(&data)?.to_observed(&model)?;
            let per_record = record_log_likelihoods(&model, &data)?;
            for (i, ll) in per_record.iter().enumerate() {
                writeln!(stdout, "{i}\t{ll}")?;
            }
            let mut total = crate::sum::Compensated::default();
            for &ll in &per_record {
                total.add(ll);
            }
            writeln!(stdout, "total\t{}", total.value())?;
            Ok(EXIT_OK)
        }
        Command::Smooth {
            model,
            data,
            record,
            times,
        } => {
            let model = read_model(&model)?;
            let data = read_data(&data)?.to_observed(&model)?;
            let observed = data.get(record).ok_or_else(|| {
                Error::InvalidEvidence(format!("record {record} out of range ({} records)", data.len()))
            })?;
            let flat = amalgamate(&model)?;
            let evidence = flat.joint.evidence(observed)?;
            let tag = |e: Error| match e {
                Error::ZeroProbabilityEvidence { segment, .. } => Error::ZeroProbabilityEvidence {
                    record: Some(record),
                    segment,
                },
                e => e,
            };
            let cache = forward_backward(&flat.intensity, &flat.initial, &evidence).map_err(tag)?;
            writeln!(stdout, "time\tvariable\tstate\tprobability")?;
            for &t in &times {
                if !(0.0..=observed.horizon()).contains(&t) {
                    return Err(Error::InvalidEvidence(format!(
                        "time {t} outside [0, {}]",
                        observed.horizon()
                    )));
                }
                let dist = smoothed_marginal(&cache, &flat.intensity, &evidence, t).map_err(tag)?;
                for (x, var) in model.variables().iter().enumerate() {
                    let marginal = flat.joint.state_marginal(dist.probs(), x);
                    for (label, p) in var.states().iter().zip(marginal) {
                        writeln!(stdout, "{t}\t{}\t{label}\t{p}", var.name())?;
                    }
                }
            }
            Ok(EXIT_OK)
        }
    }
}

fn prepare(
    args: &FitArgs,
) -> crate::Result<(CtbnModel, Vec<crate::evidence::ObservedTrajectory>, EmConfig)> {
    let mut model = read_model(&args.model)?;
    if let Some(spec) = &args.phases {
        model = expand_phases(&model, &parse_phases(spec, &model)?)?;
    }
    let data = read_data(&args.data)?.to_observed(&model)?;
    let config = EmConfig {
        max_iterations: args.max_iter,
        tolerance: args.tolerance,
        seed: args.seed,
        freeze_initial: args.freeze_initial,
        restarts: args.restarts,
        ..EmConfig::default()
    };
    config.validate()?;
    Ok((model, data, config))
}

fn finish(result: &FitResult, output: &Path, stdout: &mut dyn Write) -> crate::Result<i32> {
    let mut previous = None;
    for (i, &ll) in result.trace.iter().enumerate() {
        let delta = previous.map_or(0.0, |p| ll - p);
        writeln!(stdout, "{i}\t{ll}\t{delta}")?;
        previous = Some(ll);
    }
    emit(&write_model(&result.model), Some(output), stdout)?;
    Ok(if result.converged {
        EXIT_OK
    } else {
        EXIT_MAX_ITERATIONS
    })
}

/// Parses `NAME=COUNT[:chain|:unrestricted]` items separated by commas;
/// `*` names every variable not listed explicitly.
pub fn parse_phases(spec: &str, model: &CtbnModel) -> crate::Result<PhaseSpec> {
    let mut out = PhaseSpec::new();
    let mut fallback = None;
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let bad = || Error::InvalidModel(format!("bad phase item `{item}`"));
        let (name, rest) = item.split_once('=').ok_or_else(bad)?;
        let (count, topology) = match rest.split_once(':') {
            None => (rest, Topology::default()),
            Some((c, "chain")) => (c, Topology::Chain),
            Some((c, "unrestricted")) => (c, Topology::Unrestricted),
            Some(_) => return Err(bad()),
        };
        let count: usize = count.parse().map_err(|_| bad())?;
        if count == 0 {
            return Err(bad());
        }
        if name == "*" {
            fallback = Some((count, topology));
        } else {
            let v = model
                .index_of(name)
                .ok_or_else(|| Error::InvalidModel(format!("unknown variable `{name}`")))?;
            let states = model.variable(v).cardinality();
            out = out.with(name, VariablePhases::uniform(states, count, topology));
        }
    }
    if let Some((count, topology)) = fallback {
        for v in model.variables() {
            if !out.variables.contains_key(v.name()) {
                out = out.with(v.name(), VariablePhases::uniform(v.cardinality(), count, topology));
            }
        }
    }
    Ok(out)
}
