use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use privtrade::mechanisms::MechanismSpec;
use privtrade::model::{CostFn, ModelParams};
use privtrade_cli::spec::{parse_cost, parse_mechanism, Command, CommandKind, ExperimentSpec, Format, GameParams, Grid};
use privtrade_cli::{output, run, CliError};

/// Strategic trading of locally private data: bounds, equilibria and
/// simulations.
///
/// Values in `--config` are overridden by flags given on the command line.
#[derive(Parser, Debug)]
#[command(name = "privtrade", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// JSON experiment spec; its `command` must match the subcommand
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file [default: standard output]
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for randomized commands [default: 0]
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output format [default: csv for bounds and payment-accuracy, json otherwise]
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write the resolved spec as JSON and exit
    #[arg(long, global = true)]
    print_spec: bool,
}

#[derive(Args, Debug, Clone, Default)]
struct ModelArgs {
    /// P(W = 1) [default: 0.7]
    #[arg(long)]
    prior: Option<f64>,
    /// Signal quality θ = P(S = W) [default: 0.8]
    #[arg(long)]
    theta: Option<f64>,
}

#[derive(Args, Debug, Clone, Default)]
struct GameArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Number of individuals [default: 3]
    #[arg(long)]
    population: Option<usize>,
    /// Cost shared by everyone: linear:C, quadratic:C or JSON [default: linear:1]
    #[arg(long, value_parser = parse_cost)]
    cost: Option<CostFn>,
    /// peer:EPS, genie:EPS, zero or JSON [default: peer:1]
    #[arg(long, value_parser = parse_mechanism)]
    mechanism: Option<MechanismSpec>,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Lower and upper bounds on the value of privacy, one row per (eps, n)
    Bounds {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArgs,
        /// linear:C, quadratic:C or JSON [default: linear:1]
        #[arg(long, value_parser = parse_cost)]
        cost: Option<CostFn>,
        /// Comma list or log:LO:HI:POINTS / lin:LO:HI:POINTS [default: log:0.01:10:50]
        #[arg(long)]
        eps: Option<Grid>,
        /// Comma-separated populations [default: 2,10,100]
        #[arg(long, value_delimiter = ',')]
        populations: Option<Vec<usize>>,
    },
    /// Verify that a strategy profile is a Nash equilibrium
    Equilibrium {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        game: GameArgs,
        /// Allowed deviation gain [default: 1e-6]
        #[arg(long)]
        tolerance: Option<f64>,
        /// Also search a grid with this many points per coordinate [default: off]
        #[arg(long)]
        brute_force: Option<usize>,
    },
    /// Best response of one individual to the rest of the profile
    BestResponse {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        game: GameArgs,
        /// Index of the responding individual [default: 0]
        #[arg(long)]
        individual: Option<usize>,
        /// Also search a grid with this many points per coordinate [default: off]
        #[arg(long)]
        brute_force: Option<usize>,
    },
    /// Monte Carlo of payments and MAP estimation of the state
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        game: GameArgs,
        /// Number of trials [default: 100000]
        #[arg(long)]
        trials: Option<u64>,
        /// Write every trial to this CSV file [default: off]
        #[arg(long)]
        dump_trials: Option<PathBuf>,
    },
    /// Bracket on the cheapest total payment meeting an accuracy target
    PaymentAccuracy {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArgs,
        /// linear:C, quadratic:C or JSON [default: linear:1]
        #[arg(long, value_parser = parse_cost)]
        cost: Option<CostFn>,
        /// Comma list or log:LO:HI:POINTS / lin:LO:HI:POINTS [default: log:0.001:0.4:50]
        #[arg(long)]
        tau: Option<Grid>,
    },
    /// Distance of brute-force best responses to the three strategy families
    Lemma1Audit {
        #[command(flatten)]
        common: Common,
        /// Number of random instances [default: 100]
        #[arg(long)]
        seeds: Option<u64>,
        /// Number of individuals, at most 3 [default: 2]
        #[arg(long)]
        population: Option<usize>,
        /// Grid points per coordinate [default: 41]
        #[arg(long)]
        resolution: Option<usize>,
        /// random:MAX, zero or genie:EPS [default: random:10]
        #[arg(long)]
        mechanism: Option<String>,
        /// linear:C, quadratic:C or JSON [default: linear:0.05]
        #[arg(long, value_parser = parse_cost)]
        cost: Option<CostFn>,
    },
}

fn set_model(m: &mut ModelParams, args: &ModelArgs, population: Option<usize>) -> Result<(), CliError> {
    *m = ModelParams::new(
        args.prior.unwrap_or(m.prior_one),
        args.theta.unwrap_or(m.quality),
        population.unwrap_or(m.population),
    )?;
    Ok(())
}

fn set_game(g: &mut GameParams, args: GameArgs) -> Result<(), CliError> {
    set_model(&mut g.model, &args.model, args.population)?;
    if let Some(c) = args.cost {
        g.costs = c.into();
    }
    if let Some(mech) = args.mechanism {
        g.mechanism = mech;
    }
    Ok(())
}

fn parse_audit_mechanism(s: &str) -> Result<privtrade_cli::spec::AuditMechanism, CliError> {
    use privtrade_cli::spec::AuditMechanism;
    if s == "zero" {
        return Ok(AuditMechanism::Zero);
    }
    let bad = || CliError::invalid(format!("mechanism: expected random:MAX, zero or genie:EPS, got `{s}`"));
    let (kind, x) = s.split_once(':').ok_or_else(bad)?;
    let x: f64 = x.parse().map_err(|_| bad())?;
    match kind {
        "random" => Ok(AuditMechanism::Random { max_payment: x }),
        "genie" => Ok(AuditMechanism::Genie { eps: x }),
        _ => Err(bad()),
    }
}

fn resolve(sub: Sub) -> Result<(ExperimentSpec, bool), CliError> {
    let kind = match &sub {
        Sub::Bounds { .. } => CommandKind::Bounds,
        Sub::Equilibrium { .. } => CommandKind::Equilibrium,
        Sub::BestResponse { .. } => CommandKind::BestResponse,
        Sub::Simulate { .. } => CommandKind::Simulate,
        Sub::PaymentAccuracy { .. } => CommandKind::PaymentAccuracy,
        Sub::Lemma1Audit { .. } => CommandKind::Lemma1Audit,
    };
    let common = match &sub {
        Sub::Bounds { common, .. }
        | Sub::Equilibrium { common, .. }
        | Sub::BestResponse { common, .. }
        | Sub::Simulate { common, .. }
        | Sub::PaymentAccuracy { common, .. }
        | Sub::Lemma1Audit { common, .. } => common.clone(),
    };
    let mut spec = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::invalid(format!("config {}: {e}", path.display())))?;
            let spec = ExperimentSpec::from_json(&text)?;
            if spec.command.kind() != kind {
                return Err(CliError::invalid(format!(
                    "config is for `{}` but the subcommand is `{kind}`",
                    spec.command.kind()
                )));
            }
            spec
        }
        None => ExperimentSpec::new(Command::default_for(kind)),
    };
    if let Some(seed) = common.seed {
        spec.seed = seed;
    }
    if let Some(out) = common.out {
        spec.output.path = Some(out);
    }
    if let Some(f) = common.format {
        spec.output.format = Some(f);
    }
    match (sub, &mut spec.command) {
        (Sub::Bounds { model, cost, eps, populations, .. }, Command::Bounds(p)) => {
            set_model(&mut p.model, &model, None)?;
            if let Some(c) = cost {
                p.cost = c;
            }
            if let Some(e) = eps {
                p.eps = e;
            }
            if let Some(n) = populations {
                p.populations = n;
            }
        }
        (Sub::Equilibrium { game, tolerance, brute_force, .. }, Command::Equilibrium(p)) => {
            set_game(&mut p.game, game)?;
            if let Some(t) = tolerance {
                p.tolerance = t;
            }
            if brute_force.is_some() {
                p.brute_force_resolution = brute_force;
            }
        }
        (Sub::BestResponse { game, individual, brute_force, .. }, Command::BestResponse(p)) => {
            set_game(&mut p.game, game)?;
            if let Some(i) = individual {
                p.individual = i;
            }
            if brute_force.is_some() {
                p.brute_force_resolution = brute_force;
            }
        }
        (Sub::Simulate { game, trials, dump_trials, .. }, Command::Simulate(p)) => {
            set_game(&mut p.game, game)?;
            if let Some(t) = trials {
                p.trials = t;
            }
            if dump_trials.is_some() {
                p.dump_trials = dump_trials;
            }
        }
        (Sub::PaymentAccuracy { model, cost, tau, .. }, Command::PaymentAccuracy(p)) => {
            set_model(&mut p.model, &model, None)?;
            if let Some(c) = cost {
                p.cost = c;
            }
            if let Some(t) = tau {
                p.tau = t;
            }
        }
        (Sub::Lemma1Audit { seeds, population, resolution, mechanism, cost, .. }, Command::Lemma1Audit(p)) => {
            if let Some(c) = cost {
                p.cost = c;
            }
            if let Some(s) = seeds {
                p.seeds = s;
            }
            if let Some(n) = population {
                p.population = n;
            }
            if let Some(r) = resolution {
                p.resolution = r;
            }
            if let Some(m) = mechanism {
                p.mechanism = parse_audit_mechanism(&m)?;
            }
        }
        _ => unreachable!("command kind checked above"),
    }
    Ok((spec, common.print_spec))
}

fn write(spec: &ExperimentSpec, text: &str) -> Result<(), CliError> {
    match &spec.output.path {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn main_inner() -> Result<(), CliError> {
    let cli = Cli::parse();
    let (spec, print_spec) = resolve(cli.command)?;
    if print_spec {
        return write(&spec, &(spec.to_json() + "\n"));
    }
    let outcome = run(&spec)?;
    write(&spec, &output::render(&spec, &outcome))?;
    if outcome.failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Assertion(outcome.failures.join("; ")))
    }
}

fn main() -> ExitCode {
    match main_inner() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
