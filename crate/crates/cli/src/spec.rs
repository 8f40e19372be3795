//! Serializable experiment descriptions.
//!
//! An [`ExperimentSpec`] is the JSON form of one CLI invocation: the command
//! with its parameter block, plus the seed and output settings. Every field
//! has a default so a config file only needs to name what it changes.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use privtrade::bounds::EpsSearch;
use privtrade::equilibrium::NASH_TOL;
use privtrade::mechanisms::MechanismSpec;
use privtrade::model::{Costs, CostFn, ModelParams, Strategy};
use privtrade::numeric::log_space;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Log,
    Linear,
}

/// A list of values, either explicit or evenly spaced between two endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Values(Vec<f64>),
    Spaced {
        lo: f64,
        hi: f64,
        points: usize,
        #[serde(default)]
        spacing: Spacing,
    },
}

impl Grid {
    pub fn log(lo: f64, hi: f64, points: usize) -> Self {
        Grid::Spaced {
            lo,
            hi,
            points,
            spacing: Spacing::Log,
        }
    }

    pub fn values(&self, name: &str) -> Result<Vec<f64>, CliError> {
        let out = match *self {
            Grid::Values(ref v) => v.clone(),
            Grid::Spaced { lo, hi, points, spacing } => {
                if points == 0 || !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
                    return Err(CliError::invalid(format!("{name}: need finite lo <= hi and points >= 1")));
                }
                if points == 1 {
                    vec![lo]
                } else {
                    match spacing {
                        Spacing::Log if lo > 0.0 => log_space(lo, hi, points),
                        Spacing::Log => return Err(CliError::invalid(format!("{name}: log spacing needs lo > 0"))),
                        Spacing::Linear => {
                            let step = (hi - lo) / (points - 1) as f64;
                            (0..points)
                                .map(|k| if k + 1 == points { hi } else { lo + step * k as f64 })
                                .collect()
                        }
                    }
                }
            }
        };
        if out.is_empty() {
            return Err(CliError::invalid(format!("{name}: grid is empty")));
        }
        if out.iter().any(|x| !x.is_finite()) {
            return Err(CliError::invalid(format!("{name}: grid values must be finite")));
        }
        Ok(out)
    }
}

/// Parses `0.1,0.5,1`, `log:LO:HI:POINTS` or `lin:LO:HI:POINTS`.
impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() == 4 {
            let spacing = match parts[0] {
                "log" => Spacing::Log,
                "lin" | "linear" => Spacing::Linear,
                other => return Err(format!("unknown spacing `{other}`")),
            };
            let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}"));
            let points = parts[3].trim().parse::<usize>().map_err(|e| format!("`{}`: {e}", parts[3]))?;
            return Ok(Grid::Spaced {
                lo: num(parts[1])?,
                hi: num(parts[2])?,
                points,
                spacing,
            });
        }
        s.split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}")))
            .collect::<Result<Vec<_>, _>>()
            .map(Grid::Values)
    }
}

/// Parses `linear:C`, `quadratic:C` or a JSON cost object.
pub fn parse_cost(s: &str) -> Result<CostFn, String> {
    if s.trim_start().starts_with('{') {
        return serde_json::from_str(s).map_err(|e| e.to_string());
    }
    let (kind, c) = s.split_once(':').ok_or("expected KIND:C or a JSON object")?;
    let c: f64 = c.trim().parse().map_err(|e| format!("`{c}`: {e}"))?;
    match kind {
        "linear" => CostFn::linear(c),
        "quadratic" => CostFn::quadratic(c),
        other => return Err(format!("unknown cost kind `{other}`")),
    }
    .map_err(|e| e.to_string())
}

/// Parses `peer:EPS`, `genie:EPS`, `zero` or a JSON mechanism object.
pub fn parse_mechanism(s: &str) -> Result<MechanismSpec, String> {
    if s.trim_start().starts_with('{') {
        return serde_json::from_str(s).map_err(|e| e.to_string());
    }
    if s == "zero" {
        return Ok(MechanismSpec::Zero);
    }
    let (kind, eps) = s.split_once(':').ok_or("expected peer:EPS, genie:EPS, zero or a JSON object")?;
    let eps: f64 = eps.trim().parse().map_err(|e| format!("`{eps}`: {e}"))?;
    match kind {
        "peer" => Ok(MechanismSpec::Peer { eps }),
        "genie" => Ok(MechanismSpec::Genie { eps }),
        other => Err(format!("unknown mechanism `{other}`")),
    }
}

fn default_model() -> ModelParams {
    ModelParams::new(0.7, 0.8, 1).expect("valid default")
}

fn default_game_model() -> ModelParams {
    ModelParams::new(0.7, 0.8, 3).expect("valid default")
}

fn default_cost() -> CostFn {
    CostFn::linear(1.0).expect("valid default")
}

fn default_costs() -> Costs {
    default_cost().into()
}

fn default_mechanism() -> MechanismSpec {
    MechanismSpec::Peer { eps: 1.0 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsParams {
    #[serde(default = "default_model")]
    pub model: ModelParams,
    #[serde(default = "default_cost")]
    pub cost: CostFn,
    #[serde(default = "BoundsParams::default_eps")]
    pub eps: Grid,
    #[serde(default = "BoundsParams::default_populations")]
    pub populations: Vec<usize>,
}

impl BoundsParams {
    fn default_eps() -> Grid {
        Grid::log(0.01, 10.0, 50)
    }

    fn default_populations() -> Vec<usize> {
        vec![2, 10, 100]
    }
}

impl Default for BoundsParams {
    fn default() -> Self {
        Self {
            model: default_model(),
            cost: default_cost(),
            eps: Self::default_eps(),
            populations: Self::default_populations(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PaymentAccuracyParams {
    #[serde(default = "default_model")]
    pub model: ModelParams,
    #[serde(default = "default_cost")]
    pub cost: CostFn,
    #[serde(default = "PaymentAccuracyParams::default_tau")]
    pub tau: Grid,
    #[serde(default)]
    pub search: EpsSearch,
}

impl PaymentAccuracyParams {
    fn default_tau() -> Grid {
        Grid::log(1e-3, 0.4, 50)
    }
}

impl Default for PaymentAccuracyParams {
    fn default() -> Self {
        Self {
            model: default_model(),
            cost: default_cost(),
            tau: Self::default_tau(),
            search: EpsSearch::default(),
        }
    }
}

/// Model, costs, mechanism and strategy profile shared by the game commands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameParams {
    #[serde(default = "default_game_model")]
    pub model: ModelParams,
    #[serde(default = "default_costs")]
    pub costs: Costs,
    #[serde(default = "default_mechanism")]
    pub mechanism: MechanismSpec,
    /// Defaults to everyone playing the eps-strategy of a genie or peer
    /// mechanism, or nonparticipation otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<Vec<Strategy>>,
}

impl Default for GameParams {
    fn default() -> Self {
        Self {
            model: default_game_model(),
            costs: default_costs(),
            mechanism: default_mechanism(),
            profile: None,
        }
    }
}

impl GameParams {
    pub fn resolved_profile(&self) -> Vec<Strategy> {
        match &self.profile {
            Some(p) => p.clone(),
            None => {
                let s = match self.mechanism {
                    MechanismSpec::Genie { eps } | MechanismSpec::Peer { eps } => Strategy::eps_strategy(eps),
                    _ => Strategy::non_participation(),
                };
                vec![s; self.model.population]
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumParams {
    #[serde(flatten)]
    pub game: GameParams,
    #[serde(default = "EquilibriumParams::default_tolerance")]
    pub tolerance: f64,
    /// Also search a `(p1, q1, p0, q0)` grid with this many points per axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub brute_force_resolution: Option<usize>,
}

impl EquilibriumParams {
    fn default_tolerance() -> f64 {
        NASH_TOL
    }
}

impl Default for EquilibriumParams {
    fn default() -> Self {
        Self {
            game: GameParams::default(),
            tolerance: NASH_TOL,
            brute_force_resolution: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct BestResponseParams {
    #[serde(flatten)]
    pub game: GameParams,
    #[serde(default)]
    pub individual: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub brute_force_resolution: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateParams {
    #[serde(flatten)]
    pub game: GameParams,
    #[serde(default = "SimulateParams::default_trials")]
    pub trials: u64,
    /// Write every trial as a CSV row to this path.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dump_trials: Option<PathBuf>,
}

impl SimulateParams {
    fn default_trials() -> u64 {
        100_000
    }
}

impl Default for SimulateParams {
    fn default() -> Self {
        Self {
            game: GameParams::default(),
            trials: Self::default_trials(),
            dump_trials: None,
        }
    }
}

/// Mechanisms audited for best-response structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AuditMechanism {
    /// Nonnegative table with entries uniform on `[0, max_payment]`;
    /// abstention is never paid.
    Random { max_payment: f64 },
    Zero,
    Genie { eps: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lemma1AuditParams {
    /// Number of random instances.
    #[serde(default = "Lemma1AuditParams::default_seeds")]
    pub seeds: u64,
    #[serde(default = "Lemma1AuditParams::default_population")]
    pub population: usize,
    /// Grid points per strategy coordinate.
    #[serde(default = "Lemma1AuditParams::default_resolution")]
    pub resolution: usize,
    #[serde(default = "Lemma1AuditParams::default_mechanism")]
    pub mechanism: AuditMechanism,
    /// Cheap enough by default that informative best responses show up.
    #[serde(default = "Lemma1AuditParams::default_cost")]
    pub cost: CostFn,
}

impl Lemma1AuditParams {
    fn default_cost() -> CostFn {
        CostFn::linear(0.05).expect("valid default")
    }

    fn default_seeds() -> u64 {
        100
    }

    fn default_population() -> usize {
        2
    }

    fn default_resolution() -> usize {
        41
    }

    fn default_mechanism() -> AuditMechanism {
        AuditMechanism::Random { max_payment: 10.0 }
    }
}

impl Default for Lemma1AuditParams {
    fn default() -> Self {
        Self {
            seeds: Self::default_seeds(),
            population: Self::default_population(),
            resolution: Self::default_resolution(),
            mechanism: Self::default_mechanism(),
            cost: Self::default_cost(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", content = "params", rename_all = "kebab-case")]
pub enum Command {
    Bounds(#[serde(default)] BoundsParams),
    Equilibrium(#[serde(default)] EquilibriumParams),
    BestResponse(#[serde(default)] BestResponseParams),
    Simulate(#[serde(default)] SimulateParams),
    PaymentAccuracy(#[serde(default)] PaymentAccuracyParams),
    Lemma1Audit(#[serde(default)] Lemma1AuditParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Bounds,
    Equilibrium,
    BestResponse,
    Simulate,
    PaymentAccuracy,
    Lemma1Audit,
}

impl fmt::Display for CommandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CommandKind::Bounds => "bounds",
            CommandKind::Equilibrium => "equilibrium",
            CommandKind::BestResponse => "best-response",
            CommandKind::Simulate => "simulate",
            CommandKind::PaymentAccuracy => "payment-accuracy",
            CommandKind::Lemma1Audit => "lemma1-audit",
        })
    }
}

impl Command {
    pub fn kind(&self) -> CommandKind {
        match self {
            Command::Bounds(_) => CommandKind::Bounds,
            Command::Equilibrium(_) => CommandKind::Equilibrium,
            Command::BestResponse(_) => CommandKind::BestResponse,
            Command::Simulate(_) => CommandKind::Simulate,
            Command::PaymentAccuracy(_) => CommandKind::PaymentAccuracy,
            Command::Lemma1Audit(_) => CommandKind::Lemma1Audit,
        }
    }

    pub fn default_for(kind: CommandKind) -> Self {
        match kind {
            CommandKind::Bounds => Command::Bounds(Default::default()),
            CommandKind::Equilibrium => Command::Equilibrium(Default::default()),
            CommandKind::BestResponse => Command::BestResponse(Default::default()),
            CommandKind::Simulate => Command::Simulate(Default::default()),
            CommandKind::PaymentAccuracy => Command::PaymentAccuracy(Default::default()),
            CommandKind::Lemma1Audit => Command::Lemma1Audit(Default::default()),
        }
    }

    /// Curves default to CSV, structured reports to JSON.
    pub fn default_format(&self) -> Format {
        match self {
            Command::Bounds(_) | Command::PaymentAccuracy(_) => Format::Csv,
            _ => Format::Json,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Standard output when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct ExperimentSpec {
    #[serde(flatten)]
    pub command: Command,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputSpec,
}

/// Wire form that lets `params` be omitted.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    command: CommandKind,
    #[serde(default)]
    params: serde_json::Value,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    output: OutputSpec,
}

impl TryFrom<RawSpec> for ExperimentSpec {
    type Error = serde_json::Error;

    fn try_from(raw: RawSpec) -> Result<Self, Self::Error> {
        let params = match raw.params {
            serde_json::Value::Null => serde_json::Value::Object(Default::default()),
            p => p,
        };
        let command = match raw.command {
            CommandKind::Bounds => Command::Bounds(serde_json::from_value(params)?),
            CommandKind::Equilibrium => Command::Equilibrium(serde_json::from_value(params)?),
            CommandKind::BestResponse => Command::BestResponse(serde_json::from_value(params)?),
            CommandKind::Simulate => Command::Simulate(serde_json::from_value(params)?),
            CommandKind::PaymentAccuracy => Command::PaymentAccuracy(serde_json::from_value(params)?),
            CommandKind::Lemma1Audit => Command::Lemma1Audit(serde_json::from_value(params)?),
        };
        Ok(Self {
            command,
            seed: raw.seed,
            output: raw.output,
        })
    }
}

impl ExperimentSpec {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            seed: 0,
            output: OutputSpec::default(),
        }
    }

    pub fn format(&self) -> Format {
        self.output.format.unwrap_or_else(|| self.command.default_format())
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::invalid(format!("config: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }
}
