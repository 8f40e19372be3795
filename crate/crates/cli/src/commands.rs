//! One runner per command. Each returns typed rows or reports so the
//! acceptance suite can inspect them, and [`run`] wraps them into an
//! [`Outcome`] for rendering.

use std::fs::File;
use std::io::BufWriter;

use privtrade::bounds::{
    chernoff_information, eps_tilde, gap, payment_accuracy_at, v_lb, v_ub, EpsTilde, PaymentAccuracy,
};
use privtrade::equilibrium::{
    best_response_from, brute_force_from, manifold_distance, utility_coefficients, verify_nash, BestResponse,
    EquilibriumReport, Game, UtilityCoefficients,
};
use privtrade::mechanisms::{report_string, GenieMechanism, Mechanism, TabularMechanism, ZeroMechanism};
use privtrade::model::{Classification, Costs, ModelParams, Report, Strategy, STRATEGY_TOL};
use privtrade::simulate::{SimConfig, SimResult, Simulator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::spec::{
    AuditMechanism, BestResponseParams, BoundsParams, Command, EquilibriumParams, ExperimentSpec, GameParams,
    Lemma1AuditParams, PaymentAccuracyParams, SimulateParams,
};
use crate::CliError;

/// Result of one command, ready for rendering.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub result: Value,
    /// CSV body including the header row.
    pub csv: String,
    /// Extra metadata lines for the output header.
    pub notes: Map<String, Value>,
    /// Internal consistency checks that failed; the output is still written.
    pub failures: Vec<String>,
}

pub fn run(spec: &ExperimentSpec) -> Result<Outcome, CliError> {
    match &spec.command {
        Command::Bounds(p) => {
            let rows = bounds_rows(p)?;
            let failures = rows
                .iter()
                .filter(|r| !(r.gap > 0.0 && r.v_ub >= r.v_lb))
                .map(|r| format!("gap not positive at eps={} n={}", r.eps, r.n))
                .collect();
            Ok(Outcome {
                result: to_value(&rows),
                csv: to_csv(&rows)?,
                notes: Map::new(),
                failures,
            })
        }
        Command::PaymentAccuracy(p) => {
            let (et, rows) = payment_accuracy_rows(p)?;
            let mut notes = Map::new();
            notes.insert("eps_tilde".into(), json!(et.eps));
            notes.insert("eps_tilde_grid_index".into(), json!(et.grid_index));
            notes.insert("eps_tilde_grid_tie".into(), json!(et.grid_tie));
            Ok(Outcome {
                result: json!({ "eps_tilde": et, "rows": rows }),
                csv: to_csv(&rows)?,
                notes,
                failures: payment_accuracy_failures(&rows),
            })
        }
        Command::Equilibrium(p) => {
            let out = equilibrium(p)?;
            let rows: Vec<EquilibriumRow> = out
                .report
                .individuals
                .iter()
                .map(|r| EquilibriumRow {
                    index: r.index,
                    p1: r.strategy.p1,
                    q1: r.strategy.q1,
                    p0: r.strategy.p0,
                    q0: r.strategy.q0,
                    classification: r.classification,
                    expected_payment: r.expected_payment,
                    utility: r.utility,
                    best_response_utility: r.best_response.utility,
                    deviation_gain: r.deviation_gain,
                    grid_gain: out.brute_force.as_ref().map(|b| b[r.index].gain),
                })
                .collect();
            let mut notes = Map::new();
            notes.insert("is_nash".into(), json!(out.is_nash));
            Ok(Outcome {
                result: to_value(&out),
                csv: to_csv(&rows)?,
                notes,
                failures: Vec::new(),
            })
        }
        Command::BestResponse(p) => {
            let out = best_response(p)?;
            let mut rows = vec![StrategyRow::new("profile", &out.profile_strategy, out.profile_utility)];
            rows.push(StrategyRow::new("analytic", &out.analytic.strategy, out.analytic.utility));
            if let Some(b) = &out.brute_force {
                rows.push(StrategyRow::new("grid", &b.strategy, b.utility));
            }
            let failures = match &out.brute_force {
                Some(b) if b.utility > out.analytic.utility + 1e-9 * (1.0 + out.analytic.utility.abs()) => {
                    vec![format!("grid utility {} beats analytic best response {}", b.utility, out.analytic.utility)]
                }
                _ => Vec::new(),
            };
            Ok(Outcome {
                result: to_value(&out),
                csv: to_csv(&rows)?,
                notes: Map::new(),
                failures,
            })
        }
        Command::Simulate(p) => {
            let out = simulate(p, spec.seed)?;
            let rows: Vec<SimulateRow> = (0..out.result.mean_payment.len())
                .map(|i| SimulateRow {
                    individual: i,
                    mean_payment: out.result.mean_payment[i],
                    std_error: out.result.std_error[i],
                    expected_payment: out.expected_payment.as_ref().map(|e| e[i]),
                })
                .collect();
            let mut notes = Map::new();
            notes.insert("trials".into(), json!(out.result.trials));
            notes.insert("map_error_rate".into(), json!(out.result.map_error_rate));
            notes.insert("map_error_ci".into(), json!(out.result.map_error_ci));
            notes.insert("bound".into(), json!(out.result.bound));
            let failures = match (out.bound_holds, out.result.bound) {
                (Some(false), Some(b)) => vec![format!(
                    "MAP error {} (se {}) exceeds bound {b}",
                    out.result.map_error_rate, out.result.map_error_se
                )],
                _ => Vec::new(),
            };
            Ok(Outcome {
                result: to_value(&out),
                csv: to_csv(&rows)?,
                notes,
                failures,
            })
        }
        Command::Lemma1Audit(p) => {
            let report = lemma1_audit(p, spec.seed)?;
            let rows: Vec<AuditRow> = report
                .cases
                .iter()
                .map(|c| AuditRow {
                    instance: c.instance,
                    individual: c.individual,
                    p1: c.grid.strategy.p1,
                    q1: c.grid.strategy.q1,
                    p0: c.grid.strategy.p0,
                    q0: c.grid.strategy.q0,
                    nearest: c.nearest,
                    distance: c.distance,
                    analytic_distance: c.analytic_distance,
                })
                .collect();
            let mut notes = Map::new();
            notes.insert("spacing".into(), json!(report.spacing));
            notes.insert("max_distance".into(), json!(report.max_distance));
            let failures = if report.within_spacing {
                Vec::new()
            } else {
                vec![format!(
                    "grid best response {} away from the nearest family, spacing {}",
                    report.max_distance, report.spacing
                )]
            };
            Ok(Outcome {
                result: to_value(&report),
                csv: to_csv(&rows)?,
                notes,
                failures,
            })
        }
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("results serialize")
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub eps: f64,
    pub n: usize,
    pub v_lb: f64,
    pub v_ub: f64,
    pub gap: f64,
    pub d: f64,
}

/// One row per `(eps, n)`, grouped by `eps`.
pub fn bounds_rows(p: &BoundsParams) -> Result<Vec<BoundsRow>, CliError> {
    let eps = p.eps.values("eps")?;
    if p.populations.is_empty() {
        return Err(CliError::invalid("populations: need at least one population"));
    }
    if let Some(n) = p.populations.iter().find(|&&n| n < 2) {
        return Err(CliError::invalid(format!("populations: need n >= 2, got {n}")));
    }
    p.cost.check_proper(20.0, 400)?;
    let mut rows = Vec::with_capacity(eps.len() * p.populations.len());
    for &e in &eps {
        if !(e > 0.0) {
            return Err(CliError::invalid(format!("eps: need eps > 0, got {e}")));
        }
        let lb = v_lb(e, &p.model, &p.cost)?;
        let d = chernoff_information(e, &p.model);
        for &n in &p.populations {
            rows.push(BoundsRow {
                eps: e,
                n,
                v_lb: lb,
                v_ub: v_ub(e, n, &p.model, &p.cost)?,
                gap: gap(e, n, &p.model, &p.cost)?,
                d,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PaymentAccuracyRow {
    pub tau: f64,
    pub eps_tilde: f64,
    pub n_tilde: usize,
    pub lower: f64,
    pub upper: f64,
    pub upper_n: usize,
    pub designed_total: f64,
    pub v_lb: f64,
    pub v_ub: f64,
    pub chernoff: f64,
}

impl From<PaymentAccuracy> for PaymentAccuracyRow {
    fn from(r: PaymentAccuracy) -> Self {
        Self {
            tau: r.tau,
            eps_tilde: r.eps_tilde,
            n_tilde: r.n_tilde,
            lower: r.lower,
            upper: r.upper,
            upper_n: r.upper_n,
            designed_total: r.designed_total,
            v_lb: r.v_lb,
            v_ub: r.v_ub,
            chernoff: r.chernoff,
        }
    }
}

/// Rows sorted by `tau` descending.
pub fn payment_accuracy_rows(p: &PaymentAccuracyParams) -> Result<(EpsTilde, Vec<PaymentAccuracyRow>), CliError> {
    let mut taus = p.tau.values("tau")?;
    if let Some(t) = taus.iter().find(|&&t| !(t > 0.0 && t < 1.0)) {
        return Err(CliError::invalid(format!("tau: need 0 < tau < 1, got {t}")));
    }
    p.cost.check_proper(p.search.hi, 400)?;
    taus.sort_by(|a, b| b.total_cmp(a));
    let et = eps_tilde(&p.model, &p.cost, &p.search)?;
    let rows = taus
        .iter()
        .map(|&t| Ok(payment_accuracy_at(t, &p.model, &p.cost, &et)?.into()))
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok((et, rows))
}

/// Bracket, ordering and monotonicity checks on rows sorted by `tau`
/// descending.
pub fn payment_accuracy_failures(rows: &[PaymentAccuracyRow]) -> Vec<String> {
    let mut out = Vec::new();
    for r in rows {
        if !(r.lower <= r.upper) {
            out.push(format!("lower {} > upper {} at tau={}", r.lower, r.upper, r.tau));
        }
        let slack = r.v_lb + r.n_tilde as f64 * (r.v_ub - r.v_lb);
        if !(r.upper - r.lower <= slack * (1.0 + 1e-12)) {
            out.push(format!("upper - lower exceeds one payment at tau={}", r.tau));
        }
    }
    for w in rows.windows(2) {
        if w[1].lower < w[0].lower || w[1].upper < w[0].upper {
            out.push(format!("bounds increase in tau between {} and {}", w[1].tau, w[0].tau));
        }
    }
    out
}

fn build(g: &GameParams) -> Result<(Box<dyn Mechanism>, Vec<Strategy>), CliError> {
    g.costs.check_population(g.model.population)?;
    let mech = g.mechanism.build(&g.model, &g.costs)?;
    let profile = g.resolved_profile();
    if profile.len() != g.model.population {
        return Err(privtrade::Error::PopulationMismatch {
            expected: g.model.population,
            actual: profile.len(),
        }
        .into());
    }
    Ok((mech, profile))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCheck {
    pub index: usize,
    pub best: BestResponse,
    /// Grid optimum minus the utility of the profile strategy.
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumOutput {
    pub report: EquilibriumReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub brute_force: Option<Vec<GridCheck>>,
    /// Analytic verdict, and grid verdict when a grid was searched.
    pub is_nash: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct EquilibriumRow {
    index: usize,
    p1: f64,
    q1: f64,
    p0: f64,
    q0: f64,
    classification: Classification,
    expected_payment: f64,
    utility: f64,
    best_response_utility: f64,
    deviation_gain: f64,
    grid_gain: Option<f64>,
}

pub fn equilibrium(p: &EquilibriumParams) -> Result<EquilibriumOutput, CliError> {
    if !(p.tolerance >= 0.0) {
        return Err(CliError::invalid("tolerance: need tolerance >= 0"));
    }
    let (mech, profile) = build(&p.game)?;
    let game = Game::new(p.game.model, mech.as_ref(), p.game.costs.clone())?;
    let report = verify_nash(&game, &profile, p.tolerance)?;
    let brute_force = match p.brute_force_resolution {
        None => None,
        Some(res) => Some(
            (0..profile.len())
                .map(|i| {
                    let coef = utility_coefficients(&game, &profile, i)?;
                    let g = game.costs.get(i);
                    let best = brute_force_from(&coef, g, res)?;
                    Ok(GridCheck {
                        index: i,
                        best,
                        gain: best.utility - coef.utility(&profile[i], g),
                    })
                })
                .collect::<Result<Vec<_>, CliError>>()?,
        ),
    };
    let grid_ok = brute_force
        .as_ref()
        .map_or(true, |b| b.iter().all(|c| c.gain <= p.tolerance));
    Ok(EquilibriumOutput {
        is_nash: report.is_nash && grid_ok,
        report,
        brute_force,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestResponseOutput {
    pub individual: usize,
    pub coefficients: UtilityCoefficients,
    pub profile_strategy: Strategy,
    pub profile_utility: f64,
    pub analytic: BestResponse,
    pub analytic_nearest: Classification,
    pub analytic_distance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub brute_force: Option<BestResponse>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub brute_force_nearest: Option<Classification>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub brute_force_distance: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
struct StrategyRow {
    method: &'static str,
    p1: f64,
    q1: f64,
    p0: f64,
    q0: f64,
    family: Classification,
    nearest: Classification,
    distance: f64,
    utility: f64,
}

impl StrategyRow {
    fn new(method: &'static str, s: &Strategy, utility: f64) -> Self {
        let (nearest, distance) = manifold_distance(s);
        Self {
            method,
            p1: s.p1,
            q1: s.q1,
            p0: s.p0,
            q0: s.q0,
            family: s.classify(STRATEGY_TOL),
            nearest,
            distance,
            utility,
        }
    }
}

pub fn best_response(p: &BestResponseParams) -> Result<BestResponseOutput, CliError> {
    let (mech, profile) = build(&p.game)?;
    let i = p.individual;
    if i >= profile.len() {
        return Err(CliError::invalid(format!("individual: {i} out of range for population {}", profile.len())));
    }
    let game = Game::new(p.game.model, mech.as_ref(), p.game.costs.clone())?;
    let coef = utility_coefficients(&game, &profile, i)?;
    let g = game.costs.get(i);
    let analytic = best_response_from(&coef, g);
    let (analytic_nearest, analytic_distance) = manifold_distance(&analytic.strategy);
    let brute_force = p.brute_force_resolution.map(|r| brute_force_from(&coef, g, r)).transpose()?;
    let grid_distance = brute_force.map(|b| manifold_distance(&b.strategy));
    Ok(BestResponseOutput {
        individual: i,
        coefficients: coef,
        profile_strategy: profile[i],
        profile_utility: coef.utility(&profile[i], g),
        analytic,
        analytic_nearest,
        analytic_distance,
        brute_force,
        brute_force_nearest: grid_distance.map(|d| d.0),
        brute_force_distance: grid_distance.map(|d| d.1),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateOutput {
    pub result: SimResult,
    /// Exact expected payments under the profile, when computable.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_payment: Option<Vec<f64>>,
    /// `(mean - expected) / std_error` per individual.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_scores: Option<Vec<f64>>,
    /// `rate - 3 se <= exp(-Σ D(ε_i))`, for profiles where the bound applies.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound_holds: Option<bool>,
}

#[derive(Debug, Clone, Copy, Serialize)]
struct SimulateRow {
    individual: usize,
    mean_payment: f64,
    std_error: f64,
    expected_payment: Option<f64>,
}

pub fn simulate(p: &SimulateParams, seed: u64) -> Result<SimulateOutput, CliError> {
    let (mech, profile) = build(&p.game)?;
    let cfg = SimConfig {
        model: p.game.model,
        profile: profile.clone(),
        mechanism: p.game.mechanism.clone(),
        costs: p.game.costs.clone(),
        trials: p.trials,
        seed,
    };
    let sim = Simulator::new(cfg)?;
    let result = sim.run();
    let game = Game::new(p.game.model, mech.as_ref(), p.game.costs.clone())?;
    let expected_payment = (0..profile.len())
        .map(|i| utility_coefficients(&game, &profile, i).map(|c| c.payment(&profile[i])))
        .collect::<Result<Vec<_>, _>>()
        .ok();
    let z_scores = expected_payment.as_ref().map(|e| {
        e.iter()
            .zip(result.mean_payment.iter().zip(&result.std_error))
            .map(|(e, (m, se))| if *se > 0.0 { (m - e) / se } else if m == e { 0.0 } else { f64::INFINITY })
            .collect()
    });
    let bound_holds = result
        .bound
        .map(|b| result.map_error_rate - 3.0 * result.map_error_se <= b);
    if let Some(path) = &p.dump_trials {
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
        let n = profile.len();
        let mut header = vec!["trial".to_string(), "state".into(), "reports".into(), "decision".into()];
        header.extend((0..n).map(|i| format!("payment_{i}")));
        w.write_record(&header)?;
        for t in 0..p.trials {
            let trial = sim.trial(t);
            let mut rec = vec![
                t.to_string(),
                u8::from(trial.state).to_string(),
                report_string(&trial.reports),
                u8::from(trial.decision).to_string(),
            ];
            rec.extend(trial.payments.iter().map(|x| x.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
    }
    Ok(SimulateOutput {
        result,
        expected_payment,
        z_scores,
        bound_holds,
    })
}

/// A strategy with each conditional drawn from the report simplex, with
/// vertices and edges drawn often enough to exercise the boundary cases.
pub fn random_strategy<R: Rng>(rng: &mut R) -> Strategy {
    let mut half = || -> (f64, f64) {
        match rng.gen_range(0..6) {
            0 => (0.0, 0.0),
            1 => {
                let p: f64 = rng.gen();
                (p, 1.0 - p)
            }
            2 => (rng.gen(), 0.0),
            3 => (0.0, rng.gen()),
            4 => (1.0, 0.0),
            _ => {
                let p: f64 = rng.gen();
                (p, rng.gen::<f64>() * (1.0 - p))
            }
        }
    };
    let (p1, q1) = half();
    let (p0, q0) = half();
    Strategy::new(p1, q1, p0, q0).expect("inside the simplex")
}

pub fn random_model<R: Rng>(rng: &mut R, population: usize) -> ModelParams {
    ModelParams::new(rng.gen_range(0.05..0.95), rng.gen_range(0.55..0.97), population).expect("inside the ranges")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditCase {
    pub instance: u64,
    pub individual: usize,
    pub model: ModelParams,
    pub grid: BestResponse,
    pub nearest: Classification,
    pub distance: f64,
    pub analytic: BestResponse,
    pub analytic_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub spacing: f64,
    pub max_distance: f64,
    pub max_analytic_distance: f64,
    pub within_spacing: bool,
    pub cases: Vec<AuditCase>,
}

/// Uniform nonnegative table that never pays abstention. Half the time the
/// table is scaled down and each participant gets a bonus for matching
/// someone else's report, with its own size for each report value.
fn random_audit_table<R: Rng>(n: usize, rng: &mut R, max_payment: f64) -> Result<TabularMechanism, CliError> {
    if rng.gen_bool(0.5) {
        return Ok(TabularMechanism::random(n, rng, max_payment, false)?);
    }
    let base = TabularMechanism::random(n, rng, 0.1 * max_payment, false)?;
    // separate bonuses for agreeing on 1 and on 0
    let bonus: Vec<[f64; 2]> = (0..n)
        .map(|_| [rng.gen::<f64>() * max_payment, rng.gen::<f64>() * max_payment])
        .collect();
    Ok(TabularMechanism::from_fn(n, |x| {
        (0..n)
            .map(|i| {
                let agrees = x[i].participates() && (0..n).any(|j| j != i && x[j] == x[i]);
                let extra = match (agrees, x[i]) {
                    (true, Report::One) => bonus[i][1],
                    (true, _) => bonus[i][0],
                    _ => 0.0,
                };
                base.entry(x)[i] + extra
            })
            .collect()
    })?)
}

/// Brute-force best responses against random profiles, measured against the
/// symmetric, non-informative and nonparticipation families. Instance `k`
/// draws from stream `k` of `ChaCha8Rng` seeded with `seed`.
pub fn lemma1_audit(p: &Lemma1AuditParams, seed: u64) -> Result<AuditReport, CliError> {
    let n = p.population;
    if !(1..=3).contains(&n) {
        return Err(CliError::invalid(format!("population: audit needs 1 <= N <= 3, got {n}")));
    }
    if p.seeds == 0 {
        return Err(CliError::invalid("seeds: need at least one instance"));
    }
    if p.resolution < 21 {
        return Err(CliError::invalid(format!("resolution: need at least 21, got {}", p.resolution)));
    }
    p.cost.check_proper(20.0, 400)?;
    let costs: Costs = p.cost.clone().into();
    let spacing = 1.0 / (p.resolution - 1) as f64;
    let mut cases = Vec::new();
    for k in 0..p.seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k);
        let model = random_model(&mut rng, n);
        let mech: Box<dyn Mechanism> = match p.mechanism {
            AuditMechanism::Random { max_payment } => Box::new(random_audit_table(n, &mut rng, max_payment)?),
            AuditMechanism::Zero => Box::new(ZeroMechanism { population: n }),
            AuditMechanism::Genie { eps } => Box::new(GenieMechanism::new(eps, model, &costs)?),
        };
        // informative opponents make disclosure worth paying for
        let profile: Vec<Strategy> = (0..n)
            .map(|_| {
                if rng.gen_bool(0.5) {
                    Strategy::eps_strategy(rng.gen_range(0.2..3.0))
                } else {
                    random_strategy(&mut rng)
                }
            })
            .collect();
        let game = Game::new(model, mech.as_ref(), costs.clone())?;
        for i in 0..n {
            let coef = utility_coefficients(&game, &profile, i)?;
            let grid = brute_force_from(&coef, &p.cost, p.resolution)?;
            let analytic = best_response_from(&coef, &p.cost);
            let (nearest, distance) = manifold_distance(&grid.strategy);
            cases.push(AuditCase {
                instance: k,
                individual: i,
                model,
                grid,
                nearest,
                distance,
                analytic,
                analytic_distance: manifold_distance(&analytic.strategy).1,
            });
        }
    }
    let max_distance = cases.iter().map(|c| c.distance).fold(0.0, f64::max);
    let max_analytic_distance = cases.iter().map(|c| c.analytic_distance).fold(0.0, f64::max);
    Ok(AuditReport {
        spacing,
        max_distance,
        max_analytic_distance,
        within_spacing: max_distance <= spacing,
        cases,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
struct AuditRow {
    instance: u64,
    individual: usize,
    p1: f64,
    q1: f64,
    p0: f64,
    q0: f64,
    nearest: Classification,
    distance: f64,
    analytic_distance: f64,
}
