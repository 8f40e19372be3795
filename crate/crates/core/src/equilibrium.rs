//! Expected utilities, best responses and Nash-equilibrium verification.
//!
//! Fixing the other individuals' strategies, the expected payment to
//! individual `i` is linear in its own strategy. The six coefficients are
//! collected in [`UtilityCoefficients`]; the privacy cost is the only
//! nonlinear part of the utility.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanisms::{profile_dists, Mechanism};
use crate::model::{Classification, CostFn, Costs, ModelParams, Report, Strategy, STRATEGY_TOL};
use crate::numeric::golden_section_max;

/// Bracket for the symmetric-family search; `e^ξ/(e^ξ+1)` is within
/// `2e-22` of 1 beyond it.
pub const XI_MAX: f64 = 50.0;
const XI_TOL: f64 = 1e-10;
/// Default absolute tolerance for Nash verification.
pub const NASH_TOL: f64 = 1e-6;
const TIE_TOL: f64 = 1e-10;

/// A game: a model, a mechanism and the individuals' cost functions.
pub struct Game<'a> {
    pub model: ModelParams,
    pub mechanism: &'a dyn Mechanism,
    pub costs: Costs,
}

impl<'a> Game<'a> {
    pub fn new(model: ModelParams, mechanism: &'a dyn Mechanism, costs: Costs) -> Result<Self> {
        if mechanism.population() != model.population {
            return Err(Error::PopulationMismatch {
                expected: model.population,
                actual: mechanism.population(),
            });
        }
        costs.check_population(model.population)?;
        Ok(Self {
            model,
            mechanism,
            costs,
        })
    }

    fn check_profile(&self, profile: &[Strategy]) -> Result<()> {
        if profile.len() == self.model.population {
            Ok(())
        } else {
            Err(Error::PopulationMismatch {
                expected: self.model.population,
                actual: profile.len(),
            })
        }
    }
}

/// Expected payment to individual `i` from each (signal, report) pair:
/// `K_s` for report 1, `L_s` for report 0 and `M_s` for `⊥`, each already
/// weighted by `P(S_i = s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityCoefficients {
    pub k1: f64,
    pub k0: f64,
    pub l1: f64,
    pub l0: f64,
    pub m1: f64,
    pub m0: f64,
}

impl UtilityCoefficients {
    /// Builds the coefficients from `R̄_i(x; w)`, indexed `[digit(x)][w]`.
    pub fn from_conditional(model: &ModelParams, rbar: &[[f64; 2]; 3]) -> Self {
        let weight = |s: bool, x: Report| {
            model.joint(s, false) * rbar[x.digit()][0] + model.joint(s, true) * rbar[x.digit()][1]
        };
        Self {
            k1: weight(true, Report::One),
            k0: weight(false, Report::One),
            l1: weight(true, Report::Zero),
            l0: weight(false, Report::Zero),
            m1: weight(true, Report::Abstain),
            m0: weight(false, Report::Abstain),
        }
    }

    pub fn kbar1(&self) -> f64 {
        self.k1 - self.l1
    }

    pub fn kbar0(&self) -> f64 {
        self.k0 - self.l0
    }

    pub fn kbar(&self) -> f64 {
        self.l1 + self.l0
    }

    /// Expected payment under strategy `s`.
    pub fn payment(&self, s: &Strategy) -> f64 {
        self.k1 * s.p1 + self.l1 * s.q1 + self.m1 * s.abstain(true) + self.k0 * s.p0 + self.l0 * s.q0 + self.m0 * s.abstain(false)
    }

    /// Expected payment minus privacy cost.
    pub fn utility(&self, s: &Strategy, g: &CostFn) -> f64 {
        self.payment(s) - g.value(s.privacy_level())
    }

    /// Utility of the eps-strategy with parameter `xi`:
    /// `K̄1 e^ξ/(e^ξ+1) + K̄0/(e^ξ+1) - g(|ξ|) + K̄`.
    pub fn symmetric_utility(&self, xi: f64, g: &CostFn) -> f64 {
        let keep = 1.0 / (1.0 + (-xi).exp());
        let flip = 1.0 / (1.0 + xi.exp());
        self.kbar1() * keep + self.kbar0() * flip - g.value(xi.abs()) + self.kbar()
    }
}

pub fn utility_coefficients(game: &Game<'_>, profile: &[Strategy], i: usize) -> Result<UtilityCoefficients> {
    game.check_profile(profile)?;
    let mut rbar = [[0.0; 2]; 3];
    for w in [false, true] {
        let dists = profile_dists(&game.model, profile, w);
        for x in Report::ALL {
            rbar[x.digit()][usize::from(w)] = game.mechanism.conditional_payment(i, x, w, &dists)?;
        }
    }
    Ok(UtilityCoefficients::from_conditional(&game.model, &rbar))
}

/// Utility of individual `i` playing `s` while the others follow `profile`.
pub fn utility(game: &Game<'_>, profile: &[Strategy], i: usize, s: &Strategy) -> Result<f64> {
    Ok(utility_coefficients(game, profile, i)?.utility(s, game.costs.get(i)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestResponse {
    pub strategy: Strategy,
    pub utility: f64,
    pub family: Classification,
    /// The symmetric and non-informative optima agree within tolerance; the
    /// non-informative one is reported.
    pub tie: bool,
}

/// Best response over symmetric randomized responses, non-informative
/// strategies and nonparticipation.
pub fn best_response(game: &Game<'_>, profile: &[Strategy], i: usize) -> Result<BestResponse> {
    let coef = utility_coefficients(game, profile, i)?;
    Ok(best_response_from(&coef, game.costs.get(i)))
}

pub fn best_response_from(coef: &UtilityCoefficients, g: &CostFn) -> BestResponse {
    // symmetric family; the branch follows the sign of K̄1 - K̄0
    let (lo, hi) = if coef.kbar1() >= coef.kbar0() { (0.0, XI_MAX) } else { (-XI_MAX, 0.0) };
    let (xi, mut sym_u) = golden_section_max(|x| coef.symmetric_utility(x, g), lo, hi, XI_TOL);
    let mut sym = Strategy::eps_strategy(xi);
    // full disclosure only competes when g has a finite limit
    for det in [Strategy::eps_strategy(f64::INFINITY), Strategy::eps_strategy(f64::NEG_INFINITY)] {
        let u = coef.utility(&det, g);
        if u > sym_u {
            sym = det;
            sym_u = u;
        }
    }

    let always = |one: f64| Strategy {
        p1: one,
        q1: 1.0 - one,
        p0: one,
        q0: 1.0 - one,
    };
    let vertices = [
        (always(1.0), coef.k1 + coef.k0),
        (always(0.0), coef.l1 + coef.l0),
        (Strategy::non_participation(), coef.m1 + coef.m0),
    ];
    let mut best_ni = vertices[0];
    for v in &vertices[1..] {
        if v.1 > best_ni.1 {
            best_ni = *v;
        }
    }

    let scale = 1.0_f64.max(sym_u.abs()).max(best_ni.1.abs());
    let tie = (sym_u - best_ni.1).abs() <= TIE_TOL * scale;
    if sym_u > best_ni.1 && !tie {
        BestResponse {
            strategy: sym,
            utility: sym_u,
            family: Classification::Symmetric,
            tie: false,
        }
    } else {
        BestResponse {
            strategy: best_ni.0,
            utility: best_ni.1,
            family: best_ni.0.classify(STRATEGY_TOL),
            tie,
        }
    }
}

/// Exhaustive search over the grid `k / (resolution - 1)` on each of
/// `(p1, q1, p0, q0)`, restricted to the two simplex constraints. Ties go to
/// the smallest lexicographic grid index.
pub fn brute_force_best_response(
    game: &Game<'_>,
    profile: &[Strategy],
    i: usize,
    resolution: usize,
) -> Result<BestResponse> {
    let coef = utility_coefficients(game, profile, i)?;
    brute_force_from(&coef, game.costs.get(i), resolution)
}

pub fn brute_force_from(coef: &UtilityCoefficients, g: &CostFn, resolution: usize) -> Result<BestResponse> {
    if resolution < 21 {
        return Err(Error::invalid("grid_resolution", format!("need at least 21, got {resolution}")));
    }
    let steps = resolution - 1;
    let h = steps as f64;
    let pairs: Vec<(usize, usize)> = (0..=steps)
        .flat_map(|a| (0..=steps - a).map(move |b| (a, b)))
        .collect();
    let grid_value = |k: usize| k as f64 / h;
    let (utility, index) = pairs
        .par_iter()
        .enumerate()
        .map(|(outer, &(a, b))| {
            let mut best = (f64::NEG_INFINITY, usize::MAX);
            for (inner, &(c, d)) in pairs.iter().enumerate() {
                let s = Strategy {
                    p1: grid_value(a),
                    q1: grid_value(b),
                    p0: grid_value(c),
                    q0: grid_value(d),
                };
                let u = coef.utility(&s, g);
                if u > best.0 {
                    best = (u, outer * pairs.len() + inner);
                }
            }
            best
        })
        .reduce(
            || (f64::NEG_INFINITY, usize::MAX),
            |x, y| if y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) { y } else { x },
        );
    if index == usize::MAX {
        return Err(Error::Assertion("grid search found no finite utility".into()));
    }
    let (a, b) = pairs[index / pairs.len()];
    let (c, d) = pairs[index % pairs.len()];
    let strategy = Strategy {
        p1: grid_value(a),
        q1: grid_value(b),
        p0: grid_value(c),
        q0: grid_value(d),
    };
    Ok(BestResponse {
        strategy,
        utility,
        family: strategy.classify(STRATEGY_TOL),
        tie: false,
    })
}

/// L∞ distance from `s` to the nearest of the three structural families.
pub fn manifold_distance(s: &Strategy) -> (Classification, f64) {
    let ni = (s.p1 - s.p0).abs().max((s.q1 - s.q0).abs()) / 2.0;
    let coords = [s.p1, 1.0 - s.q1, 1.0 - s.p0, s.q0];
    let hi = coords.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = coords.iter().copied().fold(f64::INFINITY, f64::min);
    let sym = (hi - lo) / 2.0;
    let np = [s.p1, s.q1, s.p0, s.q0].iter().copied().fold(0.0, f64::max);
    let mut best = (Classification::Nonparticipation, np);
    for cand in [(Classification::NonInformative, ni), (Classification::Symmetric, sym)] {
        if cand.1 < best.1 {
            best = cand;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndividualReport {
    pub index: usize,
    pub strategy: Strategy,
    pub classification: Classification,
    pub expected_payment: f64,
    pub utility: f64,
    pub best_response: BestResponse,
    /// Best-response utility minus profile utility.
    pub deviation_gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub tolerance: f64,
    pub individuals: Vec<IndividualReport>,
    pub max_deviation_gain: f64,
    pub is_nash: bool,
}

pub fn verify_nash(game: &Game<'_>, profile: &[Strategy], tolerance: f64) -> Result<EquilibriumReport> {
    game.check_profile(profile)?;
    let individuals = (0..profile.len())
        .into_par_iter()
        .map(|i| {
            let coef = utility_coefficients(game, profile, i)?;
            let g = game.costs.get(i);
            let s = profile[i];
            let br = best_response_from(&coef, g);
            let utility = coef.utility(&s, g);
            Ok(IndividualReport {
                index: i,
                strategy: s,
                classification: s.classify(STRATEGY_TOL),
                expected_payment: coef.payment(&s),
                utility,
                best_response: br,
                deviation_gain: br.utility - utility,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_deviation_gain = individuals
        .iter()
        .map(|r| r.deviation_gain)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(EquilibriumReport {
        tolerance,
        is_nash: individuals.iter().all(|r| r.deviation_gain <= tolerance),
        max_deviation_gain,
        individuals,
    })
}
