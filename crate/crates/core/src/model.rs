//! Probability model, reporting strategies, privacy levels and cost functions.
//!
//! The state `W` is a bit with prior `P(W = 1) = prior_one`. Given `W`, the
//! signals `S_1..S_N` are i.i.d. and agree with `W` with probability
//! `quality`. Each individual reports `X_i` in `{1, 0, ⊥}` through a
//! [`Strategy`], a pair of conditional distributions indexed by the signal.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when comparing strategy probabilities.
pub const STRATEGY_TOL: f64 = 1e-9;

/// Nonparticipation masses below this are rounding residue of `1 - p - q`.
const ABSTAIN_SNAP: f64 = 4.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModelParams")]
pub struct ModelParams {
    /// `P(W = 1)`.
    pub prior_one: f64,
    /// `P(S_i = W)`.
    pub quality: f64,
    pub population: usize,
}

#[derive(Deserialize)]
struct RawModelParams {
    prior_one: f64,
    quality: f64,
    #[serde(default = "one")]
    population: usize,
}

fn one() -> usize {
    1
}

impl TryFrom<RawModelParams> for ModelParams {
    type Error = Error;

    fn try_from(raw: RawModelParams) -> Result<Self> {
        ModelParams::new(raw.prior_one, raw.quality, raw.population)
    }
}

impl ModelParams {
    pub fn new(prior_one: f64, quality: f64, population: usize) -> Result<Self> {
        if !(prior_one > 0.0 && prior_one < 1.0) {
            return Err(Error::invalid("prior_one", format!("need 0 < P(W=1) < 1, got {prior_one}")));
        }
        if !(quality > 0.5 && quality < 1.0) {
            return Err(Error::invalid("quality", format!("need 0.5 < theta < 1, got {quality}")));
        }
        if population == 0 {
            return Err(Error::invalid("population", "need at least one individual"));
        }
        Ok(Self {
            prior_one,
            quality,
            population,
        })
    }

    /// Same prior and quality, different population.
    pub fn with_population(&self, population: usize) -> Result<Self> {
        Self::new(self.prior_one, self.quality, population)
    }

    pub fn prior(&self, w: bool) -> f64 {
        if w {
            self.prior_one
        } else {
            1.0 - self.prior_one
        }
    }

    /// `P(S_i = 1 | W = w)`.
    pub fn signal_distribution(&self, w: bool) -> f64 {
        if w {
            self.quality
        } else {
            1.0 - self.quality
        }
    }

    /// `P(S_i = s | W = w)`.
    pub fn signal_likelihood(&self, s: bool, w: bool) -> f64 {
        if s == w {
            self.quality
        } else {
            1.0 - self.quality
        }
    }

    /// `P(S_i = s, W = w)`.
    pub fn joint(&self, s: bool, w: bool) -> f64 {
        self.prior(w) * self.signal_likelihood(s, w)
    }
}

/// A reported datum: `1`, `0`, or nonparticipation (`⊥`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Report {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "n")]
    Abstain,
}

impl Report {
    pub const ALL: [Report; 3] = [Report::One, Report::Zero, Report::Abstain];

    /// Base-3 digit used by tabular encodings: `0 -> 0`, `1 -> 1`, `⊥ -> 2`.
    pub fn digit(self) -> usize {
        match self {
            Report::Zero => 0,
            Report::One => 1,
            Report::Abstain => 2,
        }
    }

    pub fn from_digit(d: usize) -> Report {
        match d {
            0 => Report::Zero,
            1 => Report::One,
            _ => Report::Abstain,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Report::Zero => '0',
            Report::One => '1',
            Report::Abstain => 'n',
        }
    }

    pub fn from_char(c: char) -> Option<Report> {
        match c {
            '0' => Some(Report::Zero),
            '1' => Some(Report::One),
            'n' => Some(Report::Abstain),
            _ => None,
        }
    }

    /// Exchanges `0` and `1`, leaving `⊥` in place.
    pub fn flipped(self) -> Report {
        match self {
            Report::Zero => Report::One,
            Report::One => Report::Zero,
            Report::Abstain => Report::Abstain,
        }
    }

    pub fn participates(self) -> bool {
        self != Report::Abstain
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// A distribution over `{1, 0, ⊥}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportDist {
    pub one: f64,
    pub zero: f64,
    pub abstain: f64,
}

impl ReportDist {
    pub fn prob(&self, x: Report) -> f64 {
        match x {
            Report::One => self.one,
            Report::Zero => self.zero,
            Report::Abstain => self.abstain,
        }
    }

    pub fn total(&self) -> f64 {
        self.one + self.zero + self.abstain
    }
}

/// A reporting strategy: the conditional law of `X_i` given `S_i`.
///
/// `p1 = P(X=1|S=1)`, `q1 = P(X=0|S=1)`, `p0 = P(X=1|S=0)`,
/// `q0 = P(X=0|S=0)`; nonparticipation takes the remaining mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawStrategy")]
pub struct Strategy {
    pub p1: f64,
    pub q1: f64,
    pub p0: f64,
    pub q0: f64,
}

#[derive(Deserialize)]
struct RawStrategy {
    p1: f64,
    q1: f64,
    p0: f64,
    q0: f64,
}

impl TryFrom<RawStrategy> for Strategy {
    type Error = Error;

    fn try_from(raw: RawStrategy) -> Result<Self> {
        Strategy::new(raw.p1, raw.q1, raw.p0, raw.q0)
    }
}

/// Which strategy family a strategy belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    /// Never reports.
    Nonparticipation,
    /// Report independent of the signal.
    NonInformative,
    /// `p1 = q0`, no nonparticipation.
    Symmetric,
    /// Anything else.
    Other,
}

/// What an equilibrium strategy reveals: an eps-strategy or nothing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Disclosure {
    Epsilon(f64),
    Uninformative,
}

impl Strategy {
    pub fn new(p1: f64, q1: f64, p0: f64, q0: f64) -> Result<Self> {
        for (name, v) in [("p1", p1), ("q1", q1), ("p0", p0), ("q0", q0)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(name, format!("probability outside [0, 1]: {v}")));
            }
        }
        if p1 + q1 > 1.0 + 1e-12 {
            return Err(Error::invalid("q1", format!("p1 + q1 = {} exceeds 1", p1 + q1)));
        }
        if p0 + q0 > 1.0 + 1e-12 {
            return Err(Error::invalid("q0", format!("p0 + q0 = {} exceeds 1", p0 + q0)));
        }
        Ok(Self { p1, q1, p0, q0 })
    }

    /// The eps-strategy: symmetric randomized response that keeps the signal
    /// with probability `e^eps / (e^eps + 1)`. Negative `eps` gives the
    /// (−|eps|)-strategy, which reports the flipped signal more often.
    pub fn eps_strategy(eps: f64) -> Self {
        let small = 1.0 / (eps.abs().exp() + 1.0);
        let big = 1.0 - small;
        let (keep, flip) = if eps >= 0.0 { (big, small) } else { (small, big) };
        Self {
            p1: keep,
            q1: flip,
            p0: flip,
            q0: keep,
        }
    }

    pub fn non_participation() -> Self {
        Self {
            p1: 0.0,
            q1: 0.0,
            p0: 0.0,
            q0: 0.0,
        }
    }

    /// Signal-independent strategy reporting `1` w.p. `p` and `0` w.p. `q`.
    pub fn non_informative(p: f64, q: f64) -> Result<Self> {
        Self::new(p, q, p, q)
    }

    /// Exchanges the roles of reports `1` and `0`.
    pub fn swapped(&self) -> Self {
        Self {
            p1: self.q1,
            q1: self.p1,
            p0: self.q0,
            q0: self.p0,
        }
    }

    /// `P(X = ⊥ | S = s)`.
    pub fn abstain(&self, s: bool) -> f64 {
        let (p, q) = if s { (self.p1, self.q1) } else { (self.p0, self.q0) };
        let a = (1.0 - p) - q;
        if a < ABSTAIN_SNAP {
            0.0
        } else {
            a
        }
    }

    /// `P(X = · | S = s)`.
    pub fn conditional(&self, s: bool) -> ReportDist {
        let (one, zero) = if s { (self.p1, self.q1) } else { (self.p0, self.q0) };
        ReportDist {
            one,
            zero,
            abstain: self.abstain(s),
        }
    }

    pub fn privacy_level(&self) -> f64 {
        privacy_level(self)
    }

    pub fn is_symmetric_rr(&self, tol: f64) -> bool {
        (self.p1 - self.q0).abs() <= tol
            && (self.p1 + self.q1 - 1.0).abs() <= tol
            && (self.p0 + self.q0 - 1.0).abs() <= tol
    }

    pub fn is_non_informative(&self, tol: f64) -> bool {
        (self.p1 - self.p0).abs() <= tol && (self.q1 - self.q0).abs() <= tol
    }

    pub fn is_non_participation(&self, tol: f64) -> bool {
        [self.p1, self.q1, self.p0, self.q0].iter().all(|v| v.abs() <= tol)
    }

    /// Classification with precedence nonparticipation, non-informative,
    /// symmetric. The 0-strategy is therefore reported as non-informative.
    pub fn classify(&self, tol: f64) -> Classification {
        if self.is_non_participation(tol) {
            Classification::Nonparticipation
        } else if self.is_non_informative(tol) {
            Classification::NonInformative
        } else if self.is_symmetric_rr(tol) {
            Classification::Symmetric
        } else {
            Classification::Other
        }
    }

    /// Interprets the strategy as an eps-strategy (signed) or as revealing
    /// nothing. `None` for strategies outside both families.
    pub fn disclosure(&self, tol: f64) -> Option<Disclosure> {
        match self.classify(tol) {
            Classification::Nonparticipation | Classification::NonInformative => Some(Disclosure::Uninformative),
            Classification::Symmetric => Some(Disclosure::Epsilon(self.p1.ln() - self.p0.ln())),
            Classification::Other => None,
        }
    }

    /// Largest coordinate difference to another strategy.
    pub fn distance(&self, other: &Strategy) -> f64 {
        [
            self.p1 - other.p1,
            self.q1 - other.q1,
            self.p0 - other.p0,
            self.q0 - other.q0,
        ]
        .iter()
        .fold(0.0_f64, |m, d| m.max(d.abs()))
    }
}

/// `|ln(a / b)|` with `0/0 = 1` and `x/0 = ∞`.
fn abs_log_ratio(a: f64, b: f64) -> f64 {
    match (a == 0.0, b == 0.0) {
        (true, true) => 0.0,
        (true, false) | (false, true) => f64::INFINITY,
        (false, false) => (a.ln() - b.ln()).abs(),
    }
}

/// Local differential-privacy level of a strategy: the largest absolute
/// log-ratio of the probability of any report event under the two signals.
///
/// Over `{1, 0, ⊥}` the nontrivial events are the three singletons and their
/// three complements, hence six terms.
pub fn privacy_level(s: &Strategy) -> f64 {
    let one = s.conditional(true);
    let zero = s.conditional(false);
    let events = [
        (one.one, zero.one),
        (one.zero, zero.zero),
        (one.abstain, zero.abstain),
        (one.one + one.zero, zero.one + zero.zero),
        (one.one + one.abstain, zero.one + zero.abstain),
        (one.zero + one.abstain, zero.zero + zero.abstain),
    ];
    events
        .iter()
        .map(|&(a, b)| abs_log_ratio(a, b))
        .fold(0.0, f64::max)
}

/// `P(X_i = · | W = w)` for an individual using strategy `s`.
pub fn report_distribution(m: &ModelParams, s: &Strategy, w: bool) -> ReportDist {
    let ps1 = m.signal_distribution(w);
    let ps0 = 1.0 - ps1;
    let c1 = s.conditional(true);
    let c0 = s.conditional(false);
    ReportDist {
        one: c1.one * ps1 + c0.one * ps0,
        zero: c1.zero * ps1 + c0.zero * ps0,
        abstain: c1.abstain * ps1 + c0.abstain * ps0,
    }
}

/// A proper privacy-cost function `g` of the privacy level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", try_from = "RawCostFn")]
pub enum CostFn {
    /// `g(x) = c x`.
    Linear { c: f64 },
    /// `g(x) = c x^2`.
    Quadratic { c: f64 },
    /// Piecewise-linear interpolation of `(x, g(x))` knots starting at
    /// `(0, 0)`, extended linearly past the last knot. `limit` is the value
    /// charged for an infinite privacy level (default `+∞`).
    Table {
        points: Vec<(f64, f64)>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        limit: Option<f64>,
    },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum RawCostFn {
    Linear { c: f64 },
    Quadratic { c: f64 },
    Table {
        points: Vec<(f64, f64)>,
        #[serde(default)]
        limit: Option<f64>,
    },
}

impl TryFrom<RawCostFn> for CostFn {
    type Error = Error;

    fn try_from(raw: RawCostFn) -> Result<Self> {
        match raw {
            RawCostFn::Linear { c } => CostFn::linear(c),
            RawCostFn::Quadratic { c } => CostFn::quadratic(c),
            RawCostFn::Table { points, limit } => CostFn::table(points, limit),
        }
    }
}

/// Step used for the central-difference derivative of table costs.
const TABLE_DIFF_STEP: f64 = 1e-6;

impl CostFn {
    pub fn linear(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::invalid("cost.c", format!("need c > 0, got {c}")));
        }
        Ok(CostFn::Linear { c })
    }

    pub fn quadratic(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::invalid("cost.c", format!("need c > 0, got {c}")));
        }
        Ok(CostFn::Quadratic { c })
    }

    /// Builds a table cost, rejecting knots that are not proper and convex.
    pub fn table(points: Vec<(f64, f64)>, limit: Option<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::invalid("cost.points", "need at least two knots"));
        }
        if points[0] != (0.0, 0.0) {
            return Err(Error::invalid("cost.points", "first knot must be (0, 0)"));
        }
        let mut prev_slope = 0.0;
        for (k, w) in points.windows(2).enumerate() {
            let (x0, y0) = w[0];
            let (x1, y1) = w[1];
            if !(x1 > x0) || !y1.is_finite() {
                return Err(Error::invalid("cost.points", "knots must have strictly increasing finite x"));
            }
            let slope = (y1 - y0) / (x1 - x0);
            if slope <= 0.0 && k == 0 {
                return Err(Error::invalid("cost.points", "g must be positive away from 0"));
            }
            if slope < prev_slope - 1e-12 {
                return Err(Error::invalid("cost.points", format!("not convex at knot {}", k + 1)));
            }
            prev_slope = slope;
        }
        if let Some(l) = limit {
            let last = points[points.len() - 1].1;
            if !(l >= last) {
                return Err(Error::invalid("cost.limit", "limit must dominate the table"));
            }
        }
        Ok(CostFn::Table { points, limit })
    }

    pub fn value(&self, x: f64) -> f64 {
        if x.is_infinite() {
            return match self {
                CostFn::Table { limit: Some(l), .. } => *l,
                _ => f64::INFINITY,
            };
        }
        match self {
            CostFn::Linear { c } => c * x,
            CostFn::Quadratic { c } => c * x * x,
            CostFn::Table { points, .. } => interpolate(points, x),
        }
    }

    /// `g'(x)`. Exact for the presets, central difference for tables.
    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            CostFn::Linear { c } => *c,
            CostFn::Quadratic { c } => 2.0 * c * x,
            CostFn::Table { points, .. } => {
                let h = TABLE_DIFF_STEP;
                if x < h {
                    (interpolate(points, x + h) - interpolate(points, x)) / h
                } else {
                    (interpolate(points, x + h) - interpolate(points, x - h)) / (2.0 * h)
                }
            }
        }
    }

    /// The same cost multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            CostFn::Linear { c } => CostFn::Linear { c: c * factor },
            CostFn::Quadratic { c } => CostFn::Quadratic { c: c * factor },
            CostFn::Table { points, limit } => CostFn::Table {
                points: points.iter().map(|&(x, y)| (x, y * factor)).collect(),
                limit: limit.map(|l| l * factor),
            },
        }
    }

    /// Grid check of the proper-cost conditions: `g(0) = 0`, `g > 0` away
    /// from 0, non-decreasing, and convex (second differences `>= -1e-10`).
    pub fn check_proper(&self, x_max: f64, points: usize) -> Result<()> {
        if self.value(0.0) != 0.0 {
            return Err(Error::invalid("cost", "g(0) != 0"));
        }
        let h = x_max / points as f64;
        let g: Vec<f64> = (0..=points).map(|k| self.value(k as f64 * h)).collect();
        for k in 1..g.len() {
            if g[k] <= 0.0 {
                return Err(Error::invalid("cost", format!("g vanishes at {}", k as f64 * h)));
            }
            if g[k] < g[k - 1] {
                return Err(Error::invalid("cost", format!("g decreases at {}", k as f64 * h)));
            }
        }
        for w in g.windows(3) {
            if w[2] - 2.0 * w[1] + w[0] < -1e-10 {
                return Err(Error::invalid("cost", "g is not convex"));
            }
        }
        Ok(())
    }
}

/// Cost assignment for a population: one shared function or one per individual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Costs {
    Uniform(CostFn),
    PerIndividual(Vec<CostFn>),
}

impl Costs {
    pub fn get(&self, i: usize) -> &CostFn {
        match self {
            Costs::Uniform(g) => g,
            Costs::PerIndividual(gs) => &gs[i],
        }
    }

    /// Checks that a per-individual assignment covers exactly `population`.
    pub fn check_population(&self, population: usize) -> Result<()> {
        match self {
            Costs::PerIndividual(gs) if gs.len() != population => Err(Error::PopulationMismatch {
                expected: population,
                actual: gs.len(),
            }),
            _ => Ok(()),
        }
    }
}

impl From<CostFn> for Costs {
    fn from(g: CostFn) -> Self {
        Costs::Uniform(g)
    }
}

fn interpolate(points: &[(f64, f64)], x: f64) -> f64 {
    let idx = points.partition_point(|&(px, _)| px <= x);
    let seg = idx.clamp(1, points.len() - 1);
    let (x0, y0) = points[seg - 1];
    let (x1, y1) = points[seg];
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}
