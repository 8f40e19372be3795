//! Payment mechanisms and the transforms used to reason about them.
//!
//! A mechanism maps a report vector (and, for genie-aided rules, the true
//! state) to a nonnegative payment per individual.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{report_distribution, Costs, ModelParams, Report, ReportDist, Strategy};
use crate::numeric::{binomial_lower_tail, NeumaierSum};

/// Largest population for which conditional payments are enumerated exactly.
pub const MAX_ENUMERATION: usize = 12;

pub trait Mechanism: Sync {
    fn population(&self) -> usize;

    /// Payment to individual `i`. `state` is ignored by mechanisms that do
    /// not observe `W`.
    fn payment(&self, i: usize, reports: &[Report], state: bool) -> f64;

    fn payments(&self, reports: &[Report], state: bool, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.payment(i, reports, state);
        }
    }

    /// `E[R_i(own, X_{-i}) | W = state]` when the others' reports are
    /// independent given the state with laws `dists[j]` (`dists[i]` unused).
    ///
    /// The default enumerates all `3^(N-1)` report vectors of the others.
    fn conditional_payment(&self, i: usize, own: Report, state: bool, dists: &[ReportDist]) -> Result<f64> {
        enumerate_conditional(self, i, own, state, dists)
    }
}

/// Exact conditional expectation by enumeration over the others' reports.
pub fn enumerate_conditional<M: Mechanism + ?Sized>(
    mech: &M,
    i: usize,
    own: Report,
    state: bool,
    dists: &[ReportDist],
) -> Result<f64> {
    let n = mech.population();
    check_len(n, dists.len())?;
    if n > MAX_ENUMERATION {
        return Err(Error::EnumerationTooLarge {
            population: n,
            limit: MAX_ENUMERATION,
        });
    }
    let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
    let mut reports = vec![Report::Abstain; n];
    reports[i] = own;
    let mut acc = NeumaierSum::new();
    for idx in 0..3usize.pow(others.len() as u32) {
        let mut code = idx;
        let mut prob = 1.0;
        for &j in &others {
            let x = Report::from_digit(code % 3);
            code /= 3;
            reports[j] = x;
            prob *= dists[j].prob(x);
        }
        if prob > 0.0 {
            acc.add(prob * mech.payment(i, &reports, state));
        }
    }
    Ok(acc.value())
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::PopulationMismatch { expected, actual })
    }
}

/// Per-individual report laws given `W = state` under a profile.
pub fn profile_dists(model: &ModelParams, profile: &[Strategy], state: bool) -> Vec<ReportDist> {
    profile.iter().map(|s| report_distribution(model, s, state)).collect()
}

/// Base-3 index of a report vector; individual `i` is digit `i`.
pub fn report_index(reports: &[Report]) -> usize {
    reports.iter().rev().fold(0, |acc, r| acc * 3 + r.digit())
}

pub fn report_vector(mut index: usize, n: usize) -> Vec<Report> {
    (0..n)
        .map(|_| {
            let r = Report::from_digit(index % 3);
            index /= 3;
            r
        })
        .collect()
}

pub fn report_string(reports: &[Report]) -> String {
    reports.iter().map(|r| r.as_char()).collect()
}

/// A mechanism given by an explicit payment table over all `3^N` report vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTabular", into = "RawTabular")]
pub struct TabularMechanism {
    population: usize,
    payments: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct RawTabular {
    population: usize,
    payments: BTreeMap<String, Vec<f64>>,
}

impl TryFrom<RawTabular> for TabularMechanism {
    type Error = Error;

    fn try_from(raw: RawTabular) -> Result<Self> {
        let n = raw.population;
        let size = 3usize.pow(n as u32);
        let mut payments = vec![Vec::new(); size];
        for (key, pay) in raw.payments {
            let reports: Option<Vec<Report>> = key.chars().map(Report::from_char).collect();
            let reports = match reports {
                Some(r) if r.len() == n => r,
                _ => return Err(Error::invalid("payments", format!("bad report vector `{key}`"))),
            };
            payments[report_index(&reports)] = pay;
        }
        TabularMechanism::new(n, payments)
    }
}

impl From<TabularMechanism> for RawTabular {
    fn from(t: TabularMechanism) -> Self {
        let payments = t
            .payments
            .iter()
            .enumerate()
            .map(|(idx, p)| (report_string(&report_vector(idx, t.population)), p.clone()))
            .collect();
        RawTabular {
            population: t.population,
            payments,
        }
    }
}

impl TabularMechanism {
    pub fn new(population: usize, payments: Vec<Vec<f64>>) -> Result<Self> {
        if population == 0 || population > MAX_ENUMERATION {
            return Err(Error::invalid(
                "population",
                format!("tabular mechanisms need 1..={MAX_ENUMERATION} individuals"),
            ));
        }
        let size = 3usize.pow(population as u32);
        if payments.len() != size {
            return Err(Error::invalid("payments", format!("need {size} report vectors, got {}", payments.len())));
        }
        for (idx, p) in payments.iter().enumerate() {
            let key = report_string(&report_vector(idx, population));
            if p.len() != population {
                return Err(Error::invalid("payments", format!("`{key}` has {} entries", p.len())));
            }
            if p.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::invalid("payments", format!("`{key}` has a negative or non-finite payment")));
            }
        }
        Ok(Self { population, payments })
    }

    pub fn from_fn<F: FnMut(&[Report]) -> Vec<f64>>(population: usize, mut f: F) -> Result<Self> {
        let size = 3usize.pow(population.min(MAX_ENUMERATION + 1) as u32);
        let payments = (0..size).map(|idx| f(&report_vector(idx, population))).collect();
        Self::new(population, payments)
    }

    pub fn constant(population: usize, c: f64) -> Result<Self> {
        Self::from_fn(population, |_| vec![c; population])
    }

    /// Payments drawn uniformly from `[0, max_payment)`. With
    /// `pay_abstainers = false` nonparticipants always receive 0.
    pub fn random<R: Rng>(population: usize, rng: &mut R, max_payment: f64, pay_abstainers: bool) -> Result<Self> {
        Self::from_fn(population, |reports| {
            reports
                .iter()
                .map(|r| {
                    if !pay_abstainers && *r == Report::Abstain {
                        0.0
                    } else {
                        rng.gen::<f64>() * max_payment
                    }
                })
                .collect()
        })
    }

    /// Tabulates a state-independent mechanism.
    pub fn tabulate<M: Mechanism + ?Sized>(mech: &M) -> Result<Self> {
        let n = mech.population();
        Self::from_fn(n, |reports| {
            let mut out = vec![0.0; n];
            mech.payments(reports, false, &mut out);
            out
        })
    }

    pub fn entry(&self, reports: &[Report]) -> &[f64] {
        &self.payments[report_index(reports)]
    }
}

impl Mechanism for TabularMechanism {
    fn population(&self) -> usize {
        self.population
    }

    fn payment(&self, i: usize, reports: &[Report], _state: bool) -> f64 {
        self.payments[report_index(reports)][i]
    }

    fn payments(&self, reports: &[Report], _state: bool, out: &mut [f64]) {
        out.copy_from_slice(&self.payments[report_index(reports)]);
    }
}

/// Rewrites `r` so that individual `i`'s reports `0` and `1` trade places.
/// `⊥` is unchanged. Applying it twice gives back `r`.
pub fn flip_mechanism(r: &TabularMechanism, i: usize) -> Result<TabularMechanism> {
    let n = r.population;
    if i >= n {
        return Err(Error::invalid("i", format!("individual {i} out of range for population {n}")));
    }
    TabularMechanism::from_fn(n, |reports| {
        let mut flipped = reports.to_vec();
        flipped[i] = flipped[i].flipped();
        r.entry(&flipped).to_vec()
    })
}

/// `g'(eps) (e^eps + 1)^2 / (2 e^eps)`, written as `g'(eps) (1 + cosh eps)`.
pub fn payment_scale(derivative: f64, eps: f64) -> f64 {
    derivative * (1.0 + eps.cosh())
}

/// `α = P(X_i = W)` under the eps-strategy: `θ e^ε/(e^ε+1) + (1-θ)/(e^ε+1)`.
/// Returns `(α, 1 - α)`, each computed without cancellation.
pub fn alpha(eps: f64, quality: f64) -> (f64, f64) {
    let half_gap = 0.5 * (2.0 * quality - 1.0) * (0.5 * eps).tanh();
    (0.5 + half_gap, 0.5 - half_gap)
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("eps", format!("need 0 < eps < inf, got {eps}")))
    }
}

/// Genie-aided mechanism paying on the own report and the true state.
#[derive(Debug, Clone, PartialEq)]
pub struct GenieMechanism {
    eps: f64,
    model: ModelParams,
    scale: Vec<f64>,
    a11: f64,
    a00: f64,
}

/// Scalar and derived fields of a genie mechanism, for audit output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenieAudit {
    pub eps: f64,
    pub model: ModelParams,
    pub scale: Vec<f64>,
    pub a11: f64,
    pub a00: f64,
    pub a01: f64,
    pub a10: f64,
}

impl GenieMechanism {
    pub fn new(eps: f64, model: ModelParams, costs: &Costs) -> Result<Self> {
        check_eps(eps)?;
        costs.check_population(model.population)?;
        let spread = 2.0 * model.quality - 1.0;
        Ok(Self {
            eps,
            model,
            scale: (0..model.population)
                .map(|i| payment_scale(costs.get(i).derivative(eps), eps))
                .collect(),
            a11: 1.0 / (spread * model.prior(true)),
            a00: 1.0 / (spread * model.prior(false)),
        })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// `Â_{x,w}`; zero off the diagonal and for `⊥`.
    pub fn a(&self, x: Report, w: bool) -> f64 {
        match (x, w) {
            (Report::One, true) => self.a11,
            (Report::Zero, false) => self.a00,
            _ => 0.0,
        }
    }

    /// Payment for own report `x` in state `w`, for individual `i`.
    pub fn genie_payment(&self, i: usize, x: Report, w: bool) -> f64 {
        self.scale[i] * self.a(x, w)
    }

    pub fn audit(&self) -> GenieAudit {
        GenieAudit {
            eps: self.eps,
            model: self.model,
            scale: self.scale.clone(),
            a11: self.a11,
            a00: self.a00,
            a01: 0.0,
            a10: 0.0,
        }
    }
}

impl Mechanism for GenieMechanism {
    fn population(&self) -> usize {
        self.model.population
    }

    fn payment(&self, i: usize, reports: &[Report], state: bool) -> f64 {
        self.genie_payment(i, reports[i], state)
    }

    fn conditional_payment(&self, i: usize, own: Report, state: bool, dists: &[ReportDist]) -> Result<f64> {
        check_len(self.population(), dists.len())?;
        Ok(self.genie_payment(i, own, state))
    }
}

/// Peer-majority parameters at a given participant count `n`.
///
/// With `m = n - 1`, `u = 1 - β = P(Bin(m, α) <= ⌊m/2⌋)` and
/// `v = γ - β = P(Bin(m, 1-α) >= ⌊m/2⌋ + 1)`; `δ = 2β - γ = 1 - u - v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeerParams {
    pub n: usize,
    pub beta: f64,
    pub gamma: f64,
    pub u: f64,
    pub v: f64,
    pub delta: f64,
    pub a11: f64,
    pub a00: f64,
}

/// Computes [`PeerParams`] at participant count `n >= 2`.
pub fn peer_params(eps: f64, model: &ModelParams, n: usize) -> Result<PeerParams> {
    check_eps(eps)?;
    if n < 2 {
        return Err(Error::invalid("n", "peer parameters need at least two participants"));
    }
    let (a, b) = alpha(eps, model.quality);
    let m = (n - 1) as u64;
    let half = m / 2;
    let u = binomial_lower_tail(m, half, a, b);
    // zeros >= half + 1 among m peers is ones <= m - half - 1
    let v = if m - half >= 1 {
        binomial_lower_tail(m, m - half - 1, a, b)
    } else {
        0.0
    };
    let delta = (1.0 - u) - v;
    if !(delta > 0.0) {
        return Err(Error::Assertion(format!(
            "2 beta - gamma = {delta} is not positive at n = {n}, eps = {eps}"
        )));
    }
    let (p1, p0) = (model.prior(true), model.prior(false));
    let denom = delta * (2.0 * model.quality - 1.0) * p1 * p0;
    let a11 = (p1 * u + p0 * (1.0 - v)) / denom;
    let a00 = (p1 * (1.0 - u) + p0 * v) / denom;
    Ok(PeerParams {
        n,
        beta: 1.0 - u,
        gamma: 1.0 - u + v,
        u,
        v,
        delta,
        a11,
        a00,
    })
}

/// Peer-majority mechanism: participants are paid on their own report and
/// the majority of the other participants' reports.
#[derive(Debug, Clone, PartialEq)]
pub struct PeerMechanism {
    eps: f64,
    model: ModelParams,
    scale: Vec<f64>,
    /// Indexed by participant count; entries 0 and 1 are unused.
    params: Vec<PeerParams>,
}

/// Scalar and derived fields of a peer mechanism, for audit output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeerAudit {
    pub eps: f64,
    pub model: ModelParams,
    pub alpha: f64,
    pub d: f64,
    pub scale: Vec<f64>,
    pub by_participants: Vec<PeerParams>,
}

impl PeerMechanism {
    pub fn new(eps: f64, model: ModelParams, costs: &Costs) -> Result<Self> {
        check_eps(eps)?;
        if model.population < 2 {
            return Err(Error::invalid("population", "the peer mechanism needs N >= 2"));
        }
        costs.check_population(model.population)?;
        let mut params = Vec::with_capacity(model.population + 1);
        for n in 0..=model.population {
            params.push(if n < 2 {
                PeerParams {
                    n,
                    beta: 0.0,
                    gamma: 0.0,
                    u: 0.0,
                    v: 0.0,
                    delta: 0.0,
                    a11: 0.0,
                    a00: 0.0,
                }
            } else {
                peer_params(eps, &model, n)?
            });
        }
        Ok(Self {
            eps,
            model,
            scale: (0..model.population)
                .map(|i| payment_scale(costs.get(i).derivative(eps), eps))
                .collect(),
            params,
        })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn model(&self) -> &ModelParams {
        &self.model
    }

    pub fn scale(&self, i: usize) -> f64 {
        self.scale[i]
    }

    /// Parameters at participant count `n` (`2 <= n <= N`).
    pub fn params(&self, n: usize) -> &PeerParams {
        &self.params[n]
    }

    /// Payment to a participant reporting `x` when `n` individuals participate
    /// and `peer_ones` of the other participants report `1`.
    pub fn pay(&self, i: usize, x: Report, n: usize, peer_ones: usize) -> f64 {
        if x == Report::Abstain || n < 2 {
            return 0.0;
        }
        let p = &self.params[n];
        let majority = peer_ones > (n - 1) / 2;
        let a = match (x, majority) {
            (Report::One, true) => p.a11,
            (Report::Zero, false) => p.a00,
            _ => 0.0,
        };
        self.scale[i] * a
    }

    pub fn audit(&self) -> PeerAudit {
        PeerAudit {
            eps: self.eps,
            model: self.model,
            alpha: alpha(self.eps, self.model.quality).0,
            d: crate::bounds::chernoff_information(self.eps, &self.model),
            scale: self.scale.clone(),
            by_participants: self.params[2..].to_vec(),
        }
    }
}

/// `M_{-i}`: whether the other participants' reports hold a majority of ones.
/// `None` when `i` is the only participant; `i` must participate.
pub fn majority_excluding(reports: &[Report], i: usize) -> Option<bool> {
    let n = reports.iter().filter(|r| r.participates()).count();
    if n < 2 {
        return None;
    }
    let peer_ones = reports
        .iter()
        .enumerate()
        .filter(|&(j, r)| j != i && *r == Report::One)
        .count();
    Some(peer_ones > (n - 1) / 2)
}

impl Mechanism for PeerMechanism {
    fn population(&self) -> usize {
        self.model.population
    }

    fn payment(&self, i: usize, reports: &[Report], _state: bool) -> f64 {
        let n = reports.iter().filter(|r| r.participates()).count();
        let peer_ones = reports
            .iter()
            .enumerate()
            .filter(|&(j, r)| j != i && *r == Report::One)
            .count();
        self.pay(i, reports[i], n, peer_ones)
    }

    fn payments(&self, reports: &[Report], _state: bool, out: &mut [f64]) {
        let n = reports.iter().filter(|r| r.participates()).count();
        let ones = reports.iter().filter(|r| **r == Report::One).count();
        for (i, o) in out.iter_mut().enumerate() {
            let x = reports[i];
            let peer_ones = ones - usize::from(x == Report::One);
            *o = self.pay(i, x, n, peer_ones);
        }
    }

    /// Dynamic program over the others' (participants, ones) counts.
    fn conditional_payment(&self, i: usize, own: Report, _state: bool, dists: &[ReportDist]) -> Result<f64> {
        let n_total = self.population();
        check_len(n_total, dists.len())?;
        if own == Report::Abstain {
            return Ok(0.0);
        }
        // table[k][o]: probability that k others participate and o report 1
        let mut table = vec![vec![0.0; n_total]; n_total];
        table[0][0] = 1.0;
        let mut seen = 0;
        for (j, d) in dists.iter().enumerate() {
            if j == i {
                continue;
            }
            seen += 1;
            let mut next = vec![vec![0.0; n_total]; n_total];
            for k in 0..seen {
                for o in 0..=k {
                    let mass = table[k][o];
                    if mass == 0.0 {
                        continue;
                    }
                    next[k][o] += mass * d.abstain;
                    next[k + 1][o + 1] += mass * d.one;
                    next[k + 1][o] += mass * d.zero;
                }
            }
            table = next;
        }
        let mut acc = NeumaierSum::new();
        for (k, row) in table.iter().enumerate() {
            for (o, &mass) in row.iter().enumerate().take(k + 1) {
                if mass > 0.0 {
                    acc.add(mass * self.pay(i, own, k + 1, o));
                }
            }
        }
        Ok(acc.value())
    }
}

/// The mechanism that never pays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZeroMechanism {
    pub population: usize,
}

impl Mechanism for ZeroMechanism {
    fn population(&self) -> usize {
        self.population
    }

    fn payment(&self, _i: usize, _reports: &[Report], _state: bool) -> f64 {
        0.0
    }

    fn conditional_payment(&self, _i: usize, _own: Report, _state: bool, dists: &[ReportDist]) -> Result<f64> {
        check_len(self.population, dists.len())?;
        Ok(0.0)
    }
}

/// Serializable description of a mechanism, built against a model and costs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MechanismSpec {
    Genie { eps: f64 },
    Peer { eps: f64 },
    Zero,
    Tabular { table: TabularMechanism },
}

impl MechanismSpec {
    pub fn build(&self, model: &ModelParams, costs: &Costs) -> Result<Box<dyn Mechanism>> {
        Ok(match self {
            MechanismSpec::Genie { eps } => Box::new(GenieMechanism::new(*eps, *model, costs)?),
            MechanismSpec::Peer { eps } => Box::new(PeerMechanism::new(*eps, *model, costs)?),
            MechanismSpec::Zero => Box::new(ZeroMechanism {
                population: model.population,
            }),
            MechanismSpec::Tabular { table } => {
                check_len(model.population, table.population())?;
                Box::new(table.clone())
            }
        })
    }
}

/// Monte Carlo settings used when exact enumeration is infeasible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonteCarlo {
    pub samples: usize,
    pub seed: u64,
}

impl Default for MonteCarlo {
    fn default() -> Self {
        Self {
            samples: 200_000,
            seed: 0,
        }
    }
}

/// One genie-replicated entry `R̄_i(x; w)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenieEntry {
    pub value: f64,
    /// `P(X_i = x, W = w) = 0` under the profile.
    pub undefined: bool,
    /// Monte Carlo standard error; `None` when computed exactly.
    pub std_error: Option<f64>,
}

/// Genie-aided mechanism paying `R̄_i(X_i; W)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenieTable {
    /// `entries[i][digit(x)][w]`.
    pub entries: Vec<[[GenieEntry; 2]; 3]>,
}

impl GenieTable {
    pub fn entry(&self, i: usize, x: Report, w: bool) -> &GenieEntry {
        &self.entries[i][x.digit()][usize::from(w)]
    }

    pub fn exact(&self) -> bool {
        self.entries
            .iter()
            .flat_map(|e| e.iter().flatten())
            .all(|e| e.std_error.is_none())
    }
}

impl Mechanism for GenieTable {
    fn population(&self) -> usize {
        self.entries.len()
    }

    fn payment(&self, i: usize, reports: &[Report], state: bool) -> f64 {
        self.entry(i, reports[i], state).value
    }

    fn conditional_payment(&self, i: usize, own: Report, state: bool, dists: &[ReportDist]) -> Result<f64> {
        check_len(self.population(), dists.len())?;
        Ok(self.entry(i, own, state).value)
    }
}

/// Replaces `mech` by the genie-aided mechanism paying
/// `R̄_i(x; w) = E[R_i(x, X_{-i}) | W = w]` under `profile`.
///
/// The expectation does not depend on individual `i`'s own strategy, so
/// entries whose conditioning event has probability 0 keep this value and are
/// flagged. Populations beyond [`MAX_ENUMERATION`] fall back to Monte Carlo.
pub fn genie_replicate<M: Mechanism + ?Sized>(
    mech: &M,
    profile: &[Strategy],
    model: &ModelParams,
    mc: MonteCarlo,
) -> Result<GenieTable> {
    let n = mech.population();
    check_len(n, profile.len())?;
    let by_state = [profile_dists(model, profile, false), profile_dists(model, profile, true)];
    let mut entries = Vec::with_capacity(n);
    for i in 0..n {
        let mut cell = [[GenieEntry {
            value: 0.0,
            undefined: false,
            std_error: None,
        }; 2]; 3];
        for x in Report::ALL {
            for w in [false, true] {
                let dists = &by_state[usize::from(w)];
                let (value, std_error) = match mech.conditional_payment(i, x, w, dists) {
                    Ok(v) => (v, None),
                    Err(Error::EnumerationTooLarge { .. }) => {
                        let (mean, se) = sample_conditional(mech, i, x, w, dists, mc);
                        (mean, Some(se))
                    }
                    Err(e) => return Err(e),
                };
                cell[x.digit()][usize::from(w)] = GenieEntry {
                    value,
                    undefined: model.prior(w) * dists[i].prob(x) == 0.0,
                    std_error,
                };
            }
        }
        entries.push(cell);
    }
    Ok(GenieTable { entries })
}

fn sample_conditional<M: Mechanism + ?Sized>(
    mech: &M,
    i: usize,
    own: Report,
    state: bool,
    dists: &[ReportDist],
    mc: MonteCarlo,
) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(mc.seed);
    let stream = ((i as u64) << 3) | ((own.digit() as u64) << 1) | u64::from(state);
    rng.set_stream(stream);
    let mut reports = vec![Report::Abstain; dists.len()];
    reports[i] = own;
    let (mut mean, mut m2) = (0.0, 0.0);
    let samples = mc.samples.max(2);
    for t in 0..samples {
        for (j, d) in dists.iter().enumerate() {
            if j != i {
                reports[j] = sample_report(&mut rng, d);
            }
        }
        let x = mech.payment(i, &reports, state);
        let delta = x - mean;
        mean += delta / (t + 1) as f64;
        m2 += delta * (x - mean);
    }
    let var = m2 / (samples - 1) as f64;
    (mean, (var / samples as f64).sqrt())
}

/// Draws a report from `d` with one uniform variate.
pub fn sample_report<R: Rng>(rng: &mut R, d: &ReportDist) -> Report {
    let u: f64 = rng.gen();
    if u < d.one {
        Report::One
    } else if u < d.one + d.zero {
        Report::Zero
    } else {
        Report::Abstain
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CostFn;

    fn figure_model(n: usize) -> ModelParams {
        ModelParams::new(0.7, 0.8, n).unwrap()
    }

    fn linear() -> Costs {
        Costs::Uniform(CostFn::linear(1.0).unwrap())
    }

    #[test]
    fn index_round_trip() {
        for idx in 0..81 {
            assert_eq!(report_index(&report_vector(idx, 4)), idx);
        }
        let r = [Report::Zero, Report::One, Report::Abstain];
        assert_eq!(report_string(&r), "01n");
        assert_eq!(report_index(&r), 1 * 3 + 2 * 9);
    }

    #[test]
    fn genie_payment_example() {
        let g = GenieMechanism::new(1.0, figure_model(1), &linear()).unwrap();
        let e = 1f64.exp();
        let expect = (e + 1.0).powi(2) / (2.0 * e) / (0.6 * 0.7);
        assert!((g.genie_payment(0, Report::One, true) - expect).abs() < 1e-12);
        assert!((expect - 6.055).abs() < 1e-3);
        assert_eq!(g.genie_payment(0, Report::One, false), 0.0);
        assert_eq!(g.genie_payment(0, Report::Zero, true), 0.0);
        assert_eq!(g.genie_payment(0, Report::Abstain, true), 0.0);
    }

    #[test]
    fn alpha_example() {
        let e = 1f64.exp();
        let (a, b) = alpha(1.0, 0.8);
        assert!((a - (0.8 * e + 0.2) / (e + 1.0)).abs() < 1e-15);
        assert!((a + b - 1.0).abs() < 1e-16);
    }

    #[test]
    fn majority_examples() {
        use Report::*;
        assert_eq!(majority_excluding(&[One, One, Zero, Abstain], 2), Some(true));
        assert_eq!(majority_excluding(&[One, Zero, Zero, Zero], 0), Some(false));
        assert_eq!(majority_excluding(&[One, Abstain, Abstain, Abstain], 0), None);
    }

    #[test]
    fn peer_payment_examples() {
        use Report::*;
        let m = figure_model(3);
        let mech = PeerMechanism::new(1.0, m, &linear()).unwrap();
        let (a, b) = alpha(1.0, 0.8);
        let p = mech.params(3);
        assert!((p.beta - a * a).abs() < 1e-15);
        assert!((p.gamma - (1.0 - 2.0 * a * b)).abs() < 1e-15);
        let denom = (2.0 * p.beta - p.gamma) * 0.6 * 0.7 * 0.3;
        let a11 = (0.7 * (1.0 - p.beta) + 0.3 * (1.0 - (p.gamma - p.beta))) / denom;
        let mut out = [0.0; 3];
        mech.payments(&[One, One, One], false, &mut out);
        for v in out {
            assert!((v - (1.0 + 1f64.cosh()) * a11).abs() < 1e-12);
        }
        mech.payments(&[Abstain; 3], false, &mut out);
        assert_eq!(out, [0.0; 3]);
        // X_1 = 1 with both peers at 0
        assert_eq!(mech.payment(0, &[One, Zero, Zero], true), 0.0);
        // sole participant
        assert_eq!(mech.payment(0, &[One, Abstain, Abstain], true), 0.0);
    }

    #[test]
    fn peer_payments_match_single_payment() {
        let mech = PeerMechanism::new(0.7, figure_model(4), &linear()).unwrap();
        let mut out = [0.0; 4];
        for idx in 0..81 {
            let r = report_vector(idx, 4);
            mech.payments(&r, false, &mut out);
            for i in 0..4 {
                assert_eq!(out[i], mech.payment(i, &r, false));
            }
        }
    }

    #[test]
    fn peer_dp_matches_enumeration() {
        let mech = PeerMechanism::new(1.3, figure_model(5), &linear()).unwrap();
        let profile = [
            Strategy::eps_strategy(1.3),
            Strategy::new(0.2, 0.5, 0.1, 0.3).unwrap(),
            Strategy::non_participation(),
            Strategy::eps_strategy(-0.4),
            Strategy::new(0.6, 0.1, 0.6, 0.1).unwrap(),
        ];
        for w in [false, true] {
            let dists = profile_dists(mech.model(), &profile, w);
            for i in 0..5 {
                for x in Report::ALL {
                    let dp = mech.conditional_payment(i, x, w, &dists).unwrap();
                    let en = enumerate_conditional(&mech, i, x, w, &dists).unwrap();
                    assert!((dp - en).abs() < 1e-12, "i={i} x={x} dp={dp} en={en}");
                }
            }
        }
    }

    #[test]
    fn flip_is_involution_and_fixes_constants() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let t = TabularMechanism::random(3, &mut rng, 10.0, true).unwrap();
        assert_eq!(flip_mechanism(&flip_mechanism(&t, 1).unwrap(), 1).unwrap(), t);
        let c = TabularMechanism::constant(3, 2.5).unwrap();
        assert_eq!(flip_mechanism(&c, 0).unwrap(), c);
        assert!(flip_mechanism(&c, 3).is_err());
    }

    #[test]
    fn tabular_rejects_negative() {
        let mut p = vec![vec![1.0; 2]; 9];
        p[4][1] = -0.5;
        assert!(TabularMechanism::new(2, p).is_err());
        assert!(TabularMechanism::new(2, vec![vec![1.0; 2]; 8]).is_err());
    }

    #[test]
    fn tabular_json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let t = TabularMechanism::random(2, &mut rng, 5.0, false).unwrap();
        let json = serde_json::to_string(&t).unwrap();
        assert!(json.contains("\"1n\""));
        let back: TabularMechanism = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn replicate_single_individual_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = TabularMechanism::random(1, &mut rng, 4.0, true).unwrap();
        let m = figure_model(1);
        let g = genie_replicate(&t, &[Strategy::eps_strategy(0.5)], &m, MonteCarlo::default()).unwrap();
        for x in Report::ALL {
            for w in [false, true] {
                assert_eq!(g.entry(0, x, w).value, t.entry(&[x])[0]);
            }
        }
    }

    #[test]
    fn replicate_constant() {
        let c = TabularMechanism::constant(3, 1.75).unwrap();
        let profile = [Strategy::non_participation(), Strategy::eps_strategy(1.0), Strategy::eps_strategy(2.0)];
        let g = genie_replicate(&c, &profile, &figure_model(3), MonteCarlo::default()).unwrap();
        for i in 0..3 {
            for x in Report::ALL {
                for w in [false, true] {
                    assert!((g.entry(i, x, w).value - 1.75).abs() < 1e-14);
                }
            }
        }
        // individual 0 never reports, so its 1 and 0 entries are flagged
        assert!(g.entry(0, Report::One, true).undefined);
        assert!(!g.entry(0, Report::Abstain, true).undefined);
        assert!(g.exact());
    }

    #[test]
    fn peer_params_reject_small_n() {
        assert!(peer_params(1.0, &figure_model(2), 1).is_err());
        assert!(peer_params(0.0, &figure_model(2), 2).is_err());
        assert!(PeerMechanism::new(1.0, figure_model(1), &linear()).is_err());
    }
}
