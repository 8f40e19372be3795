//! Seeded Monte Carlo of the full game and MAP testing of the state.
//!
//! Trial `t` draws from `ChaCha8Rng` seeded with the configuration seed on
//! stream `t`, so every trial is reproducible on its own. Trials are grouped
//! in fixed blocks whose statistics are merged in block order, which makes
//! results independent of the number of threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{chernoff_information, error_bound};
use crate::error::{Error, Result};
use crate::mechanisms::{alpha, profile_dists, sample_report, Mechanism, MechanismSpec};
use crate::model::{Costs, Disclosure, ModelParams, Report, Strategy, STRATEGY_TOL};
use crate::numeric::binomial_pmf;

const BLOCK: u64 = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub model: ModelParams,
    pub profile: Vec<Strategy>,
    pub mechanism: MechanismSpec,
    pub costs: Costs,
    pub trials: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub trials: u64,
    pub mean_payment: Vec<f64>,
    pub std_error: Vec<f64>,
    pub map_errors: u64,
    pub map_error_rate: f64,
    pub map_error_se: f64,
    /// 95% Wilson interval for the MAP error rate.
    pub map_error_ci: (f64, f64),
    /// `exp(-Σ D(ε_i))`; `None` when some strategy is neither an
    /// eps-strategy nor uninformative.
    pub bound: Option<f64>,
}

/// One simulated trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub index: u64,
    pub state: bool,
    pub reports: Vec<Report>,
    pub payments: Vec<f64>,
    pub decision: bool,
}

/// A validated configuration with its mechanism built and likelihoods cached.
pub struct Simulator {
    cfg: SimConfig,
    mechanism: Box<dyn Mechanism>,
    /// `ln P(X_i = x | W = w)` as `[i][digit(x)][w]`.
    log_lik: Vec<[[f64; 2]; 3]>,
}

impl Simulator {
    pub fn new(cfg: SimConfig) -> Result<Self> {
        if cfg.trials == 0 {
            return Err(Error::invalid("trials", "need at least one trial"));
        }
        if cfg.profile.len() != cfg.model.population {
            return Err(Error::PopulationMismatch {
                expected: cfg.model.population,
                actual: cfg.profile.len(),
            });
        }
        let mechanism = cfg.mechanism.build(&cfg.model, &cfg.costs)?;
        let log_lik = likelihoods(&cfg.model, &cfg.profile);
        Ok(Self {
            cfg,
            mechanism,
            log_lik,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn trial(&self, index: u64) -> Trial {
        let n = self.cfg.model.population;
        let mut reports = vec![Report::Abstain; n];
        let mut payments = vec![0.0; n];
        let (state, decision) = self.trial_into(index, &mut reports, &mut payments);
        Trial {
            index,
            state,
            reports,
            payments,
            decision,
        }
    }

    fn trial_into(&self, index: u64, reports: &mut [Report], payments: &mut [f64]) -> (bool, bool) {
        let m = &self.cfg.model;
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(index);
        let state = rng.gen::<f64>() < m.prior_one;
        for (x, s) in reports.iter_mut().zip(&self.cfg.profile) {
            let signal = if rng.gen::<f64>() < m.quality { state } else { !state };
            *x = sample_report(&mut rng, &s.conditional(signal));
        }
        self.mechanism.payments(reports, state, payments);
        (state, map_from_likelihoods(reports, &self.log_lik, m))
    }

    pub fn run(&self) -> SimResult {
        let n = self.cfg.model.population;
        let trials = self.cfg.trials;
        let blocks = trials.div_ceil(BLOCK);
        let stats: Vec<Block> = (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut block = Block::new(n);
                let mut reports = vec![Report::Abstain; n];
                let mut payments = vec![0.0; n];
                for t in b * BLOCK..((b + 1) * BLOCK).min(trials) {
                    let (state, decision) = self.trial_into(t, &mut reports, &mut payments);
                    block.push(&payments, state != decision);
                }
                block
            })
            .collect();
        let mut total = Block::new(n);
        for b in &stats {
            total.merge(b);
        }
        let count = total.count as f64;
        let std_error = total
            .m2
            .iter()
            .map(|m2| if total.count > 1 { (m2 / (count - 1.0) / count).sqrt() } else { 0.0 })
            .collect();
        let rate = total.errors as f64 / count;
        SimResult {
            trials,
            mean_payment: total.mean,
            std_error,
            map_errors: total.errors,
            map_error_rate: rate,
            map_error_se: (rate * (1.0 - rate) / count).sqrt(),
            map_error_ci: wilson(total.errors, total.count, 1.959_963_984_540_054),
            bound: profile_bound(&self.cfg.profile, &self.cfg.model).ok(),
        }
    }
}

/// Running per-individual mean and sum of squared deviations.
#[derive(Debug, Clone)]
struct Block {
    count: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
    errors: u64,
}

impl Block {
    fn new(n: usize) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; n],
            m2: vec![0.0; n],
            errors: 0,
        }
    }

    fn push(&mut self, x: &[f64], error: bool) {
        self.count += 1;
        let k = self.count as f64;
        for ((mean, m2), &v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let delta = v - *mean;
            *mean += delta / k;
            *m2 += delta * (v - *mean);
        }
        self.errors += u64::from(error);
    }

    fn merge(&mut self, other: &Block) {
        if other.count == 0 {
            return;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        for j in 0..self.mean.len() {
            let delta = other.mean[j] - self.mean[j];
            self.mean[j] += delta * nb / n;
            self.m2[j] += other.m2[j] + delta * delta * na * nb / n;
        }
        self.count += other.count;
        self.errors += other.errors;
    }
}

fn wilson(successes: u64, n: u64, z: f64) -> (f64, f64) {
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

pub fn run_simulation(cfg: SimConfig) -> Result<SimResult> {
    Ok(Simulator::new(cfg)?.run())
}

fn likelihoods(m: &ModelParams, profile: &[Strategy]) -> Vec<[[f64; 2]; 3]> {
    let by_state = [profile_dists(m, profile, false), profile_dists(m, profile, true)];
    (0..profile.len())
        .map(|i| {
            let mut cell = [[0.0; 2]; 3];
            for x in Report::ALL {
                for w in 0..2 {
                    cell[x.digit()][w] = by_state[w][i].prob(x).ln();
                }
            }
            cell
        })
        .collect()
}

fn map_from_likelihoods(reports: &[Report], log_lik: &[[[f64; 2]; 3]], m: &ModelParams) -> bool {
    let mut llr = m.prior(true).ln() - m.prior(false).ln();
    for (x, cell) in reports.iter().zip(log_lik) {
        let [l0, l1] = cell[x.digit()];
        // a report impossible under both states carries no evidence
        if l0 == f64::NEG_INFINITY && l1 == f64::NEG_INFINITY {
            continue;
        }
        llr += l1 - l0;
    }
    llr >= 0.0
}

/// MAP estimate of `W` from the reports; ties go to 1.
pub fn map_decide(reports: &[Report], profile: &[Strategy], m: &ModelParams) -> Result<bool> {
    if reports.len() != profile.len() {
        return Err(Error::PopulationMismatch {
            expected: profile.len(),
            actual: reports.len(),
        });
    }
    Ok(map_from_likelihoods(reports, &likelihoods(m, profile), m))
}

/// `exp(-Σ D(ε_i))` for a profile of eps-strategies and uninformative ones.
pub fn profile_bound(profile: &[Strategy], m: &ModelParams) -> Result<f64> {
    let eps = profile
        .iter()
        .enumerate()
        .map(|(i, s)| match s.disclosure(STRATEGY_TOL) {
            Some(Disclosure::Epsilon(e)) => Ok(Some(e)),
            Some(Disclosure::Uninformative) => Ok(None),
            None => Err(Error::NotEpsilonProfile(i)),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(error_bound(&eps, m))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorVsBound {
    pub rate: f64,
    pub std_error: f64,
    pub ci: (f64, f64),
    pub bound: f64,
    /// `rate - 3 std_error <= bound`.
    pub holds: bool,
}

impl ErrorVsBound {
    pub fn check(&self) -> Result<()> {
        if self.holds {
            Ok(())
        } else {
            Err(Error::Assertion(format!(
                "MAP error {} (se {}) exceeds bound {}",
                self.rate, self.std_error, self.bound
            )))
        }
    }
}

pub fn error_vs_bound(cfg: SimConfig) -> Result<ErrorVsBound> {
    let bound = profile_bound(&cfg.profile, &cfg.model)?;
    let r = run_simulation(cfg)?;
    Ok(ErrorVsBound {
        rate: r.map_error_rate,
        std_error: r.map_error_se,
        ci: r.map_error_ci,
        bound,
        holds: r.map_error_rate - 3.0 * r.map_error_se <= bound,
    })
}

/// Exact MAP error when `n` individuals all play the eps-strategy.
pub fn exact_map_error_iid(eps: f64, n: usize, m: &ModelParams) -> f64 {
    let (a, b) = alpha(eps, m.quality);
    let (p1, p0) = (m.prior(true), m.prior(false));
    let n = n as u64;
    (0..=n)
        .map(|k| {
            let l1 = p1 * binomial_pmf(n, k, a, b);
            let l0 = p0 * binomial_pmf(n, k, b, a);
            if l1 >= l0 {
                l0
            } else {
                l1
            }
        })
        .sum()
}

/// `-ln(p_e) / n` for `n` eps-strategies, next to `D(ε)`.
pub fn error_exponent(eps: f64, n: usize, m: &ModelParams) -> (f64, f64) {
    (-exact_map_error_iid(eps, n, m).ln() / n as f64, chernoff_information(eps, m))
}
