//! Value-of-privacy bounds, the Chernoff-information accuracy metric and the
//! payment–accuracy optimizer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanisms::{alpha, payment_scale, peer_params, PeerParams};
use crate::model::{CostFn, ModelParams};
use crate::numeric::{golden_section_max, log_space};

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("eps", format!("need 0 < eps < inf, got {eps}")))
    }
}

/// Lower bound on the expected payment needed to elicit privacy level `eps`:
/// `g'(ε)(e^ε+1)/e^ε · (θ(e^ε+1)/(2θ-1) - 1)`.
pub fn v_lb(eps: f64, m: &ModelParams, g: &CostFn) -> Result<f64> {
    check_eps(eps)?;
    let (a, _) = alpha(eps, m.quality);
    Ok(payment_scale(g.derivative(eps), eps) * 2.0 * a / (2.0 * m.quality - 1.0))
}

/// Expected payment to one individual at the all-eps profile of the peer
/// mechanism with `n` individuals.
pub fn v_ub(eps: f64, n: usize, m: &ModelParams, g: &CostFn) -> Result<f64> {
    let p = peer_params(eps, m, n)?;
    let (a, b) = alpha(eps, m.quality);
    let (p1, p0) = (m.prior(true), m.prior(false));
    let expected_a = p1 * (a * p.beta * p.a11 + b * p.u * p.a00) + p0 * (b * p.v * p.a11 + a * (1.0 - p.v) * p.a00);
    Ok(payment_scale(g.derivative(eps), eps) * expected_a)
}

/// `v_ub - v_lb`, evaluated as a sum of nonnegative terms so that it stays
/// accurate when the gap is far below `v_lb`.
pub fn gap(eps: f64, n: usize, m: &ModelParams, g: &CostFn) -> Result<f64> {
    let p = peer_params(eps, m, n)?;
    Ok(gap_from_params(eps, &p, m, g))
}

fn gap_from_params(eps: f64, p: &PeerParams, m: &ModelParams, g: &CostFn) -> f64 {
    let (p1, p0) = (m.prior(true), m.prior(false));
    let (u, v) = (p.u, p.v);
    let num = p1 * p1 * u * (1.0 - u) + p0 * p0 * v * (1.0 - v) + 2.0 * p0 * p1 * u * v;
    let den = (2.0 * m.quality - 1.0) * p1 * p0 * p.delta;
    payment_scale(g.derivative(eps), eps) * num / den
}

/// The function `h(β)` for fixed `γ`, and `t = (P1² + P0²)/(P1 P0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpperBoundInternals {
    pub beta: f64,
    pub gamma: f64,
    pub h: f64,
    pub t: f64,
    /// `2θ/(2θ-1)`, the value `h` approaches as `β, γ -> 1`.
    pub h_floor: f64,
}

/// `h(β)` for a fixed `γ`.
pub fn h(beta: f64, gamma: f64, m: &ModelParams) -> f64 {
    let theta = m.quality;
    let ratio = m.prior(true) / m.prior(false);
    let mixed = gamma - beta;
    let poly = 2.0 * beta * beta
        + (4.0 * theta - 2.0 - 2.0 * gamma) * beta
        + 2.0 * (1.0 - theta) * gamma
        + beta * (1.0 - beta) * ratio
        + mixed * (1.0 - mixed) / ratio;
    poly / ((2.0 * theta - 1.0) * (2.0 * beta - gamma))
}

pub fn upper_bound_internals(eps: f64, n: usize, m: &ModelParams) -> Result<UpperBoundInternals> {
    let p = peer_params(eps, m, n)?;
    let (p1, p0) = (m.prior(true), m.prior(false));
    Ok(UpperBoundInternals {
        beta: p.beta,
        gamma: p.gamma,
        h: h(p.beta, p.gamma, m),
        t: (p1 * p1 + p0 * p0) / (p1 * p0),
        h_floor: 2.0 * m.quality / (2.0 * m.quality - 1.0),
    })
}

/// Chernoff information between the report laws of an eps-strategy under
/// the two states: `½ ln((e^ε+1)² / (4(θe^ε+1-θ)((1-θ)e^ε+θ)))`.
///
/// Evaluated as `-½ ln(1 - ((2θ-1) tanh(ε/2))²)`. Symmetric in `eps`.
pub fn chernoff_information(eps: f64, m: &ModelParams) -> f64 {
    let s = (2.0 * m.quality - 1.0) * (0.5 * eps).tanh();
    -0.5 * (-(s * s)).ln_1p()
}

/// `exp(-Σ D(ε_i)) <= tau`, with `None` standing for nonparticipation.
pub fn feasibility_check(eps: &[Option<f64>], tau: f64, m: &ModelParams) -> bool {
    error_bound(eps, m) <= tau
}

/// `exp(-Σ D(ε_i))`.
pub fn error_bound(eps: &[Option<f64>], m: &ModelParams) -> f64 {
    let total: f64 = eps.iter().flatten().map(|e| chernoff_information(e.abs(), m)).sum();
    (-total).exp()
}

/// Search bracket and grid for the ratio maximizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsSearch {
    pub lo: f64,
    pub hi: f64,
    pub grid_points: usize,
}

impl Default for EpsSearch {
    fn default() -> Self {
        Self {
            lo: 1e-4,
            hi: 20.0,
            grid_points: 4000,
        }
    }
}

/// Result of maximizing `r(ε) = D(ε) / V_LB(ε)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsTilde {
    pub eps: f64,
    pub ratio: f64,
    /// Index of the leftmost grid point within `1e-10` of the grid maximum.
    pub grid_index: usize,
    /// Other grid points also attain the maximum to within `1e-10`; only
    /// the leftmost is kept.
    pub grid_tie: bool,
}

/// Ties in `r` closer than this are resolved to the smaller `eps`.
const RATIO_TIE: f64 = 1e-10;

pub fn ratio(eps: f64, m: &ModelParams, g: &CostFn) -> Result<f64> {
    Ok(chernoff_information(eps, m) / v_lb(eps, m, g)?)
}

/// Smallest maximizer of `D(ε)/V_LB(ε)`: log grid, then golden-section
/// refinement inside the neighbouring grid cells.
pub fn eps_tilde(m: &ModelParams, g: &CostFn, cfg: &EpsSearch) -> Result<EpsTilde> {
    if !(cfg.lo > 0.0 && cfg.hi > cfg.lo && cfg.hi.is_finite()) {
        return Err(Error::invalid("search", "need 0 < lo < hi < inf"));
    }
    if cfg.grid_points < 2000 {
        return Err(Error::invalid("search.grid_points", "need at least 2000 grid points"));
    }
    let grid = log_space(cfg.lo, cfg.hi, cfg.grid_points);
    let values = grid.iter().map(|&e| ratio(e, m, g)).collect::<Result<Vec<f64>>>()?;
    let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bottom = values.iter().copied().fold(f64::INFINITY, f64::min);
    if !(top - bottom > RATIO_TIE) {
        return Err(Error::NoUniqueMaximizer("ratio is flat over the search bracket".into()));
    }
    let k = values.iter().position(|&v| v >= top - RATIO_TIE).unwrap_or(0);
    let grid_tie = values.iter().skip(k + 1).any(|&v| v >= top - RATIO_TIE);
    if k == 0 || k == grid.len() - 1 {
        return Err(Error::NoUniqueMaximizer(format!(
            "grid maximum at the bracket endpoint eps = {}",
            grid[k]
        )));
    }
    let r = |e: f64| ratio(e, m, g).unwrap_or(f64::NEG_INFINITY);
    let (eps, refined) = golden_section_max(r, grid[k - 1], grid[k + 1], 1e-13 * grid[k]);
    let (eps, value) = if refined >= values[k] { (eps, refined) } else { (grid[k], values[k]) };
    Ok(EpsTilde {
        eps,
        ratio: value,
        grid_index: k,
        grid_tie,
    })
}

/// Bracket on the optimal total payment for accuracy target `tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PaymentAccuracy {
    pub tau: f64,
    pub eps_tilde: f64,
    pub n_tilde: usize,
    /// `(Ñ - 1) V_LB(ε̃)`.
    pub lower: f64,
    /// Cheapest total payment of a peer mechanism at `ε̃` with at least `Ñ`
    /// individuals (and at least two).
    pub upper: f64,
    /// Population attaining `upper`.
    pub upper_n: usize,
    /// Total payment of the peer mechanism with exactly `max(Ñ, 2)`
    /// individuals.
    pub designed_total: f64,
    /// `D(ε̃)`.
    pub chernoff: f64,
    pub v_lb: f64,
    /// `v_ub(ε̃, max(Ñ, 2))`.
    pub v_ub: f64,
    /// `designed_total - Ñ V_LB(ε̃)`.
    pub residual: f64,
}

pub fn payment_accuracy_bounds(tau: f64, m: &ModelParams, g: &CostFn, search: &EpsSearch) -> Result<PaymentAccuracy> {
    let et = eps_tilde(m, g, search)?;
    payment_accuracy_at(tau, m, g, &et)
}

/// As [`payment_accuracy_bounds`] with a precomputed `ε̃`.
pub fn payment_accuracy_at(tau: f64, m: &ModelParams, g: &CostFn, et: &EpsTilde) -> Result<PaymentAccuracy> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::invalid("tau", format!("need 0 < tau < 1, got {tau}")));
    }
    let eps = et.eps;
    let d = chernoff_information(eps, m);
    let n_tilde = ((1.0 / tau).ln() / d).ceil().max(1.0) as usize;
    if (-(n_tilde as f64) * d).exp() > tau * (1.0 + 1e-12) {
        return Err(Error::Assertion(format!("{n_tilde} individuals at eps {eps} miss tau {tau}")));
    }
    let designed_n = n_tilde.max(2);
    let lb = v_lb(eps, m, g)?;
    let ub = v_ub(eps, designed_n, m, g)?;
    let designed_total = designed_n as f64 * ub;
    // every larger population is feasible too; N v_ub(N) >= N V_LB bounds the search
    let (mut upper, mut upper_n) = (designed_total, designed_n);
    let mut n = designed_n + 1;
    while (n as f64) * lb < upper {
        let total = n as f64 * v_ub(eps, n, m, g)?;
        if total < upper {
            upper = total;
            upper_n = n;
        }
        n += 1;
    }
    Ok(PaymentAccuracy {
        tau,
        eps_tilde: eps,
        n_tilde,
        lower: (n_tilde - 1) as f64 * lb,
        upper,
        upper_n,
        designed_total,
        chernoff: d,
        v_lb: lb,
        v_ub: ub,
        residual: designed_total - n_tilde as f64 * lb,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> ModelParams {
        ModelParams::new(0.7, 0.8, 2).unwrap()
    }

    fn linear() -> CostFn {
        CostFn::linear(1.0).unwrap()
    }

    #[test]
    fn v_lb_examples() {
        let m = model();
        let e = 1f64.exp();
        let direct = (e + 1.0) / e * (0.8 * (e + 1.0) / 0.6 - 1.0);
        let got = v_lb(1.0, &m, &linear()).unwrap();
        assert!((got - direct).abs() < 1e-13);
        assert!((got - 5.4138).abs() < 1e-3);
        let small = v_lb(1e-8, &m, &linear()).unwrap();
        assert!((small - 10.0 / 3.0).abs() < 1e-7);
        assert!(v_lb(0.0, &m, &linear()).is_err());
        assert!(v_lb(-1.0, &m, &linear()).is_err());
    }

    #[test]
    fn chernoff_examples() {
        let m = model();
        assert_eq!(chernoff_information(0.0, &m), 0.0);
        let e = 1f64.exp();
        let direct = 0.5 * ((e + 1.0).powi(2) / (4.0 * (0.8 * e + 0.2) * (0.2 * e + 0.8))).ln();
        let got = chernoff_information(1.0, &m);
        assert!((got - direct).abs() < 1e-15);
        assert!((got - 0.0400).abs() < 1e-4);
        assert_eq!(chernoff_information(-1.0, &m), got);
    }

    #[test]
    fn gap_matches_difference() {
        let m = model();
        for n in [2, 3, 4, 7, 12] {
            let diff = v_ub(1.0, n, &m, &linear()).unwrap() - v_lb(1.0, &m, &linear()).unwrap();
            let g = gap(1.0, n, &m, &linear()).unwrap();
            assert!((diff - g).abs() < 1e-12 * (1.0 + diff.abs()), "n={n}: {diff} vs {g}");
        }
    }

    #[test]
    fn h_form_matches_direct() {
        let m = model();
        for n in [2, 3, 6, 11] {
            for eps in [0.3, 1.0, 2.5] {
                let hi = upper_bound_internals(eps, n, &m).unwrap();
                let via_h = v_lb(eps, &m, &linear()).unwrap() + payment_scale(1.0, eps) * (hi.h - hi.h_floor);
                let direct = v_ub(eps, n, &m, &linear()).unwrap();
                assert!((via_h - direct).abs() < 1e-10 * direct, "n={n} eps={eps}");
                assert!(hi.t >= 2.0);
                assert!(hi.h >= hi.h_floor);
            }
        }
    }

    #[test]
    fn feasibility_examples() {
        let m = model();
        assert!(!feasibility_check(&[], 0.5, &m));
        let mixed = [Some(1.0), None, Some(-1.0)];
        let pair = [Some(1.0), Some(1.0)];
        assert_eq!(error_bound(&mixed, &m), error_bound(&pair, &m));
        let et = eps_tilde(&m, &linear(), &EpsSearch::default()).unwrap();
        for tau in [0.4, 0.05, 0.001] {
            let pa = payment_accuracy_at(tau, &m, &linear(), &et).unwrap();
            assert!(feasibility_check(&vec![Some(pa.eps_tilde); pa.n_tilde], tau, &m));
        }
    }

    #[test]
    fn eps_tilde_scale_invariant() {
        let m = model();
        let a = eps_tilde(&m, &linear(), &EpsSearch::default()).unwrap();
        let b = eps_tilde(&m, &CostFn::linear(7.5).unwrap(), &EpsSearch::default()).unwrap();
        assert!((a.eps - b.eps).abs() < 1e-6 * a.eps);
        let q = eps_tilde(&m, &CostFn::quadratic(1.0).unwrap(), &EpsSearch::default()).unwrap();
        assert!(q.eps > 0.0);
    }

    #[test]
    fn tau_near_one() {
        let m = model();
        let et = eps_tilde(&m, &linear(), &EpsSearch::default()).unwrap();
        let d = chernoff_information(et.eps, &m);
        let tau = (-0.5 * d).exp();
        let pa = payment_accuracy_at(tau, &m, &linear(), &et).unwrap();
        assert_eq!(pa.n_tilde, 1);
        assert_eq!(pa.lower, 0.0);
        assert!(payment_accuracy_at(1.0, &m, &linear(), &et).is_err());
        assert!(payment_accuracy_at(0.0, &m, &linear(), &et).is_err());
    }
}
