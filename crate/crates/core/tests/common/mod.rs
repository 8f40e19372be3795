#![allow(dead_code)]

use privtrade::mechanisms::Mechanism;
use privtrade::model::{CostFn, ModelParams, Report, Strategy};
use rand::Rng;

/// Privacy level by enumerating every report event and both signal orders.
pub fn subset_privacy_level(s: &Strategy) -> f64 {
    let atoms = |p: f64, q: f64| [p, q, (1.0 - p) - q];
    let one = atoms(s.p1, s.q1);
    let zero = atoms(s.p0, s.q0);
    let mut best = 0.0_f64;
    for mask in 1..7u32 {
        let mut a = 0.0;
        let mut b = 0.0;
        for k in 0..3 {
            if mask & (1 << k) != 0 {
                a += one[k];
                b += zero[k];
            }
        }
        for (num, den) in [(a, b), (b, a)] {
            let r = if num == 0.0 && den == 0.0 {
                0.0
            } else if den == 0.0 {
                f64::INFINITY
            } else if num == 0.0 {
                f64::NEG_INFINITY
            } else {
                num.ln() - den.ln()
            };
            best = best.max(r);
        }
    }
    best
}

/// `P(X = x | S = s)` read off the four strategy probabilities.
pub fn report_prob(s: &Strategy, signal: bool, x: Report) -> f64 {
    let (p, q) = if signal { (s.p1, s.q1) } else { (s.p0, s.q0) };
    match x {
        Report::One => p,
        Report::Zero => q,
        Report::Abstain => (1.0 - p) - q,
    }
}

/// Expected payment to `i` by summing over the state, all signals and all
/// report vectors.
pub fn direct_payment<M: Mechanism + ?Sized>(mech: &M, m: &ModelParams, profile: &[Strategy], i: usize) -> f64 {
    let n = profile.len();
    let mut total = 0.0;
    for w in [false, true] {
        let pw = if w { m.prior_one } else { 1.0 - m.prior_one };
        for sig in 0..(1usize << n) {
            let signals: Vec<bool> = (0..n).map(|j| sig & (1 << j) != 0).collect();
            let ps: f64 = signals
                .iter()
                .map(|&s| if s == w { m.quality } else { 1.0 - m.quality })
                .product();
            for code in 0..3usize.pow(n as u32) {
                let mut c = code;
                let mut reports = Vec::with_capacity(n);
                let mut px = 1.0;
                for j in 0..n {
                    let x = [Report::Zero, Report::One, Report::Abstain][c % 3];
                    c /= 3;
                    px *= report_prob(&profile[j], signals[j], x);
                    reports.push(x);
                }
                if px > 0.0 {
                    total += pw * ps * px * mech.payment(i, &reports, w);
                }
            }
        }
    }
    total
}

pub fn direct_utility<M: Mechanism + ?Sized>(
    mech: &M,
    m: &ModelParams,
    profile: &[Strategy],
    i: usize,
    g: &CostFn,
) -> f64 {
    direct_payment(mech, m, profile, i) - g.value(subset_privacy_level(&profile[i]))
}

/// `sup_λ -ln Σ_x P1(x)^λ P0(x)^(1-λ)` for the eps-strategy report laws,
/// by a dense grid followed by ternary refinement.
pub fn numeric_chernoff(eps: f64, theta: f64) -> f64 {
    let e = eps.exp();
    let p1 = theta * e / (e + 1.0) + (1.0 - theta) / (e + 1.0);
    let p0 = (1.0 - theta) * e / (e + 1.0) + theta / (e + 1.0);
    let f = |l: f64| -(p1.powf(l) * p0.powf(1.0 - l) + (1.0 - p1).powf(l) * (1.0 - p0).powf(1.0 - l)).ln();
    let n = 10_000;
    let mut best = (0.0, f64::NEG_INFINITY);
    for k in 1..n {
        let l = k as f64 / n as f64;
        let v = f(l);
        if v > best.1 {
            best = (l, v);
        }
    }
    let (mut a, mut b) = (best.0 - 1.0 / n as f64, best.0 + 1.0 / n as f64);
    for _ in 0..200 {
        let c = a + (b - a) / 3.0;
        let d = b - (b - a) / 3.0;
        if f(c) < f(d) {
            a = c;
        } else {
            b = d;
        }
    }
    f(0.5 * (a + b)).max(best.1)
}

pub fn random_strategy<R: Rng>(rng: &mut R) -> Strategy {
    let half = |rng: &mut R| -> (f64, f64) {
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
                let q: f64 = rng.gen::<f64>() * (1.0 - p);
                (p, q)
            }
        }
    };
    let (p1, q1) = half(rng);
    let (p0, q0) = half(rng);
    Strategy::new(p1, q1, p0, q0).unwrap()
}

pub fn random_model<R: Rng>(rng: &mut R, n: usize) -> ModelParams {
    ModelParams::new(rng.gen_range(0.05..0.95), rng.gen_range(0.55..0.97), n).unwrap()
}
