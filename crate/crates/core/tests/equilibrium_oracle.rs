mod common;

use common::{direct_payment, direct_utility, random_model, random_strategy};
use privtrade::bounds::v_lb;
use privtrade::equilibrium::{
    best_response, brute_force_best_response, utility, utility_coefficients, verify_nash, Game, NASH_TOL,
};
use privtrade::mechanisms::{
    flip_mechanism, genie_replicate, GenieMechanism, Mechanism, MonteCarlo, PeerMechanism, TabularMechanism,
};
use privtrade::model::{Classification, CostFn, ModelParams, Report, Strategy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn linear() -> CostFn {
    CostFn::linear(1.0).unwrap()
}

fn with_own(profile: &[Strategy], i: usize, s: Strategy) -> Vec<Strategy> {
    let mut p = profile.to_vec();
    p[i] = s;
    p
}

#[test]
fn coefficients_match_direct_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in 1..=4 {
        for _ in 0..10 {
            let m = random_model(&mut rng, n);
            let pay_abstainers = rng.gen_bool(0.5);
            let t = TabularMechanism::random(n, &mut rng, 10.0, pay_abstainers).unwrap();
            let profile: Vec<Strategy> = (0..n).map(|_| random_strategy(&mut rng)).collect();
            let g = CostFn::quadratic(rng.gen_range(0.1..2.0)).unwrap();
            let game = Game::new(m, &t, g.clone().into()).unwrap();
            let i = rng.gen_range(0..n);
            for _ in 0..5 {
                let s = random_strategy(&mut rng);
                let via_coef = utility(&game, &profile, i, &s).unwrap();
                let direct = direct_utility(&t, &m, &with_own(&profile, i, s), i, &g);
                if direct.is_finite() {
                    assert!((via_coef - direct).abs() < 1e-12, "n={n}: {via_coef} vs {direct}");
                } else {
                    assert_eq!(via_coef, direct);
                }
            }
        }
    }
}

#[test]
fn coefficients_nonzero_pattern() {
    // K1, K0 vanish together, as do L1, L0: every signal has positive probability
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..50 {
        let m = random_model(&mut rng, 2);
        let t = TabularMechanism::random(2, &mut rng, 3.0, false).unwrap();
        let profile = vec![random_strategy(&mut rng), random_strategy(&mut rng)];
        let game = Game::new(m, &t, linear().into()).unwrap();
        let c = utility_coefficients(&game, &profile, 0).unwrap();
        assert_eq!(c.k1 == 0.0, c.k0 == 0.0);
        assert_eq!(c.l1 == 0.0, c.l0 == 0.0);
        assert!(c.k1 >= 0.0 && c.k0 >= 0.0 && c.l1 >= 0.0 && c.l0 >= 0.0);
    }
}

#[test]
fn genie_payment_equals_lower_bound() {
    for eps in [0.2, 1.0, 3.0] {
        for theta in [0.6, 0.9] {
            let m = ModelParams::new(0.35, theta, 2).unwrap();
            let g = GenieMechanism::new(eps, m, &linear().into()).unwrap();
            let profile = vec![Strategy::eps_strategy(eps); 2];
            let paid = direct_payment(&g, &m, &profile, 0);
            assert!((paid - v_lb(eps, &m, &linear()).unwrap()).abs() < 1e-12);
            let game = Game::new(m, &g, linear().into()).unwrap();
            let u = utility(&game, &profile, 0, &profile[0]).unwrap();
            assert!((u - (paid - eps)).abs() < 1e-12);
        }
    }
}

#[test]
fn symmetric_utility_concave_and_stationary() {
    for n in [2, 3, 5, 10] {
        for eps in [0.3, 1.0, 2.5] {
            for g in [linear(), CostFn::quadratic(0.7).unwrap()] {
                let m = ModelParams::new(0.7, 0.8, n).unwrap();
                let mech = PeerMechanism::new(eps, m, &g.clone().into()).unwrap();
                let game = Game::new(m, &mech, g.clone().into()).unwrap();
                let profile = vec![Strategy::eps_strategy(eps); n];
                let c = utility_coefficients(&game, &profile, 0).unwrap();
                assert!(c.kbar1() > c.kbar0());
                let h = 1e-3;
                for k in 1..4000 {
                    let x = k as f64 * h;
                    let second = c.symmetric_utility(x + h, &g) - 2.0 * c.symmetric_utility(x, &g)
                        + c.symmetric_utility(x - h, &g);
                    assert!(second <= 1e-9, "n={n} eps={eps} x={x}: {second}");
                }
                let e = eps.exp();
                let slope = (c.kbar1() - c.kbar0()) * e / ((e + 1.0) * (e + 1.0)) - g.derivative(eps);
                assert!(slope.abs() < 1e-8 * (1.0 + g.derivative(eps)), "n={n} eps={eps}: {slope}");
            }
        }
    }
}

#[test]
fn best_response_dominates_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..15 {
        let m = random_model(&mut rng, 2);
        let pay_abstainers = rng.gen_bool(0.3);
        let t = TabularMechanism::random(2, &mut rng, 10.0, pay_abstainers).unwrap();
        let profile = vec![random_strategy(&mut rng), random_strategy(&mut rng)];
        let game = Game::new(m, &t, linear().into()).unwrap();
        let br = best_response(&game, &profile, 0).unwrap();
        let grid = brute_force_best_response(&game, &profile, 0, 21).unwrap();
        assert!(grid.utility <= br.utility + 1e-9, "{} > {}", grid.utility, br.utility);
    }
}

#[test]
fn heterogeneous_costs_keep_equilibrium() {
    let m = ModelParams::new(0.4, 0.75, 4).unwrap();
    let costs = privtrade::model::Costs::PerIndividual(vec![
        linear(),
        CostFn::linear(2.5).unwrap(),
        CostFn::quadratic(0.5).unwrap(),
        CostFn::table(vec![(0.0, 0.0), (1.0, 0.5), (3.0, 4.0)], None).unwrap(),
    ]);
    let eps = 0.9;
    let mech = PeerMechanism::new(eps, m, &costs).unwrap();
    let game = Game::new(m, &mech, costs).unwrap();
    let report = verify_nash(&game, &vec![Strategy::eps_strategy(eps); 4], NASH_TOL).unwrap();
    assert!(report.is_nash, "{report:?}");
    for r in &report.individuals {
        assert!(r.deviation_gain >= -NASH_TOL);
        assert_eq!(r.best_response.family, Classification::Symmetric);
    }
}

#[test]
fn peer_conditional_matches_direct_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let m = ModelParams::new(0.6, 0.85, 4).unwrap();
    let mech = PeerMechanism::new(1.2, m, &linear().into()).unwrap();
    let profile: Vec<Strategy> = (0..4).map(|_| random_strategy(&mut rng)).collect();
    let game = Game::new(m, &mech, linear().into()).unwrap();
    for i in 0..4 {
        let c = utility_coefficients(&game, &profile, i).unwrap();
        let direct = direct_payment(&mech, &m, &profile, i);
        assert!((c.payment(&profile[i]) - direct).abs() < 1e-12);
    }
}

#[test]
fn flip_maps_negative_eps_equilibrium() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10 {
        let m = random_model(&mut rng, 2);
        let r = TabularMechanism::random(2, &mut rng, 10.0, false).unwrap();
        let eps = rng.gen_range(0.1..3.0);
        let other = random_strategy(&mut rng);
        let flipped = flip_mechanism(&r, 0).unwrap();
        let before = vec![Strategy::eps_strategy(-eps), other];
        let after = vec![Strategy::eps_strategy(eps), other];
        for i in 0..2 {
            let a = direct_payment(&r, &m, &before, i);
            let b = direct_payment(&flipped, &m, &after, i);
            assert!((a - b).abs() < 1e-12);
        }
        let v1 = verify_nash(&Game::new(m, &r, linear().into()).unwrap(), &before, NASH_TOL).unwrap();
        let v2 = verify_nash(&Game::new(m, &flipped, linear().into()).unwrap(), &after, NASH_TOL).unwrap();
        assert_eq!(v1.is_nash, v2.is_nash);
        for (x, y) in v1.individuals.iter().zip(&v2.individuals) {
            assert!((x.expected_payment - y.expected_payment).abs() < 1e-12);
            let same = x.deviation_gain == y.deviation_gain;
            assert!(same || (x.deviation_gain - y.deviation_gain).abs() < 1e-9, "{x:?}\n{y:?}");
        }
    }
}

#[test]
fn genie_replication_preserves_landscape() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..3 {
        let m = random_model(&mut rng, 3);
        let pay_abstainers = rng.gen_bool(0.5);
        let r = TabularMechanism::random(3, &mut rng, 10.0, pay_abstainers).unwrap();
        let profile: Vec<Strategy> = (0..3).map(|_| random_strategy(&mut rng)).collect();
        let genie = genie_replicate(&r, &profile, &m, MonteCarlo::default()).unwrap();
        assert!(genie.exact());
        for i in 0..3 {
            for _ in 0..40 {
                let s = random_strategy(&mut rng);
                let p = with_own(&profile, i, s);
                let a = direct_payment(&r, &m, &p, i);
                let b = direct_payment(&genie, &m, &p, i);
                assert!((a - b).abs() < 1e-9);
            }
        }
    }
}

/// Pays 1 when at least half of the others report 1, else 0.25.
struct Threshold {
    n: usize,
}

impl Mechanism for Threshold {
    fn population(&self) -> usize {
        self.n
    }

    fn payment(&self, i: usize, reports: &[Report], _state: bool) -> f64 {
        let ones = reports
            .iter()
            .enumerate()
            .filter(|&(j, r)| j != i && *r == Report::One)
            .count();
        if ones * 2 >= self.n - 1 {
            1.0
        } else {
            0.25
        }
    }
}

#[test]
fn replication_falls_back_to_monte_carlo() {
    let n = 14;
    let m = ModelParams::new(0.5, 0.8, n).unwrap();
    let eps = 1.0;
    let profile = vec![Strategy::eps_strategy(eps); n];
    let mech = Threshold { n };
    let genie = genie_replicate(&mech, &profile, &m, MonteCarlo { samples: 50_000, seed: 3 }).unwrap();
    assert!(!genie.exact());
    let (a, b) = privtrade::mechanisms::alpha(eps, 0.8);
    for w in [false, true] {
        let p_one = if w { a } else { b };
        let tail = privtrade::numeric::binomial_upper_tail(13, 7, p_one, 1.0 - p_one);
        let exact = tail + 0.25 * (1.0 - tail);
        let e = genie.entry(0, Report::One, w);
        let se = e.std_error.unwrap();
        assert!(se > 0.0);
        assert!((e.value - exact).abs() < 4.0 * se, "w={w}: {} vs {exact} (se {se})", e.value);
    }
}
