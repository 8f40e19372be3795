use std::fs;
use std::process::{Command, Output};

use privtrade::bounds::{v_lb, v_ub};
use privtrade::model::{CostFn, ModelParams};
use privtrade_cli::commands::{
    best_response, bounds_rows, equilibrium, lemma1_audit, payment_accuracy_failures, payment_accuracy_rows,
    PaymentAccuracyRow,
};
use privtrade_cli::output::csv_body;
use privtrade_cli::spec::{
    AuditMechanism, BestResponseParams, BoundsParams, EquilibriumParams, GameParams, Grid, Lemma1AuditParams,
    PaymentAccuracyParams,
};
use privtrade_cli::CliError;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_privtrade")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn rows<T: serde::de::DeserializeOwned>(text: &str) -> Vec<T> {
    csv::Reader::from_reader(csv_body(text).as_bytes())
        .deserialize()
        .collect::<Result<_, _>>()
        .unwrap()
}

#[test]
fn bounds_single_eps_gives_one_row_per_population() {
    let o = bin(&["bounds", "--eps", "1", "--populations", "2,10,100"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("# "));
    assert_eq!(csv_body(&text).lines().next().unwrap(), "eps,n,v_lb,v_ub,gap,d");
    let r: Vec<privtrade_cli::commands::BoundsRow> = rows(&text);
    assert_eq!(r.len(), 3);
    assert!(r.windows(2).all(|w| w[1].gap < w[0].gap));
    let m = ModelParams::new(0.7, 0.8, 1).unwrap();
    let g = CostFn::linear(1.0).unwrap();
    for row in &r {
        assert_eq!(row.v_ub, v_ub(1.0, row.n, &m, &g).unwrap());
        assert!((row.v_ub - row.v_lb - row.gap).abs() < 1e-9 * row.v_ub);
    }
}

#[test]
fn bounds_rows_follow_the_grid() {
    let p = BoundsParams {
        eps: Grid::Values(vec![0.5]),
        populations: vec![4],
        ..Default::default()
    };
    assert_eq!(bounds_rows(&p).unwrap().len(), 1);
    assert_eq!(bounds_rows(&BoundsParams::default()).unwrap().len(), 150);
    let bad = BoundsParams {
        populations: vec![1],
        ..Default::default()
    };
    assert!(matches!(bounds_rows(&bad), Err(CliError::Invalid(_))));
}

#[test]
fn payment_accuracy_single_tau() {
    let o = bin(&["payment-accuracy", "--tau", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("# eps_tilde_grid_index: "));
    let header = csv_body(&text).lines().next().unwrap().to_string();
    assert!(header.starts_with("tau,eps_tilde,n_tilde,lower,upper"));
    let r: Vec<PaymentAccuracyRow> = rows(&text);
    assert_eq!(r.len(), 1);
    assert_eq!(r[0].tau, 0.5);
}

#[test]
fn payment_accuracy_curve_is_sorted_and_bracketed() {
    let (et, r) = payment_accuracy_rows(&PaymentAccuracyParams::default()).unwrap();
    assert_eq!(r.len(), 50);
    assert!(r.windows(2).all(|w| w[0].tau > w[1].tau));
    assert!(payment_accuracy_failures(&r).is_empty(), "{:?}", payment_accuracy_failures(&r));
    let m = ModelParams::new(0.7, 0.8, 1).unwrap();
    let g = CostFn::linear(1.0).unwrap();
    let lb = v_lb(et.eps, &m, &g).unwrap();
    for row in &r {
        let ub = v_ub(et.eps, row.n_tilde.max(2), &m, &g).unwrap();
        assert!(row.upper - row.lower <= lb + row.n_tilde as f64 * (ub - lb) + 1e-9);
        assert!((row.lower - (row.n_tilde - 1) as f64 * lb).abs() < 1e-9);
    }
    let bad = PaymentAccuracyParams {
        tau: Grid::Values(vec![1.0]),
        ..Default::default()
    };
    assert!(matches!(payment_accuracy_rows(&bad), Err(CliError::Invalid(_))));
}

#[test]
fn exit_codes() {
    assert_eq!(bin(&["bounds", "--theta", "0.4"]).status.code(), Some(2));
    assert_eq!(bin(&["bounds", "--eps", "-1"]).status.code(), Some(2));
    assert_eq!(bin(&["payment-accuracy", "--tau", "0"]).status.code(), Some(2));
    assert_eq!(bin(&["lemma1-audit", "--population", "5"]).status.code(), Some(2));
    assert_eq!(bin(&["equilibrium", "--population", "2", "--mechanism", "peer:-1"]).status.code(), Some(2));
    assert_eq!(bin(&["bounds", "--config", "/nonexistent/spec.json"]).status.code(), Some(2));
    assert_eq!(bin(&["nope"]).status.code(), Some(2));
    let e: CliError = privtrade::Error::Assertion("x".into()).into();
    assert_eq!(e.exit_code(), 3);
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("spec.json");
    fs::write(
        &cfg,
        r#"{"command": "bounds", "seed": 9,
            "params": {"model": {"prior_one": 0.4, "quality": 0.9}, "eps": [0.5, 1.0], "populations": [3]}}"#,
    )
    .unwrap();
    let c = cfg.to_str().unwrap();
    let o = bin(&["bounds", "--config", c, "--theta", "0.6", "--print-spec"]);
    assert_eq!(o.status.code(), Some(0));
    let spec = privtrade_cli::ExperimentSpec::from_json(&stdout(&o)).unwrap();
    match spec.command {
        privtrade_cli::Command::Bounds(p) => {
            assert_eq!(p.model.prior_one, 0.4);
            assert_eq!(p.model.quality, 0.6);
            assert_eq!(p.populations, vec![3]);
        }
        other => panic!("{other:?}"),
    }
    assert_eq!(spec.seed, 9);
    // a config for another command is refused
    assert_eq!(bin(&["simulate", "--config", c]).status.code(), Some(2));
}

#[test]
fn out_file_and_json_format() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b.json");
    let o = bin(&["bounds", "--eps", "1,2", "--populations", "2", "--format", "json", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["metadata"]["command"], "bounds");
    assert_eq!(v["metadata"]["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["result"].as_array().unwrap().len(), 2);
}

#[test]
fn simulate_is_deterministic_and_dumps_trials() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("trials.csv");
    let args = [
        "simulate",
        "--population",
        "3",
        "--mechanism",
        "peer:1",
        "--trials",
        "5000",
        "--seed",
        "12",
        "--dump-trials",
        dump.to_str().unwrap(),
    ];
    let a = bin(&args);
    let b = bin(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["metadata"]["seed"], 12);
    assert_eq!(v["result"]["result"]["trials"], 5000);
    assert_eq!(v["result"]["bound_holds"], true);
    let text = fs::read_to_string(&dump).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "trial,state,reports,decision,payment_0,payment_1,payment_2");
    assert_eq!(lines.count(), 5000);
    let other = bin(&["simulate", "--population", "3", "--trials", "5000", "--seed", "13"]);
    assert_ne!(other.stdout, a.stdout);
}

#[test]
fn equilibrium_command_certifies_peer_profile() {
    let mut p = EquilibriumParams::default();
    p.game.model = ModelParams::new(0.7, 0.8, 2).unwrap();
    p.brute_force_resolution = Some(21);
    let out = equilibrium(&p).unwrap();
    assert!(out.is_nash);
    assert_eq!(out.brute_force.as_ref().unwrap().len(), 2);
    let o = bin(&["equilibrium", "--population", "4", "--mechanism", "genie:0.5", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("# is_nash: true"));
}

#[test]
fn best_response_command() {
    let p = BestResponseParams {
        game: GameParams {
            model: ModelParams::new(0.6, 0.85, 2).unwrap(),
            ..Default::default()
        },
        individual: 1,
        brute_force_resolution: Some(41),
    };
    let out = best_response(&p).unwrap();
    assert_eq!(out.analytic_distance, 0.0);
    let grid = out.brute_force.unwrap();
    assert!(grid.utility <= out.analytic.utility + 1e-9);
    assert!(out.brute_force_distance.unwrap() <= 1.0 / 40.0);
    assert!((out.profile_utility - out.analytic.utility).abs() < 1e-9);
    let bad = BestResponseParams {
        individual: 7,
        ..Default::default()
    };
    assert!(matches!(best_response(&bad), Err(CliError::Invalid(_))));
}

#[test]
fn audit_special_mechanisms() {
    let zero = Lemma1AuditParams {
        seeds: 5,
        mechanism: AuditMechanism::Zero,
        ..Default::default()
    };
    let r = lemma1_audit(&zero, 0).unwrap();
    assert_eq!(r.max_distance, 0.0);
    assert!(r.within_spacing);
    let genie = Lemma1AuditParams {
        seeds: 5,
        mechanism: AuditMechanism::Genie { eps: 1.0 },
        ..Default::default()
    };
    let r = lemma1_audit(&genie, 0).unwrap();
    assert_eq!(r.max_analytic_distance, 0.0);
    assert!(r.within_spacing);
    for c in &r.cases {
        assert_eq!(c.analytic.family, privtrade::model::Classification::Symmetric);
        assert!((c.analytic.strategy.privacy_level() - 1.0).abs() < 1e-6);
    }
    let o = bin(&["lemma1-audit", "--seeds", "3", "--resolution", "21", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(csv_body(&stdout(&o)).lines().count(), 1 + 3 * 2);
}

#[test]
fn audit_is_reproducible() {
    let p = Lemma1AuditParams {
        seeds: 4,
        resolution: 21,
        ..Default::default()
    };
    assert_eq!(lemma1_audit(&p, 3).unwrap(), lemma1_audit(&p, 3).unwrap());
    assert_ne!(lemma1_audit(&p, 3).unwrap(), lemma1_audit(&p, 4).unwrap());
}
