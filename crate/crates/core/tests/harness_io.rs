//! End-to-end harness contracts: byte-level determinism, order-independent
//! aggregation, stable seed splitting, and the frozen CSV schema.

use std::fs;
use std::path::Path;

use banditlab::harness::{
    ExperimentConfig, LemmaParams, MgfParams, SuiteKind, Theorem1Params, run,
};
use banditlab::{Error, RewardLaw};

fn tiny_config(out: &Path) -> ExperimentConfig {
    ExperimentConfig {
        k: 3,
        arm_means: vec![0.8, 0.5, 0.2],
        reward_law: RewardLaw::Bernoulli,
        delta: 0.2,
        horizon: 40,
        replicas: 2,
        master_seed: 20_260_808,
        suites: vec![SuiteKind::Bandit],
        output_dir: out.to_path_buf(),
        report_stride: None,
        warmup_round_robin: false,
        threads: None,
        mgf: MgfParams::default(),
        theorem1: Theorem1Params::default(),
        lemmas: LemmaParams::default(),
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny_config(dir.path());
    let snapshot = |p: &Path| {
        ["bounds.csv", "regret.csv", "summary.json", "suite_stats.csv"]
            .map(|name| fs::read(p.join(name)).unwrap())
    };
    run(&config).unwrap();
    let first = snapshot(dir.path());
    run(&config).unwrap();
    let second = snapshot(dir.path());
    assert_eq!(first, second);
}

#[test]
fn thread_count_does_not_change_results() {
    let dir1 = tempfile::tempdir().unwrap();
    let dir4 = tempfile::tempdir().unwrap();
    let mut c1 = tiny_config(dir1.path());
    c1.replicas = 8;
    c1.threads = Some(1);
    let mut c4 = tiny_config(dir4.path());
    c4.replicas = 8;
    c4.threads = Some(4);
    run(&c1).unwrap();
    run(&c4).unwrap();

    assert_eq!(
        fs::read(dir1.path().join("bounds.csv")).unwrap(),
        fs::read(dir4.path().join("bounds.csv")).unwrap()
    );
    assert_eq!(
        fs::read(dir1.path().join("regret.csv")).unwrap(),
        fs::read(dir4.path().join("regret.csv")).unwrap()
    );
    // Summaries agree once the two deliberately different config fields
    // (threads, output_dir) are masked out.
    let normalize = |p: &Path| {
        let mut v: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(p.join("summary.json")).unwrap()).unwrap();
        let cfg = v["config"].as_object_mut().unwrap();
        cfg.remove("threads");
        cfg.remove("output_dir");
        v
    };
    assert_eq!(normalize(dir1.path()), normalize(dir4.path()));
}

#[test]
fn adding_replicas_never_perturbs_existing_ones() {
    let small_dir = tempfile::tempdir().unwrap();
    let big_dir = tempfile::tempdir().unwrap();
    let mut small = tiny_config(small_dir.path());
    small.replicas = 2;
    let mut big = tiny_config(big_dir.path());
    big.replicas = 5;
    run(&small).unwrap();
    run(&big).unwrap();

    let small_csv = fs::read_to_string(small_dir.path().join("regret.csv")).unwrap();
    let big_csv = fs::read_to_string(big_dir.path().join("regret.csv")).unwrap();
    // The 5-replica file starts with exactly the 2-replica file's rows.
    assert!(big_csv.starts_with(&small_csv));
}

#[test]
fn seed_changes_outputs() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    let c1 = tiny_config(d1.path());
    let mut c2 = tiny_config(d2.path());
    c2.master_seed += 1;
    run(&c1).unwrap();
    run(&c2).unwrap();
    assert_ne!(
        fs::read(d1.path().join("regret.csv")).unwrap(),
        fs::read(d2.path().join("regret.csv")).unwrap()
    );
}

#[test]
fn csv_schema_is_frozen() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny_config(dir.path());
    run(&config).unwrap();
    let bounds = fs::read_to_string(dir.path().join("bounds.csv")).unwrap();
    assert_eq!(
        bounds.lines().next().unwrap(),
        "replica,t,kl_rho_mu,v_rho,delta_rho_true,delta_rho_emp,thm2_rhs,thm2_violation,\
         lemma1_lhs,lemma1_rhs,lemma5_lhs,lemma5_rhs,regret_decomp_rhs,thm3_rhs,\
         thm3_certified,thm3_violation"
    );
    let regret = fs::read_to_string(dir.path().join("regret.csv")).unwrap();
    assert_eq!(
        regret.lines().next().unwrap(),
        "replica,t,instant_regret,cumulative_regret"
    );
    // default stride on a 40-round horizon: every round, once per replica
    assert_eq!(regret.lines().count(), 1 + 2 * 40);

    let stats = fs::read_to_string(dir.path().join("suite_stats.csv")).unwrap();
    assert_eq!(stats.lines().next().unwrap(), "suite,statistic,value,std_err,pass");
    // one row per bandit-suite check (no slope at this short horizon)
    assert_eq!(stats.lines().count(), 1 + 7);
    assert!(stats.contains("bandit,lemma1_deterministic,"));
}

#[test]
fn bounds_csv_matches_committed_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny_config(dir.path());
    run(&config).unwrap();
    let produced = fs::read_to_string(dir.path().join("bounds.csv")).unwrap();
    let golden_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/bounds_golden.csv");
    if std::env::var_os("BLESS").is_some() {
        fs::write(&golden_path, &produced).unwrap();
    }
    let golden = fs::read_to_string(&golden_path).expect(
        "golden fixture missing; regenerate with BLESS=1 cargo test -p banditlab --test harness_io",
    );
    assert_eq!(produced, golden, "bounds.csv drifted from the golden fixture");
}

#[test]
fn summary_reports_every_requested_suite() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = tiny_config(dir.path());
    // Shrink the statistical suites so this stays fast.
    config.suites = vec![
        SuiteKind::Bandit,
        SuiteKind::Bounds,
        SuiteKind::Mgf,
        SuiteKind::Theorem1,
        SuiteKind::Lemmas,
    ];
    config.mgf = MgfParams { replicas: 500, ..MgfParams::default() };
    config.theorem1 = Theorem1Params { replicas: 50, horizon: 200, ..Theorem1Params::default() };
    config.lemmas = LemmaParams {
        change_of_measure_trials: 500,
        expsum_trials: 500,
        ..LemmaParams::default()
    };
    let summary = run(&config).unwrap();
    assert!(summary.pass, "tiny full run failed: {summary:?}");
    for name in ["bandit", "bounds", "mgf", "theorem1", "lemmas"] {
        assert!(summary.suites.contains_key(name), "missing suite {name}");
        assert!(summary.suites[name].pass, "suite {name} failed");
    }
    assert!(dir.path().join("summary.json").exists());
    // all violation-rate style checks stay inside [0, 1]
    for suite in summary.suites.values() {
        for check in suite.checks.values() {
            if let Some(rate) = check.rate {
                assert!((0.0..=1.0).contains(&rate));
            }
        }
    }
}

#[test]
fn invalid_configs_are_rejected_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = tiny_config(dir.path());
    config.horizon = 2; // shorter than the K = 3 warmup
    match run(&config) {
        Err(Error::InvalidConfig(msg)) => assert!(msg.contains("warmup")),
        other => panic!("expected config rejection, got {other:?}"),
    }
    assert!(!dir.path().join("summary.json").exists());
}
