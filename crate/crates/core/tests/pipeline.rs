//! End-to-end runs through the plan, harness and output layers.

use proptest::prelude::*;
use srrw_core::harness::{
    long_csv, parse_plan, run_replicas, with_threads, CellResult, CellSpec, Diagnostic, Provenance, SweepTable,
};
use srrw_core::model::StepDistribution;
use srrw_core::stats::{Aggregator, Summary};
use srrw_core::Error;

const PLAN: &str = r#"
seed = 7

[[cell]]
alpha = [0.25, 0.75]
dist = "lattice(d=2)"
n = 4096
replicas = 6
diagnostics = ["norm", "position", "returns", "xn", "tail_oscillation"]

[[cell]]
alpha = 0.5
dist = "pareto(a=1.5)"
n = 5e3
replicas = 4
schedule = { start = 10, ratio = 4.0 }
diagnostics = ["delta(coord0)", "escape_exponent"]
"#;

fn outputs(threads: usize) -> (String, String) {
    let mut plan = parse_plan(PLAN).unwrap();
    plan.threads = Some(threads);
    let results = plan.run().unwrap();
    let prov = Provenance::new(plan.seed, &plan);
    (long_csv(&results, &prov).unwrap(), SweepTable::from_results(&results).to_csv(&prov).unwrap())
}

#[test]
fn plan_outputs_do_not_depend_on_thread_count() {
    let one = outputs(1);
    assert_eq!(one, outputs(3));
    assert_eq!(one, outputs(8));
    let (long, wide) = one;
    assert!(long.starts_with("# provenance: {"));
    assert_eq!(long.lines().nth(1), Some("alpha,d,dist,n,replica,metric,value"));
    assert!(wide.lines().nth(1).unwrap().starts_with("alpha,d,dist,n,metric,mean,std,median"));
    assert!(long.contains("\"pareto(a=1.5, scale=1)\""));
}

#[test]
fn provenance_tracks_the_config() {
    let a = parse_plan(PLAN).unwrap();
    let b = parse_plan(&PLAN.replace("seed = 7", "seed = 8")).unwrap();
    let pa = Provenance::new(a.seed, &a);
    assert_eq!(pa, Provenance::new(a.seed, &a));
    assert_ne!(pa.config_hash, Provenance::new(b.seed, &b).config_hash);
    assert_eq!(pa.config_hash.len(), 64);
}

#[test]
fn sweep_table_json_round_trips() {
    let results = parse_plan(PLAN).unwrap().run().unwrap();
    let table = SweepTable::from_results(&results);
    let text = table.to_json(&Provenance::new(7, &"t")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let back: SweepTable = serde_json::from_value(serde_json::json!({ "rows": v["rows"] })).unwrap();
    assert_eq!(back, table);
    assert!(table.find(0.75, "norm").is_some_and(|r| r.summary.count == 6));
}

#[test]
fn whitened_cells_walk_the_whitened_law() {
    // A stretched 2d lattice becomes isotropic after whitening, so both
    // coordinates spread alike.
    let law = StepDistribution::discrete(vec![
        (vec![10.0, 0.0], 0.25),
        (vec![-10.0, 0.0], 0.25),
        (vec![0.0, 1.0], 0.25),
        (vec![0.0, -1.0], 0.25),
    ])
    .unwrap();
    let cell = CellSpec::new(0.0, law, 2000, 400).whitened().with_diagnostics(vec![Diagnostic::Position]);
    let res = CellResult { replicas: run_replicas(&cell, 3).unwrap(), cell };
    let var = |k: &str| res.scalar(k).iter().map(|x| x * x).sum::<f64>() / 400.0;
    let ratio = var("pos0") / var("pos1");
    assert!((0.7..1.4).contains(&ratio), "{ratio}");
}

#[test]
fn a_failing_replica_aborts_the_cell() {
    // Two checkpoints less than two decades apart make the exponent fit fail.
    let cell = CellSpec::new(0.5, StepDistribution::rademacher(), 100, 3)
        .with_diagnostics(vec![Diagnostic::EscapeExponent]);
    match run_replicas(&cell, 1) {
        Err(Error::Replica { replica: 0, .. }) => {}
        other => panic!("expected a replica error, got {other:?}"),
    }
}

#[test]
fn thread_pools_are_scoped() {
    let got = with_threads(Some(2), rayon::current_num_threads).unwrap();
    assert_eq!(got, 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn aggregation_ignores_merge_order(
        parts in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 0..20), 1..8),
        seed in any::<u64>(),
    ) {
        let build = |order: &[usize]| {
            let mut total = Aggregator::new();
            for &i in order {
                let mut a = Aggregator::new();
                parts[i].iter().for_each(|&x| a.push(x));
                total.merge(a);
            }
            total.summary()
        };
        let forward: Vec<usize> = (0..parts.len()).collect();
        let mut shuffled = forward.clone();
        // Fisher-Yates driven by the proptest seed.
        let mut s = seed;
        for i in (1..shuffled.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (s >> 33) as usize % (i + 1));
        }
        let a: Option<Summary> = build(&forward);
        let b = build(&shuffled);
        prop_assert_eq!(a, b);
    }
}
