//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any failed. Run with `cargo test --test acceptance`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use netavg::averaging::*;
use netavg::evaluation::{run_experiment, threshold_delta_table, ExperimentConfig, Metric};
use netavg::independence::{mi_g2_test, mi_shrinkage_test};
use netavg::learn::{LearnError, LearnedStructure};
use netavg::model::Variable;
use netavg::rng::stream_rng;
use netavg::scores::{bdeu_family_score, bdeu_network_score, bdeu_node_score, FamilyCounts};
use netavg::{Dag, Dataset, Learner, LearnerConfig, NodePair, NodeSet};
use rand::Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    ensure(start.elapsed() < limit, || format!("took {:.2?}, limit {limit:?}", start.elapsed()))
}

fn four_node_threshold() -> Check {
    let start = Instant::now();
    let p = vec![0.2242, 0.0460, 0.8935, 0.3921, 0.7689, 0.9439];
    let profile = ConfidenceProfile::from_confidences(NodeSet::new(["A", "B", "C", "D"]).unwrap(), p).unwrap();
    let report = estimate_threshold(&profile).map_err(|e| e.to_string())?;
    ensure((report.t_hat - 0.4999816).abs() < 1e-3, || format!("t_hat {}", report.t_hat))?;
    ensure(report.cutoff == 0.3921, || format!("cutoff {}", report.cutoff))?;
    let expected = vec![NodePair::new(0, 3), NodePair::new(1, 3), NodePair::new(2, 3)];
    ensure(report.selected == expected, || format!("selected {:?}", report.selected))?;
    within(start, Duration::from_secs(1))?;
    Ok(format!("t_hat {}, cutoff {}, selected (A,D) (B,D) (C,D)", report.t_hat, report.cutoff))
}

fn l1_oracle() -> Check {
    let start = Instant::now();
    let mut rng = stream_rng(2024);
    let mut worst: f64 = f64::NEG_INFINITY;
    for case in 0..200 {
        // profiles live on N(N-1)/2 pairs; N in 3..=10 gives k from 3 to 45
        let nodes = rng.random_range(3..=10usize);
        let k = nodes * (nodes - 1) / 2;
        let p: Vec<f64> = if case % 2 == 0 {
            // bootstrap-like values on a 1/m lattice, with ties
            let m = rng.random_range(1..=40);
            (0..k).map(|_| rng.random_range(0..=m) as f64 / m as f64).collect()
        } else {
            (0..k).map(|_| rng.random::<f64>()).collect()
        };
        let profile = ConfidenceProfile::from_confidences(NodeSet::lettered(nodes), p).map_err(|e| e.to_string())?;
        let report = estimate_threshold(&profile).map_err(|e| e.to_string())?;
        let best_grid = (0..=10_000)
            .map(|i| l1_objective(i as f64 / 10_000.0, &profile).unwrap())
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(report.l1_value - best_grid);
        ensure(report.l1_value <= best_grid + 1e-9, || format!("case {case}: {} > grid {best_grid}", report.l1_value))?;
    }
    within(start, Duration::from_secs(10))?;
    Ok(format!("200 profiles, max(closed form - grid) = {worst:.3e}"))
}

struct Fixed(Dag);

impl Learner for Fixed {
    fn learn(&self, _: &Dataset, _: u64) -> Result<LearnedStructure, LearnError> {
        Ok(LearnedStructure { dag: self.0.clone(), diagnostics: Default::default() })
    }
}

fn ideal_configuration() -> Check {
    let start = Instant::now();
    let truth = netavg::fixtures::synth8();
    let data = truth.forward_sample(100, 3).map_err(|e| e.to_string())?;
    let profile = edge_confidence(&data, &Fixed(truth.dag().clone()), &BootstrapOptions::new(50, 1))
        .map_err(|e| e.to_string())?;
    ensure(profile.p_hat.iter().all(|&p| p == 0.0 || p == 1.0), || "profile not 0/1".into())?;
    let report = estimate_threshold(&profile).map_err(|e| e.to_string())?;
    let skeleton: Vec<_> = truth.dag().skeleton().edges().iter().copied().collect();
    ensure(report.selected == skeleton, || format!("selected {:?}", report.selected))?;
    let averaged = assign_directions(&profile, &report.selected).map_err(|e| e.to_string())?;
    ensure(&averaged.dag == truth.dag(), || "directions differ from the fixed graph".into())?;
    within(start, Duration::from_secs(1))?;
    Ok(format!("{} of {} pairs selected, equal to the fixed skeleton", report.selected.len(), profile.len()))
}

fn parameter_counts() -> Check {
    // fork3: A binary root (1), B ternary | A (2 rows x 2), C binary | A (2 x 1)
    // synth8: two ternary roots (2 each), six ternary children with one ternary parent (3 x 2 each)
    let fork = netavg::fixtures::fork3().parameter_count();
    let synth = netavg::fixtures::synth8().parameter_count();
    ensure(fork == 1 + 4 + 2, || format!("fork3 {fork}"))?;
    ensure(synth == 2 * 2 + 6 * 6, || format!("synth8 {synth}"))?;
    let mut detail = format!("fork3 {fork}, synth8 {synth}");
    match std::env::var_os("NETAVG_REFERENCE_DIR") {
        None => detail.push_str("; reference networks skipped (NETAVG_REFERENCE_DIR unset)"),
        Some(dir) => {
            for (name, expected) in [("alarm", 509), ("hailfinder", 2656), ("insurance", 984)] {
                let path = Path::new(&dir).join(format!("{name}.json"));
                if !path.exists() {
                    detail.push_str(&format!("; {name} skipped (no {})", path.display()));
                    continue;
                }
                let text = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
                let count = netavg::io::parse_network(&text).map_err(|e| format!("{name}: {e}"))?.parameter_count();
                ensure(count == expected, || format!("{name}: {count} parameters, expected {expected}"))?;
                detail.push_str(&format!("; {name} {count}"));
            }
        }
    }
    Ok(detail)
}

fn desk_scale() -> Check {
    let start = Instant::now();
    let truth = netavg::fixtures::synth8();
    let cfg = ExperimentConfig {
        sample_sizes: vec![100, 500, 2000],
        learner: LearnerConfig { ess: 10.0, ..LearnerConfig::default() },
        replicates: 200,
        repeats: 10,
        seed: 0,
        adhoc: vec![0.70, 0.80, 0.90, 0.95],
        noise_floor: false,
    };
    let result = run_experiment(&truth, &cfg, 0).map_err(|e| e.to_string())?;
    let mean = |n, metric| result.row(n, Method::L1, metric).map(|r| r.mean).ok_or("missing row");
    let sens: Vec<f64> = cfg.sample_sizes.iter().map(|&n| mean(n, Metric::Sensitivity)).collect::<Result<_, _>>()?;
    let spec: Vec<f64> = cfg.sample_sizes.iter().map(|&n| mean(n, Metric::Specificity)).collect::<Result<_, _>>()?;
    ensure(sens.windows(2).all(|w| w[0] <= w[1]), || format!("sensitivity {sens:?} decreases"))?;
    ensure(spec.iter().all(|&s| s >= 0.9), || format!("specificity {spec:?} below 0.9"))?;
    let deltas = threshold_delta_table(&result).map_err(|e| e.to_string())?;
    let delta = deltas
        .iter()
        .find(|r| r.n == 100 && r.baseline == Method::AdHoc(0.95) && r.metric == Metric::Sensitivity)
        .ok_or("missing delta row")?
        .mean_delta;
    ensure(delta >= 0.0, || format!("sensitivity delta vs adhoc:0.95 at n = 100 is {delta}"))?;
    within(start, Duration::from_secs(600))?;
    Ok(format!(
        "sensitivity {sens:?}, specificity {spec:?}, delta vs 0.95 at n=100 {delta:.4}, {:.1?}",
        start.elapsed()
    ))
}

/// ln Gamma(x) for x a positive multiple of 1/2, by exact recurrence.
fn ln_gamma_half(x: f64) -> f64 {
    let twice = (2.0 * x).round() as u64;
    assert!(twice >= 1 && (2.0 * x - twice as f64).abs() < 1e-12);
    let (mut acc, mut y) = if twice.is_multiple_of(2) { (0.0, 1.0) } else { (0.5 * std::f64::consts::PI.ln(), 0.5) };
    while y < x - 1e-9 {
        acc += y.ln();
        y += 1.0;
    }
    acc
}

fn bdeu_oracle(table: &[Vec<u64>], ess: f64) -> f64 {
    let q = table.len() as f64;
    let r = table[0].len() as f64;
    let (aj, ajk) = (ess / q, ess / (q * r));
    table
        .iter()
        .map(|row| {
            let nj: u64 = row.iter().sum();
            ln_gamma_half(aj) - ln_gamma_half(aj + nj as f64)
                + row.iter().map(|&c| ln_gamma_half(ajk + c as f64) - ln_gamma_half(ajk)).sum::<f64>()
        })
        .sum()
}

fn table_data(table: &[Vec<u64>]) -> Dataset {
    let (q, r) = (table.len(), table[0].len());
    let mut rows = Vec::new();
    for (j, row) in table.iter().enumerate() {
        for (k, &c) in row.iter().enumerate() {
            rows.extend((0..c).map(|_| vec![j as u32, k as u32]));
        }
    }
    Dataset::from_rows(vec![Variable::indexed("P", q), Variable::indexed("C", r)], &rows).unwrap()
}

fn bdeu() -> Check {
    // ess chosen so every prior count is a multiple of 1/2
    let cases: Vec<(Vec<Vec<u64>>, f64)> = vec![
        (vec![vec![5, 0, 7], vec![2, 9, 1]], 3.0),
        (vec![vec![5, 0, 7], vec![2, 9, 1]], 6.0),
        (vec![vec![40, 3], vec![1, 0], vec![12, 12]], 3.0),
        (vec![vec![3, 1]], 1.0),
        (vec![vec![30, 20, 50, 0]], 2.0),
    ];
    let mut worst: f64 = 0.0;
    for (table, ess) in &cases {
        let data = table_data(table);
        let (got, want) = if table.len() == 1 {
            (bdeu_node_score(&data, 1, &[], *ess), bdeu_oracle(table, *ess))
        } else {
            (bdeu_node_score(&data, 1, &[0], *ess), bdeu_oracle(table, *ess))
        };
        worst = worst.max((got - want).abs());
        ensure((got - want).abs() < 1e-10, || format!("{table:?} ess {ess}: {got} vs {want}"))?;
    }
    let net = netavg::fixtures::fork3();
    let data = net.forward_sample(400, 8).map_err(|e| e.to_string())?;
    let nodes = net.dag().nodes().clone();
    let ab = Dag::from_edges(nodes.clone(), &[(0, 1)]).unwrap();
    let ba = Dag::from_edges(nodes, &[(1, 0)]).unwrap();
    let (s1, s2) = (bdeu_network_score(&data, &ab, 10.0).log_score, bdeu_network_score(&data, &ba, 10.0).log_score);
    ensure((s1 - s2).abs() < 1e-9, || format!("A->B {s1} vs B->A {s2}"))?;
    let empty = FamilyCounts { parent_configs: 3.0, child_levels: 2, rows: BTreeMap::new() };
    let zero = bdeu_family_score(&empty, 10.0);
    ensure(zero == 0.0, || format!("empty data scored {zero}"))?;
    Ok(format!("max oracle error {worst:.1e}, |A->B - B->A| = {:.1e}, empty data 0", (s1 - s2).abs()))
}

fn sampler() -> Check {
    let net = netavg::fixtures::fork3();
    let n = 50_000;
    let data = net.forward_sample(n, 7).map_err(|e| e.to_string())?;
    let exact = net.exact_joint().map_err(|e| e.to_string())?;
    let mut counts: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
    for i in 0..n {
        *counts.entry(data.row(i)).or_default() += 1;
    }
    let worst = exact
        .iter()
        .map(|(cell, &p)| (counts.get(cell).copied().unwrap_or(0) as f64 / n as f64 - p).abs())
        .fold(0.0, f64::max);
    ensure(counts.keys().all(|c| exact.contains_key(c)), || "sampled an impossible cell".into())?;
    ensure(worst <= 0.01, || format!("max deviation {worst}"))?;
    Ok(format!("n = {n}, max |empirical - exact| = {worst:.4}"))
}

fn binary_pair_data(n: usize, seed: u64) -> Dataset {
    let mut rng = stream_rng(seed);
    let x: Vec<u32> = (0..n).map(|_| rng.random_range(0..2)).collect();
    let y: Vec<u32> = x.iter().map(|&v| if rng.random::<f64>() < 0.7 { v } else { 1 - v }).collect();
    Dataset::new(vec![Variable::indexed("X", 2), Variable::indexed("Y", 2)], vec![x, y]).unwrap()
}

fn independence_tests() -> Check {
    let rows: Vec<Vec<u32>> = (0..100).map(|i| if i < 50 { vec![0, 0] } else { vec![1, 1] }).collect();
    let hand = Dataset::from_rows(vec![Variable::indexed("X", 2), Variable::indexed("Y", 2)], &rows).unwrap();
    let g2 = mi_g2_test(&hand, 0, 1, &[]).map_err(|e| e.to_string())?.statistic;
    let want = 2.0 * 100.0 * 2f64.ln();
    ensure((g2 - want).abs() < 1e-9, || format!("G2 {g2} vs {want}"))?;
    let mut gaps = Vec::new();
    for n in [1_000, 10_000, 100_000] {
        let data = binary_pair_data(n, 11);
        let ml = mi_g2_test(&data, 0, 1, &[]).map_err(|e| e.to_string())?.mi_estimate;
        let sh = mi_shrinkage_test(&data, 0, 1, &[]).map_err(|e| e.to_string())?.mi_estimate;
        gaps.push((ml - sh).abs());
    }
    ensure(gaps[2] < 1e-3, || format!("MI gap {:.2e} at n = 1e5", gaps[2]))?;
    ensure(gaps[0] >= gaps[2], || format!("MI gap does not shrink: {gaps:?}"))?;
    Ok(format!(
        "G2 = {g2:.9}, shrinkage-ML MI gap at n = 1e3/1e4/1e5: {:.2e}/{:.2e}/{:.2e}",
        gaps[0], gaps[1], gaps[2]
    ))
}

fn netavg_bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_netavg"));
    cmd.env_remove("NETAVG_SEED");
    cmd
}

fn run(args: &[&str], dir: &Path) -> Result<(), String> {
    let out = netavg_bin().args(args).current_dir(dir).output().map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("netavg {} failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr))
    })
}

fn same_file(dir: &Path, a: &str, b: &str) -> Result<(), String> {
    let read = |f: &str| std::fs::read(dir.join(f)).map_err(|e| format!("{f}: {e}"));
    let (x, y) = (read(a)?, read(b)?);
    ensure(!x.is_empty() && x == y, || format!("{a} and {b} differ"))
}

fn determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir: PathBuf = tmp.path().to_path_buf();
    std::fs::write(dir.join("truth.json"), netavg::fixtures::SYNTH8_JSON).map_err(|e| e.to_string())?;
    for out in ["a.csv", "b.csv"] {
        run(&["sample", "--network", "truth.json", "--n", "150", "--seed", "3", "--out", out], &dir)?;
    }
    same_file(&dir, "a.csv", "b.csv")?;
    for alg in ["hc", "iamb", "mmhc"] {
        let (a, b) = (format!("learn-{alg}-a.json"), format!("learn-{alg}-b.json"));
        for out in [&a, &b] {
            run(&["learn", "a.csv", "--algorithm", alg, "--seed", "5", "--out", out], &dir)?;
        }
        same_file(&dir, &a, &b)?;
    }
    for method in ["l1", "adhoc:0.85", "noisefloor"] {
        let mut outs = Vec::new();
        for jobs in ["1", "4", "1"] {
            let out = format!("avg-{method}-{}-{jobs}.json", outs.len());
            run(&["avgnet", "a.csv", "--m", "24", "--seed", "9", "--jobs", jobs, "--method", method, "--out", &out], &dir)?;
            outs.push(out);
        }
        same_file(&dir, &outs[0], &outs[1])?;
        same_file(&dir, &outs[0], &outs[2])?;
    }
    for (i, jobs) in ["1", "4"].iter().enumerate() {
        let config = format!(
            "truth = \"truth.json\"\noutput = \"summary-{i}.tsv\"\ndeltas = \"deltas-{i}.tsv\"\n\
             sample_sizes = [60, 120]\nrepeats = 2\nreplicates = 12\nseed = 4\nnoise_floor = true\n"
        );
        std::fs::write(dir.join(format!("exp-{i}.toml")), config).map_err(|e| e.to_string())?;
        run(&["experiment", "--config", &format!("exp-{i}.toml"), "--jobs", jobs], &dir)?;
    }
    same_file(&dir, "summary-0.tsv", "summary-1.tsv")?;
    same_file(&dir, "deltas-0.tsv", "deltas-1.tsv")?;
    Ok("sample, learn (hc/iamb/mmhc), avgnet (l1/adhoc/noisefloor, jobs 1/4), experiment (jobs 1/4) byte-identical".into())
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("four-node threshold golden test", four_node_threshold),
        ("L1 oracle equivalence", l1_oracle),
        ("ideal-configuration recovery", ideal_configuration),
        ("parameter counting", parameter_counts),
        ("desk-scale trend reproduction", desk_scale),
        ("BDeu correctness", bdeu),
        ("sampler correctness", sampler),
        ("independence test correctness", independence_tests),
        ("CLI determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
