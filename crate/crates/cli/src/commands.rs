use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use log::info;
use netavg::averaging::{
    assign_directions, edge_confidence, estimate_threshold, noise_floor, noise_floor_threshold,
    select_with_adhoc_threshold, BootstrapOptions, ConfidenceProfile, Method, ThresholdReport,
};
use netavg::evaluation::{deltas_to_tsv, run_experiment, threshold_delta_table, EvalError, ExperimentConfig};
use netavg::io::{self, AveragedNetworkDoc, AvgnetDoc, LearnedNetworkDoc};
use netavg::rng::{derive_seed, Stream};
use netavg::{Dataset, DiscreteBayesNet, Learner, LearnerConfig};

use crate::error::{usage, CliResult, Classify, Kind};

pub const SEED_VAR: &str = "NETAVG_SEED";

/// `--seed`, else `NETAVG_SEED`, else 0.
pub fn seed(flag: Option<u64>) -> CliResult<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_VAR) {
        Ok(v) => v.trim().parse().or_fail_with(Kind::Usage, || format!("{SEED_VAR}=`{v}` is not a seed")),
        Err(_) => Ok(0),
    }
}

fn read_input(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).or_fail_with(Kind::Usage, || format!("cannot read {}", path.display()))
}

fn load_network(path: &Path) -> CliResult<DiscreteBayesNet> {
    let text = read_input(path)?;
    io::parse_network(&text).or_fail_with(Kind::Data, || path.display().to_string())
}

fn load_data(path: &Path, levels_from: Option<&Path>) -> CliResult<Dataset> {
    let net = levels_from.map(load_network).transpose()?;
    let text = read_input(path)?;
    let data = match &net {
        Some(net) => io::read_csv_with_levels(text.as_bytes(), net.variables()),
        None => io::read_csv(text.as_bytes()),
    }
    .or_fail_with(Kind::Data, || path.display().to_string())?;
    if data.n_cols() < 2 {
        return Err(usage(format!(
            "{}: structure learning needs at least two columns, found {}",
            path.display(),
            data.n_cols()
        )));
    }
    Ok(data)
}

fn check_learner(cfg: &LearnerConfig) -> CliResult<()> {
    cfg.validate().or_fail(Kind::Usage)
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, text).or_fail_with(Kind::Data, || format!("cannot write {}", path.display())),
        None => std::io::stdout().lock().write_all(text.as_bytes()).or_fail(Kind::Data),
    }
}

pub fn sample(network: &Path, n: usize, seed: u64, out: Option<&Path>) -> CliResult<()> {
    if n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    let net = load_network(network)?;
    let data = net.forward_sample(n, seed).or_fail(Kind::Internal)?;
    let mut buf = Vec::new();
    io::write_csv(&data, &mut buf).or_fail(Kind::Data)?;
    emit(out, std::str::from_utf8(&buf).or_fail(Kind::Internal)?)
}

pub fn learn(data: &Path, cfg: &LearnerConfig, levels_from: Option<&Path>, seed: u64, out: Option<&Path>) -> CliResult<()> {
    check_learner(cfg)?;
    let data = load_data(data, levels_from)?;
    let learned = cfg.learn(&data, seed).or_fail(Kind::Internal)?;
    let doc = LearnedNetworkDoc::new(&learned, cfg.algorithm.to_string());
    emit(out, &io::to_json_string(&doc).or_fail(Kind::Internal)?)
}

pub struct AvgnetRequest<'a> {
    pub data: Option<&'a Path>,
    pub confidences: Option<&'a Path>,
    pub learner: LearnerConfig,
    pub levels_from: Option<&'a Path>,
    pub replicates: usize,
    pub seed: u64,
    pub jobs: usize,
    pub method: Method,
    pub out: Option<&'a Path>,
}

fn threshold(profile: &ConfidenceProfile, method: Method, floor: Option<&ConfidenceProfile>) -> CliResult<ThresholdReport> {
    match (method, floor) {
        (Method::L1, _) => estimate_threshold(profile),
        (Method::AdHoc(t), _) => select_with_adhoc_threshold(profile, t),
        (Method::NoiseFloor, Some(floor)) => noise_floor_threshold(profile, floor),
        (Method::NoiseFloor, None) => return Err(usage("noisefloor needs data to permute")),
    }
    .or_fail(Kind::Internal)
}

pub fn avgnet(req: AvgnetRequest<'_>) -> CliResult<()> {
    let (profile, floor) = match (req.data, req.confidences) {
        (None, Some(path)) => {
            if req.method == Method::NoiseFloor {
                return Err(usage("--method noisefloor cannot be used with --confidences-file"));
            }
            let text = read_input(path)?;
            let profile = io::read_profile(text.as_bytes()).or_fail_with(Kind::Data, || path.display().to_string())?;
            (profile, None)
        }
        (Some(path), None) => {
            check_learner(&req.learner)?;
            if req.replicates == 0 {
                return Err(usage("--m must be at least 1"));
            }
            let data = load_data(path, req.levels_from)?;
            let opts = BootstrapOptions::new(req.replicates, req.seed).with_jobs(req.jobs);
            info!("bootstrapping {} replicates", req.replicates);
            let profile = edge_confidence(&data, &req.learner, &opts).or_fail(Kind::Internal)?;
            let floor = if req.method == Method::NoiseFloor {
                let floor_opts = BootstrapOptions { seed: derive_seed(req.seed, Stream::Permutation, 0), ..opts };
                Some(noise_floor(&data, &req.learner, &floor_opts).or_fail(Kind::Internal)?)
            } else {
                None
            };
            (profile, floor)
        }
        _ => return Err(usage("give either a data file or --confidences-file")),
    };
    let report = threshold(&profile, req.method, floor.as_ref())?;
    let averaged = assign_directions(&profile, &report.selected).or_fail(Kind::Internal)?;
    let doc = AvgnetDoc { profile, report, network: AveragedNetworkDoc::new(&averaged) };
    emit(req.out, &io::to_json_string(&doc).or_fail(Kind::Internal)?)
}

struct RunConfig {
    truth: DiscreteBayesNet,
    output: PathBuf,
    deltas: Option<PathBuf>,
    experiment: ExperimentConfig,
}

fn path_key(table: &mut toml::Table, key: &str, base: &Path, problems: &mut Vec<String>) -> Option<PathBuf> {
    match table.remove(key)? {
        toml::Value::String(s) => Some(base.join(s)),
        other => {
            problems.push(format!("`{key}` must be a path string, found {}", other.type_str()));
            None
        }
    }
}

const EXPERIMENT_KEYS: &[&str] = &["sample_sizes", "learner", "replicates", "repeats", "seed", "adhoc", "noise_floor"];
const LEARNER_KEYS: &[&str] =
    &["algorithm", "alpha", "ess", "test", "restarts", "perturb", "tabu", "max_tabu", "max_parents"];

// Unknown keys are reported here so the remaining keys can still be checked.
fn strip_unknown(table: &mut toml::Table, known: &[&str], prefix: &str, problems: &mut Vec<String>) {
    let unknown: Vec<String> = table.keys().filter(|k| !known.contains(&k.as_str())).cloned().collect();
    for key in unknown {
        problems.push(format!("unknown key `{prefix}{key}`"));
        table.remove(&key);
    }
}

/// Read and check an experiment config, reporting every problem found.
fn load_run_config(path: &Path) -> CliResult<RunConfig> {
    let text = read_input(path)?;
    let mut table: toml::Table =
        toml::from_str(&text).or_fail_with(Kind::Usage, || format!("{}: invalid TOML", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut problems = Vec::new();

    let truth_path = path_key(&mut table, "truth", base, &mut problems);
    let output = path_key(&mut table, "output", base, &mut problems);
    let deltas = path_key(&mut table, "deltas", base, &mut problems);
    if truth_path.is_none() && !problems.iter().any(|p| p.starts_with("`truth`")) {
        problems.push("missing `truth` (network file)".into());
    }
    if output.is_none() && !problems.iter().any(|p| p.starts_with("`output`")) {
        problems.push("missing `output` (summary TSV path)".into());
    }

    strip_unknown(&mut table, EXPERIMENT_KEYS, "", &mut problems);
    if let Some(toml::Value::Table(learner)) = table.get_mut("learner") {
        strip_unknown(learner, LEARNER_KEYS, "learner.", &mut problems);
    }

    let has_seed = table.contains_key("seed");
    let experiment = match toml::Value::Table(table).try_into::<ExperimentConfig>() {
        Ok(mut cfg) => {
            if !has_seed {
                match seed(None) {
                    Ok(s) => cfg.seed = s,
                    Err(e) => problems.push(e.to_string()),
                }
            }
            match cfg.validate() {
                Err(EvalError::InvalidConfig(list)) => problems.extend(list),
                Err(e) => problems.push(e.to_string()),
                Ok(()) => {}
            }
            if deltas.is_some() && cfg.methods().len() < 2 {
                problems.push("`deltas` needs at least one ad-hoc threshold or the noise floor".into());
            }
            Some(cfg)
        }
        Err(e) => {
            problems.push(e.message().trim().to_string());
            None
        }
    };

    let truth = truth_path.and_then(|p| match fs::read_to_string(&p) {
        Ok(text) => match io::parse_network(&text) {
            Ok(net) => Some(net),
            Err(e) => {
                problems.push(format!("truth {}: {e}", p.display()));
                None
            }
        },
        Err(e) => {
            problems.push(format!("cannot read truth {}: {e}", p.display()));
            None
        }
    });

    match (truth, output, experiment) {
        (Some(truth), Some(output), Some(experiment)) if problems.is_empty() => {
            Ok(RunConfig { truth, output, deltas, experiment })
        }
        _ => Err(usage(format!("{}:\n  {}", path.display(), problems.join("\n  ")))),
    }
}

pub fn experiment(config: &Path, jobs: usize) -> CliResult<()> {
    let run = load_run_config(config)?;
    info!(
        "{} sizes x {} repeats, {} replicates each",
        run.experiment.sample_sizes.len(),
        run.experiment.repeats,
        run.experiment.replicates
    );
    let result = run_experiment(&run.truth, &run.experiment, jobs).or_fail(Kind::Internal)?;
    emit(Some(&run.output), &result.to_tsv())?;
    if let Some(path) = &run.deltas {
        let rows = threshold_delta_table(&result).or_fail(Kind::Internal)?;
        emit(Some(path), &deltas_to_tsv(&rows))?;
    }
    Ok(())
}
