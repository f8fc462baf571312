//! Reproducible Monte-Carlo experiments over a grid of dimensions.
//!
//! Every (grid point, sample) pair is an independent task: the tensor seed
//! depends only on the master seed and the grid coordinates, and the
//! optimizer seed additionally on the sample index, so adding grid points or
//! algorithms never perturbs existing rows. Tasks run on a work-stealing pool
//! while a single writer emits rows in grid order.

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::optim::{fit, metrics, Algorithm, OptimizerConfig};
use crate::random::{sample, Dims, ModelSpec, Seed};
use crate::tensor::euclidean_norm;
use crate::{Error, Result};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "INJNORM_THREADS";

/// Column names of the result CSV, in order.
pub const CSV_COLUMNS: [&str; 17] = [
    "model_kind",
    "field",
    "n",
    "d",
    "q",
    "symmetry",
    "algorithm",
    "rank",
    "seed",
    "sample_index",
    "euclidean_norm",
    "injective_estimate",
    "normalized_estimate",
    "gme_bits",
    "epochs_used",
    "restarts",
    "wall_time_ms",
];

const TENSOR_TAG: u64 = 0;
const OPTIMIZER_TAG: u64 = 1;

fn default_samples() -> usize {
    20
}

fn default_algorithms() -> Vec<Algorithm> {
    vec![Algorithm::Ngd]
}

/// A campaign: one model family swept over a d grid (and a q grid for MPS).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Algorithm>,
    /// Hyperparameters shared by all algorithms; `algorithm` is ignored.
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    /// Physical dimensions to sweep; empty means the model's own `d`.
    #[serde(default)]
    pub d_grid: Vec<usize>,
    /// Bond dimensions to sweep (MPS only); empty means the model's own `q`.
    #[serde(default)]
    pub q_grid: Vec<usize>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    /// Divide every sampled tensor by its Euclidean norm before fitting.
    #[serde(default)]
    pub normalize_input: bool,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(model: ModelSpec) -> Self {
        Self {
            model,
            algorithms: default_algorithms(),
            optimizer: OptimizerConfig::default(),
            d_grid: Vec::new(),
            q_grid: Vec::new(),
            samples: default_samples(),
            seed: 0,
            normalize_input: false,
            output: None,
        }
    }

    pub fn from_toml(src: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(src)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::Spec("samples must be at least 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Spec("at least one algorithm is required".into()));
        }
        if self.d_grid.contains(&0) || self.q_grid.contains(&0) {
            return Err(Error::Spec("grid values must be positive".into()));
        }
        if !self.q_grid.is_empty() && !self.model.kind.is_mps() {
            return Err(Error::Spec(format!(
                "{} models take no q grid",
                self.model.kind
            )));
        }
        self.optimizer.validate()?;
        for (d, q) in self.grid()? {
            self.spec_at(d, q).validate()?;
        }
        Ok(())
    }

    /// Grid points (d, q) in output order: d outer, q inner.
    pub fn grid(&self) -> Result<Vec<(usize, Option<usize>)>> {
        let ds = if self.d_grid.is_empty() {
            match &self.model.d {
                Dims::Uniform(d) => vec![*d],
                Dims::PerSite(_) => {
                    return Err(Error::Spec("per-site d needs an explicit d_grid".into()))
                }
            }
        } else {
            self.d_grid.clone()
        };
        let qs: Vec<Option<usize>> = if !self.model.kind.is_mps() {
            vec![None]
        } else if self.q_grid.is_empty() {
            match &self.model.q {
                Some(Dims::Uniform(q)) => vec![Some(*q)],
                _ => {
                    return Err(Error::Spec(
                        "MPS experiments need a uniform q or a q_grid".into(),
                    ))
                }
            }
        } else {
            self.q_grid.iter().map(|&q| Some(q)).collect()
        };
        Ok(ds
            .iter()
            .flat_map(|&d| qs.iter().map(move |&q| (d, q)))
            .collect())
    }

    fn spec_at(&self, d: usize, q: Option<usize>) -> ModelSpec {
        ModelSpec {
            d: Dims::Uniform(d),
            q: q.map(Dims::Uniform),
            ..self.model.clone()
        }
    }
}

/// One CSV row. Metric columns are empty when the task failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub model_kind: String,
    pub field: String,
    pub n: usize,
    pub d: usize,
    pub q: Option<usize>,
    pub symmetry: String,
    pub algorithm: String,
    pub rank: usize,
    pub seed: u64,
    pub sample_index: u64,
    pub euclidean_norm: Option<f64>,
    pub injective_estimate: Option<f64>,
    pub normalized_estimate: Option<f64>,
    pub gme_bits: Option<f64>,
    pub epochs_used: Option<usize>,
    pub restarts: usize,
    pub wall_time_ms: f64,
}

/// Seed of the tensor sampled at grid point (d, q); the sample index selects
/// the stream.
pub fn tensor_seed(master: u64, d: usize, q: Option<usize>) -> Seed {
    Seed(master).derive(&[TENSOR_TAG, d as u64, q.map_or(0, |q| q as u64)])
}

/// Optimizer seed for one (grid point, sample); restarts derive from it.
pub fn optimizer_seed(master: u64, d: usize, q: Option<usize>, sample_index: u64) -> Seed {
    Seed(master).derive(&[
        OPTIMIZER_TAG,
        d as u64,
        q.map_or(0, |q| q as u64),
        sample_index,
    ])
}

struct Task {
    d: usize,
    q: Option<usize>,
    sample_index: u64,
}

fn run_task(cfg: &ExperimentConfig, task: &Task) -> Vec<ResultRecord> {
    let spec = cfg.spec_at(task.d, task.q);
    let base = |algorithm: Algorithm| ResultRecord {
        model_kind: spec.kind.as_str().to_string(),
        field: spec.field.as_str().to_string(),
        n: spec.n,
        d: task.d,
        q: task.q,
        symmetry: spec.kind.symmetry().to_string(),
        algorithm: algorithm.as_str().to_string(),
        rank: cfg.optimizer.rank,
        seed: cfg.seed,
        sample_index: task.sample_index,
        euclidean_norm: None,
        injective_estimate: None,
        normalized_estimate: None,
        gme_bits: None,
        epochs_used: None,
        restarts: cfg.optimizer.restarts,
        wall_time_ms: 0.0,
    };
    let sampled = sample(
        &spec,
        tensor_seed(cfg.seed, task.d, task.q),
        task.sample_index,
    )
    .and_then(|t| {
        if cfg.normalize_input {
            t.normalized()
        } else {
            Ok(t)
        }
    });
    cfg.algorithms
        .iter()
        .map(|&algorithm| {
            let start = Instant::now();
            let mut rec = base(algorithm);
            let outcome = sampled.as_ref().map_err(|e| e.to_string()).and_then(|psi| {
                let norm = euclidean_norm(psi);
                if norm == 0.0 {
                    return Err(Error::ZeroTensor.to_string());
                }
                let ocfg = OptimizerConfig {
                    algorithm,
                    seed: optimizer_seed(cfg.seed, task.d, task.q, task.sample_index),
                    record_trace: false,
                    ..cfg.optimizer.clone()
                };
                fit(psi, &ocfg)
                    .map(|best| metrics(best, norm))
                    .map_err(|e| e.to_string())
            });
            match outcome {
                Ok(est) => {
                    rec.euclidean_norm = Some(est.euclidean_norm);
                    rec.injective_estimate = Some(est.injective_norm);
                    rec.normalized_estimate = Some(est.normalized);
                    rec.gme_bits = Some(est.gme_bits);
                    rec.epochs_used = Some(est.best.epochs_used);
                }
                Err(msg) => log::warn!(
                    "{} d={} q={:?} sample={} {}: {msg}",
                    rec.model_kind,
                    rec.d,
                    rec.q,
                    rec.sample_index,
                    rec.algorithm
                ),
            }
            rec.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
            rec
        })
        .collect()
}

/// Thread pool sized by `INJNORM_THREADS` (unset or 0: all cores).
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse::<usize>().map_err(|_| {
            Error::Spec(format!(
                "{THREADS_ENV} must be a non-negative integer, got `{v}`"
            ))
        })?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Spec(format!("cannot build thread pool: {e}")))
}

/// Runs the campaign, streaming rows to `cfg.output` (if set) in grid order,
/// and returns all rows.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    cfg.validate()?;
    let tasks: Vec<Task> = cfg
        .grid()?
        .into_iter()
        .flat_map(|(d, q)| {
            (0..cfg.samples as u64).map(move |sample_index| Task { d, q, sample_index })
        })
        .collect();
    let mut writer = match &cfg.output {
        Some(path) => Some(open_results(path)?),
        None => None,
    };
    let pool = thread_pool()?;
    let (tx, rx) = mpsc::channel::<(usize, Vec<ResultRecord>)>();
    let n_tasks = tasks.len();

    std::thread::scope(|scope| {
        let collector = scope.spawn(move || -> Result<Vec<ResultRecord>> {
            let mut pending: BTreeMap<usize, Vec<ResultRecord>> = BTreeMap::new();
            let mut next = 0;
            let mut all = Vec::new();
            for (i, recs) in rx {
                pending.insert(i, recs);
                while let Some(recs) = pending.remove(&next) {
                    if let Some(w) = writer.as_mut() {
                        for r in &recs {
                            w.serialize(r)?;
                        }
                        w.flush()?;
                    }
                    all.extend(recs);
                    next += 1;
                }
            }
            debug_assert_eq!(next, n_tasks);
            Ok(all)
        });
        pool.install(|| {
            tasks
                .par_iter()
                .enumerate()
                .for_each_with(tx, |tx, (i, task)| {
                    // the receiver only disappears if writing failed; its error is reported below
                    let _ = tx.send((i, run_task(cfg, task)));
                });
        });
        collector.join().expect("writer thread panicked")
    })
}

/// Opens a result file for appending, writing the header only to new or
/// empty files. An existing header must match the current schema.
pub fn open_results(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let existing = match std::fs::File::open(path) {
        Ok(f) => {
            let mut first = String::new();
            BufReader::new(f).read_line(&mut first)?;
            Some(first)
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
        Err(e) => return Err(e.into()),
    };
    let write_header = match existing.as_deref().map(str::trim_end) {
        None | Some("") => true,
        Some(h) if h == CSV_COLUMNS.join(",") => false,
        Some(h) => {
            return Err(Error::Format(format!(
                "{} has an incompatible header `{h}`",
                path.display()
            )));
        }
    };
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(file);
    if write_header {
        w.write_record(CSV_COLUMNS)?;
        w.flush()?;
    }
    Ok(w)
}

/// Reads a result CSV written by [`run_experiment`].
pub fn read_results(path: &Path) -> Result<Vec<ResultRecord>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
    if headers != CSV_COLUMNS {
        return Err(Error::Format(format!(
            "unexpected result columns {headers:?}"
        )));
    }
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// Writes rows (with header) to any writer.
pub fn write_results<W: Write>(records: &[ResultRecord], w: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    w.write_record(CSV_COLUMNS)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::ModelKind;
    use crate::Field;

    fn small_cfg() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(ModelSpec::new(ModelKind::Gaussian, Field::Real, 2, 3));
        cfg.d_grid = vec![2, 3];
        cfg.samples = 2;
        cfg.optimizer.restarts = 2;
        cfg.optimizer.max_epochs = 200;
        cfg.algorithms = vec![Algorithm::Ngd, Algorithm::Als];
        cfg
    }

    #[test]
    fn config_from_toml() {
        let src = r#"
            algorithms = ["ngd", "als"]
            d_grid = [16, 25]
            samples = 3
            seed = 7

            [model]
            kind = "gaussian-symmetrized"
            field = "real"
            n = 3
            d = 16

            [optimizer]
            restarts = 4
        "#;
        let cfg = ExperimentConfig::from_toml(src).unwrap();
        assert_eq!(cfg.optimizer.restarts, 4);
        assert_eq!(cfg.optimizer.learning_rate, 0.05);
        assert_eq!(cfg.grid().unwrap(), vec![(16, None), (25, None)]);
        assert!(ExperimentConfig::from_toml(
            "samples = 0\n[model]\nkind=\"gaussian\"\nfield=\"real\"\nn=2\nd=2\n"
        )
        .is_err());
        assert!(ExperimentConfig::from_toml(
            "bogus = 1\n[model]\nkind=\"gaussian\"\nfield=\"real\"\nn=2\nd=2\n"
        )
        .is_err());
    }

    #[test]
    fn mps_grid_order() {
        let mut cfg = ExperimentConfig::new(ModelSpec::mps(false, Field::Complex, 3, 2, 2));
        cfg.d_grid = vec![2, 4];
        cfg.q_grid = vec![1, 3];
        assert_eq!(
            cfg.grid().unwrap(),
            vec![(2, Some(1)), (2, Some(3)), (4, Some(1)), (4, Some(3))]
        );
    }

    #[test]
    fn rows_are_ordered_and_consistent() {
        let cfg = small_cfg();
        let rows = run_experiment(&cfg).unwrap();
        assert_eq!(rows.len(), 2 * 2 * 2);
        let keys: Vec<(usize, u64, &str)> = rows
            .iter()
            .map(|r| (r.d, r.sample_index, r.algorithm.as_str()))
            .collect();
        assert_eq!(keys[0], (2, 0, "ngd"));
        assert_eq!(keys[1], (2, 0, "als"));
        assert_eq!(keys[7], (3, 1, "als"));
        for r in &rows {
            let (norm, inj, nrm, gme) = (
                r.euclidean_norm.unwrap(),
                r.injective_estimate.unwrap(),
                r.normalized_estimate.unwrap(),
                r.gme_bits.unwrap(),
            );
            assert!((nrm - inj / norm).abs() < 1e-12);
            assert!((gme + (nrm * nrm).log2()).abs() < 1e-12);
        }
    }

    #[test]
    fn append_keeps_single_header_and_rejects_foreign_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let mut cfg = small_cfg();
        cfg.d_grid = vec![2];
        cfg.samples = 1;
        cfg.output = Some(path.clone());
        run_experiment(&cfg).unwrap();
        run_experiment(&cfg).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text.lines().filter(|l| l.starts_with("model_kind")).count(),
            1
        );
        assert_eq!(read_results(&path).unwrap().len(), 4);
        let foreign = dir.path().join("foreign.csv");
        std::fs::write(&foreign, "a,b\n1,2\n").unwrap();
        cfg.output = Some(foreign);
        assert!(matches!(run_experiment(&cfg), Err(Error::Format(_))));
    }
}
