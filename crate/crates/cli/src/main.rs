use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use injnorm::bench::{run_experiment, ExperimentConfig};
use injnorm::fit::{self, FitModel};
use injnorm::io;
use injnorm::optim::{fit as run_fit, metrics, Algorithm, OptimizerConfig};
use injnorm::random::{sample, Dims, ModelKind, ModelSpec, Seed};
use injnorm::states::{build_antisym, build_dicke, gme_antisym, gme_dicke, AntisymSpec, DickeSpec};
use injnorm::{euclidean_norm, operator_norm_order2, DenseTensor, Error, Field};

#[derive(Parser)]
#[command(
    name = "injnorm",
    version,
    about = "Injective norm and geometric entanglement estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the injective norm and GME of one tensor.
    Estimate(EstimateArgs),
    /// Sample a random tensor and write it to a file.
    Sample(SampleArgs),
    /// Build a Dicke or antisymmetric reference state.
    State(StateArgs),
    /// Run an experiment campaign from a TOML config.
    Bench(BenchArgs),
    /// Fit a scaling form to CSV data.
    Fit(FitArgs),
}

#[derive(Args)]
struct ModelArgs {
    /// Model kind: gaussian, gaussian-symmetrized, gaussian-cyclic, mps, mps-translation-invariant.
    #[arg(long)]
    model: Option<ModelKind>,
    #[arg(long, default_value = "real")]
    field: Field,
    #[arg(long)]
    n: Option<usize>,
    /// Local dimension, one value or a comma-separated per-site list.
    #[arg(long, value_delimiter = ',')]
    d: Vec<usize>,
    /// Bond dimensions (MPS only), one value or a per-site list.
    #[arg(long, value_delimiter = ',')]
    q: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    sample_index: u64,
}

impl ModelArgs {
    fn spec(&self) -> Result<ModelSpec, Error> {
        let kind = self
            .model
            .ok_or_else(|| Error::Spec("--model is required".into()))?;
        let n = self
            .n
            .ok_or_else(|| Error::Spec("--n is required".into()))?;
        let dims = |v: &[usize]| match v {
            [x] => Dims::Uniform(*x),
            _ => Dims::PerSite(v.to_vec()),
        };
        if self.d.is_empty() {
            return Err(Error::Spec("--d is required".into()));
        }
        let spec = ModelSpec {
            kind,
            field: self.field,
            n,
            d: dims(&self.d),
            q: (!self.q.is_empty()).then(|| dims(&self.q)),
            seed: Some(self.seed),
        };
        spec.validate()?;
        Ok(spec)
    }

    fn sample(&self) -> Result<DenseTensor, Error> {
        sample(&self.spec()?, Seed(self.seed), self.sample_index)
    }
}

#[derive(Args)]
struct OptimizerArgs {
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    plateau_window: Option<usize>,
}

impl OptimizerArgs {
    fn apply(&self, cfg: &mut OptimizerConfig) {
        if let Some(v) = self.restarts {
            cfg.restarts = v;
        }
        if let Some(v) = self.rank {
            cfg.rank = v;
        }
        if let Some(v) = self.learning_rate {
            cfg.learning_rate = v;
        }
        if let Some(v) = self.max_epochs {
            cfg.max_epochs = v;
        }
        if let Some(v) = self.tol {
            cfg.tol = v;
        }
        if let Some(v) = self.plateau_window {
            cfg.plateau_window = v;
        }
    }
}

#[derive(Args)]
struct EstimateArgs {
    /// Tensor file (binary container, or JSON for `.json`); otherwise sample from the model flags.
    #[arg(long, conflicts_with = "model")]
    input: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    /// ngd, sgd, als, pim, or svd-oracle for order-2 tensors.
    #[arg(long, default_value = "ngd")]
    algorithm: String,
    #[command(flatten)]
    optimizer: OptimizerArgs,
    /// Seed of the optimizer restarts.
    #[arg(long, default_value_t = 0)]
    opt_seed: u64,
    /// Divide the tensor by its Euclidean norm first.
    #[arg(long)]
    normalize: bool,
    /// Write the best restart's per-epoch loss as CSV (epoch,loss).
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Output file; `.json` selects the JSON form.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct StateArgs {
    #[arg(long, conflicts_with = "antisym", required_unless_present = "antisym")]
    dicke: bool,
    #[arg(long)]
    antisym: bool,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    /// Dicke occupation numbers, comma separated.
    #[arg(long, value_delimiter = ',')]
    k: Vec<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    config: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    algorithms: Vec<Algorithm>,
    #[arg(long, value_delimiter = ',')]
    d_grid: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    q_grid: Vec<usize>,
    #[arg(long)]
    normalize_input: bool,
    #[command(flatten)]
    optimizer: OptimizerArgs,
}

#[derive(Args)]
struct FitArgs {
    /// sqrt-inverse or mps-surface.
    #[arg(long)]
    model: FitModel,
    input: PathBuf,
    /// Column to fit (defaults: injective_estimate for sqrt-inverse, normalized_estimate for mps-surface, y for plain files).
    #[arg(long)]
    column: Option<String>,
    /// Weight aggregated grid points by their sample counts.
    #[arg(long)]
    weighted: bool,
}

/// Failure with its exit code: 2 for usage and input problems, 1 otherwise.
struct Failure {
    code: u8,
    kind: String,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Spec(_) | Error::Format(_) => 2,
            Error::Io(io) if io.kind() == std::io::ErrorKind::NotFound => 2,
            _ => 1,
        };
        Failure {
            code,
            kind: e.kind().to_string(),
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.render().to_string();
            eprintln!(
                "{}",
                json!({ "error": "usage", "message": message.trim_end() })
            );
            return ExitCode::from(2);
        }
    };
    let outcome = match cli.command {
        Command::Estimate(a) => estimate(a),
        Command::Sample(a) => sample_cmd(a),
        Command::State(a) => state(a),
        Command::Bench(a) => bench(a),
        Command::Fit(a) => fit_cmd(a),
    };
    match outcome {
        Ok(v) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&v).expect("JSON values serialize")
            );
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("{}", json!({ "error": f.kind, "message": f.message }));
            ExitCode::from(f.code)
        }
    }
}

fn estimate(a: EstimateArgs) -> Result<Value, Failure> {
    let mut psi = match &a.input {
        Some(path) => io::load(path)?,
        None => a.model.sample()?,
    };
    if a.normalize {
        psi = psi.normalized()?;
    }
    let norm = euclidean_norm(&psi);
    if a.algorithm == "svd-oracle" {
        if norm == 0.0 {
            return Err(Error::ZeroTensor.into());
        }
        let s = operator_norm_order2(&psi)?;
        let normalized = s / norm;
        return Ok(json!({
            "algorithm": "svd-oracle",
            "shape": psi.shape(),
            "field": psi.field(),
            "euclidean_norm": norm,
            "injective_norm": s,
            "normalized": normalized,
            "gme_bits": injnorm::optim::gme_bits(normalized),
        }));
    }
    let algorithm: Algorithm = a.algorithm.parse()?;
    let mut cfg = OptimizerConfig::new(algorithm).with_seed(a.opt_seed);
    a.optimizer.apply(&mut cfg);
    cfg.record_trace = a.trace.is_some();
    if norm == 0.0 {
        return Err(Error::ZeroTensor.into());
    }
    let est = metrics(run_fit(&psi, &cfg)?, norm);
    if let (Some(path), Some(trace)) = (&a.trace, &est.best.loss_trace) {
        write_trace(path, trace)?;
    }
    Ok(json!({
        "algorithm": algorithm,
        "shape": psi.shape(),
        "field": psi.field(),
        "euclidean_norm": est.euclidean_norm,
        "injective_norm": est.injective_norm,
        "normalized": est.normalized,
        "gme_bits": est.gme_bits,
        "loss": est.best.loss,
        "epochs_used": est.best.epochs_used,
        "restart_index": est.best.restart_index,
        "restarts": cfg.restarts,
        "regularized": est.best.regularized,
    }))
}

fn write_trace(path: &Path, trace: &[f64]) -> Result<(), Error> {
    let mut out = String::from("epoch,loss\n");
    for (i, l) in trace.iter().enumerate() {
        out.push_str(&format!("{i},{l}\n"));
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn sample_cmd(a: SampleArgs) -> Result<Value, Failure> {
    let spec = a.model.spec()?;
    let t = a.model.sample()?;
    io::save(&t, &a.out)?;
    Ok(json!({
        "path": a.out,
        "model": spec,
        "sample_index": a.model.sample_index,
        "shape": t.shape(),
        "euclidean_norm": euclidean_norm(&t),
    }))
}

fn state(a: StateArgs) -> Result<Value, Failure> {
    let (t, gme, desc) = if a.antisym {
        let spec = AntisymSpec::new(a.n, a.d)?;
        (
            build_antisym(&spec)?,
            gme_antisym(&spec)?,
            json!({ "state": "antisym", "n": a.n, "d": a.d }),
        )
    } else {
        let spec = DickeSpec::new(a.n, a.d, a.k.clone())?;
        (
            build_dicke(&spec)?,
            gme_dicke(&spec)?,
            json!({ "state": "dicke", "n": a.n, "d": a.d, "k": a.k }),
        )
    };
    if let Some(path) = &a.out {
        io::save(&t, path)?;
    }
    let mut v = desc;
    v["gme_bits"] = json!(gme);
    v["normalized"] = json!((-gme / 2.0).exp2());
    if let Some(path) = a.out {
        v["path"] = json!(path);
    }
    Ok(v)
}

fn bench(a: BenchArgs) -> Result<Value, Failure> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    if let Some(v) = a.output {
        cfg.output = Some(v);
    }
    if let Some(v) = a.samples {
        cfg.samples = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if !a.algorithms.is_empty() {
        cfg.algorithms = a.algorithms;
    }
    if !a.d_grid.is_empty() {
        cfg.d_grid = a.d_grid;
    }
    if !a.q_grid.is_empty() {
        cfg.q_grid = a.q_grid;
    }
    if a.normalize_input {
        cfg.normalize_input = true;
    }
    a.optimizer.apply(&mut cfg.optimizer);
    let rows = run_experiment(&cfg)?;
    let failed = rows
        .iter()
        .filter(|r| r.injective_estimate.is_none())
        .count();
    Ok(json!({ "rows": rows.len(), "failed": failed, "output": cfg.output }))
}

fn fit_cmd(a: FitArgs) -> Result<Value, Failure> {
    let points = fit::load_points(&a.input, a.model, a.column.as_deref(), a.weighted)?;
    let r = fit::fit(a.model, &points)?;
    Ok(serde_json::from_str(&fit::report_json(&r)?).map_err(Error::from)?)
}
