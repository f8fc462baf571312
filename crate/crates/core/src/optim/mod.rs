//! Product-state approximation: ALS, PIM, NGD and SGD, the multi-restart
//! driver and the injective-norm / GME estimator built on it.
//!
//! All four algorithms approximate Ψ by φ = Σ_r ⊗_k a_rk and are scored by
//! the overlap |⟨Ψ|φ̂⟩| of the normalized candidate, which is a lower bound
//! on the injective norm.

mod als;
mod descent;
mod pim;

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::candidate::{assemble_product, ProductCandidate};
use crate::contract;
use crate::random::{init_core, Seed, DOMAIN_INIT};
use crate::scalar::{Element, Field};
use crate::tensor::{euclidean_norm, DenseTensor};
use crate::{Error, Result};

/// Optimization algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Alternating least squares over the cores.
    Als,
    /// Symmetric higher-order power iteration.
    Pim,
    /// Normalized gradient descent.
    Ngd,
    /// Symmetrized gradient descent with one shared core per rank term.
    Sgd,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Ngd,
        Algorithm::Sgd,
        Algorithm::Als,
        Algorithm::Pim,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Als => "als",
            Algorithm::Pim => "pim",
            Algorithm::Ngd => "ngd",
            Algorithm::Sgd => "sgd",
        }
    }

    /// Whether the algorithm needs equal dimensions on every factor.
    pub fn needs_hypercubic(self) -> bool {
        matches!(self, Algorithm::Pim | Algorithm::Sgd)
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "als" => Ok(Algorithm::Als),
            "pim" => Ok(Algorithm::Pim),
            "ngd" => Ok(Algorithm::Ngd),
            "sgd" => Ok(Algorithm::Sgd),
            other => Err(Error::Spec(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// Optimizer hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub algorithm: Algorithm,
    pub rank: usize,
    /// Step size α of NGD and SGD.
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Stop once the loss improved by less than `tol` over the last
    /// `plateau_window` epochs.
    pub tol: f64,
    pub plateau_window: usize,
    pub restarts: usize,
    pub seed: Seed,
    /// Keep the per-epoch loss values in the result.
    pub record_trace: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Ngd,
            rank: 1,
            learning_rate: 0.05,
            max_epochs: 10_000,
            tol: 1e-10,
            plateau_window: 100,
            restarts: 10,
            seed: Seed(0),
            record_trace: false,
        }
    }
}

impl OptimizerConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: impl Into<Seed>) -> Self {
        self.seed = seed.into();
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_rank(mut self, rank: usize) -> Self {
        self.rank = rank;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::Spec("rank must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Spec(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.max_epochs == 0 {
            return Err(Error::Spec("max_epochs must be positive".into()));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::Spec(format!(
                "tol must be non-negative, got {}",
                self.tol
            )));
        }
        if self.plateau_window == 0 {
            return Err(Error::Spec("plateau_window must be positive".into()));
        }
        if self.restarts == 0 {
            return Err(Error::Spec("restarts must be at least 1".into()));
        }
        Ok(())
    }

    fn check_target(&self, psi: &DenseTensor) -> Result<()> {
        self.validate()?;
        if self.algorithm.needs_hypercubic() && !psi.is_hypercubic() {
            return Err(Error::Shape(format!(
                "{} needs equal dimensions on every factor, got {:?}",
                self.algorithm,
                psi.shape()
            )));
        }
        Ok(())
    }
}

/// Outcome of a fit: the best normalized candidate over all restarts.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeResult {
    /// Candidate with unit-norm cores.
    pub candidate: ProductCandidate,
    /// |⟨Ψ|φ̂⟩| of the best rank-one term of the candidate.
    pub overlap: f64,
    /// ‖Ψ − φ̂‖² of the normalized candidate.
    pub loss: f64,
    pub epochs_used: usize,
    pub restart_index: usize,
    pub loss_trace: Option<Vec<f64>>,
    /// An ALS subproblem needed ridge regularization.
    pub regularized: bool,
}

/// Injective-norm estimate of a tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    /// Best overlap, a lower bound on ‖Ψ‖_ε.
    pub injective_norm: f64,
    /// injective_norm / ‖Ψ‖.
    pub normalized: f64,
    /// −log₂(normalized²).
    pub gme_bits: f64,
    pub euclidean_norm: f64,
    pub best: OptimizeResult,
}

/// Output of one restart, in the element type of the target.
pub(crate) struct Run<T> {
    /// cores[r][k]; shared-core algorithms repeat the core over k.
    pub cores: Vec<Vec<Vec<T>>>,
    pub epochs_used: usize,
    pub trace: Vec<f64>,
    pub regularized: bool,
}

/// True once `trace[t − window] − trace[t] < tol` for the latest epoch t.
pub(crate) fn plateaued(trace: &[f64], window: usize, tol: f64) -> bool {
    let t = trace.len();
    t > window && trace[t - 1 - window] - trace[t - 1] < tol
}

/// Random initial cores: each entry N(0, 1/d_k).
pub(crate) fn init_cores<T: Element>(
    shape: &[usize],
    rank: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<Vec<T>>> {
    (0..rank)
        .map(|_| shape.iter().map(|&d| init_core(d, rng)).collect())
        .collect()
}

/// G[r·R + s] = ⟨a_rk, a_sk⟩ for mode k.
pub(crate) fn gram<T: Element>(cores: &[Vec<Vec<T>>], k: usize) -> Vec<T> {
    let r = cores.len();
    let mut g = vec![T::zero(); r * r];
    for i in 0..r {
        for j in 0..r {
            g[i * r + j] = T::dot(&cores[i][k], &cores[j][k]);
        }
    }
    g
}

/// ‖φ‖² = Σ_rs Π_k ⟨a_rk, a_sk⟩.
pub(crate) fn candidate_norm_sqr<T: Element>(cores: &[Vec<Vec<T>>]) -> f64 {
    let r = cores.len();
    let n = cores[0].len();
    let grams: Vec<Vec<T>> = (0..n).map(|k| gram(cores, k)).collect();
    let mut total = T::zero();
    for i in 0..r * r {
        let mut p = T::one();
        for g in &grams {
            p *= g[i];
        }
        total += p;
    }
    total.re()
}

fn conj_core<T: Element>(c: &[T]) -> Vec<T> {
    c.iter().map(|x| x.conj()).collect()
}

/// Σ_i Ψ[i]·conj(φ_r[i]) for one rank term, i.e. the conjugate of ⟨Ψ|φ_r⟩.
pub(crate) fn term_overlap<T: Element>(psi: &[T], shape: &[usize], term: &[Vec<T>]) -> T {
    let conj: Vec<Vec<T>> = term.iter().map(|c| conj_core(c)).collect();
    let refs: Vec<&[T]> = conj.iter().map(Vec::as_slice).collect();
    contract::full(psi, shape, &refs)
}

/// (loss, best term overlap) of `cores` against Ψ.
pub(crate) fn evaluate<T: Element>(
    psi: &[T],
    shape: &[usize],
    psi_norm_sqr: f64,
    cores: &[Vec<Vec<T>>],
) -> (f64, f64) {
    let mut cross = 0.0;
    let mut best = 0.0f64;
    for term in cores {
        let f = term_overlap(psi, shape, term);
        cross += f.re();
        best = best.max(f.abs());
    }
    (psi_norm_sqr + candidate_norm_sqr(cores) - 2.0 * cross, best)
}

/// Squared error ‖Ψ − φ‖² between a tensor and an assembled candidate.
pub fn loss(psi: &DenseTensor, candidate: &ProductCandidate) -> Result<f64> {
    check_candidate(psi, candidate)?;
    let phi = assemble_product(candidate)?;
    Ok(psi.sub(&phi)?.norm_sqr())
}

fn check_candidate(psi: &DenseTensor, candidate: &ProductCandidate) -> Result<()> {
    if candidate.shape() != psi.shape() {
        return Err(Error::Shape(format!(
            "candidate shape {:?} does not match tensor shape {:?}",
            candidate.shape(),
            psi.shape()
        )));
    }
    if candidate.field() != psi.field() {
        return Err(Error::Field(format!(
            "candidate is {}, tensor is {}",
            candidate.field(),
            psi.field()
        )));
    }
    Ok(())
}

/// Gradient of ‖Ψ − φ‖² with respect to core (r, k).
///
/// Real and imaginary parts are independent real coordinates; the returned
/// vector holds ∂/∂Re + i·∂/∂Im, which is 2 Σ_s c_rs a_sk − 2 v_rk with
/// c_rs = Π_{l≠k} ⟨a_rl, a_sl⟩ and v_rk the contraction of Ψ with the
/// conjugated cores of term r on every mode but k.
pub fn gradient(
    psi: &DenseTensor,
    candidate: &ProductCandidate,
    k: usize,
    r: usize,
) -> Result<Vec<Complex64>> {
    check_candidate(psi, candidate)?;
    if r >= candidate.rank() || k >= candidate.order() {
        return Err(Error::Index(format!(
            "core ({r}, {k}) out of range for rank {} order {}",
            candidate.rank(),
            candidate.order()
        )));
    }
    Ok(match psi.field() {
        Field::Real => gradient_typed::<f64>(psi, candidate, k, r),
        Field::Complex => gradient_typed::<Complex64>(psi, candidate, k, r),
    })
}

fn gradient_typed<T: Element>(
    psi: &DenseTensor,
    candidate: &ProductCandidate,
    k: usize,
    r: usize,
) -> Vec<Complex64> {
    let cores = candidate.typed_cores::<T>();
    let data = T::slice(psi).expect("field checked");
    let conj: Vec<Vec<T>> = cores[r].iter().map(|c| conj_core(c)).collect();
    let refs: Vec<&[T]> = conj.iter().map(Vec::as_slice).collect();
    let v = contract::all_but(data, psi.shape(), &refs, k);
    let mut g: Vec<T> = v.iter().map(|&x| x.scale(-2.0)).collect();
    for term in &cores {
        let mut c = T::one();
        for l in (0..candidate.order()).filter(|&l| l != k) {
            c *= T::dot(&cores[r][l], &term[l]);
        }
        T::axpy(c.scale(2.0), &term[k], &mut g);
    }
    g.into_iter().map(Element::to_complex).collect()
}

fn run_restart<T: Element>(
    psi: &DenseTensor,
    cfg: &OptimizerConfig,
    restart: usize,
) -> Result<OptimizeResult> {
    let data = T::slice(psi).expect("field dispatched");
    let shape = psi.shape();
    let norm_sqr = psi.norm_sqr();
    let mut rng = cfg.seed.derive(&[restart as u64]).stream(DOMAIN_INIT, 0);
    let run: Run<T> = match cfg.algorithm {
        Algorithm::Ngd => descent::ngd(data, shape, norm_sqr, cfg, &mut rng)?,
        Algorithm::Sgd => descent::sgd(data, shape, norm_sqr, cfg, &mut rng)?,
        Algorithm::Als => als::als(data, shape, norm_sqr, cfg, &mut rng)?,
        Algorithm::Pim => pim::pim(data, shape, cfg, &mut rng)?,
    };
    let mut cores = run.cores;
    for c in cores.iter_mut().flatten() {
        crate::scalar::normalize_in_place(c);
    }
    let (loss, overlap) = evaluate(data, shape, norm_sqr, &cores);
    Ok(OptimizeResult {
        candidate: ProductCandidate::from_typed(cores),
        overlap,
        loss,
        epochs_used: run.epochs_used,
        restart_index: restart,
        loss_trace: cfg.record_trace.then_some(run.trace),
        regularized: run.regularized,
    })
}

/// Single restart of the configured algorithm; restart `i` of [`fit`] is
/// exactly `fit_restart(psi, cfg, i)`.
pub fn fit_restart(
    psi: &DenseTensor,
    cfg: &OptimizerConfig,
    restart: usize,
) -> Result<OptimizeResult> {
    cfg.check_target(psi)?;
    match psi.field() {
        Field::Real => run_restart::<f64>(psi, cfg, restart),
        Field::Complex => run_restart::<Complex64>(psi, cfg, restart),
    }
}

/// Best result over `cfg.restarts` independent restarts (largest overlap,
/// lowest restart index on ties). Restarts run in parallel.
pub fn fit(psi: &DenseTensor, cfg: &OptimizerConfig) -> Result<OptimizeResult> {
    cfg.check_target(psi)?;
    let results: Vec<Result<OptimizeResult>> = (0..cfg.restarts)
        .into_par_iter()
        .map(|i| fit_restart(psi, cfg, i))
        .collect();
    let mut best: Option<OptimizeResult> = None;
    for res in results {
        let res = res?;
        if best.as_ref().is_none_or(|b| res.overlap > b.overlap) {
            best = Some(res);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn fit_with(
    psi: &DenseTensor,
    cfg: &OptimizerConfig,
    algorithm: Algorithm,
) -> Result<OptimizeResult> {
    fit(
        psi,
        &OptimizerConfig {
            algorithm,
            ..cfg.clone()
        },
    )
}

/// Normalized gradient descent; `cfg.algorithm` is ignored.
pub fn ngd_fit(psi: &DenseTensor, cfg: &OptimizerConfig) -> Result<OptimizeResult> {
    fit_with(psi, cfg, Algorithm::Ngd)
}

/// Symmetrized gradient descent; `cfg.algorithm` is ignored.
pub fn sgd_fit(psi: &DenseTensor, cfg: &OptimizerConfig) -> Result<OptimizeResult> {
    fit_with(psi, cfg, Algorithm::Sgd)
}

/// Alternating least squares; `cfg.algorithm` is ignored.
pub fn als_fit(psi: &DenseTensor, cfg: &OptimizerConfig) -> Result<OptimizeResult> {
    fit_with(psi, cfg, Algorithm::Als)
}

/// Symmetric power iteration; `cfg.algorithm` is ignored.
pub fn pim_fit(psi: &DenseTensor, cfg: &OptimizerConfig) -> Result<OptimizeResult> {
    fit_with(psi, cfg, Algorithm::Pim)
}

/// Injective norm, normalized injective norm and GME estimates of Ψ from
/// the best of `cfg.restarts` fits.
pub fn estimate_injective_norm(psi: &DenseTensor, cfg: &OptimizerConfig) -> Result<Estimate> {
    let norm = euclidean_norm(psi);
    if norm == 0.0 {
        return Err(Error::ZeroTensor);
    }
    let best = fit(psi, cfg)?;
    Ok(metrics(best, norm))
}

/// Derived metrics of a fit against a tensor of Euclidean norm `norm`.
pub fn metrics(best: OptimizeResult, norm: f64) -> Estimate {
    let injective_norm = best.overlap;
    let normalized = injective_norm / norm;
    Estimate {
        injective_norm,
        normalized,
        gme_bits: gme_bits(normalized),
        euclidean_norm: norm,
        best,
    }
}

/// −log₂(x²) for a normalized injective norm x.
pub fn gme_bits(normalized: f64) -> f64 {
    -2.0 * normalized.log2()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_validation() {
        let c = OptimizerConfig::default();
        assert_eq!(
            (
                c.learning_rate,
                c.max_epochs,
                c.tol,
                c.plateau_window,
                c.restarts
            ),
            (0.05, 10_000, 1e-10, 100, 10)
        );
        assert!(c.validate().is_ok());
        assert!(OptimizerConfig {
            rank: 0,
            ..c.clone()
        }
        .validate()
        .is_err());
        assert!(OptimizerConfig {
            learning_rate: -1.0,
            ..c.clone()
        }
        .validate()
        .is_err());
        assert!(OptimizerConfig {
            restarts: 0,
            ..c.clone()
        }
        .validate()
        .is_err());
        let parsed: OptimizerConfig =
            toml::from_str("algorithm = \"als\"\nrestarts = 3\n").unwrap();
        assert_eq!(parsed.algorithm, Algorithm::Als);
        assert_eq!(parsed.restarts, 3);
        assert_eq!(parsed.max_epochs, 10_000);
        assert!(toml::from_str::<OptimizerConfig>("epochs = 3\n").is_err());
    }

    #[test]
    fn plateau_rule() {
        assert!(!plateaued(&[3.0, 2.0], 2, 1e-3));
        assert!(!plateaued(&[3.0, 2.0, 1.0], 2, 1e-3));
        assert!(plateaued(&[1.0, 1.0, 1.0], 2, 1e-3));
    }

    #[test]
    fn zero_tensor_is_rejected() {
        let z = DenseTensor::zeros(Field::Real, vec![2, 2]).unwrap();
        assert!(matches!(
            estimate_injective_norm(&z, &OptimizerConfig::default()),
            Err(Error::ZeroTensor)
        ));
    }

    #[test]
    fn symmetric_algorithms_need_hypercubic_targets() {
        let t = DenseTensor::from_real(vec![2, 3], vec![1.0; 6]).unwrap();
        for alg in [Algorithm::Pim, Algorithm::Sgd] {
            assert!(matches!(
                fit(&t, &OptimizerConfig::new(alg)),
                Err(Error::Shape(_))
            ));
        }
    }

    #[test]
    fn loss_of_exact_product_is_zero() {
        let c = ProductCandidate::from_real(vec![vec![vec![0.6, 0.8], vec![1.0, 0.0]]]).unwrap();
        let psi = assemble_product(&c).unwrap();
        assert!(loss(&psi, &c).unwrap() < 1e-15);
        let zero = DenseTensor::zeros(Field::Real, vec![2, 2]).unwrap();
        assert!((loss(&zero, &c).unwrap() - 1.0).abs() < 1e-15);
        let g = gradient(&psi, &c, 0, 0).unwrap();
        assert!(g.iter().all(|z| z.norm() < 1e-14));
        assert!(matches!(gradient(&psi, &c, 2, 0), Err(Error::Index(_))));
    }

    #[test]
    fn restarts_are_reproducible_and_independent_of_count() {
        let psi = DenseTensor::from_real(vec![2, 2, 2], (0..8).map(|x| (x as f64).sin()).collect())
            .unwrap();
        let cfg = OptimizerConfig::new(Algorithm::Ngd)
            .with_restarts(4)
            .with_seed(11);
        let all = fit(&psi, &cfg).unwrap();
        let again = fit(&psi, &cfg).unwrap();
        assert_eq!(all, again);
        let single = fit_restart(&psi, &cfg, all.restart_index).unwrap();
        assert_eq!(single, all);
    }
}
