//! Seeded samplers for Gaussian tensors, their symmetrized projections and
//! Gaussian matrix product states with periodic boundary conditions.
//!
//! Every draw is a pure function of `(ModelSpec, Seed, sample_index)`: the
//! seed and a per-purpose domain tag key a ChaCha stream, and the sample index
//! selects the stream number. Samples can therefore be generated in any order
//! or in parallel without changing a single bit.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::scalar::{Element, Field};
use crate::tensor::{symmetrize_cyclic, symmetrize_full, with_data, DenseTensor};
use crate::{Error, Result};

const DOMAIN_TENSOR: u64 = 0x7465_6e73;
const DOMAIN_MPS: u64 = 0x6d70_7300;
pub(crate) const DOMAIN_INIT: u64 = 0x696e_6974;

/// 64-bit seed of a reproducible random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

impl Seed {
    /// Child seed for a coordinate tuple; independent of any other tuple.
    pub fn derive(self, coords: &[u64]) -> Seed {
        let mut h = splitmix64(self.0 ^ 0x5eed_5eed_5eed_5eed);
        for &c in coords {
            h = splitmix64(h ^ splitmix64(c.wrapping_add(0x9e37_79b9_7f4a_7c15)));
        }
        Seed(h)
    }

    /// ChaCha stream for `(self, domain)` positioned at stream `index`.
    pub(crate) fn stream(self, domain: u64, index: u64) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        let mut h = splitmix64(self.0 ^ splitmix64(domain));
        for chunk in key.chunks_exact_mut(8) {
            h = splitmix64(h);
            chunk.copy_from_slice(&h.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(index);
        rng
    }
}

impl From<u64> for Seed {
    fn from(v: u64) -> Self {
        Seed(v)
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Random ensemble family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Gaussian,
    GaussianSymmetrized,
    GaussianCyclic,
    Mps,
    #[serde(alias = "mps-ti")]
    MpsTranslationInvariant,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Gaussian => "gaussian",
            ModelKind::GaussianSymmetrized => "gaussian-symmetrized",
            ModelKind::GaussianCyclic => "gaussian-cyclic",
            ModelKind::Mps => "mps",
            ModelKind::MpsTranslationInvariant => "mps-translation-invariant",
        }
    }

    pub fn is_mps(self) -> bool {
        matches!(self, ModelKind::Mps | ModelKind::MpsTranslationInvariant)
    }

    /// Symmetry label used in result tables.
    pub fn symmetry(self) -> &'static str {
        match self {
            ModelKind::Gaussian | ModelKind::Mps => "none",
            ModelKind::GaussianSymmetrized => "full",
            ModelKind::GaussianCyclic => "cyclic",
            ModelKind::MpsTranslationInvariant => "translation-invariant",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(ModelKind::Gaussian),
            "gaussian-symmetrized" | "symmetrized" => Ok(ModelKind::GaussianSymmetrized),
            "gaussian-cyclic" | "cyclic" => Ok(ModelKind::GaussianCyclic),
            "mps" => Ok(ModelKind::Mps),
            "mps-translation-invariant" | "mps-ti" => Ok(ModelKind::MpsTranslationInvariant),
            other => Err(Error::Spec(format!("unknown model kind `{other}`"))),
        }
    }
}

/// A dimension given either once for every site or per site.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Dims {
    Uniform(usize),
    PerSite(Vec<usize>),
}

impl Dims {
    fn expand(&self, n: usize, what: &str) -> Result<Vec<usize>> {
        let v = match self {
            Dims::Uniform(d) => vec![*d; n],
            Dims::PerSite(v) if v.len() == 1 => vec![v[0]; n],
            Dims::PerSite(v) if v.len() == n => v.clone(),
            Dims::PerSite(v) => {
                return Err(Error::Spec(format!(
                    "{what} list has {} entries for {n} sites",
                    v.len()
                )))
            }
        };
        if v.contains(&0) {
            return Err(Error::Spec(format!("{what} must be positive, got {v:?}")));
        }
        Ok(v)
    }
}

impl From<usize> for Dims {
    fn from(d: usize) -> Self {
        Dims::Uniform(d)
    }
}

/// Declarative description of a random ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub field: Field,
    /// Order (number of tensor factors / MPS sites).
    pub n: usize,
    /// Local (physical) dimension.
    pub d: Dims,
    /// Bond dimensions q_1..q_n, MPS kinds only; q_{n+1} = q_1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Dims>,
    /// Default seed for tools that sample from this spec.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, field: Field, n: usize, d: usize) -> Self {
        Self {
            kind,
            field,
            n,
            d: Dims::Uniform(d),
            q: None,
            seed: None,
        }
    }

    pub fn mps(translation_invariant: bool, field: Field, n: usize, d: usize, q: usize) -> Self {
        let kind = if translation_invariant {
            ModelKind::MpsTranslationInvariant
        } else {
            ModelKind::Mps
        };
        Self {
            kind,
            field,
            n,
            d: Dims::Uniform(d),
            q: Some(Dims::Uniform(q)),
            seed: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Spec(format!(
                "order must be at least 2, got {}",
                self.n
            )));
        }
        let d = self.physical_dims()?;
        match (self.kind.is_mps(), &self.q) {
            (true, None) => return Err(Error::Spec("MPS models need bond dimensions `q`".into())),
            (false, Some(_)) => {
                return Err(Error::Spec(format!(
                    "{} models take no bond dimensions",
                    self.kind
                )))
            }
            _ => {}
        }
        self.bond_dims()?;
        if !self.kind.is_mps() && d.windows(2).any(|w| w[0] != w[1]) {
            return Err(Error::Spec(format!(
                "{} models need equal local dimensions",
                self.kind
            )));
        }
        if self.kind == ModelKind::MpsTranslationInvariant {
            let q = self.bond_dims()?.unwrap_or_default();
            if d.windows(2).any(|w| w[0] != w[1]) || q.windows(2).any(|w| w[0] != w[1]) {
                return Err(Error::Spec(
                    "translation-invariant MPS need equal physical and bond dimensions".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn physical_dims(&self) -> Result<Vec<usize>> {
        self.d.expand(self.n, "d")
    }

    pub fn bond_dims(&self) -> Result<Option<Vec<usize>>> {
        self.q.as_ref().map(|q| q.expand(self.n, "q")).transpose()
    }

    /// Shape of sampled tensors.
    pub fn shape(&self) -> Result<Vec<usize>> {
        self.physical_dims()
    }

    fn expect_kind(&self, kinds: &[ModelKind], op: &str) -> Result<()> {
        self.validate()?;
        if !kinds.contains(&self.kind) {
            return Err(Error::Spec(format!(
                "{op} cannot sample a {} model",
                self.kind
            )));
        }
        Ok(())
    }
}

/// Fills `len` entries with N(0, variance) draws. Complex entries draw real
/// then imaginary part and are scaled by 1/√2 afterwards.
fn gaussian_entries(
    field: Field,
    len: usize,
    variance: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<Complex64> {
    let sigma = variance.sqrt();
    match field {
        Field::Real => (0..len)
            .map(|_| {
                let x: f64 = rng.sample(StandardNormal);
                Complex64::new(sigma * x, 0.0)
            })
            .collect(),
        Field::Complex => (0..len)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(sigma * re, sigma * im) * std::f64::consts::FRAC_1_SQRT_2
            })
            .collect(),
    }
}

fn to_tensor(field: Field, shape: Vec<usize>, entries: Vec<Complex64>) -> Result<DenseTensor> {
    match field {
        Field::Real => DenseTensor::from_real(shape, entries.into_iter().map(|z| z.re).collect()),
        Field::Complex => DenseTensor::from_complex(shape, entries),
    }
}

fn raw_gaussian(spec: &ModelSpec, seed: Seed, index: u64) -> Result<DenseTensor> {
    let shape = spec.shape()?;
    let d = shape[0] as f64;
    let mut rng = seed.stream(DOMAIN_TENSOR, index);
    let entries = gaussian_entries(spec.field, shape.iter().product(), 2.0 / d, &mut rng);
    to_tensor(spec.field, shape, entries)
}

/// Gaussian tensor with entries of variance 2/d, so that E‖X‖² = 2d^{n−1}.
pub fn sample_gaussian(spec: &ModelSpec, seed: Seed, index: u64) -> Result<DenseTensor> {
    spec.expect_kind(&[ModelKind::Gaussian], "sample_gaussian")?;
    raw_gaussian(spec, seed, index)
}

/// Projection of a Gaussian tensor onto the symmetric subspace.
pub fn sample_symmetrized(spec: &ModelSpec, seed: Seed, index: u64) -> Result<DenseTensor> {
    spec.expect_kind(&[ModelKind::GaussianSymmetrized], "sample_symmetrized")?;
    symmetrize_full(&raw_gaussian(spec, seed, index)?)
}

/// Projection of a Gaussian tensor onto the cyclically symmetric subspace.
pub fn sample_cyclic(spec: &ModelSpec, seed: Seed, index: u64) -> Result<DenseTensor> {
    spec.expect_kind(&[ModelKind::GaussianCyclic], "sample_cyclic")?;
    symmetrize_cyclic(&raw_gaussian(spec, seed, index)?)
}

/// Local tensor of MPS site `site` (zero-based), shape (q_k, d_k, q_{k+1}),
/// with entry variance 2/(d_k·√(q_k·q_{k+1})).
///
/// Translation-invariant specs return the same tensor for every site.
pub fn sample_mps_local(
    site: usize,
    spec: &ModelSpec,
    seed: Seed,
    index: u64,
) -> Result<DenseTensor> {
    spec.expect_kind(
        &[ModelKind::Mps, ModelKind::MpsTranslationInvariant],
        "sample_mps_local",
    )?;
    if site >= spec.n {
        return Err(Error::Index(format!(
            "site {site} out of range for {} sites",
            spec.n
        )));
    }
    let d = spec.physical_dims()?;
    let q = spec.bond_dims()?.expect("validated MPS spec has bonds");
    let (ql, dk, qr) = (q[site], d[site], q[(site + 1) % spec.n]);
    let variance = 2.0 / (dk as f64 * ((ql * qr) as f64).sqrt());
    let stream_site = if spec.kind == ModelKind::MpsTranslationInvariant {
        0
    } else {
        site as u64
    };
    let mut rng = seed.derive(&[stream_site]).stream(DOMAIN_MPS, index);
    let entries = gaussian_entries(spec.field, ql * dk * qr, variance, &mut rng);
    to_tensor(spec.field, vec![ql, dk, qr], entries)
}

/// Contracts order-3 local tensors A^{(k)} of shape (q_k, d_k, q_{k+1}) into
/// X[s1..sn] = Tr(A^{(1)}[:, s1, :] ⋯ A^{(n)}[:, sn, :]).
pub fn assemble_mps(locals: &[DenseTensor]) -> Result<DenseTensor> {
    let n = locals.len();
    if n == 0 {
        return Err(Error::Shape("an MPS needs at least one site".into()));
    }
    let field = locals[0].field();
    for (k, a) in locals.iter().enumerate() {
        if a.order() != 3 {
            return Err(Error::Shape(format!(
                "site {k} tensor has order {}, expected 3",
                a.order()
            )));
        }
        if a.field() != field {
            return Err(Error::Field(format!(
                "site {k} is {}, site 0 is {field}",
                a.field()
            )));
        }
        let next = &locals[(k + 1) % n];
        if a.shape()[2] != next.shape()[0] {
            return Err(Error::Shape(format!(
                "bond between sites {k} and {} mismatched: {} vs {}",
                (k + 1) % n,
                a.shape()[2],
                next.shape()[0]
            )));
        }
    }
    match field {
        Field::Real => mps_chain::<f64>(locals),
        Field::Complex => mps_chain::<Complex64>(locals),
    }
}

/// Per-physical-index matrices of a local tensor: mats[s] is q_l × q_r.
fn site_matrices<T: Element>(a: &DenseTensor) -> Vec<Vec<T>> {
    let (ql, d, qr) = (a.shape()[0], a.shape()[1], a.shape()[2]);
    let data = T::slice(a).expect("field checked");
    (0..d)
        .map(|s| {
            let mut m = Vec::with_capacity(ql * qr);
            for i in 0..ql {
                let off = (i * d + s) * qr;
                m.extend_from_slice(&data[off..off + qr]);
            }
            m
        })
        .collect()
}

fn mps_chain<T: Element>(locals: &[DenseTensor]) -> Result<DenseTensor> {
    let n = locals.len();
    let shape: Vec<usize> = locals.iter().map(|a| a.shape()[1]).collect();
    let q0 = locals[0].shape()[0];

    // Left products over physical prefixes, each a q0 × q_{k+1} matrix.
    let mut left: Vec<Vec<T>> = site_matrices(&locals[0]);
    let mut cols = locals[0].shape()[2];
    for a in locals.iter().take(n - 1).skip(1) {
        let mats = site_matrices::<T>(a);
        let next_cols = a.shape()[2];
        let mut next = Vec::with_capacity(left.len() * mats.len());
        for l in &left {
            for m in &mats {
                next.push(matmul(l, m, q0, cols, next_cols));
            }
        }
        left = next;
        cols = next_cols;
    }

    let out: Vec<T> = if n == 1 {
        // Tr(A[:, s, :])
        left.iter()
            .map(|m| (0..q0).map(|i| m[i * cols + i]).sum())
            .collect()
    } else {
        // Tr(L · A_n[:, s, :]) = Σ_{i,j} L[i, j] · A_n[j, s, i], without forming the product
        let last = &locals[n - 1];
        let (qj, dn, qi) = (last.shape()[0], last.shape()[1], last.shape()[2]);
        debug_assert_eq!(qi, q0);
        debug_assert_eq!(qj, cols);
        let data = T::slice(last).expect("field checked");
        let mut out = Vec::with_capacity(left.len() * dn);
        for l in &left {
            for s in 0..dn {
                let mut acc = T::zero();
                for i in 0..q0 {
                    for j in 0..qj {
                        acc += l[i * qj + j] * data[(j * dn + s) * qi + i];
                    }
                }
                out.push(acc);
            }
        }
        out
    };
    DenseTensor::from_typed(shape, out)
}

fn matmul<T: Element>(a: &[T], b: &[T], rows: usize, inner: usize, cols: usize) -> Vec<T> {
    let mut c = vec![T::zero(); rows * cols];
    for i in 0..rows {
        let crow = &mut c[i * cols..(i + 1) * cols];
        for l in 0..inner {
            T::axpy(a[i * inner + l], &b[l * cols..(l + 1) * cols], crow);
        }
    }
    c
}

/// Gaussian MPS with independent (or, for the translation-invariant kind,
/// repeated) local tensors.
pub fn sample_mps(spec: &ModelSpec, seed: Seed, index: u64) -> Result<DenseTensor> {
    spec.expect_kind(
        &[ModelKind::Mps, ModelKind::MpsTranslationInvariant],
        "sample_mps",
    )?;
    let locals = (0..spec.n)
        .map(|k| sample_mps_local(k, spec, seed, index))
        .collect::<Result<Vec<_>>>()?;
    assemble_mps(&locals)
}

/// Samples any model kind.
pub fn sample(spec: &ModelSpec, seed: Seed, index: u64) -> Result<DenseTensor> {
    match spec.kind {
        ModelKind::Gaussian => sample_gaussian(spec, seed, index),
        ModelKind::GaussianSymmetrized => sample_symmetrized(spec, seed, index),
        ModelKind::GaussianCyclic => sample_cyclic(spec, seed, index),
        ModelKind::Mps | ModelKind::MpsTranslationInvariant => sample_mps(spec, seed, index),
    }
}

/// Standard Gaussian entries of a core, used for optimizer initialization:
/// N(0, 1/d) per entry; complex cores combine two such draws as (x + i·y)/√2.
pub(crate) fn init_core<T: Element>(d: usize, rng: &mut ChaCha8Rng) -> Vec<T> {
    let sigma = (1.0 / d as f64).sqrt();
    (0..d)
        .map(|_| {
            let x: f64 = rng.sample(StandardNormal);
            match T::FIELD {
                Field::Real => T::from_f64(sigma * x),
                Field::Complex => {
                    let y: f64 = rng.sample(StandardNormal);
                    T::from_complex(
                        Complex64::new(sigma * x, sigma * y) * std::f64::consts::FRAC_1_SQRT_2,
                    )
                }
            }
        })
        .collect()
}

/// Mean of |entry|² over a tensor.
pub fn mean_entry_power(t: &DenseTensor) -> f64 {
    with_data!(t, |v| crate::scalar::norm_sqr(v)) / t.len() as f64
}
