//! Dense order-n tensors over the real or complex field.
//!
//! Storage is a flat row-major buffer: the last axis varies fastest. All
//! order-n loops decode multi-indices with an odometer instead of recursing,
//! so the permutation kernels below never allocate per element.

use num_complex::Complex64;

use crate::scalar::{Element, Field};
use crate::{Error, Result};

/// Default largest order accepted by [`symmetrize_full`]; its cost is `n!·dⁿ`.
pub const DEFAULT_MAX_SYMMETRIZE_ORDER: usize = 8;

/// Typed backing buffer of a [`DenseTensor`].
#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl TensorData {
    pub fn len(&self) -> usize {
        match self {
            TensorData::Real(v) => v.len(),
            TensorData::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn field(&self) -> Field {
        match self {
            TensorData::Real(_) => Field::Real,
            TensorData::Complex(_) => Field::Complex,
        }
    }
}

/// Runs `$body` with `$v` bound to the typed data slice of `$t`.
macro_rules! with_data {
    ($t:expr, |$v:ident| $body:expr) => {
        match $t.data() {
            $crate::tensor::TensorData::Real($v) => $body,
            $crate::tensor::TensorData::Complex($v) => $body,
        }
    };
}
pub(crate) use with_data;

/// Dense order-n tensor Ψ ∈ 𝔽^{d1} ⊗ ⋯ ⊗ 𝔽^{dn}.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: TensorData,
}

impl DenseTensor {
    /// Builds a tensor after checking that the buffer length matches `shape`.
    pub fn new(shape: Vec<usize>, data: TensorData) -> Result<Self> {
        if shape.is_empty() {
            return Err(Error::Shape("tensor order must be at least 1".into()));
        }
        if shape.contains(&0) {
            return Err(Error::Shape(format!("zero dimension in shape {shape:?}")));
        }
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::Shape(format!(
                "shape {shape:?} needs {expected} entries, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn from_real(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        Self::new(shape, TensorData::Real(data))
    }

    pub fn from_complex(shape: Vec<usize>, data: Vec<Complex64>) -> Result<Self> {
        Self::new(shape, TensorData::Complex(data))
    }

    pub(crate) fn from_typed<T: Element>(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        Self::new(shape, T::wrap(data))
    }

    pub fn zeros(field: Field, shape: Vec<usize>) -> Result<Self> {
        let len = shape.iter().product();
        let data = match field {
            Field::Real => TensorData::Real(vec![0.0; len]),
            Field::Complex => TensorData::Complex(vec![Complex64::default(); len]),
        };
        Self::new(shape, data)
    }

    /// Elementary tensor e_{i1} ⊗ ⋯ ⊗ e_{in} (zero-based indices).
    pub fn basis(field: Field, shape: Vec<usize>, index: &[usize]) -> Result<Self> {
        let mut t = Self::zeros(field, shape)?;
        let offset = t.offset(index)?;
        match &mut t.data {
            TensorData::Real(v) => v[offset] = 1.0,
            TensorData::Complex(v) => v[offset] = Complex64::new(1.0, 0.0),
        }
        Ok(t)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn field(&self) -> Field {
        self.data.field()
    }

    pub fn data(&self) -> &TensorData {
        &self.data
    }

    pub fn into_data(self) -> TensorData {
        self.data
    }

    pub fn is_hypercubic(&self) -> bool {
        self.shape.windows(2).all(|w| w[0] == w[1])
    }

    /// Row-major strides.
    pub fn strides(&self) -> Vec<usize> {
        strides(&self.shape)
    }

    pub fn offset(&self, index: &[usize]) -> Result<usize> {
        if index.len() != self.shape.len() {
            return Err(Error::Index(format!(
                "index {index:?} has wrong length for shape {:?}",
                self.shape
            )));
        }
        let mut off = 0;
        for (&i, &d) in index.iter().zip(&self.shape) {
            if i >= d {
                return Err(Error::Index(format!(
                    "index {index:?} outside shape {:?}",
                    self.shape
                )));
            }
            off = off * d + i;
        }
        Ok(off)
    }

    /// Entry at a multi-index, promoted to a complex number.
    pub fn get(&self, index: &[usize]) -> Result<Complex64> {
        let off = self.offset(index)?;
        Ok(with_data!(self, |v| v[off].to_complex()))
    }

    /// Entries promoted to complex numbers.
    pub fn to_complex_vec(&self) -> Vec<Complex64> {
        with_data!(self, |v| v.iter().map(|x| x.to_complex()).collect())
    }

    /// The same tensor viewed over the complex field.
    pub fn to_complex(&self) -> DenseTensor {
        DenseTensor {
            shape: self.shape.clone(),
            data: TensorData::Complex(self.to_complex_vec()),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        with_data!(self, |v| crate::scalar::norm_sqr(v))
    }

    pub fn scaled(&self, s: f64) -> DenseTensor {
        let data = match &self.data {
            TensorData::Real(v) => TensorData::Real(v.iter().map(|x| x * s).collect()),
            TensorData::Complex(v) => TensorData::Complex(v.iter().map(|x| x * s).collect()),
        };
        DenseTensor {
            shape: self.shape.clone(),
            data,
        }
    }

    /// Ψ/‖Ψ‖; the zero tensor has no normalization.
    pub fn normalized(&self) -> Result<DenseTensor> {
        let n = euclidean_norm(self);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::ZeroTensor);
        }
        Ok(self.scaled(1.0 / n))
    }

    /// Entrywise difference `self − other`.
    pub fn sub(&self, other: &DenseTensor) -> Result<DenseTensor> {
        check_compatible(self, other)?;
        let data = match (&self.data, &other.data) {
            (TensorData::Real(a), TensorData::Real(b)) => {
                TensorData::Real(a.iter().zip(b).map(|(x, y)| x - y).collect())
            }
            (TensorData::Complex(a), TensorData::Complex(b)) => {
                TensorData::Complex(a.iter().zip(b).map(|(x, y)| x - y).collect())
            }
            _ => unreachable!("fields checked above"),
        };
        Ok(DenseTensor {
            shape: self.shape.clone(),
            data,
        })
    }

    /// Y[i1..in] = X[i_{σ(1)}, …, i_{σ(n)}] for `perm = σ` (zero-based).
    pub fn permute_indices(&self, perm: &[usize]) -> Result<DenseTensor> {
        let n = self.order();
        if !is_permutation(perm, n) {
            return Err(Error::Shape(format!(
                "{perm:?} is not a permutation of {n} axes"
            )));
        }
        if perm
            .iter()
            .enumerate()
            .any(|(l, &p)| self.shape[l] != self.shape[p])
        {
            return Err(Error::Shape(format!(
                "permutation {perm:?} does not preserve shape {:?}",
                self.shape
            )));
        }
        let data = match &self.data {
            TensorData::Real(v) => {
                let mut out = vec![0.0; v.len()];
                accumulate_permuted(v, &self.shape, perm, 1.0, &mut out);
                TensorData::Real(out)
            }
            TensorData::Complex(v) => {
                let mut out = vec![Complex64::default(); v.len()];
                accumulate_permuted(v, &self.shape, perm, 1.0, &mut out);
                TensorData::Complex(out)
            }
        };
        Ok(DenseTensor {
            shape: self.shape.clone(),
            data,
        })
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &DenseTensor) -> Result<f64> {
        check_compatible(self, other)?;
        let a = self.to_complex_vec();
        let b = other.to_complex_vec();
        Ok(a.iter()
            .zip(&b)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max))
    }
}

pub(crate) fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for k in (0..shape.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * shape[k + 1];
    }
    s
}

fn is_permutation(perm: &[usize], n: usize) -> bool {
    if perm.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return false;
        }
        seen[p] = true;
    }
    true
}

fn check_compatible(a: &DenseTensor, b: &DenseTensor) -> Result<()> {
    if a.shape != b.shape {
        return Err(Error::Shape(format!(
            "shapes {:?} and {:?} differ",
            a.shape, b.shape
        )));
    }
    if a.field() != b.field() {
        return Err(Error::Field(format!("{} vs {}", a.field(), b.field())));
    }
    Ok(())
}

/// out[i] += weight · src[i_{σ(1)}, …, i_{σ(n)}].
fn accumulate_permuted<T: Element>(
    src: &[T],
    shape: &[usize],
    perm: &[usize],
    weight: f64,
    out: &mut [T],
) {
    let n = shape.len();
    let st = strides(shape);
    // Output axis m reads source axis l with perm[l] == m.
    let mut sstride = vec![0usize; n];
    for (l, &m) in perm.iter().enumerate() {
        sstride[m] += st[l];
    }
    let mut idx = vec![0usize; n];
    let mut src_off = 0usize;
    for slot in out.iter_mut() {
        *slot += src[src_off].scale(weight);
        // odometer increment
        let mut ax = n;
        while ax > 0 {
            ax -= 1;
            idx[ax] += 1;
            src_off += sstride[ax];
            if idx[ax] < shape[ax] {
                break;
            }
            src_off -= sstride[ax] * shape[ax];
            idx[ax] = 0;
        }
    }
}

/// ⟨a|b⟩ = Σ conj(a_i)·b_i, conjugate-linear in `a`.
pub fn inner_product(a: &DenseTensor, b: &DenseTensor) -> Result<Complex64> {
    check_compatible(a, b)?;
    Ok(match (a.data(), b.data()) {
        (TensorData::Real(x), TensorData::Real(y)) => Complex64::new(f64::dot(x, y), 0.0),
        (TensorData::Complex(x), TensorData::Complex(y)) => Complex64::dot(x, y),
        _ => unreachable!("fields checked above"),
    })
}

/// ‖a‖ = √Re⟨a|a⟩.
pub fn euclidean_norm(a: &DenseTensor) -> f64 {
    a.norm_sqr().sqrt()
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut cur: Vec<usize> = (0..n).collect();
    let mut out = vec![cur.clone()];
    loop {
        // next lexicographic permutation
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else {
            return out;
        };
        let j = (i..n)
            .rev()
            .find(|&j| cur[j] > cur[i - 1])
            .expect("pivot exists");
        cur.swap(i - 1, j);
        cur[i..].reverse();
        out.push(cur.clone());
    }
}

/// Parity of a permutation: +1 for even, −1 for odd.
pub fn permutation_sign(perm: &[usize]) -> f64 {
    let mut seen = vec![false; perm.len()];
    let mut transpositions = 0;
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut j = start;
        while !seen[j] {
            seen[j] = true;
            j = perm[j];
            len += 1;
        }
        transpositions += len - 1;
    }
    if transpositions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn average_over(a: &DenseTensor, perms: &[Vec<usize>]) -> DenseTensor {
    let w = 1.0 / perms.len() as f64;
    let data = match a.data() {
        TensorData::Real(v) => {
            let mut out = vec![0.0; v.len()];
            for p in perms {
                accumulate_permuted(v, a.shape(), p, w, &mut out);
            }
            TensorData::Real(out)
        }
        TensorData::Complex(v) => {
            let mut out = vec![Complex64::default(); v.len()];
            for p in perms {
                accumulate_permuted(v, a.shape(), p, w, &mut out);
            }
            TensorData::Complex(out)
        }
    };
    DenseTensor {
        shape: a.shape.clone(),
        data,
    }
}

fn require_hypercubic(a: &DenseTensor) -> Result<()> {
    if !a.is_hypercubic() {
        return Err(Error::Shape(format!(
            "symmetrization needs equal dimensions, got {:?}",
            a.shape()
        )));
    }
    Ok(())
}

/// Projection onto the permutation-symmetric subspace: the average of the
/// tensor over all n! axis permutations.
pub fn symmetrize_full(a: &DenseTensor) -> Result<DenseTensor> {
    symmetrize_full_capped(a, DEFAULT_MAX_SYMMETRIZE_ORDER)
}

/// [`symmetrize_full`] with an explicit order cap.
pub fn symmetrize_full_capped(a: &DenseTensor, max_order: usize) -> Result<DenseTensor> {
    require_hypercubic(a)?;
    if a.order() > max_order {
        return Err(Error::Capacity(format!(
            "full symmetrization of order {} exceeds the cap of {max_order}",
            a.order()
        )));
    }
    Ok(average_over(a, &permutations(a.order())))
}

/// Projection onto the cyclically symmetric subspace: the average over the
/// n cyclic shifts of the axes.
pub fn symmetrize_cyclic(a: &DenseTensor) -> Result<DenseTensor> {
    require_hypercubic(a)?;
    let n = a.order();
    let shifts: Vec<Vec<usize>> = (0..n)
        .map(|s| (0..n).map(|l| (l + s) % n).collect())
        .collect();
    Ok(average_over(a, &shifts))
}
