//! Scalar fields and the element trait shared by the numeric kernels.

use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::tensor::{DenseTensor, TensorData};

/// The scalar field a tensor lives over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Real,
    Complex,
}

impl Field {
    pub fn as_str(self) -> &'static str {
        match self {
            Field::Real => "real",
            Field::Complex => "complex",
        }
    }
}

impl std::fmt::Display for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Field {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "real" | "r" => Ok(Field::Real),
            "complex" | "c" => Ok(Field::Complex),
            other => Err(crate::Error::Spec(format!("unknown field `{other}`"))),
        }
    }
}

/// Numeric element of a dense tensor: `f64` for the real field and
/// `Complex64` for the complex field.
///
/// Kernels are written once against this trait and monomorphized per field,
/// so real tensors never pay for complex arithmetic.
pub trait Element:
    Copy
    + Send
    + Sync
    + Debug
    + PartialEq
    + Default
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + Sum
    + 'static
{
    const FIELD: Field;

    fn zero() -> Self {
        Self::default()
    }
    fn one() -> Self;
    fn conj(self) -> Self;
    fn re(self) -> f64;
    fn norm_sqr(self) -> f64;
    fn abs(self) -> f64 {
        self.norm_sqr().sqrt()
    }
    fn scale(self, s: f64) -> Self;
    fn from_f64(x: f64) -> Self;
    /// Real elements keep only the real part.
    fn from_complex(z: Complex64) -> Self;
    fn to_complex(self) -> Complex64;
    fn is_finite(self) -> bool;

    /// Σ conj(a_i)·b_i.
    fn dot(a: &[Self], b: &[Self]) -> Self;
    /// Σ a_i·b_i, no conjugation.
    fn dotu(a: &[Self], b: &[Self]) -> Self;
    /// y += alpha·x.
    fn axpy(alpha: Self, x: &[Self], y: &mut [Self]) {
        for (yi, &xi) in y.iter_mut().zip(x) {
            *yi += alpha * xi;
        }
    }

    fn slice(t: &DenseTensor) -> Option<&[Self]>;
    fn wrap(data: Vec<Self>) -> TensorData;
}

impl Element for f64 {
    const FIELD: Field = Field::Real;

    fn one() -> Self {
        1.0
    }
    fn conj(self) -> Self {
        self
    }
    fn re(self) -> f64 {
        self
    }
    fn norm_sqr(self) -> f64 {
        self * self
    }
    fn abs(self) -> f64 {
        f64::abs(self)
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn from_complex(z: Complex64) -> Self {
        z.re
    }
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }

    fn dot(a: &[Self], b: &[Self]) -> Self {
        Self::dotu(a, b)
    }

    fn dotu(a: &[Self], b: &[Self]) -> Self {
        // four independent accumulators so the loop vectorizes
        let n = a.len().min(b.len());
        let (a, b) = (&a[..n], &b[..n]);
        let mut acc = [0.0f64; 4];
        let chunks = n / 4;
        for c in 0..chunks {
            let i = 4 * c;
            acc[0] += a[i] * b[i];
            acc[1] += a[i + 1] * b[i + 1];
            acc[2] += a[i + 2] * b[i + 2];
            acc[3] += a[i + 3] * b[i + 3];
        }
        let mut tail = 0.0;
        for i in 4 * chunks..n {
            tail += a[i] * b[i];
        }
        (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
    }

    fn slice(t: &DenseTensor) -> Option<&[Self]> {
        match t.data() {
            TensorData::Real(v) => Some(v),
            TensorData::Complex(_) => None,
        }
    }

    fn wrap(data: Vec<Self>) -> TensorData {
        TensorData::Real(data)
    }
}

impl Element for Complex64 {
    const FIELD: Field = Field::Complex;

    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn re(self) -> f64 {
        self.re
    }
    fn norm_sqr(self) -> f64 {
        Complex64::norm_sqr(&self)
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn from_f64(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn from_complex(z: Complex64) -> Self {
        z
    }
    fn to_complex(self) -> Complex64 {
        self
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    fn dot(a: &[Self], b: &[Self]) -> Self {
        let (mut re0, mut im0, mut re1, mut im1) = (0.0, 0.0, 0.0, 0.0);
        let n = a.len().min(b.len());
        let mut i = 0;
        while i + 1 < n {
            let (x0, y0, x1, y1) = (a[i], b[i], a[i + 1], b[i + 1]);
            re0 += x0.re * y0.re + x0.im * y0.im;
            im0 += x0.re * y0.im - x0.im * y0.re;
            re1 += x1.re * y1.re + x1.im * y1.im;
            im1 += x1.re * y1.im - x1.im * y1.re;
            i += 2;
        }
        if i < n {
            let (x, y) = (a[i], b[i]);
            re0 += x.re * y.re + x.im * y.im;
            im0 += x.re * y.im - x.im * y.re;
        }
        Complex64::new(re0 + re1, im0 + im1)
    }

    fn dotu(a: &[Self], b: &[Self]) -> Self {
        let (mut re0, mut im0, mut re1, mut im1) = (0.0, 0.0, 0.0, 0.0);
        let n = a.len().min(b.len());
        let mut i = 0;
        while i + 1 < n {
            let (x0, y0, x1, y1) = (a[i], b[i], a[i + 1], b[i + 1]);
            re0 += x0.re * y0.re - x0.im * y0.im;
            im0 += x0.re * y0.im + x0.im * y0.re;
            re1 += x1.re * y1.re - x1.im * y1.im;
            im1 += x1.re * y1.im + x1.im * y1.re;
            i += 2;
        }
        if i < n {
            let (x, y) = (a[i], b[i]);
            re0 += x.re * y.re - x.im * y.im;
            im0 += x.re * y.im + x.im * y.re;
        }
        Complex64::new(re0 + re1, im0 + im1)
    }

    fn slice(t: &DenseTensor) -> Option<&[Self]> {
        match t.data() {
            TensorData::Complex(v) => Some(v),
            TensorData::Real(_) => None,
        }
    }

    fn wrap(data: Vec<Self>) -> TensorData {
        TensorData::Complex(data)
    }
}

/// Squared Euclidean norm of a slice.
pub fn norm_sqr<T: Element>(v: &[T]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum()
}

/// Scales `v` to unit norm in place and returns the previous norm.
pub fn normalize_in_place<T: Element>(v: &mut [T]) -> f64 {
    let n = norm_sqr(v).sqrt();
    if n > 0.0 && n.is_finite() {
        let inv = 1.0 / n;
        v.iter_mut().for_each(|x| *x = x.scale(inv));
    }
    n
}
