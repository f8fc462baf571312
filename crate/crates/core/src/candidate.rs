//! Rank-R product candidates φ = Σ_r a_r^{(1)} ⊗ ⋯ ⊗ a_r^{(n)}.

use num_complex::Complex64;

use crate::contract;
use crate::scalar::{Element, Field};
use crate::tensor::DenseTensor;
use crate::{Error, Result};

/// Tolerance used by [`ProductCandidate::is_normalized`].
pub const UNIT_TOLERANCE: f64 = 1e-12;

/// A sum of R elementary tensors, stored as its cores `cores[r][k]`.
///
/// Cores are kept as complex numbers regardless of field; real candidates
/// carry exactly zero imaginary parts.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductCandidate {
    field: Field,
    cores: Vec<Vec<Vec<Complex64>>>,
}

impl ProductCandidate {
    pub fn new(field: Field, cores: Vec<Vec<Vec<Complex64>>>) -> Result<Self> {
        if cores.is_empty() {
            return Err(Error::Shape("candidate rank must be at least 1".into()));
        }
        let shape: Vec<usize> = cores[0].iter().map(Vec::len).collect();
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::Shape(format!("invalid core dimensions {shape:?}")));
        }
        for (r, term) in cores.iter().enumerate() {
            let dims: Vec<usize> = term.iter().map(Vec::len).collect();
            if dims != shape {
                return Err(Error::Shape(format!(
                    "rank term {r} has core dimensions {dims:?}, expected {shape:?}"
                )));
            }
        }
        let mut cores = cores;
        if field == Field::Real {
            if cores.iter().flatten().flatten().any(|z| z.im != 0.0) {
                return Err(Error::Field(
                    "real candidate with imaginary core entries".into(),
                ));
            }
            // canonical zero: no negative-zero imaginary parts
            cores
                .iter_mut()
                .flatten()
                .flatten()
                .for_each(|z| z.im = 0.0);
        }
        Ok(Self { field, cores })
    }

    /// Real candidate from real cores.
    pub fn from_real(cores: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let cores = cores
            .into_iter()
            .map(|t| {
                t.into_iter()
                    .map(|c| c.into_iter().map(|x| Complex64::new(x, 0.0)).collect())
                    .collect()
            })
            .collect();
        Self::new(Field::Real, cores)
    }

    /// Rank-1 candidate ⊗_k cores[k].
    pub fn rank_one(field: Field, cores: Vec<Vec<Complex64>>) -> Result<Self> {
        Self::new(field, vec![cores])
    }

    pub(crate) fn from_typed<T: Element>(cores: Vec<Vec<Vec<T>>>) -> Self {
        let cores = cores
            .into_iter()
            .map(|t| {
                t.into_iter()
                    .map(|c| c.into_iter().map(Element::to_complex).collect())
                    .collect()
            })
            .collect();
        Self {
            field: T::FIELD,
            cores,
        }
    }

    pub(crate) fn typed_cores<T: Element>(&self) -> Vec<Vec<Vec<T>>> {
        self.cores
            .iter()
            .map(|t| {
                t.iter()
                    .map(|c| c.iter().map(|&z| T::from_complex(z)).collect())
                    .collect()
            })
            .collect()
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn rank(&self) -> usize {
        self.cores.len()
    }

    pub fn order(&self) -> usize {
        self.cores[0].len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.cores[0].iter().map(Vec::len).collect()
    }

    pub fn core(&self, r: usize, k: usize) -> &[Complex64] {
        &self.cores[r][k]
    }

    pub fn cores(&self) -> &[Vec<Vec<Complex64>>] {
        &self.cores
    }

    /// Every core scaled to unit Euclidean norm.
    pub fn normalized(&self) -> Result<Self> {
        let mut cores = self.cores.clone();
        for c in cores.iter_mut().flatten() {
            if crate::scalar::normalize_in_place(c) == 0.0 {
                return Err(Error::ZeroTensor);
            }
        }
        Ok(Self {
            field: self.field,
            cores,
        })
    }

    pub fn is_normalized(&self) -> bool {
        self.cores
            .iter()
            .flatten()
            .all(|c| (crate::scalar::norm_sqr(c).sqrt() - 1.0).abs() <= UNIT_TOLERANCE)
    }

    /// Rank-1 term r as its own candidate.
    pub fn term(&self, r: usize) -> Self {
        Self {
            field: self.field,
            cores: vec![self.cores[r].clone()],
        }
    }
}

/// Dense tensor Σ_r ⊗_k core[r][k].
pub fn assemble_product(c: &ProductCandidate) -> Result<DenseTensor> {
    match c.field() {
        Field::Real => assemble_typed::<f64>(c),
        Field::Complex => assemble_typed::<Complex64>(c),
    }
}

fn assemble_typed<T: Element>(c: &ProductCandidate) -> Result<DenseTensor> {
    let shape = c.shape();
    let mut out = vec![T::zero(); shape.iter().product()];
    for term in c.typed_cores::<T>() {
        let ws: Vec<&[T]> = term.iter().map(|v| v.as_slice()).collect();
        contract::add_outer(&ws, T::one(), &mut out);
    }
    DenseTensor::from_typed(shape, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::euclidean_norm;

    fn e(d: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; d];
        v[i] = 1.0;
        v
    }

    #[test]
    fn single_basis_term() {
        let c = ProductCandidate::from_real(vec![vec![e(2, 0), e(2, 0)]]).unwrap();
        let t = assemble_product(&c).unwrap();
        assert_eq!(
            t,
            DenseTensor::from_real(vec![2, 2], vec![1.0, 0.0, 0.0, 0.0]).unwrap()
        );
    }

    #[test]
    fn two_terms_make_identity() {
        let c = ProductCandidate::from_real(vec![vec![e(2, 0), e(2, 0)], vec![e(2, 1), e(2, 1)]])
            .unwrap();
        let t = assemble_product(&c).unwrap();
        assert_eq!(
            t,
            DenseTensor::from_real(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap()
        );
    }

    #[test]
    fn unit_cores_give_unit_tensor() {
        let z = |a: f64, b: f64| Complex64::new(a, b);
        let c = ProductCandidate::rank_one(
            Field::Complex,
            vec![
                vec![z(0.3, -1.0), z(2.0, 0.5)],
                vec![z(1.0, 1.0), z(0.0, -0.2), z(0.7, 0.0)],
            ],
        )
        .unwrap()
        .normalized()
        .unwrap();
        assert!(c.is_normalized());
        let t = assemble_product(&c).unwrap();
        assert!((euclidean_norm(&t) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inconsistent_cores_are_rejected() {
        let bad = ProductCandidate::from_real(vec![vec![e(2, 0), e(3, 0)], vec![e(2, 0), e(2, 0)]]);
        assert!(matches!(bad, Err(Error::Shape(_))));
        let imag = ProductCandidate::new(Field::Real, vec![vec![vec![Complex64::new(0.0, 1.0)]]]);
        assert!(matches!(imag, Err(Error::Field(_))));
    }
}
