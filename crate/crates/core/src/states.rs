//! Reference states with closed-form geometric entanglement: generalized
//! Dicke states and antisymmetric basis states.
//!
//! Both constructions use the computational basis and the real field. All
//! logarithms are base 2.

use serde::{Deserialize, Serialize};

use crate::tensor::{permutation_sign, permutations, DenseTensor};
use crate::{Error, Result};

/// Largest order accepted by [`build_antisym`], which enumerates all n!
/// permutations.
pub const MAX_ANTISYM_ORDER: usize = 10;

/// Generalized Dicke state of n qudits with occupation numbers `k`:
/// the uniform superposition of all basis strings in which level j occurs
/// k_j times.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DickeSpec {
    pub n: usize,
    pub d: usize,
    pub k: Vec<usize>,
}

impl DickeSpec {
    pub fn new(n: usize, d: usize, k: Vec<usize>) -> Result<Self> {
        let s = Self { n, d, k };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 {
            return Err(Error::Spec(format!(
                "Dicke state needs n, d ≥ 1, got n={} d={}",
                self.n, self.d
            )));
        }
        if self.k.len() != self.d {
            return Err(Error::Spec(format!(
                "k has {} entries, expected d = {}",
                self.k.len(),
                self.d
            )));
        }
        let total: usize = self.k.iter().sum();
        if total != self.n {
            return Err(Error::Spec(format!(
                "occupations {:?} sum to {total}, expected n = {}",
                self.k, self.n
            )));
        }
        Ok(())
    }

    /// Number of basis strings in the superposition, n!/Π k_j!.
    pub fn multiplicity(&self) -> f64 {
        // product of binomials, exact in f64 while the count stays below 2^53
        let mut c = 1.0;
        let mut placed = 0.0;
        for &k in &self.k {
            for i in 1..=k {
                placed += 1.0;
                c = c * placed / i as f64;
            }
        }
        c
    }

    /// All occupation vectors of n particles over d levels, in
    /// lexicographically decreasing order starting from (n, 0, …, 0).
    pub fn all(n: usize, d: usize) -> Vec<DickeSpec> {
        let mut out = Vec::new();
        let mut k = vec![0; d];
        fill_compositions(n, 0, &mut k, &mut out);
        out.into_iter().map(|k| DickeSpec { n, d, k }).collect()
    }
}

fn fill_compositions(left: usize, pos: usize, k: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if pos + 1 == k.len() {
        k[pos] = left;
        out.push(k.clone());
        return;
    }
    for v in (0..=left).rev() {
        k[pos] = v;
        fill_compositions(left - v, pos + 1, k, out);
    }
}

/// Totally antisymmetric state of n factors over d ≥ n levels built from the
/// first n basis vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AntisymSpec {
    pub n: usize,
    pub d: usize,
}

impl AntisymSpec {
    pub fn new(n: usize, d: usize) -> Result<Self> {
        let s = Self { n, d };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Spec("antisymmetric state needs n ≥ 1".into()));
        }
        if self.d < self.n {
            return Err(Error::Spec(format!(
                "antisymmetric state needs d ≥ n, got n={} d={}",
                self.n, self.d
            )));
        }
        Ok(())
    }
}

fn log2_factorial(n: usize) -> f64 {
    (2..=n).map(|i| (i as f64).log2()).sum()
}

/// Unit-norm Dicke tensor of shape (d, …, d).
pub fn build_dicke(spec: &DickeSpec) -> Result<DenseTensor> {
    spec.validate()?;
    let (n, d) = (spec.n, spec.d);
    let len = d
        .checked_pow(n as u32)
        .ok_or_else(|| Error::Capacity(format!("d^n overflows for n={n} d={d}")))?;
    let amp = 1.0 / spec.multiplicity().sqrt();
    let mut data = vec![0.0; len];
    let mut counts = vec![0usize; d];
    for (off, x) in data.iter_mut().enumerate() {
        counts.iter_mut().for_each(|c| *c = 0);
        let mut rest = off;
        for _ in 0..n {
            counts[rest % d] += 1;
            rest /= d;
        }
        if counts == spec.k {
            *x = amp;
        }
    }
    DenseTensor::from_real(vec![d; n], data)
}

/// GME of a Dicke state in bits: log₂[(1/C) Π_j (n/k_j)^{k_j}], with empty
/// levels contributing a factor 1.
pub fn gme_dicke(spec: &DickeSpec) -> Result<f64> {
    spec.validate()?;
    let n = spec.n as f64;
    let log_c = log2_factorial(spec.n) - spec.k.iter().map(|&k| log2_factorial(k)).sum::<f64>();
    let product: f64 = spec
        .k
        .iter()
        .filter(|&&k| k > 0)
        .map(|&k| k as f64 * (n / k as f64).log2())
        .sum();
    Ok(product - log_c)
}

/// Unit-norm antisymmetric tensor (1/√n!) Σ_σ sgn(σ) e_{σ(1)} ⊗ ⋯ ⊗ e_{σ(n)}.
pub fn build_antisym(spec: &AntisymSpec) -> Result<DenseTensor> {
    spec.validate()?;
    let (n, d) = (spec.n, spec.d);
    if n > MAX_ANTISYM_ORDER {
        return Err(Error::Capacity(format!(
            "antisymmetric state of order {n} exceeds {MAX_ANTISYM_ORDER}"
        )));
    }
    let len = d
        .checked_pow(n as u32)
        .ok_or_else(|| Error::Capacity(format!("d^n overflows for n={n} d={d}")))?;
    let perms = permutations(n);
    let amp = 1.0 / (perms.len() as f64).sqrt();
    let mut data = vec![0.0; len];
    for p in &perms {
        let off = p.iter().fold(0, |acc, &i| acc * d + i);
        data[off] = permutation_sign(p) * amp;
    }
    DenseTensor::from_real(vec![d; n], data)
}

/// GME of the antisymmetric state in bits: log₂(n!).
pub fn gme_antisym(spec: &AntisymSpec) -> Result<f64> {
    spec.validate()?;
    Ok(log2_factorial(spec.n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::euclidean_norm;

    #[test]
    fn two_qubit_dicke() {
        let t = build_dicke(&DickeSpec::new(2, 2, vec![1, 1]).unwrap()).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let want = DenseTensor::from_real(vec![2, 2], vec![0.0, h, h, 0.0]).unwrap();
        assert!(t.max_abs_diff(&want).unwrap() < 1e-15);
    }

    #[test]
    fn product_dicke_has_zero_gme() {
        let s = DickeSpec::new(3, 2, vec![3, 0]).unwrap();
        let t = build_dicke(&s).unwrap();
        assert_eq!(
            t,
            DenseTensor::basis(crate::Field::Real, vec![2, 2, 2], &[0, 0, 0]).unwrap()
        );
        assert_eq!(gme_dicke(&s).unwrap(), 0.0);
    }

    #[test]
    fn w_state() {
        let s = DickeSpec::new(3, 2, vec![1, 2]).unwrap();
        let t = build_dicke(&s).unwrap();
        let amp = 1.0 / 3f64.sqrt();
        let support = [[0, 1, 1], [1, 0, 1], [1, 1, 0]];
        for i in 0..8 {
            let idx = [(i >> 2) & 1, (i >> 1) & 1, i & 1];
            let want = if support.contains(&idx) { amp } else { 0.0 };
            assert!((t.get(&idx).unwrap().re - want).abs() < 1e-15);
        }
        assert!((gme_dicke(&s).unwrap() - (9.0f64 / 4.0).log2()).abs() < 1e-12);
    }

    #[test]
    fn invalid_specs() {
        assert!(matches!(
            DickeSpec::new(3, 2, vec![1, 1]),
            Err(Error::Spec(_))
        ));
        assert!(matches!(
            DickeSpec::new(3, 2, vec![1, 1, 1]),
            Err(Error::Spec(_))
        ));
        assert!(matches!(AntisymSpec::new(3, 2), Err(Error::Spec(_))));
    }

    #[test]
    fn antisym_small_cases() {
        let t = build_antisym(&AntisymSpec::new(2, 2).unwrap()).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let want = DenseTensor::from_real(vec![2, 2], vec![0.0, h, -h, 0.0]).unwrap();
        assert!(t.max_abs_diff(&want).unwrap() < 1e-15);
        assert_eq!(gme_antisym(&AntisymSpec::new(1, 1).unwrap()).unwrap(), 0.0);
        assert!((gme_antisym(&AntisymSpec::new(2, 2).unwrap()).unwrap() - 1.0).abs() < 1e-15);
        assert!(
            (gme_antisym(&AntisymSpec::new(3, 3).unwrap()).unwrap() - 6f64.log2()).abs() < 1e-12
        );
    }

    #[test]
    fn antisym_flips_sign_under_swaps() {
        let t = build_antisym(&AntisymSpec::new(3, 4).unwrap()).unwrap();
        assert!((euclidean_norm(&t) - 1.0).abs() < 1e-12);
        for swap in [[1, 0, 2], [0, 2, 1], [2, 1, 0]] {
            let s = t.permute_indices(&swap).unwrap();
            assert!(s.max_abs_diff(&t.scaled(-1.0)).unwrap() < 1e-12);
        }
    }

    #[test]
    fn enumerates_all_occupations() {
        let all = DickeSpec::all(10, 2);
        assert_eq!(all.len(), 11);
        assert_eq!(all[0].k, vec![10, 0]);
        assert_eq!(DickeSpec::all(3, 3).len(), 10);
        for s in DickeSpec::all(4, 3) {
            let t = build_dicke(&s).unwrap();
            assert!((euclidean_norm(&t) - 1.0).abs() < 1e-12);
        }
    }
}
