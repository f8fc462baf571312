//! Small dense linear algebra: singular values of order-2 tensors and the
//! Hermitian solves used by alternating least squares.

use num_complex::Complex64;

use crate::scalar::Element;
use crate::tensor::{with_data, DenseTensor};
use crate::{Error, Result};

/// Off-diagonal threshold below which a column pair counts as orthogonal.
const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Largest singular value of an order-2 tensor viewed as a d1×d2 matrix,
/// which is exactly its injective norm.
pub fn operator_norm_order2(a: &DenseTensor) -> Result<f64> {
    Ok(singular_values_order2(a)?.first().copied().unwrap_or(0.0))
}

/// All singular values of an order-2 tensor, in decreasing order.
pub fn singular_values_order2(a: &DenseTensor) -> Result<Vec<f64>> {
    if a.order() != 2 {
        return Err(Error::Shape(format!(
            "expected an order-2 tensor, got shape {:?}",
            a.shape()
        )));
    }
    let (rows, cols) = (a.shape()[0], a.shape()[1]);
    Ok(with_data!(a, |v| one_sided_jacobi(v, rows, cols)))
}

/// Hestenes one-sided Jacobi: rotate column pairs until all are orthogonal;
/// the column norms are then the singular values.
fn one_sided_jacobi<T: Element>(data: &[T], rows: usize, cols: usize) -> Vec<f64> {
    // Work on the orientation with fewer columns (both have the same spectrum).
    let mut u: Vec<Vec<T>> = if cols <= rows {
        (0..cols)
            .map(|j| (0..rows).map(|i| data[i * cols + j]).collect())
            .collect()
    } else {
        (0..rows)
            .map(|i| data[i * cols..(i + 1) * cols].to_vec())
            .collect()
    };
    let ncol = u.len();
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..ncol {
            for q in p + 1..ncol {
                let alpha = crate::scalar::norm_sqr(&u[p]);
                let beta = crate::scalar::norm_sqr(&u[q]);
                let gamma = T::dot(&u[p], &u[q]);
                let g = gamma.abs();
                if g == 0.0 || g <= JACOBI_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // Remove the phase of gamma, then apply the real rotation.
                let phase = gamma.scale(1.0 / g);
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = u.split_at_mut(q);
                let (up, uq) = (&mut lo[p], &mut hi[0]);
                for (x, y) in up.iter_mut().zip(uq.iter_mut()) {
                    let yt = phase.conj() * *y;
                    let nx = x.scale(c) - yt.scale(s);
                    let ny = x.scale(s) + yt.scale(c);
                    *x = nx;
                    *y = ny;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = u
        .iter()
        .map(|c| crate::scalar::norm_sqr(c).sqrt())
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Solves C·X = B for Hermitian positive semidefinite C (R×R, row-major)
/// and R right-hand-side rows stored in `rhs` (overwritten with X).
///
/// When C is numerically singular a ridge of `ridge · max diag(C)` is added
/// to the diagonal; the return value reports whether that happened.
pub(crate) fn solve_hermitian<T: Element>(
    c: &[T],
    rank: usize,
    rhs: &mut [Vec<T>],
    ridge: f64,
) -> bool {
    let max_diag = (0..rank).map(|i| c[i * rank + i].re()).fold(0.0, f64::max);
    let mut shift = 0.0;
    let mut regularized = false;
    loop {
        if let Some(l) = cholesky(c, rank, shift, max_diag) {
            substitute(&l, rank, rhs);
            return regularized;
        }
        regularized = true;
        shift = if shift == 0.0 {
            ridge * max_diag.max(f64::MIN_POSITIVE)
        } else {
            shift * 10.0
        };
        if !shift.is_finite() {
            rhs.iter_mut().flatten().for_each(|x| *x = T::zero());
            return true;
        }
    }
}

fn cholesky<T: Element>(c: &[T], r: usize, shift: f64, max_diag: f64) -> Option<Vec<T>> {
    let mut l = vec![T::zero(); r * r];
    for i in 0..r {
        for j in 0..=i {
            let mut s = c[i * r + j];
            if i == j {
                s += T::from_f64(shift);
            }
            for k in 0..j {
                s -= l[i * r + k] * l[j * r + k].conj();
            }
            if i == j {
                let d = s.re();
                // pivots at rounding level mean a collinear design
                if !(d > 1e-14 * max_diag) || !d.is_finite() {
                    return None;
                }
                l[i * r + i] = T::from_f64(d.sqrt());
            } else {
                l[i * r + j] = s.scale(1.0 / l[j * r + j].re());
            }
        }
    }
    Some(l)
}

fn substitute<T: Element>(l: &[T], r: usize, rhs: &mut [Vec<T>]) {
    let cols = rhs.first().map_or(0, Vec::len);
    for col in 0..cols {
        // L y = b
        let mut y = vec![T::zero(); r];
        for i in 0..r {
            let mut s = rhs[i][col];
            for k in 0..i {
                s -= l[i * r + k] * y[k];
            }
            y[i] = s.scale(1.0 / l[i * r + i].re());
        }
        // L^H x = y
        for i in (0..r).rev() {
            let mut s = y[i];
            for k in i + 1..r {
                s -= l[k * r + i].conj() * rhs[k][col];
            }
            rhs[i][col] = s.scale(1.0 / l[i * r + i].re());
        }
    }
}

/// Convenience for tests and the CLI: spectrum of a complex matrix given as
/// rows.
pub fn singular_values(rows: &[Vec<Complex64>]) -> Result<Vec<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    let t = DenseTensor::from_complex(vec![r, c], rows.concat())?;
    singular_values_order2(&t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_diagonal() {
        let mut eye = vec![0.0; 9];
        for i in 0..3 {
            eye[i * 3 + i] = 1.0;
        }
        let t = DenseTensor::from_real(vec![3, 3], eye).unwrap();
        assert!((operator_norm_order2(&t).unwrap() - 1.0).abs() < 1e-14);
        let d = DenseTensor::from_real(vec![2, 2], vec![3.0, 0.0, 0.0, 1.0]).unwrap();
        assert!((operator_norm_order2(&d).unwrap() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn rectangular_and_complex() {
        // [[1, i], [0, 0], [0, 0]]: single singular value √2
        let z = |a, b| Complex64::new(a, b);
        let rows = vec![
            vec![z(1.0, 0.0), z(0.0, 1.0)],
            vec![z(0.0, 0.0); 2],
            vec![z(0.0, 0.0); 2],
        ];
        let sv = singular_values(&rows).unwrap();
        assert!((sv[0] - 2f64.sqrt()).abs() < 1e-14);
        assert!(sv[1].abs() < 1e-14);
        let wide = DenseTensor::from_real(vec![1, 3], vec![1.0, 2.0, 2.0]).unwrap();
        assert!((operator_norm_order2(&wide).unwrap() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn wrong_order_is_rejected() {
        let t = DenseTensor::zeros(crate::Field::Real, vec![2, 2, 2]).unwrap();
        assert!(matches!(operator_norm_order2(&t), Err(Error::Shape(_))));
    }

    #[test]
    fn hermitian_solve_and_ridge() {
        let z = |a, b| Complex64::new(a, b);
        // C = [[2, i], [-i, 2]], x = [1, 1+i]
        let c = vec![z(2.0, 0.0), z(0.0, 1.0), z(0.0, -1.0), z(2.0, 0.0)];
        let x = [z(1.0, 0.0), z(1.0, 1.0)];
        let b0 = c[0] * x[0] + c[1] * x[1];
        let b1 = c[2] * x[0] + c[3] * x[1];
        let mut rhs = vec![vec![b0], vec![b1]];
        assert!(!solve_hermitian(&c, 2, &mut rhs, 1e-12));
        assert!((rhs[0][0] - x[0]).norm() < 1e-13);
        assert!((rhs[1][0] - x[1]).norm() < 1e-13);
        // collinear design triggers the ridge
        let s = vec![1.0, 1.0, 1.0, 1.0];
        let mut rhs = vec![vec![2.0], vec![2.0]];
        assert!(solve_hermitian(&s, 2, &mut rhs, 1e-12));
        assert!(rhs.iter().flatten().all(|x| x.is_finite()));
    }
}
