//! Alternating least squares.
//!
//! A sweep visits the modes in order and replaces core block k by the exact
//! least-squares solution with all other cores held fixed: for the mode-k
//! matricization this is C·A_k = V_k, where C_rs = Π_{l≠k} ⟨a_rl, a_sl⟩ and
//! V_k stacks the contractions v_rk. The candidate norm is left free during
//! the sweeps; the driver normalizes the cores once at the end.

use rand_chacha::ChaCha8Rng;

use super::{candidate_norm_sqr, gram, init_cores, plateaued, OptimizerConfig, Run};
use crate::contract;
use crate::linalg::solve_hermitian;
use crate::scalar::{normalize_in_place, Element};
use crate::{Error, Result};

/// Relative ridge added to singular normal equations.
pub(crate) const RIDGE: f64 = 1e-12;

pub(crate) fn als<T: Element>(
    psi: &[T],
    shape: &[usize],
    psi_norm_sqr: f64,
    cfg: &OptimizerConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Run<T>> {
    let n = shape.len();
    let rank = cfg.rank;
    let mut cores: Vec<Vec<Vec<T>>> = init_cores(shape, rank, rng);
    let mut trace = Vec::new();
    let mut regularized = false;
    let mut epochs_used = 0;
    let mut v: Vec<Vec<T>> = vec![Vec::new(); rank];

    'sweeps: for epoch in 0..cfg.max_epochs {
        epochs_used = epoch + 1;
        for k in 0..n {
            for (r, term) in cores.iter().enumerate() {
                let conj: Vec<Vec<T>> = term
                    .iter()
                    .map(|c| c.iter().map(|x| x.conj()).collect())
                    .collect();
                let refs: Vec<&[T]> = conj.iter().map(Vec::as_slice).collect();
                v[r] = contract::all_but(psi, shape, &refs, k);
            }
            if rank == 1 {
                let scale: f64 = (0..n)
                    .filter(|&l| l != k)
                    .map(|l| crate::scalar::norm_sqr(&cores[0][l]))
                    .product();
                if !scale.is_finite() {
                    return Err(Error::Divergence { epoch });
                }
                if scale == 0.0 {
                    // a core collapsed to zero: Ψ has no overlap with the current directions
                    break 'sweeps;
                }
                cores[0][k] = v[0].iter().map(|x| x.scale(1.0 / scale)).collect();
            } else {
                let grams: Vec<Vec<T>> = (0..n)
                    .filter(|&l| l != k)
                    .map(|l| gram(&cores, l))
                    .collect();
                let c: Vec<T> = (0..rank * rank)
                    .map(|i| grams.iter().fold(T::one(), |acc, g| acc * g[i]))
                    .collect();
                let mut rhs = v.clone();
                regularized |= solve_hermitian(&c, rank, &mut rhs, RIDGE);
                for (term, sol) in cores.iter_mut().zip(rhs) {
                    term[k] = sol;
                }
            }
        }
        // the last solve used v for mode n−1, so ⟨Ψ|φ⟩ = Σ_r ⟨a_r,n−1, v_r⟩*
        let cross: f64 = cores
            .iter()
            .zip(&v)
            .map(|(term, vr)| T::dot(&term[n - 1], vr).re())
            .sum();
        let loss = psi_norm_sqr + candidate_norm_sqr(&cores) - 2.0 * cross;
        if !loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        trace.push(loss);
        balance(&mut cores);
        if plateaued(&trace, cfg.plateau_window, cfg.tol) {
            break;
        }
    }
    Ok(Run {
        cores,
        epochs_used,
        trace,
        regularized,
    })
}

/// Moves the scale of every term into its last core; φ is unchanged.
fn balance<T: Element>(cores: &mut [Vec<Vec<T>>]) {
    for term in cores.iter_mut() {
        let n = term.len();
        let mut scale = 1.0;
        for c in term[..n - 1].iter_mut() {
            let norm = normalize_in_place(c);
            if norm > 0.0 && norm.is_finite() {
                scale *= norm;
            }
        }
        term[n - 1].iter_mut().for_each(|x| *x = x.scale(scale));
    }
}
