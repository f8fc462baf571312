//! Symmetric higher-order power iteration.
//!
//! The single core a is updated as a ← v/‖v‖, where v sums the contractions
//! of Ψ with conj(a) on all factor slots but one, taken over every open slot
//! (for a symmetric Ψ each slot contributes the same vector). Rank R > 1 uses
//! greedy deflation: fit a term, subtract its projection from the residual,
//! fit the next one.

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;

use super::{init_cores, plateaued, OptimizerConfig, Run};
use crate::contract::{self, Workspace};
use crate::scalar::{normalize_in_place, Element, Field};
use crate::Result;

/// Fresh initializations tried when the contraction vanishes.
const MAX_REINITS: usize = 100;

pub(crate) fn pim<T: Element>(
    psi: &[T],
    shape: &[usize],
    cfg: &OptimizerConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Run<T>> {
    let n = shape.len();
    let mut residual = psi.to_vec();
    let mut cores = Vec::with_capacity(cfg.rank);
    let mut trace = Vec::new();
    let mut epochs_used = 0;
    for _ in 0..cfg.rank {
        let (a, epochs) = power_iterate(&residual, shape, cfg, rng, &mut trace);
        epochs_used += epochs;
        // deflate: residual −= ⟨a^{⊗n}|residual⟩ a^{⊗n}
        let coeff = overlap_conj(&residual, shape, &a).conj();
        let slices: Vec<&[T]> = vec![a.as_slice(); n];
        contract::add_outer(&slices, -coeff, &mut residual);
        cores.push(vec![a; n]);
    }
    Ok(Run {
        cores,
        epochs_used,
        trace,
        regularized: false,
    })
}

/// Σ_i Ψ[i]·conj(a^{⊗n}[i]).
fn overlap_conj<T: Element>(psi: &[T], shape: &[usize], a: &[T]) -> T {
    let conj: Vec<T> = a.iter().map(|x| x.conj()).collect();
    contract::full(psi, shape, &vec![conj.as_slice(); shape.len()])
}

fn power_iterate<T: Element>(
    psi: &[T],
    shape: &[usize],
    cfg: &OptimizerConfig,
    rng: &mut ChaCha8Rng,
    trace: &mut Vec<f64>,
) -> (Vec<T>, usize) {
    let n = shape.len();
    let d = shape[0];
    let psi_norm_sqr = crate::scalar::norm_sqr(psi);
    let mut ws = Workspace::new();
    let mut slots: Vec<Vec<T>> = vec![Vec::new(); n];
    let mut a: Vec<T> = fresh(d, rng);
    let mut reinits = 0;
    let start = trace.len();
    let mut epochs = 0;
    while epochs < cfg.max_epochs {
        epochs += 1;
        let conj: Vec<T> = a.iter().map(|x| x.conj()).collect();
        contract::all_but_each(psi, shape, &vec![conj.as_slice(); n], &mut slots, &mut ws);
        let f = T::dot(&a, &slots[0]);
        trace.push(psi_norm_sqr + 1.0 - 2.0 * f.abs());
        let mut next = vec![T::zero(); d];
        for s in &slots {
            T::axpy(T::one(), s, &mut next);
        }
        if normalize_in_place(&mut next) == 0.0 {
            if reinits == MAX_REINITS {
                break;
            }
            reinits += 1;
            a = fresh(d, rng);
            continue;
        }
        a = next;
        if plateaued(&trace[start..], cfg.plateau_window, cfg.tol) {
            break;
        }
    }
    align_phase(psi, shape, &mut a);
    (a, epochs)
}

fn fresh<T: Element>(d: usize, rng: &mut ChaCha8Rng) -> Vec<T> {
    let mut a = init_cores::<T>(&[d], 1, rng).remove(0).remove(0);
    normalize_in_place(&mut a);
    a
}

/// Rotates a by a global phase so that ⟨Ψ|a^{⊗n}⟩ is real and non-negative
/// where the field allows it.
fn align_phase<T: Element>(psi: &[T], shape: &[usize], a: &mut [T]) {
    let n = shape.len();
    let f = overlap_conj(psi, shape, a).to_complex();
    if f.norm() == 0.0 {
        return;
    }
    let rot = match T::FIELD {
        // a → −a flips the sign of the overlap only for odd n
        Field::Real => {
            if f.re < 0.0 && n % 2 == 1 {
                Complex64::new(-1.0, 0.0)
            } else {
                return;
            }
        }
        // a → e^{iβ}a multiplies the conjugated overlap by e^{−inβ}
        Field::Complex => Complex64::from_polar(1.0, f.arg() / n as f64),
    };
    let rot = T::from_complex(rot);
    a.iter_mut().for_each(|x| *x *= rot);
}
