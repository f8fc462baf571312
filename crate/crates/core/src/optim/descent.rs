//! Normalized gradient descent on the cores, and its symmetrized variant with
//! one shared core per rank term.
//!
//! Each epoch renormalizes every core, evaluates ‖Ψ − φ̂‖², and takes one
//! gradient step of size α on all cores at once. The loss is evaluated from
//! the expansion ‖Ψ‖² + ‖φ̂‖² − 2 Re⟨Ψ|φ̂⟩, whose cross term falls out of the
//! same contractions that give the gradient, so φ̂ is never assembled.

use rand_chacha::ChaCha8Rng;

use super::{init_cores, plateaued, OptimizerConfig, Run};
use crate::contract::{self, Workspace};
use crate::scalar::{normalize_in_place, Element};
use crate::{Error, Result};

struct Best<T> {
    loss: f64,
    cores: Vec<Vec<Vec<T>>>,
}

impl<T: Element> Best<T> {
    fn offer(&mut self, loss: f64, cores: &[Vec<Vec<T>>]) {
        if loss < self.loss {
            self.loss = loss;
            self.cores = cores.to_vec();
        }
    }
}

fn check_finite(loss: f64, epoch: usize) -> Result<()> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(Error::Divergence { epoch })
    }
}

pub(crate) fn ngd<T: Element>(
    psi: &[T],
    shape: &[usize],
    psi_norm_sqr: f64,
    cfg: &OptimizerConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Run<T>> {
    let n = shape.len();
    let rank = cfg.rank;
    let alpha = cfg.learning_rate;
    let mut cores: Vec<Vec<Vec<T>>> = init_cores(shape, rank, rng);
    let mut best = Best {
        loss: f64::INFINITY,
        cores: cores.clone(),
    };
    let mut trace = Vec::new();
    let mut ws = Workspace::new();
    let mut v: Vec<Vec<Vec<T>>> = vec![vec![Vec::new(); n]; rank];
    let mut conj: Vec<Vec<T>> = vec![Vec::new(); n];
    let mut grams: Vec<Vec<T>> = vec![vec![T::zero(); rank * rank]; n];
    let mut epochs_used = 0;

    for epoch in 0..cfg.max_epochs {
        epochs_used = epoch + 1;
        for c in cores.iter_mut().flatten() {
            normalize_in_place(c);
        }
        let mut cross = 0.0;
        for (r, term) in cores.iter().enumerate() {
            for (dst, c) in conj.iter_mut().zip(term) {
                dst.clear();
                dst.extend(c.iter().map(|x| x.conj()));
            }
            let refs: Vec<&[T]> = conj.iter().map(Vec::as_slice).collect();
            contract::all_but_each(psi, shape, &refs, &mut v[r], &mut ws);
            cross += T::dot(&term[0], &v[r][0]).re();
        }
        for (k, g) in grams.iter_mut().enumerate() {
            for i in 0..rank {
                for j in 0..rank {
                    g[i * rank + j] = T::dot(&cores[i][k], &cores[j][k]);
                }
            }
        }
        let mut phi_sqr = T::zero();
        for i in 0..rank * rank {
            let mut p = T::one();
            for g in &grams {
                p *= g[i];
            }
            phi_sqr += p;
        }
        let loss = psi_norm_sqr + phi_sqr.re() - 2.0 * cross;
        check_finite(loss, epoch)?;
        trace.push(loss);
        best.offer(loss, &cores);
        if plateaued(&trace, cfg.plateau_window, cfg.tol) {
            break;
        }

        // simultaneous step on every core, all gradients taken at the same point
        let mut next = cores.clone();
        for r in 0..rank {
            for k in 0..n {
                let step = &mut next[r][k];
                T::axpy(T::from_f64(2.0 * alpha), &v[r][k], step);
                for s in 0..rank {
                    let mut c = T::one();
                    for (l, g) in grams.iter().enumerate() {
                        if l != k {
                            c *= g[r * rank + s];
                        }
                    }
                    T::axpy(c.scale(-2.0 * alpha), &cores[s][k], step);
                }
            }
        }
        cores = next;
    }
    Ok(Run {
        cores: best.cores,
        epochs_used,
        trace,
        regularized: false,
    })
}

pub(crate) fn sgd<T: Element>(
    psi: &[T],
    shape: &[usize],
    psi_norm_sqr: f64,
    cfg: &OptimizerConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Run<T>> {
    let n = shape.len();
    let d = shape[0];
    let rank = cfg.rank;
    let alpha = cfg.learning_rate;
    let mut cores: Vec<Vec<T>> = init_cores(&[d], rank, rng)
        .into_iter()
        .map(|mut t| t.remove(0))
        .collect();
    let mut best = Best {
        loss: f64::INFINITY,
        cores: vec![cores.clone()],
    };
    let mut trace = Vec::new();
    let mut ws = Workspace::new();
    let mut slots: Vec<Vec<T>> = vec![Vec::new(); n];
    let mut pulled: Vec<Vec<T>> = vec![vec![T::zero(); d]; rank];
    let mut epochs_used = 0;

    for epoch in 0..cfg.max_epochs {
        epochs_used = epoch + 1;
        for c in cores.iter_mut() {
            normalize_in_place(c);
        }
        let mut cross = 0.0;
        for (r, b) in cores.iter().enumerate() {
            let conj: Vec<T> = b.iter().map(|x| x.conj()).collect();
            let refs: Vec<&[T]> = vec![conj.as_slice(); n];
            contract::all_but_each(psi, shape, &refs, &mut slots, &mut ws);
            cross += T::dot(b, &slots[0]).re();
            // the shared core collects the pull of every factor slot
            let acc = &mut pulled[r];
            acc.iter_mut().for_each(|x| *x = T::zero());
            for s in &slots {
                T::axpy(T::one(), s, acc);
            }
        }
        let mut gram = vec![T::zero(); rank * rank];
        for i in 0..rank {
            for j in 0..rank {
                gram[i * rank + j] = T::dot(&cores[i], &cores[j]);
            }
        }
        let phi_sqr: T = gram.iter().map(|&g| pow(g, n)).sum();
        let loss = psi_norm_sqr + phi_sqr.re() - 2.0 * cross;
        check_finite(loss, epoch)?;
        trace.push(loss);
        best.offer(loss, std::slice::from_ref(&cores));
        if plateaued(&trace, cfg.plateau_window, cfg.tol) {
            break;
        }

        let mut next = cores.clone();
        for r in 0..rank {
            let step = &mut next[r];
            T::axpy(T::from_f64(2.0 * alpha), &pulled[r], step);
            for s in 0..rank {
                let c = pow(gram[r * rank + s], n - 1).scale(-2.0 * alpha * n as f64);
                T::axpy(c, &cores[s], step);
            }
        }
        cores = next;
    }
    let shared = best.cores.remove(0);
    let cores = shared.into_iter().map(|b| vec![b; n]).collect();
    Ok(Run {
        cores,
        epochs_used,
        trace,
        regularized: false,
    })
}

fn pow<T: Element>(x: T, e: usize) -> T {
    (0..e).fold(T::one(), |acc, _| acc * x)
}
