//! Multilinear contraction kernels.
//!
//! For a tensor Ψ and weight vectors w_0..w_{n−1}, the partial contraction
//! with mode k left open is
//!
//! ```text
//! v_k[j] = Σ_{i : i_k = j} Ψ[i] · Π_{l≠k} w_l[i_l]
//! ```
//!
//! [`all_but_each`] produces every v_k with one streaming pass over Ψ plus
//! work on tensors a factor d smaller; it is the inner loop of the gradient
//! optimizers.

use crate::scalar::Element;

/// Reusable scratch buffers so that repeated contractions do not allocate.
#[derive(Debug, Default, Clone)]
pub(crate) struct Workspace<T> {
    prefix: Vec<Vec<T>>,
    right_a: Vec<T>,
    right_b: Vec<T>,
}

impl<T: Element> Workspace<T> {
    pub fn new() -> Self {
        Self {
            prefix: Vec::new(),
            right_a: Vec::new(),
            right_b: Vec::new(),
        }
    }

    /// prefix[k] = w_0 ⊗ ⋯ ⊗ w_{k−1} (prefix[0] = [1]).
    fn build_prefixes(&mut self, shape: &[usize], ws: &[&[T]]) {
        let n = shape.len();
        self.prefix.resize_with(n, Vec::new);
        self.prefix[0].clear();
        self.prefix[0].push(T::one());
        for k in 1..n {
            let (lo, hi) = self.prefix.split_at_mut(k);
            let prev = &lo[k - 1];
            let cur = &mut hi[0];
            cur.clear();
            cur.reserve(prev.len() * shape[k - 1]);
            for &p in prev {
                cur.extend(ws[k - 1].iter().map(|&w| p * w));
            }
        }
    }
}

/// Writes v_k into `out[k]` for every mode k.
pub(crate) fn all_but_each<T: Element>(
    data: &[T],
    shape: &[usize],
    ws: &[&[T]],
    out: &mut [Vec<T>],
    work: &mut Workspace<T>,
) {
    let n = shape.len();
    debug_assert_eq!(ws.len(), n);
    debug_assert_eq!(out.len(), n);
    for (k, o) in out.iter_mut().enumerate() {
        o.clear();
        o.resize(shape[k], T::zero());
    }
    if n == 1 {
        out[0].copy_from_slice(data);
        return;
    }
    work.build_prefixes(shape, ws);

    // Fused pass over Ψ: contract the last mode into `right` and accumulate
    // v_{n−1} against the outer product of all other weights.
    let last = shape[n - 1];
    let rows = data.len() / last;
    let mut right = std::mem::take(&mut work.right_a);
    right.clear();
    right.reserve(rows);
    {
        let w_last = ws[n - 1];
        let pre = &work.prefix[n - 1];
        let v_last = &mut out[n - 1];
        for (p, row) in data.chunks_exact(last).enumerate() {
            right.push(T::dotu(row, w_last));
            T::axpy(pre[p], row, v_last);
        }
    }

    // Walk the remaining modes right to left on the shrinking tensor.
    let mut next = std::mem::take(&mut work.right_b);
    for k in (0..n - 1).rev() {
        let dk = shape[k];
        let pre = &work.prefix[k];
        let v_k = &mut out[k];
        next.clear();
        for (p, row) in right.chunks_exact(dk).enumerate() {
            if k > 0 {
                next.push(T::dotu(row, ws[k]));
            }
            T::axpy(pre[p], row, v_k);
        }
        std::mem::swap(&mut right, &mut next);
    }
    work.right_a = right;
    work.right_b = next;
}

/// v_k for a single open mode.
pub(crate) fn all_but<T: Element>(data: &[T], shape: &[usize], ws: &[&[T]], k: usize) -> Vec<T> {
    let n = shape.len();
    debug_assert!(k < n);
    // contract the modes right of k, last first
    let mut owned: Vec<T> = Vec::new();
    for m in (k + 1..n).rev() {
        let src: &[T] = if m == n - 1 { data } else { &owned };
        owned = src
            .chunks_exact(shape[m])
            .map(|row| T::dotu(row, ws[m]))
            .collect();
    }
    let cur: &[T] = if k + 1 < n { &owned } else { data };
    // cur now spans modes 0..=k; contract modes 0..k against their outer product
    let mut prefix = vec![T::one()];
    for m in 0..k {
        prefix = prefix
            .iter()
            .flat_map(|&p| ws[m].iter().map(move |&w| p * w))
            .collect();
    }
    let mut v = vec![T::zero(); shape[k]];
    for (p, row) in cur.chunks_exact(shape[k]).enumerate() {
        T::axpy(prefix[p], row, &mut v);
    }
    v
}

/// Full contraction Σ_i Ψ[i]·Π_l w_l[i_l].
pub(crate) fn full<T: Element>(data: &[T], shape: &[usize], ws: &[&[T]]) -> T {
    let v = all_but(data, shape, ws, shape.len() - 1);
    T::dotu(&v, ws[shape.len() - 1])
}

/// Outer product w_0 ⊗ ⋯ ⊗ w_{n−1} accumulated into `out` with weight `c`.
pub(crate) fn add_outer<T: Element>(ws: &[&[T]], c: T, out: &mut [T]) {
    let mut acc = vec![c];
    for w in ws {
        acc = acc
            .iter()
            .flat_map(|&p| w.iter().map(move |&x| p * x))
            .collect();
    }
    for (o, a) in out.iter_mut().zip(acc) {
        *o += a;
    }
}
