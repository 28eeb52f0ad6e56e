//! Tensor storage.
//!
//! [`SymTensor`] keeps one component per multiset of indices, so total
//! symmetry holds by construction. Components are ranked in colexicographic
//! order of the sorted index tuple via the combinatorial number system:
//! a sorted tuple `i_0 <= ... <= i_{r-1}` maps to the strictly increasing
//! `c_t = i_t + t`, whose rank is `Σ_t C(c_t, t + 1)`.
//!
//! [`DenseTensor`] stores all `n^r` components and is used where symmetry is
//! partial (`T^h_ijk`) or must be measured rather than assumed (oracle output).

use serde::Serialize;

use crate::error::{FinslerError, Result};
use crate::scalar::{binomial, max_abs, Scalar};

/// Number of independent components of a totally symmetric order-`r` tensor in `n` dimensions.
pub fn sym_len(n: usize, r: usize) -> usize {
    binomial(n + r - 1, r)
}

/// Rank of a sorted (nondecreasing) index tuple.
pub fn sym_rank(sorted: &[usize]) -> usize {
    sorted.iter().enumerate().map(|(t, &i)| binomial(i + t, t + 1)).sum()
}

/// All sorted index tuples of length `r` over `0..n`, in rank order.
pub fn multisets(n: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); sym_len(n, r)];
    let mut cur = vec![0usize; r];
    fn rec(n: usize, pos: usize, lo: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if pos == cur.len() {
            let k = sym_rank(cur);
            out[k] = cur.clone();
            return;
        }
        for i in lo..n {
            cur[pos] = i;
            rec(n, pos + 1, i, cur, out);
        }
    }
    rec(n, 0, 0, &mut cur, &mut out);
    out
}

/// All permutations of `0..r`.
pub fn permutations(r: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, left: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for k in 0..left.len() {
            let v = left.remove(k);
            prefix.push(v);
            rec(prefix, left, out);
            prefix.pop();
            left.insert(k, v);
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut (0..r).collect(), &mut out);
    out
}

/// Iterates all index tuples of length `r` over `0..n` in lexicographic order.
pub fn all_indices(n: usize, r: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = n.pow(r as u32);
    (0..total).map(move |mut flat| {
        let mut idx = vec![0usize; r];
        for slot in idx.iter_mut().rev() {
            *slot = flat % n;
            flat /= n;
        }
        idx
    })
}

/// Totally symmetric tensor with multiset storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensor<T> {
    dim: usize,
    order: usize,
    data: Vec<T>,
}

/// Totally symmetric 3-tensor (the Cartan tensor).
pub type Tensor3<T> = SymTensor<T>;
/// Totally symmetric 4-tensor (the T-tensor, `∂C`).
pub type Tensor4<T> = SymTensor<T>;

impl<T: Scalar> SymTensor<T> {
    pub fn zeros(dim: usize, order: usize) -> Self {
        Self { dim, order, data: vec![T::zero(); sym_len(dim, order)] }
    }

    /// Evaluates `f` once per multiset, on its sorted representative.
    pub fn from_fn(dim: usize, order: usize, mut f: impl FnMut(&[usize]) -> T) -> Self {
        let data = multisets(dim, order).iter().map(|idx| f(idx)).collect();
        Self { dim, order, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Stored components in rank order.
    pub fn components(&self) -> &[T] {
        &self.data
    }

    pub fn get(&self, idx: &[usize]) -> T {
        debug_assert_eq!(idx.len(), self.order);
        let mut s = idx.to_vec();
        s.sort_unstable();
        self.data[sym_rank(&s)]
    }

    pub fn max_abs(&self) -> T {
        max_abs(&self.data)
    }

    pub fn scale(&self, k: T) -> Self {
        Self { dim: self.dim, order: self.order, data: self.data.iter().map(|&x| x * k).collect() }
    }

    pub fn to_dense(&self) -> DenseTensor<T> {
        DenseTensor::from_fn(self.dim, self.order, |idx| self.get(idx))
    }

    /// Symmetrizes a dense tensor by averaging over index permutations.
    pub fn symmetrize(dense: &DenseTensor<T>) -> Self {
        let perms = permutations(dense.order());
        let count = T::lit(perms.len() as f64);
        Self::from_fn(dense.dim(), dense.order(), |idx| {
            let sum: T = perms.iter().map(|p| dense.get(&p.iter().map(|&k| idx[k]).collect::<Vec<_>>())).sum();
            sum / count
        })
    }

    /// JSON view: components plus the index manifest.
    pub fn report(&self) -> SymTensorReport {
        SymTensorReport {
            dim: self.dim,
            order: self.order,
            index_order: multisets(self.dim, self.order),
            components: self.data.iter().map(|x| x.to_f64_lossy()).collect(),
        }
    }
}

/// Serialized symmetric tensor: `components[k]` belongs to `index_order[k]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymTensorReport {
    pub dim: usize,
    pub order: usize,
    pub index_order: Vec<Vec<usize>>,
    pub components: Vec<f64>,
}

/// Dense order-`r` tensor, row-major (last index fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor<T> {
    dim: usize,
    order: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseTensor<T> {
    pub fn zeros(dim: usize, order: usize) -> Self {
        Self { dim, order, data: vec![T::zero(); dim.pow(order as u32)] }
    }

    pub fn from_fn(dim: usize, order: usize, mut f: impl FnMut(&[usize]) -> T) -> Self {
        let data = all_indices(dim, order).map(|idx| f(&idx)).collect();
        Self { dim, order, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    fn offset(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    pub fn get(&self, idx: &[usize]) -> T {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: T) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    pub fn max_abs(&self) -> T {
        max_abs(&self.data)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { dim: self.dim, order: self.order, data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { dim: self.dim, order: self.order, data: self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect() }
    }

    pub fn scale(&self, k: T) -> Self {
        Self { dim: self.dim, order: self.order, data: self.data.iter().map(|&x| x * k).collect() }
    }

    /// Largest deviation `|T[π(idx)] - T[idx]|` over all indices and permutations.
    pub fn symmetry_defect(&self) -> T {
        let perms = permutations(self.order);
        let mut worst = T::zero();
        for idx in all_indices(self.dim, self.order) {
            let v = self.get(&idx);
            for p in &perms {
                let q: Vec<usize> = p.iter().map(|&k| idx[k]).collect();
                worst = worst.max((self.get(&q) - v).abs());
            }
        }
        worst
    }

    /// Contraction of the slot `slot` with vector `v`, giving an order `r-1` tensor.
    pub fn contract(&self, slot: usize, v: &[T]) -> Result<DenseTensor<T>> {
        if v.len() != self.dim {
            return Err(FinslerError::DimensionMismatch { expected: self.dim, found: v.len() });
        }
        if slot >= self.order {
            return Err(FinslerError::Invalid(format!("slot {slot} >= order {}", self.order)));
        }
        Ok(DenseTensor::from_fn(self.dim, self.order - 1, |idx| {
            let mut full = Vec::with_capacity(self.order);
            full.extend_from_slice(&idx[..slot]);
            full.push(0);
            full.extend_from_slice(&idx[slot..]);
            (0..self.dim)
                .map(|k| {
                    full[slot] = k;
                    v[k] * self.get(&full)
                })
                .sum()
        }))
    }

    /// Raises (or lowers) the first index with the matrix `m`: `m^{hr} T_{r...}`.
    pub fn raise_first(&self, m: &crate::linalg::Matrix<T>) -> DenseTensor<T> {
        DenseTensor::from_fn(self.dim, self.order, |idx| {
            let mut full = idx.to_vec();
            (0..self.dim)
                .map(|r| {
                    full[0] = r;
                    m.get(idx[0], r) * self.get(&full)
                })
                .sum()
        })
    }

    /// Rows `(indices..., value)` in lexicographic index order, for CSV export.
    pub fn flatten(&self) -> Vec<(Vec<usize>, T)> {
        all_indices(self.dim, self.order).map(|idx| {
            let v = self.get(&idx);
            (idx, v)
        }).collect()
    }

    pub fn report(&self) -> DenseTensorReport {
        DenseTensorReport {
            dim: self.dim,
            order: self.order,
            layout: "row-major, last index fastest",
            components: self.data.iter().map(|x| x.to_f64_lossy()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DenseTensorReport {
    pub dim: usize,
    pub order: usize,
    pub layout: &'static str,
    pub components: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn storage_sizes() {
        assert_eq!(sym_len(3, 4), 15);
        assert_eq!(sym_len(4, 4), 35);
        assert_eq!(sym_len(3, 3), 10);
        assert_eq!(permutations(4).len(), 24);
    }

    #[test]
    fn ranks_are_a_bijection() {
        for n in 1..6 {
            for r in 1..5 {
                let ms = multisets(n, r);
                assert_eq!(ms.len(), sym_len(n, r));
                for (k, m) in ms.iter().enumerate() {
                    assert_eq!(sym_rank(m), k);
                    assert!(m.windows(2).all(|w| w[0] <= w[1]));
                }
            }
        }
    }

    #[test]
    fn contraction_and_raise() {
        let t = DenseTensor::from_fn(2, 2, |i| (i[0] * 2 + i[1]) as f64);
        let c = t.contract(1, &[1.0, 1.0]).unwrap();
        assert_eq!(c.as_slice(), &[1.0, 5.0]);
        let id = crate::linalg::Matrix::identity(2);
        assert_eq!(t.raise_first(&id), t);
    }

    proptest! {
        #[test]
        fn sym_tensor_is_permutation_invariant(vals in prop::collection::vec(-10.0f64..10.0, 15)) {
            let t = SymTensor::from_fn(3, 4, |idx| vals[sym_rank(idx)]);
            prop_assert_eq!(t.to_dense().symmetry_defect(), 0.0);
            let back = SymTensor::symmetrize(&t.to_dense());
            for (a, b) in back.components().iter().zip(t.components()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
