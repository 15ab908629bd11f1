//! Dense symmetric tensor algebra over R^d.
//!
//! An order-k symmetric tensor is stored on sorted multi-indices: the map key
//! is the non-decreasing index tuple and the value is the *per-permutation*
//! coefficient, i.e. the value the full symmetric tensor takes at any one
//! index tuple with that sorted form. Multiplicity factors (the number of
//! distinct permutations of a key) are applied by inner products and by
//! chaos evaluation, never baked into the stored coefficients. Under this
//! convention the symmetric product of rank-one powers of the same vector is
//! a plain coefficient product.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// A sorted multi-index: a non-decreasing tuple of basis indices in `1..=d`.
///
/// The empty multi-index is the (only) key of an order-0 tensor.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    /// Canonical multi-index from an arbitrary index tuple; sorts the entries.
    pub fn new(mut entries: Vec<u32>) -> Self {
        entries.sort_unstable();
        MultiIndex(entries)
    }

    /// Builds from an already-sorted tuple, rejecting unsorted or zero entries.
    pub fn from_sorted(entries: Vec<u32>) -> Result<Self> {
        if entries.contains(&0) {
            return Err(Error::InvalidMultiIndex {
                reason: "basis indices are 1-based; found 0".into(),
            });
        }
        if entries.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidMultiIndex {
                reason: format!("entries {entries:?} are not sorted ascending"),
            });
        }
        Ok(MultiIndex(entries))
    }

    pub fn empty() -> Self {
        MultiIndex(Vec::new())
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn max_entry(&self) -> u32 {
        self.0.last().copied().unwrap_or(0)
    }

    /// Multiset union with another multi-index (concatenate and sort).
    pub fn merge(&self, other: &Self) -> Self {
        let mut entries = Vec::with_capacity(self.0.len() + other.0.len());
        entries.extend_from_slice(&self.0);
        entries.extend_from_slice(&other.0);
        entries.sort_unstable();
        MultiIndex(entries)
    }

    /// Per-axis multiplicities `alpha_1..alpha_d` of the index entries.
    pub fn multiplicities(&self, dimension: usize) -> Vec<u32> {
        let mut alpha = vec![0u32; dimension];
        for &i in &self.0 {
            alpha[(i - 1) as usize] += 1;
        }
        alpha
    }

    /// Iterates over `(index, run length)` for each distinct entry.
    pub fn runs(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        RunIter {
            entries: &self.0,
            pos: 0,
        }
    }

    /// Number of distinct permutations of the tuple, `k! / prod(alpha_i!)`.
    ///
    /// Exact: computed as a product of binomial coefficients in integer
    /// arithmetic before conversion to `f64`.
    pub fn distinct_permutations(&self) -> f64 {
        let mut remaining = self.0.len() as u128;
        let mut count: u128 = 1;
        for (_, run) in self.runs() {
            count *= binomial_u128(remaining, run as u128);
            remaining -= run as u128;
        }
        count as f64
    }
}

struct RunIter<'a> {
    entries: &'a [u32],
    pos: usize,
}

impl Iterator for RunIter<'_> {
    type Item = (u32, u32);

    fn next(&mut self) -> Option<(u32, u32)> {
        if self.pos >= self.entries.len() {
            return None;
        }
        let value = self.entries[self.pos];
        let start = self.pos;
        while self.pos < self.entries.len() && self.entries[self.pos] == value {
            self.pos += 1;
        }
        Some((value, (self.pos - start) as u32))
    }
}

pub(crate) fn binomial_u128(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut result: u128 = 1;
    for i in 0..k {
        // each partial product is itself a binomial coefficient, so the
        // division is exact
        result = result * (n - i) / (i + 1);
    }
    result
}

/// Factorial as `f64`; exact for `n <= 18`, which covers every multiplicity
/// weight at desk scale (order caps around 16-20 stay well inside `u128`
/// intermediates elsewhere).
pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// An element of the Cameron-Martin space H = R^d in its orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct CmVector {
    components: Vec<f64>,
}

impl CmVector {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParameter {
                name: "dimension",
                reason: "a Cameron-Martin vector needs at least one component".into(),
            });
        }
        if components.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                context: "CmVector components",
            });
        }
        Ok(CmVector { components })
    }

    pub fn zero(dimension: usize) -> Self {
        CmVector {
            components: vec![0.0; dimension],
        }
    }

    /// The basis vector `e_i` (1-based index).
    pub fn basis(dimension: usize, index: usize) -> Result<Self> {
        if index == 0 || index > dimension {
            return Err(Error::InvalidParameter {
                name: "index",
                reason: format!("basis index {index} out of range 1..={dimension}"),
            });
        }
        let mut components = vec![0.0; dimension];
        components[index - 1] = 1.0;
        Ok(CmVector { components })
    }

    pub fn dimension(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    /// Component for a 1-based basis index.
    pub fn component(&self, index: u32) -> f64 {
        self.components[(index - 1) as usize]
    }

    pub fn inner(&self, other: &CmVector) -> Result<f64> {
        if self.dimension() != other.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: other.dimension(),
            });
        }
        Ok(self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a * b)
            .sum())
    }

    /// Pairing with a raw point of W = R^d.
    pub fn pair_point(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: point.len(),
            });
        }
        Ok(self.components.iter().zip(point).map(|(a, b)| a * b).sum())
    }

    pub fn norm_sq(&self) -> f64 {
        self.components.iter().map(|x| x * x).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scale(&self, s: f64) -> CmVector {
        CmVector {
            components: self.components.iter().map(|x| s * x).collect(),
        }
    }

    pub fn neg(&self) -> CmVector {
        self.scale(-1.0)
    }

    pub fn add(&self, other: &CmVector) -> Result<CmVector> {
        if self.dimension() != other.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: other.dimension(),
            });
        }
        Ok(CmVector {
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &CmVector) -> Result<CmVector> {
        self.add(&other.neg())
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.components.iter().all(|x| x.abs() <= tol)
    }
}

/// Order-k symmetric kernel over R^d, stored on sorted multi-indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricTensor {
    dimension: usize,
    order: usize,
    coeffs: BTreeMap<MultiIndex, f64>,
}

impl SymmetricTensor {
    pub fn zero(dimension: usize, order: usize) -> Self {
        SymmetricTensor {
            dimension,
            order,
            coeffs: BTreeMap::new(),
        }
    }

    /// Order-0 tensor holding a single scalar.
    pub fn scalar(dimension: usize, value: f64) -> Self {
        let mut t = SymmetricTensor::zero(dimension, 0);
        if value != 0.0 {
            t.coeffs.insert(MultiIndex::empty(), value);
        }
        t
    }

    pub fn from_coeffs<I>(dimension: usize, order: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, f64)>,
    {
        let mut t = SymmetricTensor::zero(dimension, order);
        for (idx, value) in entries {
            t.set(idx, value)?;
        }
        Ok(t)
    }

    /// The tensor `h^(x)k`; `k = 0` gives the scalar 1.
    pub fn rank_one_power(h: &CmVector, k: usize) -> Self {
        let d = h.dimension();
        if k == 0 {
            return SymmetricTensor::scalar(d, 1.0);
        }
        let mut t = SymmetricTensor::zero(d, k);
        let mut stack = vec![(Vec::<u32>::new(), 1.0f64, 1u32)];
        while let Some((prefix, value, start)) = stack.pop() {
            if prefix.len() == k {
                if value != 0.0 {
                    t.coeffs.insert(MultiIndex(prefix), value);
                }
                continue;
            }
            for i in start..=(d as u32) {
                let c = h.component(i);
                if c == 0.0 {
                    continue;
                }
                let mut next = prefix.clone();
                next.push(i);
                stack.push((next, value * c, i));
            }
        }
        t
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn check_index(&self, idx: &MultiIndex) -> Result<()> {
        if idx.order() != self.order {
            return Err(Error::OrderMismatch {
                expected: self.order,
                got: idx.order(),
            });
        }
        if idx.max_entry() as usize > self.dimension {
            return Err(Error::InvalidMultiIndex {
                reason: format!(
                    "index {:?} exceeds dimension {}",
                    idx.entries(),
                    self.dimension
                ),
            });
        }
        Ok(())
    }

    /// Sets the per-permutation coefficient at a sorted key; zero removes.
    pub fn set(&mut self, idx: MultiIndex, value: f64) -> Result<()> {
        self.check_index(&idx)?;
        if !value.is_finite() {
            return Err(Error::NonFinite {
                context: "tensor coefficient",
            });
        }
        if value == 0.0 {
            self.coeffs.remove(&idx);
        } else {
            self.coeffs.insert(idx, value);
        }
        Ok(())
    }

    fn accumulate(&mut self, idx: MultiIndex, value: f64) {
        use std::collections::btree_map::Entry;
        match self.coeffs.entry(idx) {
            Entry::Occupied(mut slot) => {
                let v = slot.get() + value;
                if v == 0.0 {
                    slot.remove();
                } else {
                    *slot.get_mut() = v;
                }
            }
            Entry::Vacant(slot) => {
                if value != 0.0 {
                    slot.insert(value);
                }
            }
        }
    }

    /// Per-permutation coefficient at a sorted key (zero when absent).
    pub fn coeff(&self, idx: &MultiIndex) -> f64 {
        self.coeffs.get(idx).copied().unwrap_or(0.0)
    }

    /// Full-tensor entry at an arbitrary (unsorted) index tuple.
    pub fn entry(&self, tuple: &[u32]) -> f64 {
        self.coeff(&MultiIndex::new(tuple.to_vec()))
    }

    /// Scalar value of an order-0 tensor.
    pub fn scalar_value(&self) -> f64 {
        debug_assert_eq!(self.order, 0);
        self.coeff(&MultiIndex::empty())
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.coeffs.iter().map(|(k, &v)| (k, v))
    }

    pub fn num_entries(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.coeffs.values().all(|v| v.abs() <= tol)
    }

    /// Largest absolute per-permutation coefficient.
    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.values().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn scale(&self, s: f64) -> SymmetricTensor {
        let mut t = SymmetricTensor::zero(self.dimension, self.order);
        if s != 0.0 {
            for (k, v) in &self.coeffs {
                t.coeffs.insert(k.clone(), s * v);
            }
        }
        t
    }

    pub fn add(&self, other: &SymmetricTensor) -> Result<SymmetricTensor> {
        if self.dimension != other.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: other.dimension,
            });
        }
        if self.order != other.order {
            return Err(Error::OrderMismatch {
                expected: self.order,
                got: other.order,
            });
        }
        let mut t = self.clone();
        for (k, &v) in &other.coeffs {
            t.accumulate(k.clone(), v);
        }
        Ok(t)
    }

    /// Symmetric tensor product: the symmetrization of `self (x) other`.
    ///
    /// For a merged key M and a sub-multiset S drawn from `self`'s support,
    /// the contribution carries weight `prod_i C(m_i, s_i) / C(j+k, j)`:
    /// the fraction of permutations of M that route S into the first j slots.
    pub fn sym_product(&self, other: &SymmetricTensor) -> Result<SymmetricTensor> {
        if self.dimension != other.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: other.dimension,
            });
        }
        let j = self.order;
        let k = other.order;
        let mut out = SymmetricTensor::zero(self.dimension, j + k);
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Ok(out);
        }
        let total_splits = binomial_u128((j + k) as u128, j as u128) as f64;
        for (ka, &va) in &self.coeffs {
            for (kb, &vb) in &other.coeffs {
                let merged = ka.merge(kb);
                let mut ways: u128 = 1;
                {
                    // count of ways to pick ka's copies out of merged, per axis
                    let mut a_runs = ka.runs().peekable();
                    for (value, m_count) in merged.runs() {
                        let a_count = match a_runs.peek() {
                            Some(&(v, c)) if v == value => {
                                a_runs.next();
                                c
                            }
                            _ => 0,
                        };
                        ways *= binomial_u128(m_count as u128, a_count as u128);
                    }
                }
                let weight = ways as f64 / total_splits;
                out.accumulate(merged, weight * va * vb);
            }
        }
        Ok(out)
    }

    /// Unweighted Hilbert-Schmidt inner product on H^(x)k: the sum over all
    /// d^k index tuples of the two full tensors, computed on sorted keys with
    /// permutation multiplicities.
    pub fn inner(&self, other: &SymmetricTensor) -> Result<f64> {
        if self.dimension != other.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: other.dimension,
            });
        }
        if self.order != other.order {
            return Err(Error::OrderMismatch {
                expected: self.order,
                got: other.order,
            });
        }
        let mut sum = 0.0;
        let (small, large) = if self.coeffs.len() <= other.coeffs.len() {
            (self, other)
        } else {
            (other, self)
        };
        for (idx, v) in &small.coeffs {
            let w = large.coeff(idx);
            if w != 0.0 {
                sum += idx.distinct_permutations() * v * w;
            }
        }
        Ok(sum)
    }

    /// Hilbert-Schmidt norm, `sqrt(<a, a>)`.
    pub fn hs_norm(&self) -> f64 {
        self.inner(self).expect("same tensor").max(0.0).sqrt()
    }

    /// Largest absolute difference of per-permutation coefficients.
    pub fn max_abs_diff(&self, other: &SymmetricTensor) -> f64 {
        let mut worst = 0.0f64;
        for (k, v) in &self.coeffs {
            worst = worst.max((v - other.coeff(k)).abs());
        }
        for (k, v) in &other.coeffs {
            worst = worst.max((v - self.coeff(k)).abs());
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Dense full-tensor mirror used as an independent oracle: all d^k
    /// entries, symmetrization done by explicit tuple iteration.
    #[derive(Clone)]
    struct DenseTensor {
        dimension: usize,
        order: usize,
        values: Vec<f64>,
    }

    impl DenseTensor {
        fn from_symmetric(t: &SymmetricTensor) -> DenseTensor {
            let size = t.dimension().pow(t.order() as u32);
            let mut values = vec![0.0; size];
            for (flat, value) in values.iter_mut().enumerate() {
                *value = t.entry(&unflatten(flat, t.dimension(), t.order()));
            }
            DenseTensor {
                dimension: t.dimension(),
                order: t.order(),
                values,
            }
        }

        /// Symmetrized outer product a (x) b via iteration over all tuples of
        /// the result, averaging over distinct arrangements of each multiset.
        fn sym_product(a: &DenseTensor, b: &DenseTensor) -> SymmetricTensor {
            let d = a.dimension;
            let n = a.order + b.order;
            let mut sums: BTreeMap<MultiIndex, f64> = BTreeMap::new();
            for flat in 0..d.pow(n as u32) {
                let tuple = unflatten(flat, d, n);
                let va = a.values[flatten(&tuple[..a.order], d)];
                let vb = b.values[flatten(&tuple[a.order..], d)];
                *sums.entry(MultiIndex::new(tuple)).or_insert(0.0) += va * vb;
            }
            let mut out = SymmetricTensor::zero(d, n);
            for (idx, total) in sums {
                let value = total / idx.distinct_permutations();
                out.set(idx, value).unwrap();
            }
            out
        }

        fn inner(a: &DenseTensor, b: &DenseTensor) -> f64 {
            a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum()
        }
    }

    fn unflatten(mut flat: usize, d: usize, order: usize) -> Vec<u32> {
        let mut tuple = vec![0u32; order];
        for slot in tuple.iter_mut().rev() {
            *slot = (flat % d) as u32 + 1;
            flat /= d;
        }
        tuple
    }

    fn flatten(tuple: &[u32], d: usize) -> usize {
        tuple.iter().fold(0, |acc, &i| acc * d + (i as usize - 1))
    }

    fn e(d: usize, i: usize) -> CmVector {
        CmVector::basis(d, i).unwrap()
    }

    #[test]
    fn scalar_product_is_identity() {
        let one = SymmetricTensor::scalar(2, 1.0);
        let b = SymmetricTensor::rank_one_power(&e(2, 1), 3);
        let prod = one.sym_product(&b).unwrap();
        assert_eq!(prod, b);
    }

    #[test]
    fn rank_one_square_of_basis_vector() {
        let t = e(2, 1);
        let prod = SymmetricTensor::rank_one_power(&t, 1)
            .sym_product(&SymmetricTensor::rank_one_power(&t, 1))
            .unwrap();
        assert_eq!(prod.coeff(&MultiIndex::new(vec![1, 1])), 1.0);
        assert_eq!(prod.num_entries(), 1);
    }

    #[test]
    fn mixed_basis_product_carries_half_per_permutation() {
        // e1 (x)s e2 in d=2: the full tensor has 1/2 at (1,2) and (2,1); in
        // sorted-key storage that is the single key (1,2) with value 1/2.
        let a = SymmetricTensor::rank_one_power(&e(2, 1), 1);
        let b = SymmetricTensor::rank_one_power(&e(2, 2), 1);
        let prod = a.sym_product(&b).unwrap();
        assert_eq!(prod.coeff(&MultiIndex::new(vec![1, 2])), 0.5);

        // brute-force symmetrization over both permutations agrees
        let oracle = DenseTensor::sym_product(
            &DenseTensor::from_symmetric(&a),
            &DenseTensor::from_symmetric(&b),
        );
        assert_eq!(prod.max_abs_diff(&oracle), 0.0);
    }

    #[test]
    fn inner_products_on_rank_one_tensors() {
        let a = SymmetricTensor::rank_one_power(&e(2, 1), 2);
        assert_eq!(a.inner(&a).unwrap(), 1.0);

        let m = SymmetricTensor::rank_one_power(&e(2, 1), 1)
            .sym_product(&SymmetricTensor::rank_one_power(&e(2, 2), 1))
            .unwrap();
        // brute force over all 4 tuples of the full symmetrized tensor: 2 * (1/2)^2
        assert_eq!(m.inner(&m).unwrap(), 0.5);

        let h = CmVector::new(vec![2.0, 0.0]).unwrap();
        let h3 = SymmetricTensor::rank_one_power(&h, 3);
        assert_relative_eq!(h3.inner(&h3).unwrap(), 64.0, max_relative = 1e-14);
        let h2 = CmVector::new(vec![1.2, -1.6]).unwrap(); // |h| = 2 again
        let h23 = SymmetricTensor::rank_one_power(&h2, 3);
        assert_relative_eq!(h23.inner(&h23).unwrap(), 64.0, max_relative = 1e-13);
    }

    #[test]
    fn rank_one_power_components() {
        let h = CmVector::new(vec![0.3, 0.4]).unwrap();
        let t = SymmetricTensor::rank_one_power(&h, 2);
        assert_relative_eq!(
            t.coeff(&MultiIndex::new(vec![1, 1])),
            0.09,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            t.coeff(&MultiIndex::new(vec![2, 2])),
            0.16,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            t.coeff(&MultiIndex::new(vec![1, 2])),
            0.12,
            max_relative = 1e-15
        );
        assert_eq!(SymmetricTensor::rank_one_power(&h, 0).scalar_value(), 1.0);
    }

    #[test]
    fn dimension_and_order_mismatches_are_rejected() {
        let a = SymmetricTensor::rank_one_power(&e(2, 1), 2);
        let b = SymmetricTensor::rank_one_power(&e(3, 1), 2);
        assert!(matches!(
            a.sym_product(&b),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(a.inner(&b), Err(Error::DimensionMismatch { .. })));
        let c = SymmetricTensor::rank_one_power(&e(2, 1), 3);
        assert!(matches!(a.inner(&c), Err(Error::OrderMismatch { .. })));
    }

    #[test]
    fn multi_index_validation() {
        assert!(MultiIndex::from_sorted(vec![1, 2, 2]).is_ok());
        assert!(MultiIndex::from_sorted(vec![2, 1]).is_err());
        assert!(MultiIndex::from_sorted(vec![0, 1]).is_err());
        assert_eq!(MultiIndex::new(vec![3, 1, 2]).entries(), &[1, 2, 3]);
    }

    #[test]
    fn distinct_permutation_counts() {
        assert_eq!(MultiIndex::empty().distinct_permutations(), 1.0);
        assert_eq!(MultiIndex::new(vec![1, 1]).distinct_permutations(), 1.0);
        assert_eq!(MultiIndex::new(vec![1, 2]).distinct_permutations(), 2.0);
        assert_eq!(
            MultiIndex::new(vec![1, 1, 2, 3]).distinct_permutations(),
            12.0
        );
    }

    fn arb_tensor_of(d: usize, order: usize) -> impl Strategy<Value = SymmetricTensor> {
        prop::collection::vec(-2.0f64..2.0, num_keys(d, order)).prop_map(move |values| {
            let mut t = SymmetricTensor::zero(d, order);
            for (key, value) in sorted_keys(d, order).into_iter().zip(values) {
                t.set(key, value).unwrap();
            }
            t
        })
    }

    fn arb_tensor(d: usize, max_order: usize) -> impl Strategy<Value = SymmetricTensor> {
        (0..=max_order).prop_flat_map(move |order| arb_tensor_of(d, order))
    }

    fn arb_tensor_pair(
        d: usize,
        max_order: usize,
    ) -> impl Strategy<Value = (SymmetricTensor, SymmetricTensor)> {
        (0..=max_order)
            .prop_flat_map(move |order| (arb_tensor_of(d, order), arb_tensor_of(d, order)))
    }

    fn num_keys(d: usize, order: usize) -> usize {
        // C(order + d - 1, d - 1)
        binomial_u128((order + d - 1) as u128, (d - 1) as u128) as usize
    }

    fn sorted_keys(d: usize, order: usize) -> Vec<MultiIndex> {
        let mut keys = vec![];
        let mut stack = vec![(Vec::new(), 1u32)];
        while let Some((prefix, start)) = stack.pop() {
            if prefix.len() == order {
                keys.push(MultiIndex(prefix));
                continue;
            }
            for i in start..=(d as u32) {
                let mut next: Vec<u32> = prefix.clone();
                next.push(i);
                stack.push((next, i));
            }
        }
        keys.sort();
        keys
    }

    proptest! {
        #[test]
        fn sym_product_commutes(a in arb_tensor(3, 4), b in arb_tensor(3, 4)) {
            let ab = a.sym_product(&b).unwrap();
            let ba = b.sym_product(&a).unwrap();
            prop_assert!(ab.max_abs_diff(&ba) <= 1e-12 * (1.0 + ab.max_abs_coeff()));
        }

        #[test]
        fn sym_product_associates(
            a in arb_tensor(2, 3),
            b in arb_tensor(2, 3),
            c in arb_tensor(2, 3),
        ) {
            let left = a.sym_product(&b).unwrap().sym_product(&c).unwrap();
            let right = a.sym_product(&b.sym_product(&c).unwrap()).unwrap();
            prop_assert!(left.max_abs_diff(&right) <= 1e-12 * (1.0 + left.max_abs_coeff()));
        }

        #[test]
        fn sym_product_matches_dense_oracle(a in arb_tensor(3, 3), b in arb_tensor(3, 3)) {
            let fast = a.sym_product(&b).unwrap();
            let oracle = DenseTensor::sym_product(
                &DenseTensor::from_symmetric(&a),
                &DenseTensor::from_symmetric(&b),
            );
            prop_assert!(fast.max_abs_diff(&oracle) <= 1e-12 * (1.0 + fast.max_abs_coeff()));
        }

        #[test]
        fn inner_matches_dense_oracle((a, b) in arb_tensor_pair(3, 4)) {
            let fast = a.inner(&b).unwrap();
            let slow = DenseTensor::inner(
                &DenseTensor::from_symmetric(&a),
                &DenseTensor::from_symmetric(&b),
            );
            prop_assert!((fast - slow).abs() <= 1e-11 * (1.0 + slow.abs()));
        }

        #[test]
        fn rank_one_power_splits(
            comps in prop::collection::vec(-1.5f64..1.5, 3),
            j in 0usize..3,
            k in 0usize..3,
        ) {
            let h = CmVector::new(comps).unwrap();
            let whole = SymmetricTensor::rank_one_power(&h, j + k);
            let split = SymmetricTensor::rank_one_power(&h, j)
                .sym_product(&SymmetricTensor::rank_one_power(&h, k))
                .unwrap();
            prop_assert!(whole.max_abs_diff(&split) <= 1e-12 * (1.0 + whole.max_abs_coeff()));
        }
    }
}
