//! Sparse Fock series and the exact algebra on them: linear combinations,
//! the Wick product, annihilation operators, and Wick exponentials.
//!
//! A series holds strictly increasing `(MultiIndex, coefficient)` terms with
//! no stored zeros. The optional degree cap `D` means: every term of degree
//! ≤ D carries its exact mathematical coefficient, and all terms of degree
//! > D have been dropped. Uncapped series are exact and total. Operations
//! propagate caps pessimistically (minimum over inputs, minus one per
//! annihilation), so a cap can always be trusted.

use rayon::prelude::*;

use crate::basis::BasisIndex;
use crate::error::{CoreError, Result};
use crate::multiindex::MultiIndex;
use crate::scalar::{Scalar, DEFAULT_EPS};

#[derive(Clone, Debug)]
pub struct FockSeries<S: Scalar> {
    terms: Vec<(MultiIndex, S)>,
    cap: Option<u32>,
}

/// Equality compares terms only; the degree cap is bookkeeping, not value.
impl<S: Scalar> PartialEq for FockSeries<S> {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms
    }
}

fn min_cap(a: Option<u32>, b: Option<u32>) -> Option<u32> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (Some(x), None) | (None, Some(x)) => Some(x),
        (None, None) => None,
    }
}

/// Below this many term pairs the product kernel runs fully serially. The
/// parallel path produces bit-identical output (same generation order,
/// stable sort, fixed summation order), so the threshold is performance
/// tuning, not semantics.
const PAR_PAIR_THRESHOLD: usize = 1 << 14;
const FILL_LEAF: usize = 1 << 15;

impl<S: Scalar> FockSeries<S> {
    pub fn zero() -> Self {
        FockSeries { terms: Vec::new(), cap: None }
    }

    /// The Wick unit: the empty multiindex with coefficient one.
    pub fn unit() -> Self {
        FockSeries { terms: vec![(MultiIndex::empty(), S::one())], cap: None }
    }

    pub fn from_term(index: MultiIndex, coeff: S) -> Self {
        Self::canonicalize(vec![(index, coeff)])
    }

    /// Sorts, merges duplicate indices, prunes zeros. Idempotent.
    pub fn canonicalize(mut raw: Vec<(MultiIndex, S)>) -> Self {
        raw.sort_by(|a, b| a.0.cmp(&b.0));
        let mut terms: Vec<(MultiIndex, S)> = Vec::with_capacity(raw.len());
        for (idx, c) in raw {
            match terms.last_mut() {
                Some((p, acc)) if *p == idx => acc.add_assign(&c),
                _ => terms.push((idx, c)),
            }
        }
        terms.retain(|(_, c)| !c.is_negligible(DEFAULT_EPS));
        FockSeries { terms, cap: None }
    }

    pub fn terms(&self) -> &[(MultiIndex, S)] {
        &self.terms
    }

    pub fn nterms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, idx: &MultiIndex) -> Option<&S> {
        self.terms
            .binary_search_by(|(t, _)| t.cmp(idx))
            .ok()
            .map(|p| &self.terms[p].1)
    }

    pub fn cap(&self) -> Option<u32> {
        self.cap
    }

    /// Imposes a degree cap, dropping terms above it. A tighter existing
    /// cap is kept.
    pub fn with_cap(mut self, d: Option<u32>) -> Self {
        self.cap = min_cap(self.cap, d);
        if let Some(c) = self.cap {
            self.terms.retain(|(i, _)| i.degree() <= c);
        }
        self
    }

    pub fn max_degree(&self) -> u32 {
        self.terms.iter().map(|(i, _)| i.degree()).max().unwrap_or(0)
    }

    /// Largest coefficient modulus; zero for the zero series.
    pub fn max_abs(&self) -> f64 {
        self.terms
            .iter()
            .map(|(_, c)| c.abs_sq())
            .fold(0.0f64, f64::max)
            .sqrt()
    }

    pub fn scale(&self, alpha: &S) -> Self {
        if alpha.is_zero() {
            return FockSeries { terms: Vec::new(), cap: self.cap };
        }
        let terms = self
            .terms
            .iter()
            .map(|(i, c)| (i.clone(), c.mul(alpha)))
            .filter(|(_, c)| !c.is_negligible(DEFAULT_EPS))
            .collect();
        FockSeries { terms, cap: self.cap }
    }

    pub fn add(&self, other: &Self) -> Self {
        linear_combine(&S::one(), self, &S::one(), other)
    }

    pub fn sub(&self, other: &Self) -> Self {
        linear_combine(&S::one(), self, &S::one().neg(), other)
    }

    /// Wick product of two series: the coefficient convolution over all
    /// multiset splittings, realized as a union-merge over term pairs.
    ///
    /// The kernel is data-parallel with a deterministic reduction: pairs are
    /// generated into a fixed layout, sorted stably by result index, and
    /// each equal-key run is summed in generation order. The result is
    /// bitwise identical for every thread count.
    pub fn wick_product(&self, other: &Self) -> Self {
        let cap = min_cap(self.cap, other.cap);
        if self.terms.is_empty() || other.terms.is_empty() {
            return FockSeries { terms: Vec::new(), cap };
        }

        // Rights ordered by (degree, position): a degree cap then admits a
        // prefix of this list for every left term.
        let rlen = other.terms.len();
        let mut rights: Vec<u32> = (0..rlen as u32).collect();
        rights.sort_by_key(|&j| (other.terms[j as usize].0.degree(), j));
        let right_degs: Vec<u32> =
            rights.iter().map(|&j| other.terms[j as usize].0.degree()).collect();

        let mut offsets: Vec<usize> = Vec::with_capacity(self.terms.len() + 1);
        let mut total = 0usize;
        for (li, _) in &self.terms {
            offsets.push(total);
            let cnt = match cap {
                Some(c) => {
                    let ld = li.degree();
                    if ld > c {
                        0
                    } else {
                        let budget = c - ld;
                        right_degs.partition_point(|&d| d <= budget)
                    }
                }
                None => rlen,
            };
            total += cnt;
        }
        offsets.push(total);

        if total == 0 {
            return FockSeries { terms: Vec::new(), cap };
        }

        let seq = total < PAR_PAIR_THRESHOLD;
        let mut buf: Vec<(MultiIndex, S)> = Vec::new();
        if seq {
            buf.reserve_exact(total);
            for (i, (li, lc)) in self.terms.iter().enumerate() {
                let cnt = offsets[i + 1] - offsets[i];
                for &j in &rights[..cnt] {
                    let (ri, rc) = &other.terms[j as usize];
                    buf.push((li.union(ri), lc.mul(rc)));
                }
            }
        } else {
            buf.resize_with(total, || (MultiIndex::empty(), S::zero()));
            fill_pairs(&self.terms, &other.terms, &rights, &offsets, &mut buf, 0, self.terms.len());
        }

        // Sorting the 80-byte pairs directly is the kernel's hot spot, so
        // sort (key, position) records instead and gather. The position
        // tiebreak makes the comparator a total order: every sorting
        // algorithm then produces the one sorted permutation, equal-index
        // runs keep generation order, and the result cannot depend on the
        // pool size. Indices without keys fall back to sorting the pairs.
        let keys: Option<Vec<(u128, u32)>> = if total <= u32::MAX as usize {
            if seq {
                buf.iter()
                    .enumerate()
                    .map(|(n, (i, _))| i.sort_key().map(|k| (k, n as u32)))
                    .collect()
            } else {
                buf.par_iter()
                    .enumerate()
                    .map(|(n, (i, _))| i.sort_key().map(|k| (k, n as u32)))
                    .collect()
            }
        } else {
            None
        };
        match keys {
            Some(mut keys) => {
                let by_key = |a: &(u128, u32), b: &(u128, u32)| {
                    a.0.cmp(&b.0)
                        .then_with(|| buf[a.1 as usize].0.cmp(&buf[b.1 as usize].0))
                        .then(a.1.cmp(&b.1))
                };
                let gather = |&(_, n): &(u128, u32)| buf[n as usize].clone();
                buf = if seq {
                    keys.sort_unstable_by(by_key);
                    keys.iter().map(gather).collect()
                } else {
                    keys.par_sort_unstable_by(by_key);
                    keys.par_iter().map(gather).collect()
                };
            }
            None => {
                if seq {
                    buf.sort_by(|a, b| a.0.cmp(&b.0));
                } else {
                    buf.par_sort_by(|a, b| a.0.cmp(&b.0));
                }
            }
        }

        // Run boundaries, then per-run sums in layout order.
        let mut runs: Vec<(usize, usize)> = Vec::new();
        let mut start = 0usize;
        for idx in 1..=buf.len() {
            if idx == buf.len() || buf[idx].0 != buf[start].0 {
                runs.push((start, idx));
                start = idx;
            }
        }
        let mut terms: Vec<(MultiIndex, S)> = if runs.len() < PAR_PAIR_THRESHOLD {
            runs.iter()
                .map(|&(s, e)| {
                    let mut acc = buf[s].1.clone();
                    for (_, c) in &buf[s + 1..e] {
                        acc.add_assign(c);
                    }
                    (buf[s].0.clone(), acc)
                })
                .collect()
        } else {
            runs.par_iter()
                .map(|&(s, e)| {
                    let mut acc = buf[s].1.clone();
                    for (_, c) in &buf[s + 1..e] {
                        acc.add_assign(c);
                    }
                    (buf[s].0.clone(), acc)
                })
                .collect()
        };
        terms.retain(|(_, c)| !c.is_negligible(DEFAULT_EPS));
        FockSeries { terms, cap }
    }

    /// Applies the annihilation operator for label `a`: a term with
    /// multiplicity m of `a` maps to m times the term with one copy
    /// removed; terms without `a` vanish.
    pub fn annihilate(&self, a: BasisIndex) -> Self {
        let mut out: Vec<(MultiIndex, S)> = Vec::new();
        for (idx, c) in &self.terms {
            if let Some((rest, m)) = idx.remove_one(a) {
                out.push((rest, c.mul_int(m as i64)));
            }
        }
        // Removing a unit does not preserve the term order.
        let mut s = Self::canonicalize(out);
        s.cap = self.cap.map(|c| c.saturating_sub(1));
        s
    }

    /// Left-to-right composition of annihilation operators. The scalar
    /// picked up on a basis term is a product of falling multiplicities.
    pub fn annihilate_seq(&self, seq: &[BasisIndex]) -> Self {
        let mut cur = self.clone();
        for &a in seq {
            cur = cur.annihilate(a);
        }
        cur
    }
}

/// Termwise alpha·F + beta·G over the merged supports.
pub fn linear_combine<S: Scalar>(
    alpha: &S,
    f: &FockSeries<S>,
    beta: &S,
    g: &FockSeries<S>,
) -> FockSeries<S> {
    let mut terms: Vec<(MultiIndex, S)> = Vec::with_capacity(f.terms.len() + g.terms.len());
    let (a, b) = (&f.terms, &g.terms);
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => {
                terms.push((a[i].0.clone(), a[i].1.mul(alpha)));
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                terms.push((b[j].0.clone(), b[j].1.mul(beta)));
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                terms.push((a[i].0.clone(), a[i].1.mul(alpha).add(&b[j].1.mul(beta))));
                i += 1;
                j += 1;
            }
        }
    }
    for (idx, c) in &a[i..] {
        terms.push((idx.clone(), c.mul(alpha)));
    }
    for (idx, c) in &b[j..] {
        terms.push((idx.clone(), c.mul(beta)));
    }
    let cap = min_cap(f.cap, g.cap);
    if let Some(c) = cap {
        terms.retain(|(i, _)| i.degree() <= c);
    }
    terms.retain(|(_, c)| !c.is_negligible(DEFAULT_EPS));
    FockSeries { terms, cap }
}

/// Accumulates many addends; a fold of `linear_combine` with unit weights.
pub fn sum_series<S: Scalar>(parts: impl IntoIterator<Item = FockSeries<S>>) -> FockSeries<S> {
    let mut acc = FockSeries::zero();
    for p in parts {
        acc = acc.add(&p);
    }
    acc
}

/// Truncated Wick exponential of a degree-1 series: the sum of Wick powers
/// ξ^{:m:}/m! for m = 0..=D. On the multiindex with multiplicities (m_a)
/// the coefficient is the product of c_a^{m_a}/m_a!.
pub fn wick_exponential<S: Scalar>(xi: &FockSeries<S>, d: u32) -> Result<FockSeries<S>> {
    let mut coeffs: Vec<(BasisIndex, S)> = Vec::with_capacity(xi.nterms());
    for (idx, c) in xi.terms() {
        if idx.degree() != 1 {
            return Err(CoreError::NotDegreeOne(format!(
                "wick_exponential argument has a term of degree {}",
                idx.degree()
            )));
        }
        coeffs.push((idx.entries()[0].0, c.clone()));
    }

    let mut out: Vec<(MultiIndex, S)> = Vec::new();
    let mut stack: Vec<(BasisIndex, u32)> = Vec::new();
    fn rec<S: Scalar>(
        coeffs: &[(BasisIndex, S)],
        budget: u32,
        acc: S,
        stack: &mut Vec<(BasisIndex, u32)>,
        out: &mut Vec<(MultiIndex, S)>,
    ) {
        match coeffs.split_first() {
            None => out.push((MultiIndex::new(stack), acc)),
            Some(((b, c), rest)) => {
                rec(rest, budget, acc.clone(), stack, out);
                let mut pw = acc;
                for m in 1..=budget {
                    pw = pw.mul(c).div_int(m as i64);
                    stack.push((*b, m));
                    rec(rest, budget - m, pw.clone(), stack, out);
                    stack.pop();
                }
            }
        }
    }
    rec(&coeffs, d, S::one(), &mut stack, &mut out);
    Ok(FockSeries::canonicalize(out).with_cap(Some(d)))
}

/// Recursive splitter so parallel workers write disjoint, pre-assigned
/// regions of the pair buffer; layout does not depend on thread count.
fn fill_pairs<S: Scalar>(
    lefts: &[(MultiIndex, S)],
    others: &[(MultiIndex, S)],
    rights: &[u32],
    offsets: &[usize],
    buf: &mut [(MultiIndex, S)],
    lo: usize,
    hi: usize,
) {
    let span = offsets[hi] - offsets[lo];
    if span <= FILL_LEAF || hi - lo <= 1 {
        let base = offsets[lo];
        for i in lo..hi {
            let (li, lc) = &lefts[i];
            let cnt = offsets[i + 1] - offsets[i];
            let row = &mut buf[offsets[i] - base..offsets[i] - base + cnt];
            for (slot, &j) in row.iter_mut().zip(&rights[..cnt]) {
                let (ri, rc) = &others[j as usize];
                *slot = (li.union(ri), lc.mul(rc));
            }
        }
        return;
    }
    let mid = (lo + hi) / 2;
    let (a, b) = buf.split_at_mut(offsets[mid] - offsets[lo]);
    rayon::join(
        || fill_pairs(lefts, others, rights, offsets, a, lo, mid),
        || fill_pairs(lefts, others, rights, offsets, b, mid, hi),
    );
}
