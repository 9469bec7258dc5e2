//! Canonical multiindices: ordered multisets of basis labels.
//!
//! A multiindex is stored as strictly increasing `(BasisIndex, multiplicity)`
//! entries. Small indices (at most 8 entries, |k| ≤ 127, i ≤ 3,
//! multiplicity ≤ 63) are packed into a single `u128` whose numeric order
//! coincides with the lexicographic order on entry sequences, so the hot
//! comparison in the product kernel is one integer compare. Everything else
//! spills to a heap slice. The constructor always packs when possible, which
//! makes the representation canonical: equal values have equal bits.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use crate::basis::BasisIndex;

const SLOT_BITS: u32 = 16;
const MAX_PACKED: usize = 8;

fn pack_entry(b: BasisIndex, m: u32) -> Option<u16> {
    if b.k < -127 || b.k > 127 || b.i > 3 || m == 0 || m > 63 {
        return None;
    }
    // Field layout (high to low): k+128 (8 bits), i (2 bits), mult (6 bits).
    // Numeric order on the packed entry equals lexicographic (k, i, mult).
    Some((((b.k + 128) as u16) << 8) | ((b.i as u16) << 6) | m as u16)
}

fn unpack_entry(e: u16) -> (BasisIndex, u32) {
    let k = ((e >> 8) as i32) - 128;
    let i = ((e >> 6) & 0x3) as u8;
    let m = (e & 0x3f) as u32;
    (BasisIndex::new(k, i), m)
}

#[derive(Clone, Debug)]
enum Repr {
    Packed(u128),
    Heap(Box<[(BasisIndex, u32)]>),
}

fn lane(w: u128, j: usize) -> u16 {
    ((w >> ((MAX_PACKED - 1 - j) as u32 * SLOT_BITS)) & 0xffff) as u16
}

/// Allocation-free union of two packed words. `None` when the result needs
/// more than `MAX_PACKED` entries or a merged multiplicity overflows its
/// 6-bit field; the caller then takes the general path.
fn union_packed(a: u128, b: u128) -> Option<u128> {
    if a == 0 {
        return Some(b);
    }
    if b == 0 {
        return Some(a);
    }
    let mut out: u128 = 0;
    let mut o = 0usize;
    let (mut i, mut j) = (0usize, 0usize);
    loop {
        let ea = if i < MAX_PACKED { lane(a, i) } else { 0 };
        let eb = if j < MAX_PACKED { lane(b, j) } else { 0 };
        let e = match (ea, eb) {
            (0, 0) => return Some(out),
            (x, 0) => {
                i += 1;
                x
            }
            (0, y) => {
                j += 1;
                y
            }
            // The top 10 bits of a lane are the (k, i) key.
            (x, y) => match (x >> 6).cmp(&(y >> 6)) {
                Ordering::Less => {
                    i += 1;
                    x
                }
                Ordering::Greater => {
                    j += 1;
                    y
                }
                Ordering::Equal => {
                    let m = (x & 0x3f) + (y & 0x3f);
                    if m > 63 {
                        return None;
                    }
                    i += 1;
                    j += 1;
                    (x & !0x3f) | m
                }
            },
        };
        if o == MAX_PACKED {
            return None;
        }
        out |= (e as u128) << ((MAX_PACKED - 1 - o) as u32 * SLOT_BITS);
        o += 1;
    }
}

#[derive(Clone, Debug)]
pub struct MultiIndex(Repr);

impl MultiIndex {
    pub fn empty() -> Self {
        MultiIndex(Repr::Packed(0))
    }

    /// Canonicalizing constructor: sorts, merges duplicates, drops zero
    /// multiplicities.
    pub fn new(entries: &[(BasisIndex, u32)]) -> Self {
        let mut v: Vec<(BasisIndex, u32)> =
            entries.iter().copied().filter(|&(_, m)| m > 0).collect();
        v.sort_by_key(|&(b, _)| b);
        let mut merged: Vec<(BasisIndex, u32)> = Vec::with_capacity(v.len());
        for (b, m) in v {
            match merged.last_mut() {
                Some((pb, pm)) if *pb == b => *pm += m,
                _ => merged.push((b, m)),
            }
        }
        Self::from_sorted(merged)
    }

    pub fn single(b: BasisIndex) -> Self {
        Self::from_sorted(vec![(b, 1)])
    }

    /// Builds from strictly increasing entries with positive multiplicities.
    fn from_sorted(entries: Vec<(BasisIndex, u32)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(entries.iter().all(|&(_, m)| m > 0));
        if entries.len() <= MAX_PACKED {
            let mut bits: u128 = 0;
            let mut ok = true;
            for (j, &(b, m)) in entries.iter().enumerate() {
                match pack_entry(b, m) {
                    // First entry in the highest slot: numeric order on the
                    // whole word is then lexicographic order on sequences,
                    // with vacant low slots reading as zero (every real
                    // entry is nonzero because k+128 ≥ 1).
                    Some(e) => bits |= (e as u128) << ((MAX_PACKED - 1 - j) as u32 * SLOT_BITS),
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                return MultiIndex(Repr::Packed(bits));
            }
        }
        MultiIndex(Repr::Heap(entries.into_boxed_slice()))
    }

    /// Truncated order key: numeric order on keys refines the index order,
    /// and key ties (indices sharing their first eight entries) are left to
    /// the full comparison. Multiplicities saturate their 6-bit field, which
    /// keeps the refinement property because a saturated lane only ties with
    /// other saturated lanes. `None` when an early entry has a label outside
    /// the packable range; the caller must then sort without keys.
    pub(crate) fn sort_key(&self) -> Option<u128> {
        match &self.0 {
            Repr::Packed(bits) => Some(*bits),
            Repr::Heap(h) => {
                let mut bits = 0u128;
                for (j, &(b, m)) in h.iter().take(MAX_PACKED).enumerate() {
                    let e = pack_entry(b, m.min(63))?;
                    bits |= (e as u128) << ((MAX_PACKED - 1 - j) as u32 * SLOT_BITS);
                }
                Some(bits)
            }
        }
    }

    pub fn entries(&self) -> Vec<(BasisIndex, u32)> {
        match &self.0 {
            Repr::Packed(bits) => {
                let mut out = Vec::new();
                for j in 0..MAX_PACKED {
                    let e = ((bits >> ((MAX_PACKED - 1 - j) as u32 * SLOT_BITS)) & 0xffff) as u16;
                    if e == 0 {
                        break;
                    }
                    out.push(unpack_entry(e));
                }
                out
            }
            Repr::Heap(h) => h.to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        match &self.0 {
            Repr::Packed(bits) => {
                let mut n = 0;
                for j in 0..MAX_PACKED {
                    if (bits >> ((MAX_PACKED - 1 - j) as u32 * SLOT_BITS)) & 0xffff == 0 {
                        break;
                    }
                    n += 1;
                }
                n
            }
            Repr::Heap(h) => h.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(&self.0, Repr::Packed(0)) || self.len() == 0
    }

    /// Total degree |I|: sum of multiplicities.
    pub fn degree(&self) -> u32 {
        match &self.0 {
            Repr::Packed(bits) => {
                let mut d = 0;
                for j in 0..MAX_PACKED {
                    let e = (bits >> ((MAX_PACKED - 1 - j) as u32 * SLOT_BITS)) & 0xffff;
                    if e == 0 {
                        break;
                    }
                    d += (e & 0x3f) as u32;
                }
                d
            }
            Repr::Heap(h) => h.iter().map(|&(_, m)| m).sum(),
        }
    }

    pub fn mult_of(&self, b: BasisIndex) -> u32 {
        self.entries()
            .iter()
            .find(|&&(x, _)| x == b)
            .map(|&(_, m)| m)
            .unwrap_or(0)
    }

    /// Multiset union: multiplicities add. This is the index of a Wick
    /// product of basis terms.
    pub fn union(&self, other: &MultiIndex) -> MultiIndex {
        if let (Repr::Packed(a), Repr::Packed(b)) = (&self.0, &other.0) {
            if let Some(bits) = union_packed(*a, *b) {
                return MultiIndex(Repr::Packed(bits));
            }
        }
        let a = self.entries();
        let b = other.entries();
        let mut out: Vec<(BasisIndex, u32)> = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a[i].0, a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Self::from_sorted(out)
    }

    /// Removes one unit of `b`; returns the reduced index and the
    /// multiplicity `b` had before removal, or `None` when absent.
    pub fn remove_one(&self, b: BasisIndex) -> Option<(MultiIndex, u32)> {
        let mut entries = self.entries();
        let pos = entries.iter().position(|&(x, _)| x == b)?;
        let m = entries[pos].1;
        if m == 1 {
            entries.remove(pos);
        } else {
            entries[pos].1 = m - 1;
        }
        Some((Self::from_sorted(entries), m))
    }

    /// Removes `take` units from each of the given labels; `None` when any
    /// multiplicity is insufficient.
    pub fn remove_many(&self, removals: &[(BasisIndex, u32)]) -> Option<MultiIndex> {
        let mut entries = self.entries();
        for &(b, take) in removals {
            if take == 0 {
                continue;
            }
            let pos = entries.iter().position(|&(x, _)| x == b)?;
            if entries[pos].1 < take {
                return None;
            }
            entries[pos].1 -= take;
        }
        entries.retain(|&(_, m)| m > 0);
        Some(Self::from_sorted(entries))
    }
}

impl PartialEq for MultiIndex {
    fn eq(&self, other: &MultiIndex) -> bool {
        match (&self.0, &other.0) {
            (Repr::Packed(a), Repr::Packed(b)) => a == b,
            (Repr::Heap(a), Repr::Heap(b)) => a == b,
            // Packable values are always packed, so mixed representations
            // cannot hold equal values.
            _ => false,
        }
    }
}

impl Eq for MultiIndex {}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &MultiIndex) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &MultiIndex) -> Ordering {
        match (&self.0, &other.0) {
            (Repr::Packed(a), Repr::Packed(b)) => a.cmp(b),
            _ => {
                let a = self.entries();
                let b = other.entries();
                for (x, y) in a.iter().zip(b.iter()) {
                    match (x.0, x.1).cmp(&(y.0, y.1)) {
                        Ordering::Equal => continue,
                        ord => return ord,
                    }
                }
                a.len().cmp(&b.len())
            }
        }
    }
}

impl Hash for MultiIndex {
    fn hash<H: Hasher>(&self, state: &mut H) {
        // Equal values share a representation (canonical constructor), so
        // hashing per variant is consistent with Eq.
        match &self.0 {
            Repr::Packed(bits) => bits.hash(state),
            Repr::Heap(h) => h.hash(state),
        }
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "()");
        }
        let mut first = true;
        for (b, m) in self.entries() {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            if m == 1 {
                write!(f, "{b}")?;
            } else {
                write!(f, "{b}^{m}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(k: i32, i: u8) -> BasisIndex {
        BasisIndex::new(k, i)
    }

    #[test]
    fn constructor_canonicalizes() {
        let m = MultiIndex::new(&[(b(2, 1), 1), (b(1, 0), 2), (b(2, 1), 3), (b(0, 0), 0)]);
        assert_eq!(m.entries(), vec![(b(1, 0), 2), (b(2, 1), 4)]);
        assert_eq!(m.degree(), 6);
        assert_eq!(m.len(), 2);
    }

    #[test]
    fn packed_and_heap_agree_on_order() {
        // Force the heap representation through an unpackable label, then
        // compare against packed values with the lexicographic rule.
        let packed = MultiIndex::new(&[(b(1, 0), 1)]);
        let heap_small = MultiIndex::new(&[(b(1, 0), 1), (b(500, 0), 1)]);
        let heap_big = MultiIndex::new(&[(b(2, 0), 1)]);
        assert!(matches!(heap_small.0, Repr::Heap(_)));
        assert!(packed < heap_small);
        assert!(heap_small < heap_big);

        // Prefix rule: shorter index sorts first.
        let long = MultiIndex::new(&[(b(1, 0), 1), (b(1, 1), 1)]);
        assert!(packed < long);

        // Entrywise rule: (label, multiplicity) pairs compare position by
        // position, so the doubled label sorts after the two-label index.
        let twice = MultiIndex::new(&[(b(1, 0), 2)]);
        assert!(packed < twice);
        assert!(long < twice);
    }

    #[test]
    fn packed_numeric_order_matches_entrywise_order() {
        let samples: Vec<MultiIndex> = vec![
            MultiIndex::empty(),
            MultiIndex::new(&[(b(-127, 0), 1)]),
            MultiIndex::new(&[(b(-1, 3), 5)]),
            MultiIndex::new(&[(b(0, 0), 1)]),
            MultiIndex::new(&[(b(0, 0), 1), (b(0, 1), 1)]),
            MultiIndex::new(&[(b(0, 0), 2)]),
            MultiIndex::new(&[(b(127, 3), 63)]),
        ];
        for x in &samples {
            for y in &samples {
                let by_entries = {
                    let (a, c) = (x.entries(), y.entries());
                    a.iter()
                        .map(|&(bb, m)| (bb, m))
                        .collect::<Vec<_>>()
                        .cmp(&c.iter().map(|&(bb, m)| (bb, m)).collect::<Vec<_>>())
                };
                assert_eq!(x.cmp(y), by_entries, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn union_adds_multiplicities() {
        let x = MultiIndex::new(&[(b(1, 0), 2), (b(3, 1), 1)]);
        let y = MultiIndex::new(&[(b(1, 0), 1), (b(2, 0), 4)]);
        let u = x.union(&y);
        assert_eq!(u.entries(), vec![(b(1, 0), 3), (b(2, 0), 4), (b(3, 1), 1)]);
        assert_eq!(u, y.union(&x));
        assert_eq!(x.union(&MultiIndex::empty()), x);
    }

    #[test]
    fn union_matches_constructor_across_representations() {
        // Cross-check the packed merge against the canonicalizing
        // constructor, covering lane overflow (mult 32+32) and slot
        // overflow (5+5 distinct labels) where the merge must bail out.
        let samples = [
            MultiIndex::empty(),
            MultiIndex::new(&[(b(1, 0), 1)]),
            MultiIndex::new(&[(b(1, 0), 32)]),
            MultiIndex::new(&[(b(-2, 1), 3), (b(1, 0), 2), (b(5, 2), 1)]),
            MultiIndex::new(&(0..5).map(|k| (b(k, 0), 1)).collect::<Vec<_>>()),
            MultiIndex::new(&(0..5).map(|k| (b(k + 4, 1), 2)).collect::<Vec<_>>()),
            MultiIndex::new(&(0..9).map(|k| (b(k, 0), 1)).collect::<Vec<_>>()),
            MultiIndex::new(&[(b(200, 0), 1)]),
        ];
        for x in &samples {
            for y in &samples {
                let mut cat = x.entries();
                cat.extend(y.entries());
                assert_eq!(x.union(y), MultiIndex::new(&cat), "{x} ∪ {y}");
            }
        }
    }

    #[test]
    fn remove_one_reports_prior_multiplicity() {
        let x = MultiIndex::new(&[(b(1, 0), 3)]);
        let (r, m) = x.remove_one(b(1, 0)).unwrap();
        assert_eq!(m, 3);
        assert_eq!(r, MultiIndex::new(&[(b(1, 0), 2)]));
        assert!(x.remove_one(b(2, 0)).is_none());
        let (last, m1) = MultiIndex::single(b(1, 0)).remove_one(b(1, 0)).unwrap();
        assert_eq!((last.is_empty(), m1), (true, 1));
    }

    #[test]
    fn remove_many_checks_availability() {
        let x = MultiIndex::new(&[(b(1, 0), 2), (b(1, 1), 1)]);
        let r = x.remove_many(&[(b(1, 0), 2), (b(1, 1), 1)]).unwrap();
        assert!(r.is_empty());
        assert!(x.remove_many(&[(b(1, 0), 3)]).is_none());
        assert!(x.remove_many(&[(b(2, 0), 1)]).is_none());
    }

    #[test]
    fn spill_thresholds() {
        // Nine distinct labels cannot pack.
        let entries: Vec<_> = (0..9).map(|k| (b(k, 0), 1)).collect();
        let m = MultiIndex::new(&entries);
        assert!(matches!(m.0, Repr::Heap(_)));
        assert_eq!(m.degree(), 9);

        // Large multiplicity cannot pack either.
        let m2 = MultiIndex::new(&[(b(0, 0), 64)]);
        assert!(matches!(m2.0, Repr::Heap(_)));

        // Boundary values still pack.
        let m3 = MultiIndex::new(&[(b(-127, 0), 63), (b(127, 3), 63)]);
        assert!(matches!(m3.0, Repr::Packed(_)));
    }
}
