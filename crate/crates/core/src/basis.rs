use std::fmt;

/// Label of one basis direction: frequency `k` and direction index `i`.
///
/// In the loop model `i` ranges over `0..n` with `n` even, and the Darboux
/// partner of `(k, 2i)` is `(k, 2i+1)`. In the cotangent model `i` encodes
/// the side: `0` for the position copy, `1` for the momentum copy, with a
/// nonzero mode integer `k`.
///
/// The total order is lexicographic on `(k, i)`; multiindices inherit it.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct BasisIndex {
    pub k: i32,
    pub i: u8,
}

impl BasisIndex {
    pub fn new(k: i32, i: u8) -> Self {
        BasisIndex { k, i }
    }

    /// Darboux block of this label in the loop model: the even direction
    /// index it shares with its partner.
    pub fn block(&self) -> (i32, u8) {
        (self.k, self.i & !1)
    }
}

impl fmt::Display for BasisIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.k, self.i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_lexicographic() {
        let mut v = vec![
            BasisIndex::new(1, 1),
            BasisIndex::new(-2, 0),
            BasisIndex::new(1, 0),
            BasisIndex::new(0, 3),
        ];
        v.sort();
        assert_eq!(
            v,
            vec![
                BasisIndex::new(-2, 0),
                BasisIndex::new(0, 3),
                BasisIndex::new(1, 0),
                BasisIndex::new(1, 1),
            ]
        );
    }

    #[test]
    fn darboux_block_pairs_even_with_odd() {
        assert_eq!(BasisIndex::new(3, 0).block(), (3, 0));
        assert_eq!(BasisIndex::new(3, 1).block(), (3, 0));
        assert_eq!(BasisIndex::new(3, 2).block(), (3, 2));
        assert_eq!(BasisIndex::new(3, 3).block(), (3, 2));
    }
}
