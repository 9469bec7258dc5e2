//! Seeded random inputs for suites, calibration, and benchmarks. Every
//! generator is deterministic in its seed so failures replay exactly.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::basis::BasisIndex;
use crate::model::DiagonalOperator;
use crate::scalar::{ExactScalar, FloatScalar, Rat, Scalar};
use crate::series::FockSeries;

/// Splits one master seed into independent per-case streams.
pub fn subseed(seed: u64, i: u64) -> u64 {
    seed ^ i.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

pub fn rng_for(seed: u64, i: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(subseed(seed, i))
}

/// Loop-model labels: |k| ≤ kmax, directions 0..n.
pub fn loop_labels(n: u16, kmax: i32) -> Vec<BasisIndex> {
    let mut out = Vec::new();
    for k in -kmax..=kmax {
        for i in 0..n {
            out.push(BasisIndex::new(k, i as u8));
        }
    }
    out
}

/// Cotangent labels: 0 < |k| ≤ kmax, both sides.
pub fn cotangent_labels(kmax: i32) -> Vec<BasisIndex> {
    let mut out = Vec::new();
    for k in -kmax..=kmax {
        if k == 0 {
            continue;
        }
        for i in 0..2u8 {
            out.push(BasisIndex::new(k, i));
        }
    }
    out
}

/// Cotangent labels restricted to modes 1..=kmax.
pub fn positive_cotangent_labels(kmax: i32) -> Vec<BasisIndex> {
    let mut out = Vec::new();
    for k in 1..=kmax {
        for i in 0..2u8 {
            out.push(BasisIndex::new(k, i));
        }
    }
    out
}

fn random_index(rng: &mut ChaCha8Rng, labels: &[BasisIndex], max_degree: u32) -> Vec<(BasisIndex, u32)> {
    let degree = rng.gen_range(0..=max_degree);
    let mut picks: Vec<(BasisIndex, u32)> = Vec::new();
    for _ in 0..degree {
        let label = labels[rng.gen_range(0..labels.len())];
        match picks.iter_mut().find(|(b, _)| *b == label) {
            Some((_, m)) => *m += 1,
            None => picks.push((label, 1)),
        }
    }
    picks
}

fn nonzero_int(rng: &mut ChaCha8Rng, bound: i64) -> i64 {
    let v = rng.gen_range(1..=bound);
    if rng.gen_bool(0.5) {
        -v
    } else {
        v
    }
}

/// Random polynomial with small integer coefficients. Term count may shrink
/// under merging of repeated indices.
pub fn random_exact_series(
    rng: &mut ChaCha8Rng,
    labels: &[BasisIndex],
    max_degree: u32,
    terms: usize,
) -> FockSeries<ExactScalar> {
    let mut raw = Vec::with_capacity(terms);
    for _ in 0..terms {
        let idx = random_index(rng, labels, max_degree);
        raw.push((
            crate::multiindex::MultiIndex::new(&idx),
            ExactScalar::from_int(nonzero_int(rng, 9)),
        ));
    }
    FockSeries::canonicalize(raw)
}

pub fn random_float_series(
    rng: &mut ChaCha8Rng,
    labels: &[BasisIndex],
    max_degree: u32,
    terms: usize,
) -> FockSeries<FloatScalar> {
    let mut raw = Vec::with_capacity(terms);
    for _ in 0..terms {
        let idx = random_index(rng, labels, max_degree);
        let re = rng.gen_range(-64i64..=64) as f64 / 16.0;
        let im = rng.gen_range(-64i64..=64) as f64 / 16.0;
        raw.push((
            crate::multiindex::MultiIndex::new(&idx),
            FloatScalar { re, im },
        ));
    }
    FockSeries::canonicalize(raw)
}

/// Random degree-one combination of the given labels, every coefficient a
/// nonzero small integer with probability 1/2 per label.
pub fn random_degree_one(
    rng: &mut ChaCha8Rng,
    labels: &[BasisIndex],
) -> FockSeries<ExactScalar> {
    let mut raw = Vec::new();
    for &b in labels {
        if rng.gen_bool(0.5) {
            raw.push((
                crate::multiindex::MultiIndex::single(b),
                ExactScalar::from_int(nonzero_int(rng, 4)),
            ));
        }
    }
    FockSeries::canonicalize(raw)
}

/// Random diagonal operator on modes 1..=kmax with rational entries of
/// modulus at most the mode number, plus a growth envelope that admits them.
pub fn random_diagonal(rng: &mut ChaCha8Rng, kmax: i32) -> DiagonalOperator {
    let mut pairs = Vec::new();
    for k in 1..=kmax {
        let q = rng.gen_range(1..=4i64);
        let p = rng.gen_range(-(k as i64) * q..=(k as i64) * q);
        pairs.push((k, Rat::new(p, q)));
    }
    DiagonalOperator::from_table(&pairs, Rat::from_int(2), 1).expect("entries respect the envelope")
}

/// Large float input for throughput tests: `terms` distinct-ish indices with
/// degrees in `deg_lo..=deg_hi` over modes |k| ≤ kmax on both sides.
pub fn bulk_float_series(
    seed: u64,
    terms: usize,
    kmax: i32,
    deg_lo: u32,
    deg_hi: u32,
) -> FockSeries<FloatScalar> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = cotangent_labels(kmax);
    let mut raw = Vec::with_capacity(terms);
    for _ in 0..terms {
        let degree = rng.gen_range(deg_lo..=deg_hi);
        let mut picks: Vec<(BasisIndex, u32)> = Vec::new();
        for _ in 0..degree {
            let label = labels[rng.gen_range(0..labels.len())];
            match picks.iter_mut().find(|(b, _)| *b == label) {
                Some((_, m)) => *m += 1,
                None => picks.push((label, 1)),
            }
        }
        let re = rng.gen_range(-64i64..=64) as f64 / 16.0;
        let im = rng.gen_range(-64i64..=64) as f64 / 16.0;
        raw.push((crate::multiindex::MultiIndex::new(&picks), FloatScalar { re, im }));
    }
    FockSeries::canonicalize(raw)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_seed_deterministic() {
        let labels = cotangent_labels(3);
        let a = random_exact_series(&mut rng_for(7, 1), &labels, 3, 10);
        let b = random_exact_series(&mut rng_for(7, 1), &labels, 3, 10);
        assert_eq!(a, b);
        let c = random_exact_series(&mut rng_for(7, 2), &labels, 3, 10);
        assert_ne!(a, c);
    }

    #[test]
    fn degree_and_label_bounds_hold() {
        let labels = positive_cotangent_labels(2);
        let f = random_exact_series(&mut rng_for(3, 0), &labels, 4, 40);
        assert!(f.max_degree() <= 4);
        for (idx, _) in f.terms() {
            for (b, _) in idx.entries() {
                assert!(labels.contains(&b));
            }
        }
    }

    #[test]
    fn random_diagonal_respects_mode_bound() {
        let a = random_diagonal(&mut rng_for(11, 4), 5);
        for k in 1..=5i32 {
            let lam = a.eval(k);
            assert!(lam.abs() <= Rat::from_int(k as i64));
        }
        assert!(a.eval(6).is_zero());
    }

    #[test]
    fn bulk_series_hits_requested_shape() {
        let f = bulk_float_series(9, 500, 10, 3, 6);
        assert!(f.nterms() > 400);
        for (idx, _) in f.terms() {
            let d = idx.degree();
            assert!((3..=6).contains(&d));
        }
    }
}
