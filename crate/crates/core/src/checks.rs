//! Identity checkers for the product families and the one-time calibration
//! that fixes the scale and sign conventions against a small dense battery.
//!
//! The convention space is the finite set
//! {prefactor ±1, ±1/2} × {bracket sign ±1} × {generator sign ±1}. Two
//! independent identities discriminate: the gauge identity
//! T′(F ⊛_A G) = T′F ⊛₀ T′G and the closed exchange formula on wick
//! exponentials. Calibration enumerates all sixteen tuples over both
//! batteries and keeps the residual-zero survivors; the shipped default is
//! the unique survivor for a generic diagonal operator.

use crate::basis::BasisIndex;
use crate::bracket::mode_pairing_shifted;
use crate::deform::{DeformationSeries, StarConvention};
use crate::error::{CoreError, Result};
use crate::model::DiagonalOperator;
use crate::multiindex::MultiIndex;
use crate::oracle::{DenseFockVector, DenseSpace};
use crate::sample;
use crate::scalar::{ExactScalar, Rat, Scalar, ScalarMode};
use crate::series::{wick_exponential, FockSeries};
use crate::star::{d_star, d_star_with, star_a, star_a_signed, t_prime_deform, StarKind};

/// Slotwise outcome of one identity check.
#[derive(Clone, Debug)]
pub struct ResidualReport {
    pub identity: &'static str,
    pub max_residual_per_slot: Vec<f64>,
    pub convention: StarConvention,
    pub exact: bool,
}

impl ResidualReport {
    fn new<S: Scalar>(
        identity: &'static str,
        residual: &DeformationSeries<S>,
        convention: StarConvention,
    ) -> Self {
        ResidualReport {
            identity,
            max_residual_per_slot: residual.max_abs_per_slot(),
            convention,
            exact: S::MODE == ScalarMode::Exact,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.max_residual_per_slot.iter().all(|&r| r == 0.0)
    }

    pub fn max_residual(&self) -> f64 {
        self.max_residual_per_slot.iter().fold(0.0, |a, &b| a.max(b))
    }
}

pub(crate) fn gauge_residual_signed<S: Scalar>(
    f: &FockSeries<S>,
    g: &FockSeries<S>,
    a: &DiagonalOperator,
    order: usize,
    conv: &StarConvention,
) -> Result<DeformationSeries<S>> {
    let perturbed =
        star_a_signed(f, g, order, a, conv.bracket_sign)?.scale_slot_powers(&conv.prefactor);
    let lhs = t_prime_deform(&perturbed, a, conv.t1_sign)?;
    let tf = t_prime_deform(&DeformationSeries::from_constant(f.clone(), order), a, conv.t1_sign)?;
    let tg = t_prime_deform(&DeformationSeries::from_constant(g.clone(), order), a, conv.t1_sign)?;
    let unperturbed = DiagonalOperator::zero();
    let rhs = d_star_with(&tf, &tg, |x, y, rem| {
        Ok(star_a_signed(x, y, rem, &unperturbed, conv.bracket_sign)?
            .scale_slot_powers(&conv.prefactor))
    })?;
    Ok(lhs.sub(&rhs))
}

/// Residual of T′(F ⊛_A G) − (T′F) ⊛₀ (T′G) under the calibrated convention.
pub fn gauge_residual<S: Scalar>(
    f: &FockSeries<S>,
    g: &FockSeries<S>,
    a: &DiagonalOperator,
    order: usize,
) -> Result<DeformationSeries<S>> {
    gauge_residual_signed(f, g, a, order, &StarConvention::calibrated())
}

pub fn gauge_equivalence_check<S: Scalar>(
    f: &FockSeries<S>,
    g: &FockSeries<S>,
    a: &DiagonalOperator,
    order: usize,
) -> Result<ResidualReport> {
    let residual = gauge_residual(f, g, a, order)?;
    Ok(ResidualReport::new("gauge", &residual, StarConvention::calibrated()))
}

fn expect_side<S: Scalar>(gamma: &FockSeries<S>, side: u8) -> Result<()> {
    for (idx, _) in gamma.terms() {
        if idx.degree() != 1 {
            return Err(CoreError::NotDegreeOne(format!(
                "exchange direction has a term of degree {}",
                idx.degree()
            )));
        }
        for (b, _) in idx.entries() {
            if b.i != side {
                return Err(CoreError::DirectionRange(format!(
                    "exchange direction must live on side {side}, got {b}"
                )));
            }
            if b.k == 0 {
                return Err(CoreError::DirectionRange("cotangent mode must be nonzero".into()));
            }
        }
    }
    Ok(())
}

/// Compares the perturbed product of two wick exponentials against its
/// closed form exp[h(⟨γ′₂,(A+𝕀)γ₁⟩₀ + ⟨γ₂,(A−𝕀)γ′₁⟩₀)]·Φ_{γ₁+γ′₁,γ₂+γ′₂},
/// slotwise up to degree d. Inputs are truncated at degree d + 2·order so
/// every compared slot is exact.
pub fn exchange_check<S: Scalar>(
    g1: &FockSeries<S>,
    g2: &FockSeries<S>,
    g1p: &FockSeries<S>,
    g2p: &FockSeries<S>,
    a: &DiagonalOperator,
    d: u32,
    order: usize,
) -> Result<ResidualReport> {
    expect_side(g1, 0)?;
    expect_side(g1p, 0)?;
    expect_side(g2, 1)?;
    expect_side(g2p, 1)?;
    let cap = d + 2 * order as u32;
    let phi = wick_exponential(&g1.add(g2), cap)?;
    let phi2 = wick_exponential(&g1p.add(g2p), cap)?;
    let lhs = star_a(&phi, &phi2, order, a)?;

    let c = mode_pairing_shifted(g2p, g1, a, 1)?.add(&mode_pairing_shifted(g2, g1p, a, -1)?);
    let phisum = wick_exponential(&g1.add(g1p).add(&g2.add(g2p)), cap)?;
    let mut slots = Vec::with_capacity(order + 1);
    let mut cm = S::one();
    let mut fact = 1i64;
    for m in 0..=order {
        if m > 0 {
            cm = cm.mul(&c);
            fact *= m as i64;
        }
        slots.push(phisum.scale(&cm.div_int(fact)));
    }
    let rhs = DeformationSeries::from_slots(slots);
    let residual = lhs.sub(&rhs).truncate_degrees(d);
    Ok(ResidualReport::new("exchange", &residual, StarConvention::calibrated()))
}

/// d_star(d_star(X,Y),Z) − d_star(X,d_star(Y,Z)), slotwise.
pub fn associativity_residual<S: Scalar>(
    x: &DeformationSeries<S>,
    y: &DeformationSeries<S>,
    z: &DeformationSeries<S>,
    kind: &StarKind<'_>,
) -> Result<DeformationSeries<S>> {
    let xy = d_star(x, y, kind)?;
    let yz = d_star(y, z, kind)?;
    Ok(d_star(&xy, z, kind)?.sub(&d_star(x, &yz, kind)?))
}

/// Deliberate corruption switch for the calibration negative test.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Tamper {
    None,
    FlipExchangeWeight,
}

#[derive(Clone, Debug)]
pub struct CalibrationOutcome {
    /// Every enumerated tuple with its worst residual over both batteries.
    pub candidates: Vec<(StarConvention, f64)>,
    pub survivors: Vec<StarConvention>,
}

impl CalibrationOutcome {
    pub fn unique(&self) -> Option<&StarConvention> {
        match self.survivors.as_slice() {
            [one] => Some(one),
            _ => None,
        }
    }
}

const GAUGE_ORDER: usize = 2;
const EXCHANGE_ORDER: usize = 2;
const EXCHANGE_DEGREE: u32 = 2;

fn dense_t_prime(
    space: &DenseSpace,
    slots: &[DenseFockVector],
    a: &DiagonalOperator,
    tau: i8,
) -> Vec<DenseFockVector> {
    let order = slots.len() - 1;
    let mut out = vec![space.zero(); order + 1];
    for (p, slot) in slots.iter().enumerate() {
        let mut cur = slot.clone();
        let mut fact = 1i64;
        for q in 0..=(order - p) {
            if q > 0 {
                cur = space.t1(&cur, a, tau);
                fact *= q as i64;
                if cur.is_zero() {
                    break;
                }
            }
            let scaled = cur.scale(&ExactScalar::one().div_int(fact));
            out[p + q] = out[p + q].add(&scaled);
        }
    }
    out
}

fn dense_star_slots(
    space: &DenseSpace,
    x: &DenseFockVector,
    y: &DenseFockVector,
    order: usize,
    a: &DiagonalOperator,
    conv: &StarConvention,
) -> Result<Vec<DenseFockVector>> {
    let mut out = Vec::with_capacity(order + 1);
    for r in 0..=order {
        let slot = space.c_r_a(x, y, r as u32, a, conv.bracket_sign)?;
        out.push(slot.scale(&ExactScalar::from_rat(&conv.prefactor.pow_u32(r as u32))));
    }
    Ok(out)
}

fn dense_gauge_residual(
    space: &DenseSpace,
    f: &DenseFockVector,
    g: &DenseFockVector,
    a: &DiagonalOperator,
    conv: &StarConvention,
) -> Result<Vec<DenseFockVector>> {
    let star = dense_star_slots(space, f, g, GAUGE_ORDER, a, conv)?;
    let lhs = dense_t_prime(space, &star, a, conv.t1_sign);

    let embed = |v: &DenseFockVector| {
        let mut slots = vec![space.zero(); GAUGE_ORDER + 1];
        slots[0] = v.clone();
        slots
    };
    let tf = dense_t_prime(space, &embed(f), a, conv.t1_sign);
    let tg = dense_t_prime(space, &embed(g), a, conv.t1_sign);
    let unperturbed = DiagonalOperator::zero();
    let mut rhs = vec![space.zero(); GAUGE_ORDER + 1];
    for p in 0..=GAUGE_ORDER {
        for q in 0..=(GAUGE_ORDER - p) {
            let prods =
                dense_star_slots(space, &tf[p], &tg[q], GAUGE_ORDER - p - q, &unperturbed, conv)?;
            for (l, part) in prods.iter().enumerate() {
                rhs[p + q + l] = rhs[p + q + l].add(part);
            }
        }
    }
    Ok(lhs.iter().zip(&rhs).map(|(x, y)| x.sub(y)).collect())
}

/// Enumerates the sixteen convention tuples against a dense gauge battery
/// (explicit Darboux pair plus seeded random polynomial pairs) and a dense
/// exchange battery (wick exponentials on the first operator-supported
/// mode), and reports the residual-zero survivors.
pub fn calibrate(a: &DiagonalOperator, seed: u64, tamper: Tamper) -> Result<CalibrationOutcome> {
    let prefactors = [Rat::ONE, Rat::from_int(-1), Rat::new(1, 2), Rat::new(-1, 2)];
    let mut conventions = Vec::new();
    for pf in &prefactors {
        for beta in [1i8, -1] {
            for tau in [1i8, -1] {
                conventions.push(
                    StarConvention::new(pf.clone(), beta, tau).expect("enumerated tuple is valid"),
                );
            }
        }
    }

    let labels = sample::positive_cotangent_labels(3);
    let gauge_space = DenseSpace::new(labels.clone(), 4);
    let one = ExactScalar::one();
    let mono = |k: i32, i: u8| {
        FockSeries::from_term(MultiIndex::single(BasisIndex::new(k, i)), one.clone())
    };
    let mut gauge_pairs = vec![(mono(1, 0), mono(1, 1))];
    for i in 0..6 {
        let mut rng = sample::rng_for(seed, i);
        let f = sample::random_exact_series(&mut rng, &labels, 2, 3);
        let g = sample::random_exact_series(&mut rng, &labels, 2, 3);
        gauge_pairs.push((f, g));
    }
    let gauge_dense: Vec<(DenseFockVector, DenseFockVector)> = gauge_pairs
        .iter()
        .map(|(f, g)| Ok((gauge_space.from_series(f)?, gauge_space.from_series(g)?)))
        .collect::<Result<_>>()?;

    let mode = (1..=8).find(|&k| !a.eval(k).is_zero()).unwrap_or(1);
    let exch_space = DenseSpace::new(
        vec![BasisIndex::new(mode, 0), BasisIndex::new(mode, 1)],
        2 * (EXCHANGE_DEGREE + 2 * EXCHANGE_ORDER as u32),
    );
    let mut quadruples: Vec<[i64; 4]> = vec![[1, 0, 0, 1], [1, 1, 1, 1]];
    for i in 0..2 {
        let mut rng = sample::rng_for(seed.wrapping_add(1), i);
        let mut q = [0i64; 4];
        for slot in &mut q {
            *slot = rand::Rng::gen_range(&mut rng, -3..=3);
        }
        q[0] = q[0].max(1);
        q[3] = q[3].max(1);
        quadruples.push(q);
    }
    let lam = a.eval(mode);
    let cap = EXCHANGE_DEGREE + 2 * EXCHANGE_ORDER as u32;
    struct ExchangeCase {
        phi: DenseFockVector,
        phi2: DenseFockVector,
        phisum: DenseFockVector,
        factor: Rat,
    }
    let mut exchange_cases = Vec::new();
    for [u, v, up, vp] in &quadruples {
        let line = |c: i64, k: i32, i: u8| {
            FockSeries::from_term(
                MultiIndex::single(BasisIndex::new(k, i)),
                ExactScalar::from_int(c),
            )
        };
        let g1 = line(*u, mode, 0);
        let g2 = line(*v, mode, 1);
        let g1p = line(*up, mode, 0);
        let g2p = line(*vp, mode, 1);
        let mut c1 = lam.add(&Rat::ONE).mul_int(vp * u);
        if tamper == Tamper::FlipExchangeWeight {
            c1 = c1.neg();
        }
        let c2 = lam.sub(&Rat::ONE).mul_int(v * up);
        exchange_cases.push(ExchangeCase {
            phi: exch_space.from_series(&wick_exponential(&g1.add(&g2), cap)?)?,
            phi2: exch_space.from_series(&wick_exponential(&g1p.add(&g2p), cap)?)?,
            phisum: exch_space.from_series(&wick_exponential(
                &g1.add(&g1p).add(&g2.add(&g2p)),
                cap,
            )?)?,
            factor: c1.add(&c2),
        });
    }

    let mut candidates = Vec::with_capacity(conventions.len());
    let mut survivors = Vec::new();
    for conv in conventions {
        let mut worst = 0.0f64;
        let mut zero = true;
        for (f, g) in &gauge_dense {
            for slot in dense_gauge_residual(&gauge_space, f, g, a, &conv)? {
                let s = gauge_space.to_series(&slot);
                zero &= s.is_zero();
                worst = worst.max(s.max_abs());
            }
        }
        for case in &exchange_cases {
            let lhs =
                dense_star_slots(&exch_space, &case.phi, &case.phi2, EXCHANGE_ORDER, a, &conv)?;
            let mut cm = Rat::ONE;
            let mut fact = 1i64;
            for (m, slot) in lhs.iter().enumerate() {
                if m > 0 {
                    cm = cm.mul(&case.factor);
                    fact *= m as i64;
                }
                let reference = case.phisum.scale(&ExactScalar::from_rat(&cm.div_int(fact)));
                let diff = exch_space
                    .to_series(&slot.sub(&reference))
                    .with_cap(Some(EXCHANGE_DEGREE));
                zero &= diff.is_zero();
                worst = worst.max(diff.max_abs());
            }
        }
        if zero {
            survivors.push(conv.clone());
        }
        candidates.push((conv, worst));
    }
    Ok(CalibrationOutcome { candidates, survivors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::FloatScalar;

    fn mono(entries: &[(i32, u8, u32)]) -> FockSeries<ExactScalar> {
        let v: Vec<_> = entries.iter().map(|&(k, i, m)| (BasisIndex::new(k, i), m)).collect();
        FockSeries::from_term(MultiIndex::new(&v), ExactScalar::one())
    }

    #[test]
    fn gauge_residual_vanishes_on_explicit_pair() {
        let a = DiagonalOperator::example();
        let report =
            gauge_equivalence_check(&mono(&[(1, 0, 1)]), &mono(&[(1, 1, 1)]), &a, 2).unwrap();
        assert!(report.is_zero(), "residuals {:?}", report.max_residual_per_slot);
        assert!(report.exact);
        assert_eq!(report.convention, StarConvention::calibrated());
    }

    #[test]
    fn gauge_residual_vanishes_on_random_polynomials() {
        let a = DiagonalOperator::example();
        let labels = sample::positive_cotangent_labels(3);
        for i in 0..5 {
            let mut rng = sample::rng_for(99, i);
            let f = sample::random_exact_series(&mut rng, &labels, 3, 4);
            let g = sample::random_exact_series(&mut rng, &labels, 3, 4);
            let report = gauge_equivalence_check(&f, &g, &a, 3).unwrap();
            assert!(report.is_zero(), "case {i}: {:?}", report.max_residual_per_slot);
        }
    }

    #[test]
    fn gauge_trivial_cases() {
        let zero_op = DiagonalOperator::zero();
        let f = mono(&[(1, 0, 2), (2, 1, 1)]);
        let g = mono(&[(1, 1, 1)]);
        let report = gauge_equivalence_check(&f, &g, &zero_op, 3).unwrap();
        assert!(report.is_zero());

        let a = DiagonalOperator::example();
        let constant = FockSeries::unit().scale(&ExactScalar::from_int(5));
        let report = gauge_equivalence_check(&constant, &g, &a, 3).unwrap();
        assert!(report.is_zero());
    }

    #[test]
    fn gauge_residual_float_mode_small() {
        let a = DiagonalOperator::example();
        let labels = sample::positive_cotangent_labels(2);
        let mut rng = sample::rng_for(5, 0);
        let f = sample::random_float_series(&mut rng, &labels, 3, 4);
        let g = sample::random_float_series(&mut rng, &labels, 3, 4);
        let report = gauge_equivalence_check(&f, &g, &a, 2).unwrap();
        assert!(!report.exact);
        let scale = f.max_abs().max(g.max_abs()).max(1.0);
        assert!(report.max_residual() <= 1e-10 * scale);
    }

    #[test]
    fn exchange_trivial_and_single_pairing() {
        let zero_op = DiagonalOperator::zero();
        let z: FockSeries<ExactScalar> = FockSeries::zero();
        let report = exchange_check(&z, &z, &z, &z, &zero_op, 3, 2).unwrap();
        assert!(report.is_zero());

        let a = DiagonalOperator::example();
        let g1 = mono(&[(1, 0, 1)]);
        let g2p = mono(&[(1, 1, 1)]);
        let c: ExactScalar = mode_pairing_shifted(&g2p, &g1, &a, 1).unwrap();
        assert_eq!(c, ExactScalar::from_int(4));
        let report = exchange_check(&g1, &z, &z, &g2p, &a, 4, 3).unwrap();
        assert!(report.is_zero(), "residuals {:?}", report.max_residual_per_slot);
    }

    #[test]
    fn exchange_full_quadruple() {
        let a = DiagonalOperator::example();
        let g1 = mono(&[(1, 0, 1)]).scale(&ExactScalar::from_int(2));
        let g2 = mono(&[(1, 1, 1)]);
        let g1p = mono(&[(1, 0, 1)]).scale(&ExactScalar::from_int(-1));
        let g2p = mono(&[(1, 1, 1)]).scale(&ExactScalar::from_int(3));
        let report = exchange_check(&g1, &g2, &g1p, &g2p, &a, 4, 3).unwrap();
        assert!(report.is_zero(), "residuals {:?}", report.max_residual_per_slot);
    }

    #[test]
    fn exchange_multi_mode_quadruple() {
        let a = DiagonalOperator::example();
        let g1 = mono(&[(1, 0, 1)]).add(&mono(&[(2, 0, 1)]).scale(&ExactScalar::from_int(2)));
        let g2 = mono(&[(2, 1, 1)]);
        let g1p = mono(&[(2, 0, 1)]);
        let g2p = mono(&[(1, 1, 1)]).scale(&ExactScalar::from_int(-2));
        let report = exchange_check(&g1, &g2, &g1p, &g2p, &a, 3, 2).unwrap();
        assert!(report.is_zero(), "residuals {:?}", report.max_residual_per_slot);
    }

    #[test]
    fn exchange_rejects_misplaced_sides() {
        let a = DiagonalOperator::example();
        let z: FockSeries<ExactScalar> = FockSeries::zero();
        let wrong = mono(&[(1, 1, 1)]);
        assert!(exchange_check(&wrong, &z, &z, &z, &a, 2, 1).is_err());
        let quadratic = mono(&[(1, 0, 2)]);
        assert!(exchange_check(&quadratic, &z, &z, &z, &a, 2, 1).is_err());
    }

    #[test]
    fn float_exchange_residual_small() {
        let a = DiagonalOperator::example();
        let g1 = FockSeries::from_term(
            MultiIndex::single(BasisIndex::new(1, 0)),
            FloatScalar { re: 0.75, im: 0.0 },
        );
        let g2 = FockSeries::from_term(
            MultiIndex::single(BasisIndex::new(1, 1)),
            FloatScalar { re: -0.5, im: 0.25 },
        );
        let z: FockSeries<FloatScalar> = FockSeries::zero();
        let report = exchange_check(&g1, &g2, &z, &z, &a, 4, 2).unwrap();
        assert!(report.max_residual() <= 1e-10);
    }

    #[test]
    fn calibration_finds_unique_survivor() {
        let a = DiagonalOperator::example();
        let outcome = calibrate(&a, 42, Tamper::None).unwrap();
        assert_eq!(outcome.candidates.len(), 16);
        let unique = outcome.unique().expect("exactly one survivor");
        assert_eq!(*unique, StarConvention::calibrated());
        for (conv, residual) in &outcome.candidates {
            if conv == unique {
                assert_eq!(*residual, 0.0);
            } else {
                assert!(*residual > 0.0, "non-survivor {conv:?} must show a residual");
            }
        }
    }

    #[test]
    fn calibration_underdetermined_for_zero_operator() {
        let outcome = calibrate(&DiagonalOperator::zero(), 42, Tamper::None).unwrap();
        assert!(outcome.unique().is_none());
        assert_eq!(outcome.survivors.len(), 4);
    }

    #[test]
    fn calibration_tamper_kills_all_candidates() {
        let a = DiagonalOperator::example();
        let outcome = calibrate(&a, 42, Tamper::FlipExchangeWeight).unwrap();
        assert!(outcome.survivors.is_empty());
    }

    #[test]
    fn associativity_residual_zero_for_perturbed_product() {
        let a = DiagonalOperator::example();
        let labels = sample::positive_cotangent_labels(2);
        let mut rng = sample::rng_for(17, 3);
        let xs = DeformationSeries::from_constant(
            sample::random_exact_series(&mut rng, &labels, 3, 3),
            3,
        );
        let ys = DeformationSeries::from_constant(
            sample::random_exact_series(&mut rng, &labels, 3, 3),
            3,
        );
        let zs = DeformationSeries::from_constant(
            sample::random_exact_series(&mut rng, &labels, 3, 3),
            3,
        );
        let residual =
            associativity_residual(&xs, &ys, &zs, &StarKind::Perturbed { a: &a }).unwrap();
        assert!(residual.is_zero(), "{:?}", residual.max_abs_per_slot());
    }
}
