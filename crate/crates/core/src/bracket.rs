//! The Poisson bracket in both models, the symmetric perturbation form E_A,
//! their sum C_1^A, and the coordinate pairing used by the exchange
//! identity.

use std::collections::BTreeSet;

use crate::basis::BasisIndex;
use crate::error::{CoreError, Result};
use crate::model::{DiagonalOperator, SymplecticModel};

use crate::scalar::{Rat, Scalar};
use crate::series::{linear_combine, FockSeries};

/// Darboux pairs touched by the supports of the given series: for each pair
/// the two partner labels and the frequency.
fn active_pairs<S: Scalar>(
    m: &SymplecticModel,
    series: &[&FockSeries<S>],
) -> Vec<(BasisIndex, BasisIndex, i32)> {
    let mut blocks: BTreeSet<(i32, u8)> = BTreeSet::new();
    for s in series {
        for (idx, _) in s.terms() {
            for (b, _) in idx.entries() {
                match m {
                    SymplecticModel::Loop { .. } => {
                        blocks.insert(b.block());
                    }
                    SymplecticModel::Cotangent { .. } => {
                        blocks.insert((b.k, 0));
                    }
                }
            }
        }
    }
    blocks
        .into_iter()
        .map(|(k, even)| (BasisIndex::new(k, even), BasisIndex::new(k, even + 1), k))
        .collect()
}

/// Poisson bracket Σ_pairs Ω^{ab}( :(a_aF)(a_bG): − :(a_bF)(a_aG): ),
/// summed over the Darboux pairs meeting the operands' supports.
pub fn poisson_bracket<S: Scalar>(
    f: &FockSeries<S>,
    g: &FockSeries<S>,
    m: &SymplecticModel,
) -> FockSeries<S> {
    poisson_bracket_signed(f, g, m, 1)
}

/// Bracket with an explicit overall sign; the convention calibration
/// enumerates both orientations of the cotangent Darboux form.
pub(crate) fn poisson_bracket_signed<S: Scalar>(
    f: &FockSeries<S>,
    g: &FockSeries<S>,
    m: &SymplecticModel,
    sign: i8,
) -> FockSeries<S> {
    let mut acc = FockSeries::zero();
    for (a, b, k) in active_pairs(m, &[f, g]) {
        let mut w = m.pair_weight(k);
        if sign < 0 {
            w = w.neg();
        }
        let weight = S::from_rat(&w);
        let fa = f.annihilate(a);
        let gb = g.annihilate(b);
        if !fa.is_zero() && !gb.is_zero() {
            acc = acc.add(&fa.wick_product(&gb).scale(&weight));
        }
        let fb = f.annihilate(b);
        let ga = g.annihilate(a);
        if !fb.is_zero() && !ga.is_zero() {
            acc = acc.add(&fb.wick_product(&ga).scale(&weight.neg()));
        }
    }
    propagate_bracket_cap(f, g, acc)
}

/// One annihilation on each operand: a missing term of degree c+1 on one
/// side first contaminates output degree c, so the result is exact to the
/// joint cap minus one.
fn propagate_bracket_cap<S: Scalar>(
    f: &FockSeries<S>,
    g: &FockSeries<S>,
    acc: FockSeries<S>,
) -> FockSeries<S> {
    let cap = match (f.cap(), g.cap()) {
        (None, None) => None,
        (a, b) => {
            let m = a.unwrap_or(u32::MAX).min(b.unwrap_or(u32::MAX));
            Some(m.saturating_sub(1))
        }
    };
    acc.with_cap(cap)
}

/// Symmetric perturbation form
/// E_A[F,G] = Σ_k λ_k( :(a_k¹F)(a_k²G): + :(a_k¹G)(a_k²F): ).
pub fn e_a_form<S: Scalar>(
    f: &FockSeries<S>,
    g: &FockSeries<S>,
    a: &DiagonalOperator,
) -> FockSeries<S> {
    let m = SymplecticModel::cotangent(a.clone());
    let mut acc = FockSeries::zero();
    for (side1, side2, k) in active_pairs(&m, &[f, g]) {
        let lam = a.eval(k);
        if lam.is_zero() {
            continue;
        }
        let weight = S::from_rat(&lam);
        let f1 = f.annihilate(side1);
        let g2 = g.annihilate(side2);
        if !f1.is_zero() && !g2.is_zero() {
            acc = acc.add(&f1.wick_product(&g2).scale(&weight));
        }
        let g1 = g.annihilate(side1);
        let f2 = f.annihilate(side2);
        if !g1.is_zero() && !f2.is_zero() {
            acc = acc.add(&g1.wick_product(&f2).scale(&weight));
        }
    }
    propagate_bracket_cap(f, g, acc)
}

/// First-order combined operator C_1^A = {·,·} + E_A in the cotangent
/// model.
pub fn c1a<S: Scalar>(
    f: &FockSeries<S>,
    g: &FockSeries<S>,
    a: &DiagonalOperator,
) -> FockSeries<S> {
    let m = SymplecticModel::cotangent(a.clone());
    let bracket = poisson_bracket(f, g, &m);
    let ea = e_a_form(f, g, a);
    linear_combine(&S::one(), &bracket, &S::one(), &ea)
}

fn degree_one_coords<S: Scalar>(u: &FockSeries<S>) -> Result<Vec<(BasisIndex, S)>> {
    let mut out = Vec::with_capacity(u.nterms());
    for (idx, c) in u.terms() {
        if idx.degree() != 1 {
            return Err(CoreError::NotDegreeOne(format!(
                "pairing argument has a term of degree {}",
                idx.degree()
            )));
        }
        out.push((idx.entries()[0].0, c.clone()));
    }
    Ok(out)
}

/// Coordinate pairing ⟨u, v⟩₀ of two degree-1 series in the orthonormal
/// basis: Σ_a u_a v_a over shared labels, optionally twisted to
/// Σ_a u_a (1+λ_{k(a)}) v_a by a supplied operator (the A+𝕀 twist).
pub fn h_pairing<S: Scalar>(
    u: &FockSeries<S>,
    v: &FockSeries<S>,
    a_plus_i: Option<&DiagonalOperator>,
) -> Result<S> {
    let uc = degree_one_coords(u)?;
    let vc = degree_one_coords(v)?;
    let mut acc = S::zero();
    for (bu, cu) in &uc {
        for (bv, cv) in &vc {
            if bu == bv {
                let mut t = cu.mul(cv);
                if let Some(op) = a_plus_i {
                    t = t.mul(&S::from_rat(&op.eval(bu.k).add(&Rat::ONE)));
                }
                acc.add_assign(&t);
            }
        }
    }
    Ok(acc)
}

/// Mode-indexed pairing between opposite sides: Σ_k u_k (λ_k + shift) v_k,
/// where u and v are read off by frequency alone. This is the pairing the
/// exchange identity uses after identifying the dual copy with the base.
pub fn mode_pairing_shifted<S: Scalar>(
    u: &FockSeries<S>,
    v: &FockSeries<S>,
    a: &DiagonalOperator,
    shift: i64,
) -> Result<S> {
    let uc = degree_one_coords(u)?;
    let vc = degree_one_coords(v)?;
    let mut acc = S::zero();
    for (bu, cu) in &uc {
        for (bv, cv) in &vc {
            if bu.k == bv.k {
                let w = a.eval(bu.k).add(&Rat::from_int(shift));
                acc.add_assign(&cu.mul(cv).mul(&S::from_rat(&w)));
            }
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiindex::MultiIndex;
    use crate::scalar::ExactScalar;

    fn b(k: i32, i: u8) -> BasisIndex {
        BasisIndex::new(k, i)
    }

    fn basis_term(k: i32, i: u8) -> FockSeries<ExactScalar> {
        FockSeries::from_term(MultiIndex::single(b(k, i)), ExactScalar::one())
    }

    fn from_entries(entries: &[(i32, u8, u32)]) -> FockSeries<ExactScalar> {
        let v: Vec<_> = entries.iter().map(|&(k, i, m)| (b(k, i), m)).collect();
        FockSeries::from_term(MultiIndex::new(&v), ExactScalar::one())
    }

    #[test]
    fn loop_bracket_of_partner_labels() {
        let m = SymplecticModel::default_loop();
        let r = poisson_bracket(&basis_term(1, 0), &basis_term(1, 1), &m);
        assert_eq!(
            r.terms(),
            &[(MultiIndex::empty(), ExactScalar::from_int(2))]
        );
    }

    #[test]
    fn bracket_with_constant_vanishes() {
        let m = SymplecticModel::default_loop();
        let f = from_entries(&[(1, 0, 2), (2, 1, 1)]);
        assert!(poisson_bracket(&f, &FockSeries::unit(), &m).is_zero());
        assert!(poisson_bracket(&FockSeries::unit(), &f, &m).is_zero());
    }

    #[test]
    fn bracket_multiplicity_coefficient() {
        let m = SymplecticModel::default_loop();
        let f = from_entries(&[(1, 0, 2)]);
        let g = basis_term(1, 1);
        let r = poisson_bracket(&f, &g, &m);
        assert_eq!(
            r.terms(),
            &[(MultiIndex::single(b(1, 0)), ExactScalar::from_int(4))]
        );
    }

    #[test]
    fn bracket_is_antisymmetric() {
        let m = SymplecticModel::default_loop();
        let f = from_entries(&[(1, 0, 1), (2, 1, 1)]);
        let g = from_entries(&[(1, 1, 1), (2, 0, 1)]);
        let fg = poisson_bracket(&f, &g, &m);
        let gf = poisson_bracket(&g, &f, &m);
        assert_eq!(fg, gf.scale(&ExactScalar::from_int(-1)));
        assert!(!fg.is_zero());
    }

    #[test]
    fn sigma_flip_negates_bracket() {
        let plus = SymplecticModel::default_loop();
        let minus = SymplecticModel::loop_model(2, Rat::ONE, -1).unwrap();
        let f = from_entries(&[(1, 0, 1), (1, 1, 1)]);
        let g = from_entries(&[(1, 0, 1)]);
        assert_eq!(
            poisson_bracket(&f, &g, &plus),
            poisson_bracket(&f, &g, &minus).scale(&ExactScalar::from_int(-1))
        );
    }

    #[test]
    fn cotangent_bracket_unit_weights() {
        let m = SymplecticModel::cotangent(DiagonalOperator::zero());
        let r = poisson_bracket(&basis_term(1, 0), &basis_term(1, 1), &m);
        assert_eq!(r.terms(), FockSeries::<ExactScalar>::unit().terms());
    }

    #[test]
    fn e_a_single_surviving_term() {
        let a = DiagonalOperator::example();
        let r = e_a_form(&basis_term(1, 0), &basis_term(1, 1), &a);
        assert_eq!(
            r.terms(),
            &[(MultiIndex::empty(), ExactScalar::from_int(3))]
        );
    }

    #[test]
    fn e_a_vanishes_on_constants() {
        let a = DiagonalOperator::example();
        let g = from_entries(&[(1, 0, 1), (1, 1, 2)]);
        assert!(e_a_form(&FockSeries::unit(), &g, &a).is_zero());
        assert!(e_a_form(&g, &FockSeries::unit(), &a).is_zero());
    }

    #[test]
    fn e_a_is_symmetric() {
        let a = DiagonalOperator::example();
        let f = from_entries(&[(1, 0, 2), (2, 1, 1)]);
        let g = from_entries(&[(1, 1, 1), (2, 0, 1)]);
        assert_eq!(e_a_form(&f, &g, &a), e_a_form(&g, &f, &a));
    }

    #[test]
    fn c1a_combines_bracket_and_perturbation() {
        let a = DiagonalOperator::example();
        let r = c1a(&basis_term(1, 0), &basis_term(1, 1), &a);
        assert_eq!(
            r.terms(),
            &[(MultiIndex::empty(), ExactScalar::from_int(4))]
        );
    }

    #[test]
    fn c1a_with_zero_operator_is_bracket() {
        let a = DiagonalOperator::zero();
        let m = SymplecticModel::cotangent(a.clone());
        let f = from_entries(&[(1, 0, 1), (2, 0, 1)]);
        let g = from_entries(&[(1, 1, 1), (2, 1, 1)]);
        assert_eq!(c1a(&f, &g, &a), poisson_bracket(&f, &g, &m));
    }

    #[test]
    fn pairing_orthonormality() {
        let ga = basis_term(1, 0);
        let gb = basis_term(2, 0);
        assert_eq!(h_pairing(&ga, &ga, None).unwrap(), ExactScalar::one());
        assert_eq!(h_pairing(&ga, &gb, None).unwrap(), ExactScalar::zero());
        let twisted = h_pairing(&ga, &ga, Some(&DiagonalOperator::example())).unwrap();
        assert_eq!(twisted, ExactScalar::from_int(4));
    }

    #[test]
    fn pairing_rejects_higher_degree() {
        let bad = from_entries(&[(1, 0, 2)]);
        assert!(h_pairing(&bad, &bad, None).is_err());
    }

    #[test]
    fn mode_pairing_crosses_sides() {
        let a = DiagonalOperator::example();
        let u = basis_term(1, 0);
        let v = basis_term(1, 1);
        // Same frequency, opposite sides: (λ_1 + 1) = 4 and (λ_1 − 1) = 2.
        assert_eq!(mode_pairing_shifted(&v, &u, &a, 1).unwrap(), ExactScalar::from_int(4));
        assert_eq!(mode_pairing_shifted(&v, &u, &a, -1).unwrap(), ExactScalar::from_int(2));
    }
}
