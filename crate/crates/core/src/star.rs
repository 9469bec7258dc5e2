//! The star products: homogeneous slots P_l on the loop model, the
//! perturbed product on the cotangent model, the gauge generator T₁ and its
//! exponential, and the Cauchy product on deformation series.

use crate::basis::BasisIndex;
use crate::deform::{DeformationSeries, StarConvention};
use crate::error::{CoreError, Result};
use crate::model::{DiagonalOperator, SymplecticModel};
use crate::multiindex::MultiIndex;
use crate::scalar::{Rat, Scalar};
use crate::series::{sum_series, FockSeries};

fn falling(n: u32, t: u32) -> i64 {
    if t > n {
        return 0;
    }
    let mut acc = 1i64;
    for j in 0..t {
        acc *= (n - j) as i64;
    }
    acc
}

fn factorial(n: u32) -> i64 {
    (1..=n as i64).product()
}

fn min_cap_of<S: Scalar>(f: &FockSeries<S>, g: &FockSeries<S>) -> Option<u32> {
    match (f.cap(), g.cap()) {
        (None, None) => None,
        (a, b) => Some(a.unwrap_or(u32::MAX).min(b.unwrap_or(u32::MAX))),
    }
}

/// Darboux blocks present in both indices: for block ((k, e), (k, e+1)) at
/// least one partner label must occur on each side for a contraction to
/// survive.
fn shared_blocks(i1: &MultiIndex, i2: &MultiIndex) -> Vec<(BasisIndex, BasisIndex)> {
    let mut blocks1: Vec<(i32, u8)> = i1.entries().iter().map(|(b, _)| b.block()).collect();
    blocks1.dedup();
    let mut out = Vec::new();
    for (k, e) in blocks1 {
        let a = BasisIndex::new(k, e);
        let b = BasisIndex::new(k, e + 1);
        if i2.mult_of(a) > 0 || i2.mult_of(b) > 0 {
            if out.last() != Some(&(a, b)) {
                out.push((a, b));
            }
        }
    }
    out
}

/// Homogeneous slot l of the loop-model star product:
/// (prefactor^l/l!) Σ Ω^{a₁b₁}⋯Ω^{a_lb_l} :(a_{a₁}⋯a_{a_l}F)(a_{b₁}⋯a_{b_l}G):.
///
/// Evaluated per term pair by a closed multinomial form: distributing the l
/// contractions over the Darboux blocks with m forward and m' reversed
/// applications at each block contributes
/// prefactor^l · Π_blocks d^{m+m'}(−1)^{m'}/(m! m'!) times the four falling
/// multiplicities the annihilation sequences pick up (the l! orderings
/// cancel the 1/l!).
pub fn p_l<S: Scalar>(
    f: &FockSeries<S>,
    g: &FockSeries<S>,
    l: u32,
    m: &SymplecticModel,
    conv: &StarConvention,
) -> Result<FockSeries<S>> {
    m.expect_loop()?;
    if l == 0 {
        return Ok(f.wick_product(g));
    }
    let lam_pow = conv.prefactor.pow_u32(l);

    let mut raw: Vec<(MultiIndex, S)> = Vec::new();
    for (i1, c1) in f.terms() {
        for (i2, c2) in g.terms() {
            let blocks = shared_blocks(i1, i2);
            if blocks.is_empty() {
                continue;
            }
            let pair_coeff = c1.mul(c2);
            distribute_contractions(
                i1,
                i2,
                &blocks,
                m,
                l,
                &lam_pow,
                &pair_coeff,
                &mut raw,
            );
        }
    }
    let cap = min_cap_of(f, g).map(|c| c.saturating_sub(l));
    Ok(FockSeries::canonicalize(raw).with_cap(cap))
}

#[allow(clippy::too_many_arguments)]
fn distribute_contractions<S: Scalar>(
    i1: &MultiIndex,
    i2: &MultiIndex,
    blocks: &[(BasisIndex, BasisIndex)],
    m: &SymplecticModel,
    l: u32,
    lam_pow: &Rat,
    pair_coeff: &S,
    out: &mut Vec<(MultiIndex, S)>,
) {
    // One stack frame per block; (m_fwd, m_rev) chosen with remaining
    // budget, falling-multiplicity factors pruning dead branches.
    fn rec<S: Scalar>(
        i1: &MultiIndex,
        i2: &MultiIndex,
        blocks: &[(BasisIndex, BasisIndex)],
        model: &SymplecticModel,
        rem: u32,
        factor: Rat,
        removals1: &mut Vec<(BasisIndex, u32)>,
        removals2: &mut Vec<(BasisIndex, u32)>,
        lam_pow: &Rat,
        pair_coeff: &S,
        out: &mut Vec<(MultiIndex, S)>,
    ) {
        if rem == 0 {
            let r1 = i1.remove_many(removals1).expect("availability checked");
            let r2 = i2.remove_many(removals2).expect("availability checked");
            let coeff = S::from_rat(&factor.mul(lam_pow)).mul(pair_coeff);
            out.push((r1.union(&r2), coeff));
            return;
        }
        let Some((&(a, b), rest)) = blocks.split_first() else {
            return;
        };
        let d = model.pair_weight(a.k);
        let (m1a, m1b) = (i1.mult_of(a), i1.mult_of(b));
        let (m2a, m2b) = (i2.mult_of(a), i2.mult_of(b));
        for fwd in 0..=rem.min(m1a).min(m2b) {
            for rev in 0..=(rem - fwd).min(m1b).min(m2a) {
                if fwd == 0 && rev == 0 {
                    rec(
                        i1, i2, rest, model, rem, factor.clone(), removals1, removals2,
                        lam_pow, pair_coeff, out,
                    );
                    continue;
                }
                let ff = falling(m1a, fwd)
                    * falling(m1b, rev)
                    * falling(m2b, fwd)
                    * falling(m2a, rev);
                if ff == 0 {
                    continue;
                }
                let mut step = d.pow_u32(fwd + rev).mul_int(ff);
                if rev % 2 == 1 {
                    step = step.neg();
                }
                step = step.div_int(factorial(fwd) * factorial(rev));
                removals1.push((a, fwd));
                removals1.push((b, rev));
                removals2.push((b, fwd));
                removals2.push((a, rev));
                rec(
                    i1, i2, rest, model, rem - fwd - rev, factor.mul(&step),
                    removals1, removals2, lam_pow, pair_coeff, out,
                );
                removals1.truncate(removals1.len() - 2);
                removals2.truncate(removals2.len() - 2);
            }
        }
    }

    let mut removals1 = Vec::new();
    let mut removals2 = Vec::new();
    rec(
        i1, i2, blocks, m, l, Rat::ONE, &mut removals1, &mut removals2, lam_pow,
        pair_coeff, out,
    );
}

/// Loop-model star product to order L: slots P_0..P_L.
pub fn star<S: Scalar>(
    f: &FockSeries<S>,
    g: &FockSeries<S>,
    order: usize,
    m: &SymplecticModel,
    conv: &StarConvention,
) -> Result<DeformationSeries<S>> {
    let mut slots = Vec::with_capacity(order + 1);
    for l in 0..=order {
        slots.push(p_l(f, g, l as u32, m, conv)?);
    }
    Ok(DeformationSeries::from_slots(slots))
}

fn validate_cotangent<S: Scalar>(series: &[&FockSeries<S>]) -> Result<()> {
    for s in series {
        for (idx, _) in s.terms() {
            for (b, _) in idx.entries() {
                if b.i > 1 {
                    return Err(CoreError::ModelMismatch { expected: "cotangent" });
                }
                if b.k == 0 {
                    return Err(CoreError::DirectionRange(
                        "cotangent mode must be nonzero".into(),
                    ));
                }
            }
        }
    }
    Ok(())
}

/// Modes occurring in either member of any pair.
fn pair_modes<S: Scalar>(pairs: &[(FockSeries<S>, FockSeries<S>)]) -> Vec<i32> {
    let mut modes: Vec<i32> = Vec::new();
    for (x, y) in pairs {
        for s in [x, y] {
            for (idx, _) in s.terms() {
                for (b, _) in idx.entries() {
                    modes.push(b.k);
                }
            }
        }
    }
    modes.sort_unstable();
    modes.dedup();
    modes
}

/// One application of the combined first-order bi-operator to a list of
/// (left, right) tensor factors: per mode, (λ+β)·a¹⊗a² + (λ−β)·a²⊗a¹.
fn apply_c1_step<S: Scalar>(
    pairs: &[(FockSeries<S>, FockSeries<S>)],
    a: &DiagonalOperator,
    beta: i8,
) -> Vec<(FockSeries<S>, FockSeries<S>)> {
    let modes = pair_modes(pairs);
    let beta_rat = Rat::from_int(beta as i64);
    let mut next = Vec::new();
    for (x, y) in pairs {
        for &k in &modes {
            let lam = a.eval(k);
            let side1 = BasisIndex::new(k, 0);
            let side2 = BasisIndex::new(k, 1);
            let w_fwd = lam.add(&beta_rat);
            if !w_fwd.is_zero() {
                let x1 = x.annihilate(side1);
                if !x1.is_zero() {
                    let y2 = y.annihilate(side2);
                    if !y2.is_zero() {
                        next.push((x1.scale(&S::from_rat(&w_fwd)), y2));
                    }
                }
            }
            let w_rev = lam.sub(&beta_rat);
            if !w_rev.is_zero() {
                let x2 = x.annihilate(side2);
                if !x2.is_zero() {
                    let y1 = y.annihilate(side1);
                    if !y1.is_zero() {
                        next.push((x2.scale(&S::from_rat(&w_rev)), y1));
                    }
                }
            }
        }
    }
    next
}

/// Perturbed product on the cotangent model: slot 0 is the Wick product,
/// slot r is the r-fold power of the combined bi-operator applied to F⊗G,
/// Wick-multiplied out and divided by r!.
pub fn star_a<S: Scalar>(
    f: &FockSeries<S>,
    g: &FockSeries<S>,
    order: usize,
    a: &DiagonalOperator,
) -> Result<DeformationSeries<S>> {
    star_a_signed(f, g, order, a, 1)
}

pub(crate) fn star_a_signed<S: Scalar>(
    f: &FockSeries<S>,
    g: &FockSeries<S>,
    order: usize,
    a: &DiagonalOperator,
    beta: i8,
) -> Result<DeformationSeries<S>> {
    validate_cotangent(&[f, g])?;
    let mut slots = Vec::with_capacity(order + 1);
    slots.push(f.wick_product(g));
    let mut pairs = vec![(f.clone(), g.clone())];
    let mut fact = 1i64;
    for r in 1..=order {
        pairs = apply_c1_step(&pairs, a, beta);
        fact *= r as i64;
        let summed = sum_series(pairs.iter().map(|(x, y)| x.wick_product(y)));
        let cap = min_cap_of(f, g).map(|c| c.saturating_sub(r as u32));
        slots.push(summed.div_slot(fact).with_cap(cap));
        if pairs.is_empty() {
            for _ in (slots.len() - 1)..order {
                slots.push(FockSeries::zero());
            }
            break;
        }
    }
    while slots.len() <= order {
        slots.push(FockSeries::zero());
    }
    Ok(DeformationSeries::from_slots(slots))
}

impl<S: Scalar> FockSeries<S> {
    fn div_slot(&self, fact: i64) -> FockSeries<S> {
        self.scale(&S::one().div_int(fact))
    }
}

/// Gauge generator T₁F = −Σ_k λ_k a_k¹ a_k² F.
pub fn t1<S: Scalar>(f: &FockSeries<S>, a: &DiagonalOperator) -> Result<FockSeries<S>> {
    t1_signed(f, a, -1)
}

pub(crate) fn t1_signed<S: Scalar>(
    f: &FockSeries<S>,
    a: &DiagonalOperator,
    tau: i8,
) -> Result<FockSeries<S>> {
    validate_cotangent(&[f])?;
    let mut modes: Vec<i32> = f
        .terms()
        .iter()
        .flat_map(|(idx, _)| idx.entries().into_iter().map(|(b, _)| b.k))
        .collect();
    modes.sort_unstable();
    modes.dedup();
    let mut acc = FockSeries::zero();
    for k in modes {
        let lam = a.eval(k);
        if lam.is_zero() {
            continue;
        }
        let contracted = f
            .annihilate(BasisIndex::new(k, 0))
            .annihilate(BasisIndex::new(k, 1));
        if contracted.is_zero() {
            continue;
        }
        let w = if tau < 0 { lam.neg() } else { lam };
        acc = acc.add(&contracted.scale(&S::from_rat(&w)));
    }
    Ok(acc.with_cap(f.cap().map(|c| c.saturating_sub(2))))
}

/// T′ = exp(hT₁) on a plain series: slot m is T₁^m F/m!. Terminates for
/// polynomials because T₁ lowers degree by two.
pub fn t_prime<S: Scalar>(
    f: &FockSeries<S>,
    a: &DiagonalOperator,
    order: usize,
) -> Result<DeformationSeries<S>> {
    t_prime_deform(&DeformationSeries::from_constant(f.clone(), order), a, -1)
}

/// T′ applied slotwise to a deformation series, with the h-power of the
/// exponential feeding lower slots into higher ones.
pub fn t_prime_deform<S: Scalar>(
    x: &DeformationSeries<S>,
    a: &DiagonalOperator,
    tau: i8,
) -> Result<DeformationSeries<S>> {
    let order = x.order();
    let mut out = DeformationSeries::zero(order);
    for p in 0..=order {
        let mut cur = x.slot(p).clone();
        let mut fact = 1i64;
        for q in 0..=(order - p) {
            if q > 0 {
                cur = t1_signed(&cur, a, tau)?;
                fact *= q as i64;
                if cur.is_zero() {
                    break;
                }
            }
            let mut slots = out.into_slots();
            slots[p + q] = slots[p + q].add(&cur.div_slot(fact));
            out = DeformationSeries::from_slots(slots);
        }
    }
    Ok(out)
}

/// Product kind for the Cauchy product on deformation series.
pub enum StarKind<'a> {
    Loop { model: &'a SymplecticModel, conv: &'a StarConvention },
    Perturbed { a: &'a DiagonalOperator },
}

/// Cauchy product truncated at the common order: slot m collects
/// kernel_l(X_p, Y_q) over p+q+l = m.
pub fn d_star<S: Scalar>(
    x: &DeformationSeries<S>,
    y: &DeformationSeries<S>,
    kind: &StarKind<'_>,
) -> Result<DeformationSeries<S>> {
    match kind {
        StarKind::Loop { model, conv } => {
            d_star_with(x, y, |f, g, rem| star(f, g, rem, model, conv))
        }
        StarKind::Perturbed { a } => d_star_with(x, y, |f, g, rem| star_a(f, g, rem, a)),
    }
}

/// Generic Cauchy plumbing over any slot-product kernel.
pub(crate) fn d_star_with<S: Scalar>(
    x: &DeformationSeries<S>,
    y: &DeformationSeries<S>,
    kernel: impl Fn(&FockSeries<S>, &FockSeries<S>, usize) -> Result<DeformationSeries<S>>,
) -> Result<DeformationSeries<S>> {
    if x.order() != y.order() {
        return Err(CoreError::Param(format!(
            "order mismatch: {} vs {}",
            x.order(),
            y.order()
        )));
    }
    let order = x.order();
    let mut slots = vec![FockSeries::zero(); order + 1];
    for p in 0..=order {
        if x.slot(p).is_zero() {
            continue;
        }
        for q in 0..=(order - p) {
            if y.slot(q).is_zero() {
                continue;
            }
            let prod = kernel(x.slot(p), y.slot(q), order - p - q)?;
            for (l, part) in prod.slots().iter().enumerate() {
                slots[p + q + l] = slots[p + q + l].add(part);
            }
        }
    }
    Ok(DeformationSeries::from_slots(slots))
}
