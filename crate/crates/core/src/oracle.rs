//! Dense brute-force mirror of the sparse algebra on a bounded mode set.
//!
//! Every operation here is a direct transcription of its defining sum over a
//! complete coefficient table, with no sparsity tricks and no sharing, so a
//! disagreement with the optimized path implicates the optimized path.

use crate::basis::BasisIndex;
use crate::deform::StarConvention;
use crate::error::{CoreError, Result};
use crate::model::{omega_inverse_entry, DiagonalOperator, SymplecticModel};
use crate::multiindex::MultiIndex;
use crate::scalar::{ExactScalar, Rat, Scalar};
use crate::series::FockSeries;

/// Bounded coefficient space: all canonical multi-indices over a fixed label
/// set up to a degree bound, enumerated in lexicographic order.
pub struct DenseSpace {
    labels: Vec<BasisIndex>,
    degree: u32,
    indices: Vec<MultiIndex>,
}

/// Complete coefficient table over a [`DenseSpace`] enumeration.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseFockVector {
    coeffs: Vec<ExactScalar>,
}

impl DenseSpace {
    pub fn new(mut labels: Vec<BasisIndex>, degree: u32) -> Self {
        labels.sort();
        labels.dedup();
        let mut indices = Vec::new();
        let mut stack: Vec<(BasisIndex, u32)> = Vec::new();
        enumerate(&labels, 0, degree, &mut stack, &mut indices);
        indices.sort();
        DenseSpace { labels, degree, indices }
    }

    /// Loop-model labels: |k| ≤ kmax, all n directions.
    pub fn for_loop(model: &SymplecticModel, kmax: i32, degree: u32) -> Result<Self> {
        let (n, _, _) = model.expect_loop()?;
        let mut labels = Vec::new();
        for k in -kmax..=kmax {
            for i in 0..n {
                labels.push(BasisIndex::new(k, i as u8));
            }
        }
        Ok(DenseSpace::new(labels, degree))
    }

    /// Cotangent labels: 0 < |k| ≤ kmax, both sides.
    pub fn for_cotangent(kmax: i32, degree: u32) -> Self {
        let mut labels = Vec::new();
        for k in -kmax..=kmax {
            if k == 0 {
                continue;
            }
            for i in 0..2 {
                labels.push(BasisIndex::new(k, i));
            }
        }
        DenseSpace::new(labels, degree)
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn degree_bound(&self) -> u32 {
        self.degree
    }

    pub fn labels(&self) -> &[BasisIndex] {
        &self.labels
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn position(&self, idx: &MultiIndex) -> Option<usize> {
        self.indices.binary_search(idx).ok()
    }

    pub fn zero(&self) -> DenseFockVector {
        DenseFockVector { coeffs: vec![ExactScalar::zero(); self.len()] }
    }

    pub fn from_series(&self, f: &FockSeries<ExactScalar>) -> Result<DenseFockVector> {
        let mut v = self.zero();
        for (idx, c) in f.terms() {
            let pos = self
                .position(idx)
                .ok_or_else(|| CoreError::Param(format!("{idx} outside dense table bounds")))?;
            v.coeffs[pos] = v.coeffs[pos].add(c);
        }
        Ok(v)
    }

    pub fn to_series(&self, v: &DenseFockVector) -> FockSeries<ExactScalar> {
        let terms: Vec<_> = self
            .indices
            .iter()
            .zip(&v.coeffs)
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| (i.clone(), c.clone()))
            .collect();
        FockSeries::canonicalize(terms)
    }

    pub fn wick(&self, x: &DenseFockVector, y: &DenseFockVector) -> Result<DenseFockVector> {
        let mut out = self.zero();
        for (i, xi) in x.coeffs.iter().enumerate() {
            if xi.is_zero() {
                continue;
            }
            for (j, yj) in y.coeffs.iter().enumerate() {
                if yj.is_zero() {
                    continue;
                }
                let u = self.indices[i].union(&self.indices[j]);
                let pos = self
                    .position(&u)
                    .ok_or_else(|| CoreError::Param(format!("{u} outside dense table bounds")))?;
                out.coeffs[pos] = out.coeffs[pos].add(&xi.mul(yj));
            }
        }
        Ok(out)
    }

    pub fn annihilate(&self, label: BasisIndex, x: &DenseFockVector) -> DenseFockVector {
        let mut out = self.zero();
        for (i, xi) in x.coeffs.iter().enumerate() {
            if xi.is_zero() {
                continue;
            }
            if let Some((removed, mult)) = self.indices[i].remove_one(label) {
                let pos = self.position(&removed).expect("removal stays in bounds");
                out.coeffs[pos] = out.coeffs[pos].add(&xi.mul_int(mult as i64));
            }
        }
        out
    }

    fn darboux_blocks(&self, m: &SymplecticModel) -> Vec<(BasisIndex, BasisIndex, Rat)> {
        let mut out = Vec::new();
        for &a in &self.labels {
            if a.i % 2 == 0 {
                let b = BasisIndex::new(a.k, a.i + 1);
                if self.labels.binary_search(&b).is_ok() {
                    out.push((a, b, m.pair_weight(a.k)));
                }
            }
        }
        out
    }

    /// Σ_blocks w·[:(a_aX)(a_bY): − :(a_bX)(a_aY):], the defining display.
    pub fn bracket(
        &self,
        x: &DenseFockVector,
        y: &DenseFockVector,
        m: &SymplecticModel,
    ) -> Result<DenseFockVector> {
        let mut out = self.zero();
        for (a, b, w) in self.darboux_blocks(m) {
            let fwd = self.wick(&self.annihilate(a, x), &self.annihilate(b, y))?;
            let rev = self.wick(&self.annihilate(b, x), &self.annihilate(a, y))?;
            out = out.add(&fwd.sub(&rev).scale(&ExactScalar::from_rat(&w)));
        }
        Ok(out)
    }

    /// Slot l of the loop star product by full tuple enumeration: l rounds of
    /// Σ_{ab} Ω^{ab} (a_a ⊗ a_b) over the pair list, then wick out and divide
    /// by l!.
    pub fn p_l(
        &self,
        x: &DenseFockVector,
        y: &DenseFockVector,
        l: u32,
        m: &SymplecticModel,
        conv: &StarConvention,
    ) -> Result<DenseFockVector> {
        m.expect_loop()?;
        let mut entries = Vec::new();
        for &a in &self.labels {
            for &b in &self.labels {
                let w = omega_inverse_entry(a, b, m)?;
                if !w.is_zero() {
                    entries.push((a, b, w));
                }
            }
        }
        let mut pairs = vec![(x.clone(), y.clone())];
        for _ in 0..l {
            let mut next = Vec::new();
            for (u, v) in &pairs {
                for (a, b, w) in &entries {
                    let ua = self.annihilate(*a, u);
                    if ua.is_zero() {
                        continue;
                    }
                    let vb = self.annihilate(*b, v);
                    if vb.is_zero() {
                        continue;
                    }
                    next.push((ua.scale(&ExactScalar::from_rat(w)), vb));
                }
            }
            pairs = next;
        }
        let mut out = self.zero();
        for (u, v) in &pairs {
            out = out.add(&self.wick(u, v)?);
        }
        let mut scale = conv.prefactor.pow_u32(l);
        scale = scale.div_int((1..=l as i64).product());
        Ok(out.scale(&ExactScalar::from_rat(&scale)))
    }

    /// Slot r of the perturbed cotangent product: r rounds of the combined
    /// bi-operator Σ_k (λ_k+β)(a_k¹⊗a_k²) + (λ_k−β)(a_k²⊗a_k¹), then wick
    /// out and divide by r!.
    pub fn c_r_a(
        &self,
        x: &DenseFockVector,
        y: &DenseFockVector,
        r: u32,
        a: &DiagonalOperator,
        beta: i8,
    ) -> Result<DenseFockVector> {
        let beta_rat = Rat::from_int(beta as i64);
        let mut modes: Vec<i32> = self.labels.iter().map(|b| b.k).collect();
        modes.dedup();
        let mut pairs = vec![(x.clone(), y.clone())];
        for _ in 0..r {
            let mut next = Vec::new();
            for (u, v) in &pairs {
                for &k in &modes {
                    let lam = a.eval(k);
                    let s1 = BasisIndex::new(k, 0);
                    let s2 = BasisIndex::new(k, 1);
                    for (wt, la, lb) in [
                        (lam.add(&beta_rat), s1, s2),
                        (lam.sub(&beta_rat), s2, s1),
                    ] {
                        if wt.is_zero() {
                            continue;
                        }
                        let ua = self.annihilate(la, u);
                        if ua.is_zero() {
                            continue;
                        }
                        let vb = self.annihilate(lb, v);
                        if vb.is_zero() {
                            continue;
                        }
                        next.push((ua.scale(&ExactScalar::from_rat(&wt)), vb));
                    }
                }
            }
            pairs = next;
        }
        let mut out = self.zero();
        for (u, v) in &pairs {
            out = out.add(&self.wick(u, v)?);
        }
        Ok(out.scale(&ExactScalar::one().div_int((1..=r as i64).product())))
    }

    pub fn t1(
        &self,
        x: &DenseFockVector,
        a: &DiagonalOperator,
        tau: i8,
    ) -> DenseFockVector {
        let mut modes: Vec<i32> = self.labels.iter().map(|b| b.k).collect();
        modes.dedup();
        let mut out = self.zero();
        for &k in &modes {
            let lam = a.eval(k);
            if lam.is_zero() {
                continue;
            }
            let contracted =
                self.annihilate(BasisIndex::new(k, 1), &self.annihilate(BasisIndex::new(k, 0), x));
            let w = if tau < 0 { lam.neg() } else { lam };
            out = out.add(&contracted.scale(&ExactScalar::from_rat(&w)));
        }
        out
    }

    /// Σ_{m ≤ d} ξ^{wick m}/m! by repeated dense wick powers.
    pub fn wick_exp(&self, xi: &DenseFockVector, d: u32) -> Result<DenseFockVector> {
        for (i, c) in xi.coeffs.iter().enumerate() {
            if !c.is_zero() && self.indices[i].degree() != 1 {
                return Err(CoreError::NotDegreeOne(format!(
                    "wick exponential argument has a term of degree {}",
                    self.indices[i].degree()
                )));
            }
        }
        let mut out = self.zero();
        let unit = self.position(&MultiIndex::empty()).expect("empty index in table");
        out.coeffs[unit] = ExactScalar::one();
        let mut power = out.clone();
        for m in 1..=d {
            power = self.wick(&power, xi)?;
            power = power.scale(&ExactScalar::one().div_int(m as i64));
            if power.is_zero() {
                break;
            }
            out = out.add(&power);
        }
        Ok(out)
    }
}

fn enumerate(
    labels: &[BasisIndex],
    from: usize,
    budget: u32,
    stack: &mut Vec<(BasisIndex, u32)>,
    out: &mut Vec<MultiIndex>,
) {
    out.push(MultiIndex::new(stack));
    if budget == 0 {
        return;
    }
    for pos in from..labels.len() {
        stack.push((labels[pos], 1));
        for used in 1..=budget {
            stack.last_mut().unwrap().1 = used;
            enumerate(labels, pos + 1, budget - used, stack, out);
        }
        stack.pop();
    }
}

impl DenseFockVector {
    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn add(&self, other: &DenseFockVector) -> DenseFockVector {
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.add(b))
            .collect();
        DenseFockVector { coeffs }
    }

    pub fn sub(&self, other: &DenseFockVector) -> DenseFockVector {
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.sub(b))
            .collect();
        DenseFockVector { coeffs }
    }

    pub fn scale(&self, s: &ExactScalar) -> DenseFockVector {
        DenseFockVector { coeffs: self.coeffs.iter().map(|c| c.mul(s)).collect() }
    }
}

/// Operation selector for the one-call oracle entry point.
pub enum OracleOp<'a> {
    Wick,
    Annihilate(BasisIndex),
    Bracket(&'a SymplecticModel),
    PL { model: &'a SymplecticModel, conv: &'a StarConvention, l: u32 },
    CRA { a: &'a DiagonalOperator, r: u32 },
    T1(&'a DiagonalOperator),
    WickExp { degree: u32 },
}

/// Runs one dense operation on sparse inputs and hands back a sparse result.
pub fn oracle_eval(
    space: &DenseSpace,
    op: &OracleOp<'_>,
    inputs: &[&FockSeries<ExactScalar>],
) -> Result<FockSeries<ExactScalar>> {
    let need = match op {
        OracleOp::Annihilate(_) | OracleOp::T1(_) | OracleOp::WickExp { .. } => 1,
        _ => 2,
    };
    if inputs.len() != need {
        return Err(CoreError::Param(format!(
            "oracle op expects {need} inputs, got {}",
            inputs.len()
        )));
    }
    let x = space.from_series(inputs[0])?;
    let out = match op {
        OracleOp::Wick => space.wick(&x, &space.from_series(inputs[1])?)?,
        OracleOp::Annihilate(label) => space.annihilate(*label, &x),
        OracleOp::Bracket(m) => space.bracket(&x, &space.from_series(inputs[1])?, m)?,
        OracleOp::PL { model, conv, l } => {
            space.p_l(&x, &space.from_series(inputs[1])?, *l, model, conv)?
        }
        OracleOp::CRA { a, r } => space.c_r_a(&x, &space.from_series(inputs[1])?, *r, a, 1)?,
        OracleOp::T1(a) => space.t1(&x, a, -1),
        OracleOp::WickExp { degree } => space.wick_exp(&x, *degree)?,
    };
    Ok(space.to_series(&out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(k: i32, i: u8) -> BasisIndex {
        BasisIndex::new(k, i)
    }

    fn mono(entries: &[(i32, u8, u32)]) -> FockSeries<ExactScalar> {
        let v: Vec<_> = entries.iter().map(|&(k, i, m)| (b(k, i), m)).collect();
        FockSeries::from_term(MultiIndex::new(&v), ExactScalar::one())
    }

    #[test]
    fn enumeration_is_sorted_and_complete() {
        let space = DenseSpace::for_cotangent(1, 3);
        assert_eq!(space.labels().len(), 4);
        // Multisets of size ≤ 3 over 4 labels: C(4,0..3 with repetition).
        assert_eq!(space.len(), 1 + 4 + 10 + 20);
        for w in space.indices().windows(2) {
            assert!(w[0] < w[1], "enumeration must be strictly sorted");
        }
        for idx in space.indices() {
            assert!(idx.degree() <= 3);
        }
    }

    #[test]
    fn series_round_trip() {
        let space = DenseSpace::for_cotangent(2, 3);
        let f = mono(&[(1, 0, 2), (2, 1, 1)])
            .add(&mono(&[(1, 1, 1)]).scale(&ExactScalar::from_int(-7)));
        let v = space.from_series(&f).unwrap();
        assert_eq!(space.to_series(&v), f);
    }

    #[test]
    fn out_of_bounds_rejected() {
        let space = DenseSpace::for_cotangent(1, 2);
        assert!(space.from_series(&mono(&[(2, 0, 1)])).is_err());
        assert!(space.from_series(&mono(&[(1, 0, 3)])).is_err());
    }

    #[test]
    fn wick_of_single_term_with_itself() {
        let m = SymplecticModel::default_loop();
        let space = DenseSpace::for_loop(&m, 1, 4).unwrap();
        let f = mono(&[(1, 0, 1)]);
        let got = oracle_eval(&space, &OracleOp::Wick, &[&f, &f]).unwrap();
        assert_eq!(got, f.wick_product(&f));
        assert_eq!(got, mono(&[(1, 0, 2)]));
    }

    #[test]
    fn bracket_matches_symplectic_example() {
        let m = SymplecticModel::default_loop();
        let space = DenseSpace::for_loop(&m, 1, 2).unwrap();
        let f = mono(&[(1, 0, 1)]);
        let g = mono(&[(1, 1, 1)]);
        let got = oracle_eval(&space, &OracleOp::Bracket(&m), &[&f, &g]).unwrap();
        assert_eq!(
            got.terms(),
            &[(MultiIndex::empty(), ExactScalar::from_int(2))][..]
        );
    }

    #[test]
    fn p_l_matches_square_example() {
        let m = SymplecticModel::default_loop();
        let conv = StarConvention::paper();
        let space = DenseSpace::for_loop(&m, 1, 4).unwrap();
        let f = mono(&[(1, 0, 2)]);
        let g = mono(&[(1, 1, 2)]);
        let op = OracleOp::PL { model: &m, conv: &conv, l: 2 };
        let got = oracle_eval(&space, &op, &[&f, &g]).unwrap();
        assert_eq!(
            got.terms(),
            &[(MultiIndex::empty(), ExactScalar::from_int(2))][..]
        );
    }

    #[test]
    fn c_r_a_and_t1_match_sparse_displays() {
        use crate::star;
        let a = DiagonalOperator::example();
        let space = DenseSpace::for_cotangent(2, 3);
        let f = mono(&[(1, 0, 1)]);
        let g = mono(&[(1, 1, 1)]);
        let got = oracle_eval(&space, &OracleOp::CRA { a: &a, r: 1 }, &[&f, &g]).unwrap();
        let sparse = star::star_a(&f, &g, 1, &a).unwrap();
        assert_eq!(&got, sparse.slot(1));

        let h = mono(&[(1, 0, 1), (1, 1, 1)]);
        let got = oracle_eval(&space, &OracleOp::T1(&a), &[&h]).unwrap();
        assert_eq!(got, star::t1(&h, &a).unwrap());
    }

    #[test]
    fn wick_exp_cross_coefficient() {
        let space = DenseSpace::for_cotangent(1, 2);
        let xi = mono(&[(1, 0, 1)]).add(&mono(&[(1, 1, 1)]));
        let got = oracle_eval(&space, &OracleOp::WickExp { degree: 2 }, &[&xi]).unwrap();
        let cross = MultiIndex::new(&[(b(1, 0), 1), (b(1, 1), 1)]);
        assert_eq!(got.coeff(&cross), Some(&ExactScalar::one()));
        let square = MultiIndex::new(&[(b(1, 0), 2)]);
        assert_eq!(got.coeff(&square), Some(&ExactScalar::from_ratio(1, 2)));
    }
}
