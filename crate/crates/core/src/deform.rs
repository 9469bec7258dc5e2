//! Formal power series in the deformation parameter: a finite list of Fock
//! series, one per power of h, together with the sign/prefactor convention
//! bundle that the product and the identity checkers carry around.

use crate::error::{CoreError, Result};
use crate::scalar::{Rat, Scalar};
use crate::series::FockSeries;

/// Sign and prefactor choices.
///
/// `prefactor` scales the l-th product slot by prefactor^l/l!. The two
/// shipped presets differ there: `paper` uses -1/2, the prefactor usual in
/// the physics literature, while `bracket_normalized` uses 1, the
/// normalization under which the antisymmetric part of the first slot is
/// exactly twice the bracket. `bracket_sign` orients the cotangent Darboux
/// bracket and `t1_sign` the gauge generator; both are fixed by
/// calibration, not by fiat, because published conventions disagree.
#[derive(Clone, Debug, PartialEq)]
pub struct StarConvention {
    pub prefactor: Rat,
    pub bracket_sign: i8,
    pub t1_sign: i8,
}

impl StarConvention {
    pub fn new(prefactor: Rat, bracket_sign: i8, t1_sign: i8) -> Result<Self> {
        if prefactor.is_zero() {
            return Err(CoreError::Param("star prefactor must be nonzero".into()));
        }
        if bracket_sign.abs() != 1 || t1_sign.abs() != 1 {
            return Err(CoreError::Param("convention signs must be +1 or -1".into()));
        }
        Ok(StarConvention { prefactor, bracket_sign, t1_sign })
    }

    pub fn paper() -> Self {
        StarConvention { prefactor: Rat::new(-1, 2), bracket_sign: 1, t1_sign: -1 }
    }

    pub fn bracket_normalized() -> Self {
        StarConvention { prefactor: Rat::ONE, bracket_sign: 1, t1_sign: -1 }
    }

    /// The unique tuple the calibration battery accepts for the perturbed
    /// product identities.
    pub fn calibrated() -> Self {
        Self::bracket_normalized()
    }
}

/// Truncated element of the deformation algebra: coefficient of h^l at
/// slot l, all slots sharing one scalar mode.
#[derive(Clone, Debug, PartialEq)]
pub struct DeformationSeries<S: Scalar> {
    slots: Vec<FockSeries<S>>,
}

impl<S: Scalar> DeformationSeries<S> {
    pub fn zero(order: usize) -> Self {
        DeformationSeries { slots: vec![FockSeries::zero(); order + 1] }
    }

    /// Embeds a plain series at h^0.
    pub fn from_constant(f: FockSeries<S>, order: usize) -> Self {
        let mut slots = vec![FockSeries::zero(); order + 1];
        slots[0] = f;
        DeformationSeries { slots }
    }

    pub fn from_slots(slots: Vec<FockSeries<S>>) -> Self {
        assert!(!slots.is_empty(), "a deformation series has at least slot 0");
        DeformationSeries { slots }
    }

    pub fn order(&self) -> usize {
        self.slots.len() - 1
    }

    pub fn slot(&self, l: usize) -> &FockSeries<S> {
        &self.slots[l]
    }

    pub fn slots(&self) -> &[FockSeries<S>] {
        &self.slots
    }

    pub fn into_slots(self) -> Vec<FockSeries<S>> {
        self.slots
    }

    pub fn is_zero(&self) -> bool {
        self.slots.iter().all(|s| s.is_zero())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.order(), other.order(), "order mismatch");
        let slots = self
            .slots
            .iter()
            .zip(&other.slots)
            .map(|(a, b)| a.add(b))
            .collect();
        DeformationSeries { slots }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.order(), other.order(), "order mismatch");
        let slots = self
            .slots
            .iter()
            .zip(&other.slots)
            .map(|(a, b)| a.sub(b))
            .collect();
        DeformationSeries { slots }
    }

    /// Scales slot l by lambda^l; used to move between prefactor
    /// conventions of the unperturbed product.
    pub fn scale_slot_powers(&self, lambda: &Rat) -> Self {
        let mut pw = Rat::ONE;
        let slots = self
            .slots
            .iter()
            .map(|s| {
                let out = s.scale(&S::from_rat(&pw));
                pw = pw.mul(lambda);
                out
            })
            .collect();
        DeformationSeries { slots }
    }

    /// Truncates every slot to degree d.
    pub fn truncate_degrees(&self, d: u32) -> Self {
        let slots = self.slots.iter().map(|s| s.clone().with_cap(Some(d))).collect();
        DeformationSeries { slots }
    }

    /// Guaranteed-exact degree across slots: the tightest slot cap, `None`
    /// when every slot is exact and total.
    pub fn exact_degree(&self) -> Option<u32> {
        self.slots.iter().filter_map(|s| s.cap()).min()
    }

    /// Largest coefficient modulus per slot; the shape of residual reports.
    pub fn max_abs_per_slot(&self) -> Vec<f64> {
        self.slots.iter().map(|s| s.max_abs()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BasisIndex;
    use crate::multiindex::MultiIndex;
    use crate::scalar::ExactScalar;

    fn f_one_term(k: i32) -> FockSeries<ExactScalar> {
        FockSeries::from_term(
            MultiIndex::single(BasisIndex::new(k, 0)),
            ExactScalar::one(),
        )
    }

    #[test]
    fn convention_presets() {
        assert_eq!(StarConvention::paper().prefactor, Rat::new(-1, 2));
        assert_eq!(StarConvention::bracket_normalized().prefactor, Rat::ONE);
        assert!(StarConvention::new(Rat::ZERO, 1, 1).is_err());
        assert!(StarConvention::new(Rat::ONE, 2, 1).is_err());
    }

    #[test]
    fn slot_power_scaling() {
        let x = DeformationSeries::from_slots(vec![f_one_term(1), f_one_term(2), f_one_term(3)]);
        let y = x.scale_slot_powers(&Rat::new(-1, 2));
        assert_eq!(y.slot(0), &f_one_term(1));
        assert_eq!(y.slot(1), &f_one_term(2).scale(&ExactScalar::from_ratio(-1, 2)));
        assert_eq!(y.slot(2), &f_one_term(3).scale(&ExactScalar::from_ratio(1, 4)));
    }

    #[test]
    fn add_sub_round_trip() {
        let x = DeformationSeries::from_slots(vec![f_one_term(1), f_one_term(2)]);
        let z = x.add(&x).sub(&x);
        assert_eq!(z, x);
        assert!(x.sub(&x).is_zero());
    }
}
