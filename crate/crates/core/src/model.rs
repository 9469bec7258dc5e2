//! Symplectic data: the loop model with its inverse-form entries, and the
//! cotangent model with a diagonal perturbation operator.

use std::collections::BTreeMap;

use crate::basis::BasisIndex;
use crate::error::{CoreError, Result};
use crate::scalar::Rat;

/// Diagonal operator `γ_k ↦ λ_k γ_k` with a declared growth certificate
/// |λ_k| ≤ C_growth·|k|^α. Eigenvalues come from an explicit table (absent
/// modes read as zero) or a monomial formula λ_k = c·k^α_f.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalOperator {
    spec: LambdaSpec,
    growth_c: Rat,
    growth_alpha: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LambdaSpec {
    Table(BTreeMap<i32, Rat>),
    Formula { c: Rat, alpha: u32 },
}

impl DiagonalOperator {
    pub fn new(spec: LambdaSpec, growth_c: Rat, growth_alpha: u32) -> Result<Self> {
        let op = DiagonalOperator { spec, growth_c, growth_alpha };
        if let LambdaSpec::Table(t) = &op.spec {
            for (&k, v) in t {
                op.check_growth(k, v)?;
            }
        }
        Ok(op)
    }

    pub fn from_table(pairs: &[(i32, Rat)], growth_c: Rat, growth_alpha: u32) -> Result<Self> {
        let mut t = BTreeMap::new();
        for (k, v) in pairs {
            t.insert(*k, v.clone());
        }
        Self::new(LambdaSpec::Table(t), growth_c, growth_alpha)
    }

    /// The recurring two-mode example operator: λ_1 = 3, λ_2 = -1/2.
    pub fn example() -> Self {
        Self::from_table(
            &[(1, Rat::from_int(3)), (2, Rat::new(-1, 2))],
            Rat::from_int(3),
            1,
        )
        .expect("example operator satisfies its growth certificate")
    }

    pub fn zero() -> Self {
        Self::new(LambdaSpec::Table(BTreeMap::new()), Rat::ZERO, 0).unwrap()
    }

    fn check_growth(&self, k: i32, v: &Rat) -> Result<()> {
        let bound = self
            .growth_c
            .mul(&Rat::from_int(k.unsigned_abs() as i64).pow_u32(self.growth_alpha));
        if v.abs() > bound {
            return Err(CoreError::Growth(format!(
                "|lambda_{k}| = {} exceeds {} = C|k|^alpha",
                v.abs(),
                bound
            )));
        }
        Ok(())
    }

    /// Eigenvalue at mode `k`. Mode 0 is pinned to zero by the growth
    /// certificate, matching the nonzero-mode convention of the model.
    pub fn eval(&self, k: i32) -> Rat {
        if k == 0 {
            return Rat::ZERO;
        }
        match &self.spec {
            LambdaSpec::Table(t) => t.get(&k).cloned().unwrap_or(Rat::ZERO),
            LambdaSpec::Formula { c, alpha } => {
                c.mul(&Rat::from_int(k as i64).pow_u32(*alpha))
            }
        }
    }

    /// True when every eigenvalue is zero; the gauge transform degenerates
    /// to the identity in that case.
    pub fn is_identically_zero(&self) -> bool {
        match &self.spec {
            LambdaSpec::Table(t) => t.values().all(|v| v.is_zero()),
            LambdaSpec::Formula { c, .. } => c.is_zero(),
        }
    }

    pub fn spec(&self) -> &LambdaSpec {
        &self.spec
    }

    pub fn growth(&self) -> (&Rat, u32) {
        (&self.growth_c, self.growth_alpha)
    }

    /// Modes with a potentially nonzero eigenvalue among the given set.
    pub fn support_within<'a>(&'a self, modes: impl IntoIterator<Item = i32> + 'a) -> Vec<i32> {
        modes.into_iter().filter(|&k| !self.eval(k).is_zero()).collect()
    }
}

/// Either symplectic model.
///
/// Loop: even dimension n, constant C > 0, sign σ; the inverse-form entry
/// on the Darboux pair ((k,2i),(k,2i+1)) is σ(Ck²+1).
/// Cotangent: canonical Darboux pairs ((k,0),(k,1)) with unit entries, plus
/// the diagonal perturbation operator.
#[derive(Clone, Debug, PartialEq)]
pub enum SymplecticModel {
    Loop { n: u16, c: Rat, sigma: i8 },
    Cotangent { a: DiagonalOperator },
}

impl SymplecticModel {
    pub fn loop_model(n: u16, c: Rat, sigma: i8) -> Result<Self> {
        if n == 0 || n % 2 != 0 {
            return Err(CoreError::Param(format!("loop dimension must be even and positive, got {n}")));
        }
        if c.is_zero() || c.is_negative() {
            return Err(CoreError::Param(format!("loop constant must be positive, got {c}")));
        }
        if sigma != 1 && sigma != -1 {
            return Err(CoreError::Param(format!("sigma must be +1 or -1, got {sigma}")));
        }
        Ok(SymplecticModel::Loop { n, c, sigma })
    }

    pub fn default_loop() -> Self {
        Self::loop_model(2, Rat::ONE, 1).unwrap()
    }

    pub fn cotangent(a: DiagonalOperator) -> Self {
        SymplecticModel::Cotangent { a }
    }

    pub fn is_loop(&self) -> bool {
        matches!(self, SymplecticModel::Loop { .. })
    }

    pub fn expect_loop(&self) -> Result<(u16, &Rat, i8)> {
        match self {
            SymplecticModel::Loop { n, c, sigma } => Ok((*n, c, *sigma)),
            SymplecticModel::Cotangent { .. } => Err(CoreError::ModelMismatch { expected: "loop" }),
        }
    }

    pub fn expect_cotangent(&self) -> Result<&DiagonalOperator> {
        match self {
            SymplecticModel::Cotangent { a } => Ok(a),
            SymplecticModel::Loop { .. } => {
                Err(CoreError::ModelMismatch { expected: "cotangent" })
            }
        }
    }

    /// Validates a basis label against this model's ranges.
    pub fn validate_label(&self, b: BasisIndex) -> Result<()> {
        match self {
            SymplecticModel::Loop { n, .. } => {
                if u16::from(b.i) >= *n {
                    return Err(CoreError::DirectionRange(format!(
                        "direction {} out of range for dimension {n}",
                        b.i
                    )));
                }
            }
            SymplecticModel::Cotangent { .. } => {
                if b.i > 1 {
                    return Err(CoreError::DirectionRange(format!(
                        "cotangent side must be 0 or 1, got {}",
                        b.i
                    )));
                }
                if b.k == 0 {
                    return Err(CoreError::DirectionRange(
                        "cotangent mode must be nonzero".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Weight of the Darboux pair at frequency `k`: σ(Ck²+1) in the loop
    /// model, 1 in the cotangent model.
    pub fn pair_weight(&self, k: i32) -> Rat {
        match self {
            SymplecticModel::Loop { c, sigma, .. } => {
                let w = c.mul(&Rat::from_int(k as i64 * k as i64)).add(&Rat::ONE);
                if *sigma < 0 {
                    w.neg()
                } else {
                    w
                }
            }
            SymplecticModel::Cotangent { .. } => Rat::ONE,
        }
    }
}

/// Entry Ω^{ab} of the inverse symplectic form in the loop model:
/// σ(Ck²+1) on ((k,2i),(k,2i+1)), antisymmetric, zero off the blocks.
pub fn omega_inverse_entry(a: BasisIndex, b: BasisIndex, m: &SymplecticModel) -> Result<Rat> {
    m.expect_loop()?;
    m.validate_label(a)?;
    m.validate_label(b)?;
    if a.k != b.k || a.block() != b.block() || a.i == b.i {
        return Ok(Rat::ZERO);
    }
    let w = m.pair_weight(a.k);
    // Within one block the lower direction index is the even one.
    if a.i < b.i {
        Ok(w)
    } else {
        Ok(w.neg())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(k: i32, i: u8) -> BasisIndex {
        BasisIndex::new(k, i)
    }

    #[test]
    fn omega_entry_on_the_block() {
        let m = SymplecticModel::default_loop();
        assert_eq!(omega_inverse_entry(b(1, 0), b(1, 1), &m).unwrap(), Rat::from_int(2));
        assert_eq!(omega_inverse_entry(b(1, 1), b(1, 0), &m).unwrap(), Rat::from_int(-2));
        assert_eq!(omega_inverse_entry(b(1, 0), b(2, 1), &m).unwrap(), Rat::ZERO);
        assert_eq!(omega_inverse_entry(b(1, 0), b(1, 0), &m).unwrap(), Rat::ZERO);
    }

    #[test]
    fn omega_entry_scales_with_c_and_sigma() {
        let m = SymplecticModel::loop_model(2, Rat::new(1, 2), -1).unwrap();
        // -(k²/2 + 1) at k = 2 is -3.
        assert_eq!(omega_inverse_entry(b(2, 0), b(2, 1), &m).unwrap(), Rat::from_int(-3));
    }

    #[test]
    fn omega_entry_requires_loop_model() {
        let m = SymplecticModel::cotangent(DiagonalOperator::zero());
        assert!(omega_inverse_entry(b(1, 0), b(1, 1), &m).is_err());
    }

    #[test]
    fn loop_validation() {
        assert!(SymplecticModel::loop_model(3, Rat::ONE, 1).is_err());
        assert!(SymplecticModel::loop_model(2, Rat::from_int(-1), 1).is_err());
        assert!(SymplecticModel::loop_model(2, Rat::ONE, 0).is_err());
        let m = SymplecticModel::loop_model(4, Rat::ONE, 1).unwrap();
        assert!(m.validate_label(b(1, 3)).is_ok());
        assert!(m.validate_label(b(1, 4)).is_err());
    }

    #[test]
    fn cotangent_validation() {
        let m = SymplecticModel::cotangent(DiagonalOperator::example());
        assert!(m.validate_label(b(1, 0)).is_ok());
        assert!(m.validate_label(b(1, 2)).is_err());
        assert!(m.validate_label(b(0, 0)).is_err());
    }

    #[test]
    fn growth_certificate_enforced() {
        let bad = DiagonalOperator::from_table(&[(1, Rat::from_int(5))], Rat::from_int(3), 1);
        assert!(bad.is_err());
        let ok = DiagonalOperator::from_table(&[(2, Rat::from_int(5))], Rat::from_int(3), 1);
        assert!(ok.is_ok());
    }

    #[test]
    fn example_operator_values() {
        let a = DiagonalOperator::example();
        assert_eq!(a.eval(1), Rat::from_int(3));
        assert_eq!(a.eval(2), Rat::new(-1, 2));
        assert_eq!(a.eval(3), Rat::ZERO);
        assert_eq!(a.eval(0), Rat::ZERO);
        assert!(!a.is_identically_zero());
        assert!(DiagonalOperator::zero().is_identically_zero());
    }

    #[test]
    fn formula_spec_evaluates_monomial() {
        let a = DiagonalOperator::new(
            LambdaSpec::Formula { c: Rat::new(1, 2), alpha: 2 },
            Rat::ONE,
            2,
        )
        .unwrap();
        assert_eq!(a.eval(3), Rat::new(9, 2));
        assert_eq!(a.eval(-3), Rat::new(9, 2));
    }
}
