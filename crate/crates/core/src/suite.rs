//! Named verification suites behind `check …`: seeded, sized, and
//! reported as per-identity pass counts with worst residuals.

use crate::basis::BasisIndex;
use crate::bracket::poisson_bracket;
use crate::checks::{associativity_residual, calibrate, exchange_check, gauge_residual, Tamper};
use crate::deform::{DeformationSeries, StarConvention};
use crate::error::Result;
use crate::model::{DiagonalOperator, SymplecticModel};
use crate::multiindex::MultiIndex;
use crate::norms::{self, NormParams, ProbeOp, SampleSpec};
use crate::oracle::{oracle_eval, DenseSpace, OracleOp};
use crate::sample;
use crate::scalar::{ExactScalar, Scalar};
use crate::series::{wick_exponential, FockSeries};
use crate::star::{p_l, star, star_a, t1, StarKind};

#[derive(Clone, Debug)]
pub struct CheckLine {
    pub name: &'static str,
    pub passed: usize,
    pub failed: usize,
    pub worst_residual: f64,
}

impl CheckLine {
    fn new(name: &'static str) -> Self {
        CheckLine { name, passed: 0, failed: 0, worst_residual: 0.0 }
    }

    fn tally(&mut self, ok: bool, residual: f64) {
        if ok {
            self.passed += 1;
        } else {
            self.failed += 1;
        }
        self.worst_residual = self.worst_residual.max(residual);
    }

    fn series<S: Scalar>(&mut self, s: &FockSeries<S>) {
        self.tally(s.is_zero(), s.max_abs());
    }

    fn deform<S: Scalar>(&mut self, s: &DeformationSeries<S>) {
        let worst = s.max_abs_per_slot().into_iter().fold(0.0f64, f64::max);
        self.tally(s.is_zero(), worst);
    }
}

#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub name: &'static str,
    pub seed: u64,
    pub trials: usize,
    pub convention: StarConvention,
    pub checks: Vec<CheckLine>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.failed == 0)
    }

    pub fn merged(name: &'static str, parts: Vec<SuiteReport>) -> SuiteReport {
        let seed = parts.first().map(|p| p.seed).unwrap_or(0);
        let trials = parts.iter().map(|p| p.trials).sum();
        let convention = StarConvention::calibrated();
        let checks = parts.into_iter().flat_map(|p| p.checks).collect();
        SuiteReport { name, seed, trials, convention, checks }
    }
}

const WICK_STREAM: u64 = 0;
const POISSON_STREAM: u64 = 1 << 20;
const STAR_STREAM: u64 = 2 << 20;
const ORACLE_STREAM: u64 = 3 << 20;
const GAUGE_STREAM: u64 = 4 << 20;
const EXCHANGE_STREAM: u64 = 5 << 20;

/// Commutativity, associativity, and the unit law for the convolution
/// product, on exact random inputs.
pub fn wick_suite(seed: u64, trials: usize) -> SuiteReport {
    let labels = sample::loop_labels(2, 3);
    let mut comm = CheckLine::new("wick_commutativity");
    let mut assoc = CheckLine::new("wick_associativity");
    let mut unit = CheckLine::new("wick_unit");
    for i in 0..trials {
        let mut rng = sample::rng_for(seed, WICK_STREAM + i as u64);
        let f = sample::random_exact_series(&mut rng, &labels, 5, 30);
        let g = sample::random_exact_series(&mut rng, &labels, 5, 30);
        let h = sample::random_exact_series(&mut rng, &labels, 5, 30);
        comm.series(&f.wick_product(&g).sub(&g.wick_product(&f)));
        assoc.series(
            &f.wick_product(&g).wick_product(&h).sub(&f.wick_product(&g.wick_product(&h))),
        );
        unit.series(&f.wick_product(&FockSeries::unit()).sub(&f));
    }
    SuiteReport {
        name: "wick",
        seed,
        trials,
        convention: StarConvention::calibrated(),
        checks: vec![comm, assoc, unit],
    }
}

/// Antisymmetry, Jacobi, Leibniz, and vanishing on constants for the
/// bracket.
pub fn poisson_suite(seed: u64, trials: usize) -> SuiteReport {
    let m = SymplecticModel::default_loop();
    let labels = sample::loop_labels(2, 3);
    let mut anti = CheckLine::new("bracket_antisymmetry");
    let mut jacobi = CheckLine::new("bracket_jacobi");
    let mut leibniz = CheckLine::new("bracket_leibniz");
    let mut constants = CheckLine::new("bracket_constants");
    for i in 0..trials {
        let mut rng = sample::rng_for(seed, POISSON_STREAM + i as u64);
        let f = sample::random_exact_series(&mut rng, &labels, 4, 12);
        let g = sample::random_exact_series(&mut rng, &labels, 4, 12);
        let h = sample::random_exact_series(&mut rng, &labels, 4, 12);
        anti.series(&poisson_bracket(&f, &g, &m).add(&poisson_bracket(&g, &f, &m)));
        let cyc = poisson_bracket(&f, &poisson_bracket(&g, &h, &m), &m)
            .add(&poisson_bracket(&g, &poisson_bracket(&h, &f, &m), &m))
            .add(&poisson_bracket(&h, &poisson_bracket(&f, &g, &m), &m));
        jacobi.series(&cyc);
        let lhs = poisson_bracket(&f, &g.wick_product(&h), &m);
        let rhs = poisson_bracket(&f, &g, &m)
            .wick_product(&h)
            .add(&g.wick_product(&poisson_bracket(&f, &h, &m)));
        leibniz.series(&lhs.sub(&rhs));
        let c = FockSeries::unit().scale(&ExactScalar::from_int(7));
        constants.series(&poisson_bracket(&f, &c, &m));
    }
    SuiteReport {
        name: "poisson",
        seed,
        trials,
        convention: StarConvention::calibrated(),
        checks: vec![anti, jacobi, leibniz, constants],
    }
}

/// Star-product axioms for both shipped conventions plus associativity of
/// the perturbed product under random diagonal operators.
pub fn star_suite(seed: u64, trials: usize, order: usize) -> Result<SuiteReport> {
    let m = SymplecticModel::default_loop();
    let labels = sample::loop_labels(2, 3);
    let cot_labels = sample::cotangent_labels(2);
    let conventions = [StarConvention::paper(), StarConvention::bracket_normalized()];
    let mut slot0 = CheckLine::new("star_slot0_is_wick");
    let mut antisym = CheckLine::new("star_p1_antisym_bracket");
    let mut vanish = CheckLine::new("star_vanishes_on_unit");
    let mut assoc = CheckLine::new("star_associativity");
    let mut degrees = CheckLine::new("star_degree_bookkeeping");
    let mut assoc_a = CheckLine::new("star_a_associativity");
    for i in 0..trials {
        let mut rng = sample::rng_for(seed, STAR_STREAM + i as u64);
        let f = sample::random_exact_series(&mut rng, &labels, 4, 20);
        let g = sample::random_exact_series(&mut rng, &labels, 4, 20);
        let h = sample::random_exact_series(&mut rng, &labels, 4, 20);
        for conv in &conventions {
            let s = star(&f, &g, order, &m, conv)?;
            slot0.series(&s.slot(0).sub(&f.wick_product(&g)));
            let anti = p_l(&f, &g, 1, &m, conv)?.sub(&p_l(&g, &f, 1, &m, conv)?);
            let target =
                poisson_bracket(&f, &g, &m).scale(&ExactScalar::from_rat(&conv.prefactor.mul_int(2)));
            antisym.series(&anti.sub(&target));
            for l in 1..=2 {
                vanish.series(&p_l(&f, &FockSeries::unit(), l, &m, conv)?);
                vanish.series(&p_l(&FockSeries::unit(), &f, l, &m, conv)?);
            }
            let kind = StarKind::Loop { model: &m, conv };
            let xs = DeformationSeries::from_constant(f.clone(), order);
            let ys = DeformationSeries::from_constant(g.clone(), order);
            let zs = DeformationSeries::from_constant(h.clone(), order);
            assoc.deform(&associativity_residual(&xs, &ys, &zs, &kind)?);
        }
        {
            let conv = &conventions[i % 2];
            let fm = monomial_of(&f);
            let gm = monomial_of(&g);
            let s = star(&fm, &gm, order, &m, conv)?;
            let (df, dg) = (fm.max_degree(), gm.max_degree());
            let mut ok = true;
            for (l, slot) in s.slots().iter().enumerate() {
                for (idx, _) in slot.terms() {
                    ok &= idx.degree() as i64 == df as i64 + dg as i64 - 2 * l as i64;
                }
            }
            degrees.tally(ok, if ok { 0.0 } else { 1.0 });
        }
        {
            let a = sample::random_diagonal(&mut rng, 3);
            let kind = StarKind::Perturbed { a: &a };
            let fx = sample::random_exact_series(&mut rng, &cot_labels, 3, 6);
            let gx = sample::random_exact_series(&mut rng, &cot_labels, 3, 6);
            let hx = sample::random_exact_series(&mut rng, &cot_labels, 3, 6);
            let xs = DeformationSeries::from_constant(fx, 3);
            let ys = DeformationSeries::from_constant(gx, 3);
            let zs = DeformationSeries::from_constant(hx, 3);
            assoc_a.deform(&associativity_residual(&xs, &ys, &zs, &kind)?);
        }
    }
    Ok(SuiteReport {
        name: "star",
        seed,
        trials,
        convention: StarConvention::calibrated(),
        checks: vec![slot0, antisym, vanish, assoc, degrees, assoc_a],
    })
}

fn monomial_of(f: &FockSeries<ExactScalar>) -> FockSeries<ExactScalar> {
    match f.terms().last() {
        Some((idx, _)) => FockSeries::from_term(idx.clone(), ExactScalar::one()),
        None => FockSeries::unit(),
    }
}

/// Sparse-vs-dense agreement for every oracle operation, round-robin over
/// the seeded case stream.
pub fn oracle_suite(seed: u64, trials: usize) -> Result<SuiteReport> {
    let m = SymplecticModel::default_loop();
    let loop_space = DenseSpace::for_loop(&m, 2, 6)?;
    let cot_space = DenseSpace::for_cotangent(2, 6);
    let loop_labels = sample::loop_labels(2, 2);
    let cot_labels = sample::cotangent_labels(2);
    let mut lines = [
        CheckLine::new("oracle_wick"),
        CheckLine::new("oracle_annihilate"),
        CheckLine::new("oracle_bracket"),
        CheckLine::new("oracle_p_l"),
        CheckLine::new("oracle_c_r_a"),
        CheckLine::new("oracle_t1"),
        CheckLine::new("oracle_wick_exp"),
    ];
    for i in 0..trials {
        let mut rng = sample::rng_for(seed, ORACLE_STREAM + i as u64);
        let which = i % 7;
        match which {
            0 => {
                let f = sample::random_exact_series(&mut rng, &loop_labels, 3, 6);
                let g = sample::random_exact_series(&mut rng, &loop_labels, 3, 6);
                let dense = oracle_eval(&loop_space, &OracleOp::Wick, &[&f, &g])?;
                lines[0].series(&f.wick_product(&g).sub(&dense));
            }
            1 => {
                let f = sample::random_exact_series(&mut rng, &loop_labels, 3, 6);
                let label = loop_labels[rand::Rng::gen_range(&mut rng, 0..loop_labels.len())];
                let dense = oracle_eval(&loop_space, &OracleOp::Annihilate(label), &[&f])?;
                lines[1].series(&f.annihilate(label).sub(&dense));
            }
            2 => {
                let f = sample::random_exact_series(&mut rng, &loop_labels, 3, 6);
                let g = sample::random_exact_series(&mut rng, &loop_labels, 3, 6);
                let dense = oracle_eval(&loop_space, &OracleOp::Bracket(&m), &[&f, &g])?;
                lines[2].series(&poisson_bracket(&f, &g, &m).sub(&dense));
            }
            3 => {
                let f = sample::random_exact_series(&mut rng, &loop_labels, 3, 6);
                let g = sample::random_exact_series(&mut rng, &loop_labels, 3, 6);
                let l = 1 + (i / 7) as u32 % 2;
                let conv = if (i / 14) % 2 == 0 {
                    StarConvention::paper()
                } else {
                    StarConvention::bracket_normalized()
                };
                let op = OracleOp::PL { model: &m, conv: &conv, l };
                let dense = oracle_eval(&loop_space, &op, &[&f, &g])?;
                lines[3].series(&p_l(&f, &g, l, &m, &conv)?.sub(&dense));
            }
            4 => {
                let a = sample::random_diagonal(&mut rng, 2);
                let f = sample::random_exact_series(&mut rng, &cot_labels, 3, 6);
                let g = sample::random_exact_series(&mut rng, &cot_labels, 3, 6);
                let r = 1 + (i / 7) as u32 % 2;
                let dense = oracle_eval(&cot_space, &OracleOp::CRA { a: &a, r }, &[&f, &g])?;
                let sparse = star_a(&f, &g, r as usize, &a)?;
                lines[4].series(&sparse.slot(r as usize).sub(&dense));
            }
            5 => {
                let a = sample::random_diagonal(&mut rng, 2);
                let f = sample::random_exact_series(&mut rng, &cot_labels, 3, 6);
                let dense = oracle_eval(&cot_space, &OracleOp::T1(&a), &[&f])?;
                lines[5].series(&t1(&f, &a)?.sub(&dense));
            }
            _ => {
                let xi = sample::random_degree_one(&mut rng, &loop_labels);
                let dense = oracle_eval(&loop_space, &OracleOp::WickExp { degree: 3 }, &[&xi])?;
                lines[6].series(&wick_exponential(&xi, 3)?.sub(&dense));
            }
        }
    }
    Ok(SuiteReport {
        name: "oracle",
        seed,
        trials,
        convention: StarConvention::calibrated(),
        checks: lines.to_vec(),
    })
}

/// Calibration uniqueness plus the gauge identity on random polynomial
/// pairs and truncated wick-exponential pairs.
pub fn gauge_suite(
    seed: u64,
    poly_trials: usize,
    exp_trials: usize,
    order: usize,
    degree: u32,
    a: &DiagonalOperator,
) -> Result<SuiteReport> {
    let mut unique = CheckLine::new("calibration_unique");
    let outcome = calibrate(a, seed, Tamper::None)?;
    let ok = outcome.unique() == Some(&StarConvention::calibrated());
    unique.tally(ok, if ok { 0.0 } else { 1.0 });

    let labels = sample::positive_cotangent_labels(3);
    let mut poly = CheckLine::new("gauge_polynomial_pairs");
    for i in 0..poly_trials {
        let mut rng = sample::rng_for(seed, GAUGE_STREAM + i as u64);
        let f = sample::random_exact_series(&mut rng, &labels, degree, 6);
        let g = sample::random_exact_series(&mut rng, &labels, degree, 6);
        poly.deform(&gauge_residual(&f, &g, a, order)?);
    }

    let side0: Vec<BasisIndex> = labels.iter().copied().filter(|b| b.i == 0).collect();
    let side1: Vec<BasisIndex> = labels.iter().copied().filter(|b| b.i == 1).collect();
    let cap = degree + 2 * order as u32;
    let mut exps = CheckLine::new("gauge_exponential_pairs");
    for i in 0..exp_trials {
        let mut rng = sample::rng_for(seed, GAUGE_STREAM + (1 << 16) + i as u64);
        let make = |rng: &mut rand_chacha::ChaCha8Rng| -> Result<FockSeries<ExactScalar>> {
            let g1 = sample::random_degree_one(rng, &side0);
            let g2 = sample::random_degree_one(rng, &side1);
            wick_exponential(&g1.add(&g2), cap)
        };
        let phi = make(&mut rng)?;
        let phi2 = make(&mut rng)?;
        exps.deform(&gauge_residual(&phi, &phi2, a, order)?);
    }
    Ok(SuiteReport {
        name: "gauge",
        seed,
        trials: poly_trials + exp_trials,
        convention: StarConvention::calibrated(),
        checks: vec![unique, poly, exps],
    })
}

/// Exchange closed form on random single- and two-mode quadruples.
pub fn exchange_suite(
    seed: u64,
    trials: usize,
    degree: u32,
    order: usize,
    a: &DiagonalOperator,
) -> Result<SuiteReport> {
    let mut line = CheckLine::new("exchange_closed_form");
    for i in 0..trials {
        let mut rng = sample::rng_for(seed, EXCHANGE_STREAM + i as u64);
        let modes: &[i32] = if i % 2 == 0 { &[1] } else { &[1, 2] };
        let pick = |side: u8, rng: &mut rand_chacha::ChaCha8Rng| {
            let mut acc = FockSeries::zero();
            for &k in modes {
                let c = rand::Rng::gen_range(&mut *rng, -3i64..=3);
                if c != 0 {
                    acc = acc.add(&FockSeries::from_term(
                        MultiIndex::single(BasisIndex::new(k, side)),
                        ExactScalar::from_int(c),
                    ));
                }
            }
            acc
        };
        let g1 = pick(0, &mut rng);
        let g2 = pick(1, &mut rng);
        let g1p = pick(0, &mut rng);
        let g2p = pick(1, &mut rng);
        let report = exchange_check(&g1, &g2, &g1p, &g2p, a, degree, order)?;
        line.tally(report.is_zero(), report.max_residual());
    }
    Ok(SuiteReport {
        name: "exchange",
        seed,
        trials,
        convention: StarConvention::calibrated(),
        checks: vec![line],
    })
}

/// Summability diagnostics: direct-vs-closed-form agreement, divergence
/// detection, embedding orientation, and probe determinism.
pub fn norms_suite(seed: u64) -> Result<SuiteReport> {
    let mut agreement = CheckLine::new("nuclearity_direct_vs_closed");
    let p = NormParams::new(4.0, 0.5, 1.0)?;
    let report = norms::nuclearity_sum(&p, 50, 2, 8)?;
    let rel = (report.closed_form - report.direct).abs() / report.closed_form;
    agreement.tally(
        rel <= 1e-6 && (report.closed_form + report.tail_bound).is_finite(),
        rel,
    );

    let mut divergence = CheckLine::new("nuclearity_divergence_detected");
    let bad = NormParams::new(0.0, 1.0, 1.0)?;
    let diverged = norms::nuclearity_sum(&bad, 10, 2, 4).is_err();
    divergence.tally(diverged, if diverged { 0.0 } else { 1.0 });

    let mut embedding = CheckLine::new("hs_embedding_orientation");
    let strong = NormParams::new(6.0, 1.0, 1.0)?;
    let weak = NormParams::new(2.0, 0.25, 1.0)?;
    let hs = norms::hs_embedding_norm(&strong, &weak, 50, 2, 8)?;
    let hs_rel = (hs.closed_form - hs.direct).abs() / hs.closed_form;
    let reversed_diverges = norms::hs_embedding_norm(&weak, &strong, 10, 2, 4).is_err();
    embedding.tally(hs_rel <= 1e-6 && reversed_diverges, hs_rel);

    let mut probe = CheckLine::new("probe_deterministic_finite");
    let m = SymplecticModel::default_loop();
    let target = NormParams::new(2.0, 1.0, 1.0)?;
    let source = NormParams::new(6.0, 4.0, 1.0)?;
    let spec = SampleSpec { count: 50, seed, degree: 3, terms: 6, kmax: 3 };
    let op = ProbeOp::Bracket(&m);
    let first = norms::continuity_probe(&op, &target, &source, &spec)?;
    let second = norms::continuity_probe(&op, &target, &source, &spec)?;
    let same = first.k_hat.to_bits() == second.k_hat.to_bits()
        && first.quantiles.map(f64::to_bits) == second.quantiles.map(f64::to_bits);
    probe.tally(same && first.k_hat.is_finite(), 0.0);

    Ok(SuiteReport {
        name: "norms",
        seed,
        trials: 4,
        convention: StarConvention::calibrated(),
        checks: vec![agreement, divergence, embedding, probe],
    })
}

/// The wick, bracket, and star suites in one report.
pub fn axioms_suite(seed: u64, trials: usize, order: usize) -> Result<SuiteReport> {
    let wick = wick_suite(seed, trials);
    let poisson = poisson_suite(seed, trials.div_ceil(2).max(1));
    let star = star_suite(seed, trials.div_ceil(4).max(1), order)?;
    Ok(SuiteReport::merged("axioms", vec![wick, poisson, star]))
}
