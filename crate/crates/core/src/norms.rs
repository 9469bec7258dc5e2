//! Weighted norms on the test-function spaces and the numeric diagnostics
//! built on them: nuclearity sums, Hilbert–Schmidt embedding sums, and
//! seeded continuity-constant probes.
//!
//! Norm values are floats. Integer weight exponents are evaluated by
//! repeated multiplication rather than powf so that a pinned seed yields a
//! bit-identical report everywhere; non-integer exponents fall back to powf.

use crate::deform::StarConvention;
use crate::error::{CoreError, Result};
use crate::model::{DiagonalOperator, SymplecticModel};
use crate::multiindex::MultiIndex;
use crate::sample;
use crate::scalar::{FloatScalar, Rat, Scalar};
use crate::series::FockSeries;

/// Parameters (r, C) of one weighted norm, plus the weight constant C₁.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormParams {
    pub r: f64,
    pub c: f64,
    pub c1: f64,
}

impl NormParams {
    pub fn new(r: f64, c: f64, c1: f64) -> Result<Self> {
        if !(r >= 0.0) || !r.is_finite() {
            return Err(CoreError::Param(format!("norm exponent must be finite and >= 0, got {r}")));
        }
        if !(c > 0.0) || !c.is_finite() {
            return Err(CoreError::Param(format!("norm constant must be finite and > 0, got {c}")));
        }
        if !(c1 > 0.0) || !c1.is_finite() {
            return Err(CoreError::Param(format!(
                "weight constant must be finite and > 0, got {c1}"
            )));
        }
        Ok(NormParams { r, c, c1 })
    }
}

/// t^(e/2) with a loop-multiplication path for integer e, signed.
fn pow_half(t: f64, e: f64) -> f64 {
    if e == 0.0 {
        return 1.0;
    }
    if e < 0.0 {
        return 1.0 / pow_half(t, -e);
    }
    if e.fract() == 0.0 && e <= 65536.0 {
        let n = e as u64;
        let mut acc = 1.0;
        for _ in 0..(n / 2) {
            acc *= t;
        }
        if n % 2 == 1 {
            acc *= t.sqrt();
        }
        acc
    } else {
        t.powf(e / 2.0)
    }
}

fn int_pow(base: f64, m: u32) -> f64 {
    let mut acc = 1.0;
    for _ in 0..m {
        acc *= base;
    }
    acc
}

/// Π over entries of (√(C₁k²+1))^(r · multiplicity).
pub fn hida_weight(i: &MultiIndex, p: &NormParams) -> f64 {
    let mut acc = 1.0;
    for (b, m) in i.entries() {
        let t = p.c1 * (b.k as f64) * (b.k as f64) + 1.0;
        acc *= pow_half(t, p.r * m as f64);
    }
    acc
}

/// Exact w_r(I)² for integer r: Π (C₁k²+1)^(r·multiplicity).
pub fn hida_weight_sq_exact(i: &MultiIndex, r: u32, c1: &Rat) -> Rat {
    let mut acc = Rat::ONE;
    for (b, m) in i.entries() {
        let t = c1.mul_int((b.k as i64) * (b.k as i64)).add(&Rat::ONE);
        acc = acc.mul(&t.pow_u32(r * m));
    }
    acc
}

/// √(Σ |b_I|² · w_r(I) · C^|I|).
pub fn hida_norm<S: Scalar>(f: &FockSeries<S>, p: &NormParams) -> f64 {
    let mut acc = 0.0;
    for (idx, c) in f.terms() {
        acc += c.abs_sq() * hida_weight(idx, p) * int_pow(p.c, idx.degree());
    }
    acc.sqrt()
}

#[derive(Clone, Debug)]
pub struct SummabilityParams {
    pub r: f64,
    pub c: f64,
    pub c1: f64,
    pub kmax: u32,
    pub n: u16,
    pub dmax: u32,
    pub tail_formula: &'static str,
}

/// Truncated direct sum, untruncated closed form, and mode tail bound for
/// one geometric mode family.
#[derive(Clone, Debug)]
pub struct SummabilityReport {
    pub direct: f64,
    pub closed_form: f64,
    pub tail_bound: f64,
    pub params: SummabilityParams,
}

const TAIL_FORMULA: &str =
    "sum_{k>kmax} x_k <= n * x_scale * C1^(-r/2) * kmax^(1-r) / (r-1), valid for r > 1";

/// Shared enumeration core: retained factors x (one per mode and
/// direction), truncated-degree direct sum via the geometric convolution,
/// and the product closed form.
fn geometric_sums(xs: &[f64], dmax: u32) -> Result<(f64, f64)> {
    for &x in xs {
        if !(x < 1.0) {
            return Err(CoreError::NonSummable(format!(
                "retained mode factor {x} is not < 1; the sum diverges"
            )));
        }
    }
    let mut dp = vec![0.0f64; dmax as usize + 1];
    dp[0] = 1.0;
    for &x in xs {
        for d in 1..dp.len() {
            dp[d] += dp[d - 1] * x;
        }
    }
    let direct = dp.iter().sum();
    let closed = xs.iter().map(|&x| 1.0 / (1.0 - x)).product();
    Ok((direct, closed))
}

fn mode_tail(scale: f64, r_gap: f64, c1: f64, kmax: u32, n: u16) -> f64 {
    if r_gap > 1.0 {
        n as f64 * scale * pow_half(c1, -r_gap) * (kmax as f64).powf(1.0 - r_gap) / (r_gap - 1.0)
    } else {
        f64::INFINITY
    }
}

/// Σ over multi-indices on modes 1..=kmax (n directions each, degree ≤
/// Dmax) of w_r(I)^{-1} C^|I|, against the closed form Π (1-x)^{-1} with
/// x_k = C·(C₁k²+1)^{-r/2}, plus a bound on the discarded mode tail.
pub fn nuclearity_sum(p: &NormParams, kmax: u32, n: u16, dmax: u32) -> Result<SummabilityReport> {
    let mut xs = Vec::with_capacity(kmax as usize * n as usize);
    for k in 1..=kmax {
        let t = p.c1 * (k as f64) * (k as f64) + 1.0;
        let x = p.c / pow_half(t, p.r);
        for _ in 0..n {
            xs.push(x);
        }
    }
    let (direct, closed_form) = geometric_sums(&xs, dmax)?;
    Ok(SummabilityReport {
        direct,
        closed_form,
        tail_bound: mode_tail(p.c, p.r, p.c1, kmax, n),
        params: SummabilityParams {
            r: p.r,
            c: p.c,
            c1: p.c1,
            kmax,
            n,
            dmax,
            tail_formula: TAIL_FORMULA,
        },
    })
}

/// Hilbert–Schmidt sum of the identity viewed from the `from` norm into the
/// `to` norm: Σ_I [w_{to}(I)·C_to^|I|]/[w_{from}(I)·C_from^|I|]. Finite
/// only when every per-label ratio is < 1, which requires the `from` family
/// to be the stronger one.
pub fn hs_embedding_norm(
    from: &NormParams,
    to: &NormParams,
    kmax: u32,
    n: u16,
    dmax: u32,
) -> Result<SummabilityReport> {
    if from.c1 != to.c1 {
        return Err(CoreError::Param(format!(
            "weight constants must agree, got {} and {}",
            from.c1, to.c1
        )));
    }
    let scale = to.c / from.c;
    let gap = from.r - to.r;
    let mut xs = Vec::with_capacity(kmax as usize * n as usize);
    for k in 1..=kmax {
        let t = from.c1 * (k as f64) * (k as f64) + 1.0;
        let rho = scale / pow_half(t, gap);
        for _ in 0..n {
            xs.push(rho);
        }
    }
    let (direct, closed_form) = geometric_sums(&xs, dmax)?;
    Ok(SummabilityReport {
        direct,
        closed_form,
        tail_bound: mode_tail(scale, gap, from.c1, kmax, n),
        params: SummabilityParams {
            r: gap,
            c: scale,
            c1: from.c1,
            kmax,
            n,
            dmax,
            tail_formula: TAIL_FORMULA,
        },
    })
}

/// Bilinear operation sampled by the continuity probe.
pub enum ProbeOp<'a> {
    Bracket(&'a SymplecticModel),
    PL { model: &'a SymplecticModel, conv: &'a StarConvention, l: u32 },
    EA(&'a DiagonalOperator),
}

impl ProbeOp<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            ProbeOp::Bracket(_) => "bracket",
            ProbeOp::PL { .. } => "p_l",
            ProbeOp::EA(_) => "e_a",
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SampleSpec {
    pub count: usize,
    pub seed: u64,
    pub degree: u32,
    pub terms: usize,
    pub kmax: i32,
}

/// Empirical estimate of the best constant in
/// ‖op(F,G)‖_target ≤ K·‖F‖_source·‖G‖_source over a seeded sample.
/// An estimate on a finite family only; no claim beyond the recorded
/// sample.
#[derive(Clone, Debug)]
pub struct ProbeReport {
    pub op: &'static str,
    pub k_hat: f64,
    /// [min, q25, median, q75, max] of the recorded ratios.
    pub quantiles: [f64; 5],
    pub count: usize,
    pub skipped: usize,
    pub seed: u64,
    pub target: NormParams,
    pub source: NormParams,
}

/// One seeded sample coefficient: a dyadic value scaled by the source
/// envelope so source norms stay O(1) across degrees.
fn probe_series(
    rng: &mut rand_chacha::ChaCha8Rng,
    labels: &[crate::basis::BasisIndex],
    spec: &SampleSpec,
    source: &NormParams,
) -> FockSeries<FloatScalar> {
    use rand::Rng;
    let mut raw = Vec::with_capacity(spec.terms);
    for _ in 0..spec.terms {
        let degree = rng.gen_range(0..=spec.degree);
        let mut picks: Vec<(crate::basis::BasisIndex, u32)> = Vec::new();
        for _ in 0..degree {
            let label = labels[rng.gen_range(0..labels.len())];
            match picks.iter_mut().find(|(b, _)| *b == label) {
                Some((_, m)) => *m += 1,
                None => picks.push((label, 1)),
            }
        }
        let idx = MultiIndex::new(&picks);
        let envelope =
            1.0 / (hida_weight(&idx, source) * int_pow(source.c, idx.degree())).sqrt();
        let re = rng.gen_range(-8i64..=8) as f64 / 8.0 * envelope;
        let im = rng.gen_range(-8i64..=8) as f64 / 8.0 * envelope;
        raw.push((idx, FloatScalar { re, im }));
    }
    FockSeries::canonicalize(raw)
}

pub fn continuity_probe(
    op: &ProbeOp<'_>,
    target: &NormParams,
    source: &NormParams,
    spec: &SampleSpec,
) -> Result<ProbeReport> {
    let labels = match op {
        ProbeOp::Bracket(m) | ProbeOp::PL { model: m, .. } => match m.expect_loop() {
            Ok((n, _, _)) => sample::loop_labels(n, spec.kmax),
            Err(_) => sample::cotangent_labels(spec.kmax),
        },
        ProbeOp::EA(_) => sample::cotangent_labels(spec.kmax),
    };
    let mut ratios = Vec::with_capacity(spec.count);
    let mut skipped = 0usize;
    for i in 0..spec.count {
        let mut rng = sample::rng_for(spec.seed, i as u64);
        let f = probe_series(&mut rng, &labels, spec, source);
        let g = probe_series(&mut rng, &labels, spec, source);
        let denom = hida_norm(&f, source) * hida_norm(&g, source);
        if denom == 0.0 {
            skipped += 1;
            continue;
        }
        let value = match op {
            ProbeOp::Bracket(m) => crate::bracket::poisson_bracket(&f, &g, m),
            ProbeOp::PL { model, conv, l } => crate::star::p_l(&f, &g, *l, model, conv)?,
            ProbeOp::EA(a) => crate::bracket::e_a_form(&f, &g, a),
        };
        ratios.push(hida_norm(&value, target) / denom);
    }
    if ratios.is_empty() {
        return Err(CoreError::Param("probe sample produced no usable ratios".into()));
    }
    ratios.sort_by(|a, b| a.partial_cmp(b).expect("ratios are finite"));
    let pick = |q: f64| ratios[((ratios.len() - 1) as f64 * q).floor() as usize];
    Ok(ProbeReport {
        op: op.name(),
        k_hat: *ratios.last().unwrap(),
        quantiles: [pick(0.0), pick(0.25), pick(0.5), pick(0.75), pick(1.0)],
        count: ratios.len(),
        skipped,
        seed: spec.seed,
        target: *target,
        source: *source,
    })
}
