//! JSON documents and CSV tables.
//!
//! Coefficients travel as strings in both scalar modes, so exact series
//! round-trip bit-for-bit. Readers reject non-canonical index lists with a
//! diagnostic instead of silently repairing them. Key order comes from the
//! serializer's sorted maps, so equal inputs produce byte-equal documents.

use serde_json::{Map, Number, Value};

use crate::basis::BasisIndex;
use crate::checks::ResidualReport;
use crate::deform::{DeformationSeries, StarConvention};
use crate::error::{CoreError, Result};
use crate::model::{DiagonalOperator, LambdaSpec, SymplecticModel};
use crate::multiindex::MultiIndex;
use crate::norms::{NormParams, ProbeReport, SummabilityReport};
use crate::scalar::{ExactScalar, FloatScalar, Rat, Scalar, ScalarMode};
use crate::series::FockSeries;
use crate::suite::SuiteReport;

/// Which model's label ranges a series document claims.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelTag {
    Loop,
    Cotangent,
}

impl ModelTag {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelTag::Loop => "loop",
            ModelTag::Cotangent => "cotangent",
        }
    }

    pub fn of(m: &SymplecticModel) -> (ModelTag, u16) {
        match m {
            SymplecticModel::Loop { n, .. } => (ModelTag::Loop, *n),
            SymplecticModel::Cotangent { .. } => (ModelTag::Cotangent, 2),
        }
    }
}

/// A parsed series document in either scalar mode.
#[derive(Clone, Debug)]
pub enum AnySeries {
    Exact(FockSeries<ExactScalar>),
    Float(FockSeries<FloatScalar>),
}

impl AnySeries {
    pub fn mode(&self) -> ScalarMode {
        match self {
            AnySeries::Exact(_) => ScalarMode::Exact,
            AnySeries::Float(_) => ScalarMode::Float,
        }
    }

    pub fn expect_exact(self) -> Result<FockSeries<ExactScalar>> {
        match self {
            AnySeries::Exact(f) => Ok(f),
            AnySeries::Float(_) => Err(CoreError::Document(
                "this operation needs exact-mode input, got a float-mode series".into(),
            )),
        }
    }

    pub fn to_float(&self) -> FockSeries<FloatScalar> {
        match self {
            AnySeries::Float(f) => f.clone(),
            AnySeries::Exact(f) => {
                let terms = f
                    .terms()
                    .iter()
                    .map(|(idx, c)| {
                        (idx.clone(), FloatScalar::new(c.re.to_f64(), c.im.to_f64()))
                    })
                    .collect();
                FockSeries::canonicalize(terms).with_cap(f.cap())
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct SeriesDocument {
    pub tag: ModelTag,
    pub dimension: u16,
    pub payload: AnySeries,
}

fn doc_err(what: &str, detail: impl std::fmt::Display) -> CoreError {
    CoreError::Document(format!("{what}: {detail}"))
}

fn as_obj<'a>(v: &'a Value, what: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| doc_err(what, "expected a JSON object"))
}

fn get<'a>(m: &'a Map<String, Value>, key: &str, what: &str) -> Result<&'a Value> {
    m.get(key).ok_or_else(|| doc_err(what, format!("missing field {key:?}")))
}

fn get_str<'a>(m: &'a Map<String, Value>, key: &str, what: &str) -> Result<&'a str> {
    get(m, key, what)?
        .as_str()
        .ok_or_else(|| doc_err(what, format!("field {key:?} must be a string")))
}

fn get_int(m: &Map<String, Value>, key: &str, what: &str) -> Result<i64> {
    get(m, key, what)?
        .as_i64()
        .ok_or_else(|| doc_err(what, format!("field {key:?} must be an integer")))
}

fn get_rat(m: &Map<String, Value>, key: &str, what: &str) -> Result<Rat> {
    get_str(m, key, what)?.parse()
}

fn num(x: f64) -> Value {
    match Number::from_f64(x) {
        Some(n) => Value::Number(n),
        None => Value::String(format!("{x}")),
    }
}

fn index_to_value(idx: &MultiIndex) -> Value {
    Value::Array(
        idx.entries()
            .iter()
            .map(|(b, m)| {
                Value::Array(vec![
                    Value::from(b.k),
                    Value::from(b.i),
                    Value::from(*m),
                ])
            })
            .collect(),
    )
}

fn index_from_value(v: &Value, tag: ModelTag, dimension: u16) -> Result<MultiIndex> {
    let what = "series term index";
    let arr = v.as_array().ok_or_else(|| doc_err(what, "expected an array of triples"))?;
    let mut entries: Vec<(BasisIndex, u32)> = Vec::with_capacity(arr.len());
    for triple in arr {
        let t = triple
            .as_array()
            .filter(|t| t.len() == 3)
            .ok_or_else(|| doc_err(what, "each entry must be a [k, i, mult] triple"))?;
        let k = t[0]
            .as_i64()
            .and_then(|k| i32::try_from(k).ok())
            .ok_or_else(|| doc_err(what, "frequency out of range"))?;
        let i = t[1]
            .as_i64()
            .and_then(|i| u8::try_from(i).ok())
            .ok_or_else(|| doc_err(what, "direction out of range"))?;
        let mult = t[2]
            .as_i64()
            .and_then(|m| u32::try_from(m).ok())
            .ok_or_else(|| doc_err(what, "multiplicity out of range"))?;
        if mult == 0 {
            return Err(CoreError::NonCanonical("zero multiplicity in index list".into()));
        }
        let b = BasisIndex::new(k, i);
        match tag {
            ModelTag::Loop => {
                if u16::from(i) >= dimension {
                    return Err(doc_err(
                        what,
                        format!("direction {i} out of range for dimension {dimension}"),
                    ));
                }
            }
            ModelTag::Cotangent => {
                if i > 1 || k == 0 {
                    return Err(doc_err(what, format!("label {b} invalid for the cotangent model")));
                }
            }
        }
        if let Some(&(prev, _)) = entries.last() {
            if b <= prev {
                return Err(CoreError::NonCanonical(format!(
                    "index list not strictly increasing at {b}"
                )));
            }
        }
        entries.push((b, mult));
    }
    Ok(MultiIndex::new(&entries))
}

fn terms_to_value<S: Scalar>(f: &FockSeries<S>) -> Value {
    Value::Array(
        f.terms()
            .iter()
            .map(|(idx, c)| {
                let (re, im) = c.fmt_parts();
                let mut term = Map::new();
                term.insert("index".into(), index_to_value(idx));
                term.insert("re".into(), Value::String(re));
                term.insert("im".into(), Value::String(im));
                Value::Object(term)
            })
            .collect(),
    )
}

pub fn series_to_value<S: Scalar>(f: &FockSeries<S>, tag: ModelTag, dimension: u16) -> Value {
    let mut m = Map::new();
    m.insert("mode".into(), Value::String(S::MODE.to_string()));
    m.insert("model".into(), Value::String(tag.as_str().into()));
    m.insert("dimension".into(), Value::from(dimension));
    m.insert("terms".into(), terms_to_value(f));
    Value::Object(m)
}

fn terms_from_value<S: Scalar>(
    v: &Value,
    tag: ModelTag,
    dimension: u16,
) -> Result<FockSeries<S>> {
    let what = "series document";
    let arr = get(as_obj(v, what)?, "terms", what)?
        .as_array()
        .ok_or_else(|| doc_err(what, "field \"terms\" must be an array"))?;
    let mut seen: Vec<MultiIndex> = Vec::with_capacity(arr.len());
    let mut terms = Vec::with_capacity(arr.len());
    for t in arr {
        let obj = as_obj(t, "series term")?;
        let idx = index_from_value(get(obj, "index", "series term")?, tag, dimension)?;
        let re = get_str(obj, "re", "series term")?;
        let im = get_str(obj, "im", "series term")?;
        let c = S::parse_parts(re, im)?;
        if seen.contains(&idx) {
            return Err(CoreError::NonCanonical(format!("duplicate term index {idx}")));
        }
        seen.push(idx.clone());
        terms.push((idx, c));
    }
    Ok(FockSeries::canonicalize(terms))
}

pub fn series_from_value(v: &Value) -> Result<SeriesDocument> {
    let what = "series document";
    let m = as_obj(v, what)?;
    let tag = match get_str(m, "model", what)? {
        "loop" => ModelTag::Loop,
        "cotangent" => ModelTag::Cotangent,
        other => return Err(doc_err(what, format!("unknown model tag {other:?}"))),
    };
    let dimension = get_int(m, "dimension", what)?;
    let dimension = u16::try_from(dimension)
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| doc_err(what, "dimension must be a positive integer"))?;
    match tag {
        ModelTag::Loop => {
            if dimension % 2 != 0 {
                return Err(doc_err(what, "loop dimension must be even"));
            }
        }
        ModelTag::Cotangent => {
            if dimension != 2 {
                return Err(doc_err(what, "cotangent documents have dimension 2"));
            }
        }
    }
    let payload = match get_str(m, "mode", what)? {
        "exact" => AnySeries::Exact(terms_from_value(v, tag, dimension)?),
        "float" => AnySeries::Float(terms_from_value(v, tag, dimension)?),
        other => return Err(doc_err(what, format!("unknown mode {other:?}"))),
    };
    Ok(SeriesDocument { tag, dimension, payload })
}

pub fn model_to_value(m: &SymplecticModel) -> Value {
    let mut out = Map::new();
    match m {
        SymplecticModel::Loop { n, c, sigma } => {
            out.insert("variant".into(), Value::String("loop".into()));
            out.insert("n".into(), Value::from(*n));
            out.insert("C".into(), Value::String(c.to_string()));
            out.insert("sigma".into(), Value::from(*sigma));
        }
        SymplecticModel::Cotangent { a } => {
            out.insert("variant".into(), Value::String("cotangent".into()));
            let mut lambda = Map::new();
            match a.spec() {
                LambdaSpec::Table(t) => {
                    let mut table = Map::new();
                    for (k, v) in t {
                        table.insert(k.to_string(), Value::String(v.to_string()));
                    }
                    lambda.insert("table".into(), Value::Object(table));
                }
                LambdaSpec::Formula { c, alpha } => {
                    let mut formula = Map::new();
                    formula.insert("c".into(), Value::String(c.to_string()));
                    formula.insert("alpha".into(), Value::from(*alpha));
                    lambda.insert("formula".into(), Value::Object(formula));
                }
            }
            out.insert("lambda".into(), Value::Object(lambda));
            let (gc, ga) = a.growth();
            let mut growth = Map::new();
            growth.insert("C".into(), Value::String(gc.to_string()));
            growth.insert("alpha".into(), Value::from(ga));
            out.insert("growth".into(), Value::Object(growth));
        }
    }
    Value::Object(out)
}

fn diagonal_from_parts(m: &Map<String, Value>, what: &str) -> Result<DiagonalOperator> {
    let lambda = as_obj(get(m, "lambda", what)?, "lambda")?;
    let growth = as_obj(get(m, "growth", what)?, "growth")?;
    let growth_c = get_rat(growth, "C", "growth")?;
    let growth_alpha = get_int(growth, "alpha", "growth")?;
    let growth_alpha = u32::try_from(growth_alpha)
        .map_err(|_| doc_err("growth", "alpha must be a nonnegative integer"))?;
    let spec = if let Some(table) = lambda.get("table") {
        let table = as_obj(table, "lambda table")?;
        let mut pairs = Vec::with_capacity(table.len());
        for (key, v) in table {
            let k: i32 = key
                .trim()
                .replace('\u{2212}', "-")
                .parse()
                .map_err(|_| doc_err("lambda table", format!("bad mode key {key:?}")))?;
            let val: Rat = v
                .as_str()
                .ok_or_else(|| doc_err("lambda table", "eigenvalues must be rational strings"))?
                .parse()?;
            pairs.push((k, val));
        }
        return DiagonalOperator::from_table(&pairs, growth_c, growth_alpha);
    } else if let Some(formula) = lambda.get("formula") {
        let formula = as_obj(formula, "lambda formula")?;
        let c = get_rat(formula, "c", "lambda formula")?;
        let alpha = get_int(formula, "alpha", "lambda formula")?;
        let alpha = u32::try_from(alpha)
            .map_err(|_| doc_err("lambda formula", "alpha must be a nonnegative integer"))?;
        LambdaSpec::Formula { c, alpha }
    } else {
        return Err(doc_err("lambda", "expected a \"table\" or \"formula\" field"));
    };
    DiagonalOperator::new(spec, growth_c, growth_alpha)
}

pub fn model_from_value(v: &Value) -> Result<SymplecticModel> {
    let what = "model document";
    let m = as_obj(v, what)?;
    match get_str(m, "variant", what)? {
        "loop" => {
            let n = get_int(m, "n", what)?;
            let n = u16::try_from(n).map_err(|_| doc_err(what, "n out of range"))?;
            let c = get_rat(m, "C", what)?;
            let sigma = get_int(m, "sigma", what)?;
            let sigma =
                i8::try_from(sigma).map_err(|_| doc_err(what, "sigma must be +1 or -1"))?;
            SymplecticModel::loop_model(n, c, sigma)
        }
        "cotangent" => Ok(SymplecticModel::cotangent(diagonal_from_parts(m, what)?)),
        other => Err(doc_err(what, format!("unknown variant {other:?}"))),
    }
}

/// Accepts either a full cotangent model document or a bare
/// lambda-plus-growth object.
pub fn diagonal_from_value(v: &Value) -> Result<DiagonalOperator> {
    let what = "operator document";
    let m = as_obj(v, what)?;
    if m.contains_key("variant") {
        let model = model_from_value(v)?;
        return Ok(model.expect_cotangent()?.clone());
    }
    diagonal_from_parts(m, what)
}

pub fn convention_to_value(c: &StarConvention) -> Value {
    let mut m = Map::new();
    m.insert("prefactor".into(), Value::String(c.prefactor.to_string()));
    m.insert("bracket_sign".into(), Value::from(c.bracket_sign));
    m.insert("t1_sign".into(), Value::from(c.t1_sign));
    Value::Object(m)
}

pub fn convention_from_value(v: &Value) -> Result<StarConvention> {
    let what = "convention document";
    let m = as_obj(v, what)?;
    let prefactor = get_rat(m, "prefactor", what)?;
    let bracket_sign = i8::try_from(get_int(m, "bracket_sign", what)?)
        .map_err(|_| doc_err(what, "bracket_sign must be +1 or -1"))?;
    let t1_sign = i8::try_from(get_int(m, "t1_sign", what)?)
        .map_err(|_| doc_err(what, "t1_sign must be +1 or -1"))?;
    StarConvention::new(prefactor, bracket_sign, t1_sign)
}

pub fn deformation_to_value<S: Scalar>(
    d: &DeformationSeries<S>,
    tag: ModelTag,
    dimension: u16,
    conv: &StarConvention,
) -> Value {
    let mut m = Map::new();
    m.insert("order".into(), Value::from(d.order() as u64));
    m.insert(
        "slots".into(),
        Value::Array(
            d.slots().iter().map(|s| series_to_value(s, tag, dimension)).collect(),
        ),
    );
    m.insert("convention".into(), convention_to_value(conv));
    m.insert(
        "exact_degree".into(),
        d.exact_degree().map(Value::from).unwrap_or(Value::Null),
    );
    Value::Object(m)
}

pub fn deformation_from_value(
    v: &Value,
) -> Result<(DeformationSeries<ExactScalar>, StarConvention, ModelTag, u16)> {
    let what = "deformation document";
    let m = as_obj(v, what)?;
    let order = get_int(m, "order", what)?;
    let order = usize::try_from(order).map_err(|_| doc_err(what, "order must be nonnegative"))?;
    let conv = convention_from_value(get(m, "convention", what)?)?;
    let slots_v = get(m, "slots", what)?
        .as_array()
        .ok_or_else(|| doc_err(what, "field \"slots\" must be an array"))?;
    if slots_v.len() != order + 1 {
        return Err(doc_err(what, "slot count must be order + 1"));
    }
    let mut slots = Vec::with_capacity(slots_v.len());
    let mut shape: Option<(ModelTag, u16)> = None;
    for sv in slots_v {
        let doc = series_from_value(sv)?;
        match shape {
            None => shape = Some((doc.tag, doc.dimension)),
            Some(s) => {
                if s != (doc.tag, doc.dimension) {
                    return Err(doc_err(what, "slots disagree on model or dimension"));
                }
            }
        }
        slots.push(doc.payload.expect_exact()?);
    }
    let (tag, dimension) = shape.unwrap_or((ModelTag::Loop, 2));
    Ok((DeformationSeries::from_slots(slots), conv, tag, dimension))
}

pub fn residual_to_value(r: &ResidualReport) -> Value {
    let mut m = Map::new();
    m.insert("identity".into(), Value::String(r.identity.into()));
    m.insert(
        "max_residual_per_slot".into(),
        Value::Array(r.max_residual_per_slot.iter().map(|&x| num(x)).collect()),
    );
    m.insert("convention".into(), convention_to_value(&r.convention));
    m.insert("exact".into(), Value::Bool(r.exact));
    Value::Object(m)
}

fn norm_params_to_value(p: &NormParams) -> Value {
    let mut m = Map::new();
    m.insert("r".into(), num(p.r));
    m.insert("C".into(), num(p.c));
    m.insert("C1".into(), num(p.c1));
    Value::Object(m)
}

pub fn summability_to_value(r: &SummabilityReport) -> Value {
    let mut params = Map::new();
    params.insert("r".into(), num(r.params.r));
    params.insert("C".into(), num(r.params.c));
    params.insert("C1".into(), num(r.params.c1));
    params.insert("kmax".into(), Value::from(r.params.kmax));
    params.insert("n".into(), Value::from(r.params.n));
    params.insert("dmax".into(), Value::from(r.params.dmax));
    params.insert("tail_formula".into(), Value::String(r.params.tail_formula.into()));
    let mut m = Map::new();
    m.insert("direct".into(), num(r.direct));
    m.insert("closed_form".into(), num(r.closed_form));
    m.insert("tail_bound".into(), num(r.tail_bound));
    m.insert("params".into(), Value::Object(params));
    Value::Object(m)
}

pub fn summability_to_csv(r: &SummabilityReport) -> String {
    let mut out = String::from("direct,closed_form,tail_bound,r,C,C1,kmax,n,dmax\n");
    out.push_str(&format!(
        "{},{},{},{},{},{},{},{},{}\n",
        r.direct,
        r.closed_form,
        r.tail_bound,
        r.params.r,
        r.params.c,
        r.params.c1,
        r.params.kmax,
        r.params.n,
        r.params.dmax
    ));
    out
}

pub fn probe_to_value(r: &ProbeReport) -> Value {
    let mut m = Map::new();
    m.insert("K_hat".into(), num(r.k_hat));
    m.insert(
        "quantiles".into(),
        Value::Array(r.quantiles.iter().map(|&x| num(x)).collect()),
    );
    m.insert("seed".into(), Value::from(r.seed));
    m.insert("op".into(), Value::String(r.op.into()));
    m.insert("count".into(), Value::from(r.count as u64));
    m.insert("skipped".into(), Value::from(r.skipped as u64));
    m.insert("target".into(), norm_params_to_value(&r.target));
    m.insert("source".into(), norm_params_to_value(&r.source));
    Value::Object(m)
}

pub fn probe_to_csv(r: &ProbeReport) -> String {
    let mut out = String::from("op,K_hat,q00,q25,q50,q75,q100,count,skipped,seed\n");
    out.push_str(&format!(
        "{},{},{},{},{},{},{},{},{},{}\n",
        r.op,
        r.k_hat,
        r.quantiles[0],
        r.quantiles[1],
        r.quantiles[2],
        r.quantiles[3],
        r.quantiles[4],
        r.count,
        r.skipped,
        r.seed
    ));
    out
}

pub fn suite_to_value(r: &SuiteReport) -> Value {
    let mut m = Map::new();
    m.insert("suite".into(), Value::String(r.name.into()));
    m.insert("seed".into(), Value::from(r.seed));
    m.insert("trials".into(), Value::from(r.trials as u64));
    m.insert("passed".into(), Value::Bool(r.passed()));
    m.insert("convention".into(), convention_to_value(&r.convention));
    m.insert(
        "checks".into(),
        Value::Array(
            r.checks
                .iter()
                .map(|c| {
                    let mut line = Map::new();
                    line.insert("name".into(), Value::String(c.name.into()));
                    line.insert("passed".into(), Value::from(c.passed as u64));
                    line.insert("failed".into(), Value::from(c.failed as u64));
                    line.insert("worst_residual".into(), num(c.worst_residual));
                    Value::Object(line)
                })
                .collect(),
        ),
    );
    Value::Object(m)
}

pub fn parse_json(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| CoreError::Document(format!("invalid JSON: {e}")))
}

pub fn render_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serialization of plain values");
    s.push('\n');
    s
}
