//! Document format round-trips and rejection diagnostics.

use hida_star_core::io::{
    self, deformation_to_value, model_from_value, model_to_value, parse_json, render_json,
    series_from_value, series_to_value, AnySeries, ModelTag,
};
use hida_star_core::{
    star, BasisIndex, CoreError, DiagonalOperator, ExactScalar, FockSeries, MultiIndex, Rat,
    Scalar, StarConvention, SymplecticModel,
};
use proptest::prelude::*;

fn arb_exact_series() -> impl Strategy<Value = FockSeries<ExactScalar>> {
    let coeff = ((-20i64..=20, 1i64..=6), (-20i64..=20, 1i64..=6)).prop_map(
        |((rp, rq), (ip, iq))| ExactScalar { re: Rat::new(rp, rq), im: Rat::new(ip, iq) },
    );
    let index = prop::collection::vec(((-3i32..=3), (0u8..2), (1u32..=3)), 0..=3).prop_map(
        |triples| {
            let entries: Vec<(BasisIndex, u32)> =
                triples.into_iter().map(|(k, i, m)| (BasisIndex::new(k, i), m)).collect();
            MultiIndex::new(&entries)
        },
    );
    prop::collection::vec((index, coeff), 0..=8).prop_map(FockSeries::canonicalize)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn series_documents_round_trip_and_restick(f in arb_exact_series()) {
        let v = series_to_value(&f, ModelTag::Loop, 2);
        let text = render_json(&v);
        let doc = series_from_value(&parse_json(&text).unwrap()).unwrap();
        let g = doc.payload.expect_exact().unwrap();
        prop_assert_eq!(&f, &g);
        // A second pass produces the same bytes: the writer is canonical.
        prop_assert_eq!(render_json(&series_to_value(&g, ModelTag::Loop, 2)), text);
    }
}

#[test]
fn deformation_documents_embed_series() {
    let m = SymplecticModel::default_loop();
    let conv = StarConvention::paper();
    let f = FockSeries::from_term(
        MultiIndex::new(&[(BasisIndex::new(1, 0), 1), (BasisIndex::new(1, 1), 1)]),
        ExactScalar::from_int(2),
    );
    let g = f.clone();
    let s = star(&f, &g, 2, &m, &conv).unwrap();
    let v = deformation_to_value(&s, ModelTag::Loop, 2, &conv);
    let (back, conv2, tag, dim) = io::deformation_from_value(&v).unwrap();
    assert_eq!(conv2, conv);
    assert_eq!((tag, dim), (ModelTag::Loop, 2));
    assert_eq!(back.order(), 2);
    for l in 0..=2 {
        assert_eq!(back.slot(l), s.slot(l), "slot {l} changed in round trip");
    }
}

#[test]
fn float_mode_survives_round_trip_with_exact_bits() {
    let f = hida_star_core::sample::bulk_float_series(5, 40, 6, 1, 4);
    let v = series_to_value(&f, ModelTag::Cotangent, 2);
    let text = render_json(&v);
    let doc = series_from_value(&parse_json(&text).unwrap()).unwrap();
    match doc.payload {
        AnySeries::Float(g) => assert_eq!(f, g),
        AnySeries::Exact(_) => panic!("mode tag lost"),
    }
}

#[test]
fn model_documents_round_trip_all_variants() {
    let cases = vec![
        SymplecticModel::loop_model(2, Rat::ONE, 1).unwrap(),
        SymplecticModel::loop_model(6, Rat::new(3, 7), -1).unwrap(),
        SymplecticModel::cotangent(DiagonalOperator::example()),
        SymplecticModel::cotangent(DiagonalOperator::zero()),
    ];
    for m in cases {
        let back = model_from_value(&model_to_value(&m)).unwrap();
        assert_eq!(m, back);
    }
}

#[test]
fn malformed_documents_get_specific_diagnostics() {
    let missing = r#"{"mode":"exact","model":"loop","terms":[]}"#;
    let err = series_from_value(&parse_json(missing).unwrap()).unwrap_err();
    assert!(err.to_string().contains("dimension"), "{err}");

    let bad_mode = r#"{"mode":"symbolic","model":"loop","dimension":2,"terms":[]}"#;
    let err = series_from_value(&parse_json(bad_mode).unwrap()).unwrap_err();
    assert!(err.to_string().contains("symbolic"), "{err}");

    let unsorted = r#"{"mode":"exact","model":"loop","dimension":2,
        "terms":[{"index":[[2,0,1],[1,0,1]],"re":"1","im":"0"}]}"#;
    let err = series_from_value(&parse_json(unsorted).unwrap()).unwrap_err();
    assert!(matches!(err, CoreError::NonCanonical(_)), "{err}");

    let odd = r#"{"variant":"loop","n":3,"C":"1","sigma":1}"#;
    assert!(model_from_value(&parse_json(odd).unwrap()).is_err());

    let growth = r#"{"variant":"cotangent",
        "lambda":{"table":{"1":"100"}},"growth":{"C":"1","alpha":1}}"#;
    let err = model_from_value(&parse_json(growth).unwrap()).unwrap_err();
    assert!(matches!(err, CoreError::Growth(_)), "{err}");
}

#[test]
fn unicode_minus_accepted_in_rationals() {
    let text = "{\"mode\":\"exact\",\"model\":\"loop\",\"dimension\":2,
        \"terms\":[{\"index\":[[1,0,1]],\"re\":\"\u{2212}1/2\",\"im\":\"0\"}]}";
    let doc = series_from_value(&parse_json(text).unwrap()).unwrap();
    let f = doc.payload.expect_exact().unwrap();
    let idx = MultiIndex::single(BasisIndex::new(1, 0));
    assert_eq!(f.coeff(&idx), Some(&ExactScalar::from_ratio(-1, 2)));
}
