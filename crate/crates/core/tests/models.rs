use approxsym::models::{builtin_names, builtin_source, golden_check, load_builtin, Model, ModelError, Status};

#[test]
fn every_builtin_golden_record_verifies() {
    for name in builtin_names() {
        let m = load_builtin(name).unwrap();
        let r = golden_check(&m).unwrap();
        assert!(r.ok(), "{}", r.to_text());
        assert_eq!(r.passed(), r.entries.len(), "{}", r.to_text());
    }
}

#[test]
fn golden_record_counts() {
    let count = |n: &str| load_builtin(n).unwrap().golden.len();
    assert_eq!(count("oscillator-arbitraryF"), 6);
    assert_eq!(count("oscillator-quadratic"), 8);
    assert_eq!(count("oscillator-cubic-inverse"), 8);
    assert_eq!(count("coupled-system"), 6);
    let tb = load_builtin("three-body").unwrap();
    assert_eq!(tb.space().m(), 6);
    assert_eq!(tb.golden.len(), 16);
}

#[test]
fn sign_flipped_gauge_fails() {
    let src = builtin_source("oscillator-quadratic").unwrap();
    let bad = src.replacen("\"-cos(t)*u0\"", "\"cos(t)*u0\"", 1);
    assert_ne!(src, bad);
    let r = golden_check(&Model::from_json(&bad).unwrap()).unwrap();
    let xi2 = r.entries.iter().find(|e| e.label == "Xi2").unwrap();
    assert_eq!(xi2.status, Status::Fail);
    assert!(!xi2.residual_zero);
    assert!(!r.ok());
}

#[test]
fn sign_flipped_quantity_term_fails() {
    let src = builtin_source("oscillator-arbitraryF").unwrap();
    let bad = src.replacen("\"cos(t)*du0#t + sin(t)*u0\"", "\"cos(t)*du0#t - sin(t)*u0\"", 1);
    assert_ne!(src, bad);
    let r = golden_check(&Model::from_json(&bad).unwrap()).unwrap();
    let xi3 = r.entries.iter().find(|e| e.label == "Xi3").unwrap();
    assert_eq!(xi3.status, Status::Fail);
    assert!(xi3.residual_zero);
    assert_eq!(xi3.quantity_match, Some(false));
}

#[test]
fn unknown_builtin() {
    assert!(matches!(load_builtin("pendulum"), Err(ModelError::UnknownModel(_))));
}

#[test]
fn schema_errors_carry_their_path() {
    let err = Model::from_json(r#"{"schema": 1, "name": "x", "independent": ["t"], "dependent": ["u"], "order_p": "one", "lagrangian": "u"}"#)
        .unwrap_err();
    match err {
        ModelError::Schema { path, .. } => assert_eq!(path, "order_p"),
        e => panic!("{e}"),
    }
    let err = Model::from_json(r#"{"schema": 2, "name": "x", "independent": ["t"], "dependent": ["u"], "order_p": 0, "lagrangian": "u"}"#)
        .unwrap_err();
    assert!(matches!(err, ModelError::UnsupportedSchema(2)));
}

#[test]
fn concrete_function_is_substituted() {
    let m = load_builtin("oscillator-quadratic").unwrap();
    let l1 = m.lagrangian.l.get(1).to_string();
    assert!(!l1.contains('F'), "{l1}");
}
