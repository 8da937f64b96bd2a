use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use proptest::prelude::*;
use stripemat::acceptance::{case_i2, case_iv, case_v, doubly_attached_with_free};
use stripemat::report::{parse_structured, render_structured, Record};
use stripemat_core::chains3::enumerate_words;
use stripemat_core::congruence::Classifier;
use stripemat_core::transform::Budget;
use stripemat_core::BlockMatrix;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stripemat")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn fixtures_are_frozen_assemblies() {
    for (name, m) in [("worked_iv.mat", case_iv()), ("worked_v.mat", case_v()), ("worked_i2.mat", case_i2()), ("doubly_attached.mat", doubly_attached_with_free())] {
        let text = std::fs::read_to_string(fixture(name)).unwrap();
        assert_eq!(text, m.to_text(), "{name}");
        assert_eq!(BlockMatrix::parse_text(&text).unwrap(), m);
    }
}

#[test]
fn classify_worked_fixtures() {
    for (name, idx) in [("worked_iv.mat", 17), ("worked_v.mat", 19), ("worked_i2.mat", 20)] {
        let o = cli(&["classify", path(&fixture(name))]);
        assert!(o.status.success());
        let s = stdout(&o);
        assert_eq!(s.lines().count(), 1);
        assert!(s.starts_with(&format!("liststar List*({idx}) ")), "{s}");
    }
}

#[test]
fn structured_classify_round_trips() {
    let f = fixture("doubly_attached.mat");
    let o = cli(&["--structured", "classify", path(&f)]);
    assert!(o.status.success());
    let parsed = parse_structured(&stdout(&o)).unwrap();
    let m = BlockMatrix::parse_text(&std::fs::read_to_string(&f).unwrap()).unwrap();
    let mem: Vec<Record> = Classifier::new(&Budget::default()).unwrap().classify(&m).unwrap().iter().map(Record::from).collect();
    assert_eq!(parsed, mem);
    assert_eq!(parsed.len(), 2);
}

#[test]
fn congruent_on_identical_files() {
    let f = fixture("worked_v.mat");
    let o = cli(&["congruent", path(&f), path(&f)]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "congruent: true\n");
    let o = cli(&["congruent", path(&f), path(&fixture("worked_iv.mat"))]);
    assert_eq!(stdout(&o), "congruent: false\n");
}

#[test]
fn enumerate_matches_library() {
    let o = cli(&["enumerate", "--strings", "--max-len", "4", "--max-exp", "1"]);
    assert!(o.status.success());
    let want: Vec<String> = enumerate_words(4, 1).iter().map(|w| w.to_string()).collect();
    assert_eq!(stdout(&o).lines().collect::<Vec<_>>(), want);
    let o = cli(&["enumerate", "--catalog"]);
    assert_eq!(stdout(&o).lines().count(), 115);
}

#[test]
fn reports_are_deterministic() {
    let f = fixture("worked_i2.mat");
    let a = cli(&["--structured", "classify", path(&f)]);
    let b = cli(&["--structured", "classify", path(&f)]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn localize_and_decompose() {
    let f = fixture("worked_v.mat");
    let o = cli(&["localize", "--prime", "2", path(&f)]);
    assert!(o.status.success());
    let m = BlockMatrix::parse_text(&stdout(&o)).unwrap();
    assert_eq!(m.variant(), stripemat_core::Variant::Local2);
    let dir = std::env::temp_dir().join(format!("stripemat-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let local = dir.join("v2.mat");
    std::fs::write(&local, stdout(&o)).unwrap();
    let o = cli(&["--structured", "decompose", path(&local)]);
    assert!(o.status.success());
    let recs = parse_structured(&stdout(&o)).unwrap();
    // the strings vanish at 2, leaving the indecomposable center
    assert_eq!(recs.len(), 1);
    assert!(matches!(&recs[0], Record::Summand { index: 0, .. }));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn exit_codes() {
    assert_eq!(cli(&["classify", "/nonexistent.mat"]).status.code(), Some(1));
    assert_eq!(cli(&["localize", "--prime", "5", "x"]).status.code(), Some(1));
    assert_eq!(cli(&["--budget", "1", "decompose", path(&fixture("worked_iv.mat"))]).status.code(), Some(2));
    assert_eq!(cli(&["--help"]).status.code(), Some(0));
    let dir = std::env::temp_dir().join(format!("stripemat-bad-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.mat");
    std::fs::write(&bad, "variant integral\nrow S+0 1\ncol S+3 1\nentry 0 0 24\n").unwrap();
    let o = cli(&["classify", path(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("bad.mat:4:11:"), "{err}");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn selftest_reports_one_line_per_criterion() {
    let o = cli(&["--structured", "selftest", "--only", "1,3"]);
    assert!(o.status.success());
    let recs = parse_structured(&stdout(&o)).unwrap();
    assert_eq!(recs.len(), 2);
    assert!(recs.iter().all(|r| matches!(r, Record::Criterion { pass: true, .. })));
}

fn field() -> impl Strategy<Value = String> {
    "[a-z0-9 \\\\\t\n{}^_.()*-]{0,12}"
}

fn record() -> impl Strategy<Value = Record> {
    prop_oneof![
        field().prop_map(|text| Record::Matrix { text }),
        (any::<usize>(), field()).prop_map(|(index, text)| Record::Summand { index, text }),
        (field(), any::<Option<u8>>(), field(), field(), prop::collection::vec(field(), 0..3), prop::collection::vec(field(), 0..3))
            .prop_map(|(kind, index, name, params, parts2, parts3)| Record::Class { kind, index, name, params, parts2, parts3 }),
        any::<bool>().prop_map(Record::Congruent),
        field().prop_map(Record::Word),
        field().prop_map(Record::Item),
        (any::<u8>(), any::<bool>(), field(), field()).prop_map(|(id, pass, name, detail)| Record::Criterion { id, pass, name, detail }),
    ]
}

proptest! {
    #[test]
    fn structured_round_trips(recs in prop::collection::vec(record(), 0..6)) {
        prop_assert_eq!(parse_structured(&render_structured(&recs)).unwrap(), recs);
    }
}
