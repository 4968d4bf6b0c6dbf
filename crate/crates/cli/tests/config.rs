use lorentz_lab::config::Expectation;
use lorentz_lab::{LabError, RunConfig, Suite};

const MINIMAL: &str = r#"
[family]
kind = "warped_product"
warp = { kind = "cosh" }
fiber = { kind = "sphere", dim = 2 }
[certificate]
t0 = 1.0
"#;

#[test]
fn defaults_fill_unset_sections() {
    let cfg = RunConfig::from_toml(MINIMAL).unwrap();
    assert_eq!(cfg.seed, 0);
    assert_eq!(cfg.certificate.c, None);
    assert_eq!(cfg.certificate.horizon, 10.0);
    assert_eq!(cfg.lemma21.count, 1000);
    assert_eq!(cfg.cor24.t, 1.5);
    assert_eq!(cfg.hypothesis.expect, Expectation::Certified);
    assert_eq!(cfg.divergence.resolution, 10_000);
}

#[test]
fn unknown_keys_are_rejected_everywhere() {
    for extra in ["colour = 1", "[growth]\nT_value = [1.0]", "[certificate]\nt1 = 2.0"] {
        let text = if extra.starts_with("[certificate]") {
            MINIMAL.replace("t0 = 1.0", "t0 = 1.0\nt1 = 2.0")
        } else if extra.starts_with('[') {
            format!("{MINIMAL}\n{extra}\n")
        } else {
            format!("{extra}\n{MINIMAL}")
        };
        assert!(matches!(RunConfig::from_toml(&text), Err(LabError::Config(_))), "{extra}");
    }
}

#[test]
fn invalid_values_are_config_errors() {
    let cases = [
        MINIMAL.replace("t0 = 1.0", "t0 = -1.0"),
        MINIMAL.replace("t0 = 1.0", "t0 = 1.0\nc = 0.0"),
        MINIMAL.replace("dim = 2", "dim = 7"),
        format!("suites = [\"lemma21\", \"nope\"]\n{MINIMAL}"),
        format!("jobs = 0\n{MINIMAL}"),
        format!("{MINIMAL}\n[tolerances]\nrtol = -1.0\n"),
    ];
    for text in &cases {
        let err = RunConfig::from_toml(text).unwrap_err();
        assert_eq!(err.exit_code(), 3, "{text}: {err}");
    }
}

#[test]
fn digest_tracks_resolved_config() {
    let a = RunConfig::from_toml(MINIMAL).unwrap();
    let b = RunConfig::from_toml(&format!("seed = 0\n{MINIMAL}\n[lemma21]\ncount = 1000\n")).unwrap();
    assert_eq!(a.digest(), b.digest());
    assert_eq!(a.digest().len(), 64);
    let c = RunConfig::from_toml(&format!("seed = 1\n{MINIMAL}")).unwrap();
    assert_ne!(a.digest(), c.digest());
}

#[test]
fn suite_names_round_trip() {
    for s in Suite::ALL {
        assert_eq!(Suite::parse(s.name()).unwrap(), s);
    }
    assert_eq!(Suite::parse("lemma 21").unwrap_err().exit_code(), 2);
}

#[test]
fn shipped_configs_load() {
    let dir = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "toml") {
            RunConfig::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            seen += 1;
        }
    }
    assert!(seen >= 4);
}
