use std::path::{Path, PathBuf};
use std::process::{Command as Process, Output};

use finsler_cli::{run, Command, Flags, Report, Scene};
use serde_json::Value;

const SCENES: [&str; 5] = [
    "counterexample",
    "minkowski",
    "schwarzschild-dsl",
    "kropina-family",
    "family-p-below-minus-one",
];

fn workspace() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn scene_path(name: &str) -> PathBuf {
    workspace().join("scenes").join(format!("{name}.json"))
}

fn validator(name: &str) -> jsonschema::Validator {
    let path = workspace().join("docs/schemas").join(name);
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

fn assert_valid(v: &jsonschema::Validator, doc: &Value, what: &str) {
    let errors: Vec<String> = v
        .iter_errors(doc)
        .map(|e| format!("{} at {}", e, e.instance_path))
        .collect();
    assert!(errors.is_empty(), "{what}: {errors:#?}");
}

fn finsler(args: &[&str], out: &Path) -> Output {
    Process::new(env!("CARGO_BIN_EXE_finsler"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn report(command: Command, name: &str, flags: &Flags) -> Report {
    let scene = Scene::from_path(&scene_path(name)).unwrap();
    run(command, &scene, flags).unwrap()
}

#[test]
fn shipped_scenes_match_the_scene_schema() {
    let v = validator("scene.schema.json");
    for name in SCENES {
        let doc: Value =
            serde_json::from_str(&std::fs::read_to_string(scene_path(name)).unwrap()).unwrap();
        assert_valid(&v, &doc, name);
    }
}

#[test]
fn reports_match_the_report_schema() {
    let v = validator("report.schema.json");
    let commands = [
        Command::Probe,
        Command::Berwald,
        Command::Obstruction,
        Command::Nonmetricity,
        Command::Report,
    ];
    for name in SCENES {
        for command in commands {
            if command == Command::Nonmetricity && name == "minkowski" {
                continue;
            }
            let r = report(command, name, &Flags::default());
            let doc: Value = serde_json::from_str(&r.to_json()).unwrap();
            assert_valid(&v, &doc, &format!("{name} {}", command.name()));
        }
    }
    for name in [
        "kropina-family",
        "family-p-below-minus-one",
        "counterexample",
    ] {
        let r = report(Command::Causal, name, &Flags::default());
        let doc: Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_valid(&v, &doc, &format!("{name} causal"));
    }
}

#[test]
fn schema_rejects_malformed_documents() {
    let scene = validator("scene.schema.json");
    let bad: Value = serde_json::json!({"lagrangian": {"catalog": {"name": "nope"}}});
    assert!(!scene.is_valid(&bad));
    let extra: Value = serde_json::json!({"lagrangian": {"dsl": {"expr": "xd0^2"}}, "colour": 1});
    assert!(!scene.is_valid(&extra));

    let rep = validator("report.schema.json");
    let mut doc: Value =
        serde_json::from_str(&report(Command::Probe, "minkowski", &Flags::default()).to_json())
            .unwrap();
    doc["samples"][0]["x"][0] = Value::String("zero".into());
    assert!(!rep.is_valid(&doc));
}

#[test]
fn reports_round_trip_byte_for_byte() {
    for name in SCENES {
        let text = report(Command::Report, name, &Flags::default()).to_json();
        let back = Report::from_json(&text).unwrap();
        assert_eq!(back.to_json(), text, "{name}");
    }
}

#[test]
fn thread_count_does_not_change_the_report() {
    let one = Flags {
        threads: Some(1),
        ..Flags::default()
    };
    let four = Flags {
        threads: Some(4),
        ..Flags::default()
    };
    for name in ["counterexample", "kropina-family"] {
        let a = report(Command::Report, name, &one).to_json();
        let b = report(Command::Report, name, &four).to_json();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn seed_changes_sampled_directions_only() {
    let with_seed = |seed| Flags {
        seed: Some(seed),
        ..Flags::default()
    };
    let a = report(Command::Berwald, "counterexample", &with_seed(1));
    let b = report(Command::Berwald, "counterexample", &with_seed(2));
    assert_ne!(a.to_json(), b.to_json());
    assert_eq!(a.geometry.is_berwald, Some(true));
    assert_eq!(b.geometry.is_berwald, Some(true));
}

#[test]
fn exit_codes_follow_the_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let code = |args: &[&str]| finsler(args, out).status.code();

    let ce = scene_path("counterexample");
    assert_eq!(code(&["report", ce.to_str().unwrap()]), Some(2));
    assert_eq!(code(&["berwald", ce.to_str().unwrap()]), Some(0));

    let mk = scene_path("minkowski");
    assert_eq!(code(&["report", mk.to_str().unwrap()]), Some(0));
    // Minkowski is not an (alpha, beta) family.
    assert_eq!(code(&["causal", mk.to_str().unwrap()]), Some(1));

    let low = scene_path("family-p-below-minus-one");
    let o = finsler(&["causal", low.to_str().unwrap()], out);
    assert_eq!(o.status.code(), Some(0));
    let r = Report::from_json(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(r.geometry.causal_viable, Some(false));
    assert!(!r.warnings.is_empty());

    assert_eq!(code(&["report", "/nonexistent/scene.json"]), Some(1));
}

#[test]
fn written_report_matches_library_output() {
    let dir = tempfile::tempdir().unwrap();
    let ce = scene_path("counterexample");
    let o = finsler(
        &["report", ce.to_str().unwrap(), "--threads", "2"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    let written = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    assert_eq!(
        written,
        report(Command::Report, "counterexample", &Flags::default()).to_json()
    );
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("report.json"));
}

#[test]
fn bad_scene_reports_a_json_pointer() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{"lagrangian": {"catalog": {"name": "minkowski4"}}, "samples": [{"x": [0, 0, 0, 0], "xdot": [1, 0, 0]}]}"#,
    )
    .unwrap();
    let o = finsler(&["probe", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let stderr = String::from_utf8(o.stderr).unwrap();
    assert!(stderr.contains("/samples/0"), "{stderr}");
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn out_dir_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("nested/out");
    let o = Process::new(env!("CARGO_BIN_EXE_finsler"))
        .args(["probe", scene_path("minkowski").to_str().unwrap()])
        .env("FINSLER_OUT_DIR", &target)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(target.join("report.json").exists());
}

#[test]
fn flags_override_scene_options() {
    let dir = tempfile::tempdir().unwrap();
    let ce = scene_path("counterexample");
    let o = finsler(
        &[
            "berwald",
            ce.to_str().unwrap(),
            "--seed",
            "7",
            "--directions",
            "5",
            "--tol-berwald",
            "1e-6",
            "--signature-convention",
            "-+++",
        ],
        dir.path(),
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let r = Report::from_json(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
        .unwrap();
    assert_eq!(r.settings.seed, 7);
    assert_eq!(r.settings.directions, 5);
    assert_eq!(r.settings.tolerances.berwald.0, 1e-6);
    assert_eq!(r.settings.signature_convention, "-+++");
}

#[test]
fn minkowski_is_flat() {
    let r = report(Command::Report, "minkowski", &Flags::default());
    for s in &r.samples {
        if let Some(local) = &s.local {
            assert!(local.ricci.iter().flatten().all(|v| v.0 == 0.0));
            assert!(local
                .chern_rund
                .iter()
                .flatten()
                .flatten()
                .all(|v| v.0 == 0.0));
        }
    }
    assert!(!r.geometry.non_metrizable);
    assert_eq!(r.exit_code, 0);
}
