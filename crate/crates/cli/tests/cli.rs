use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

use sisni_cli::args::{Command as Sub, FitArgs, LossArgs};
use sisni_cli::doc::{CommandEcho, Outputs};
use sisni_cli::ResultDoc;
use sisni_core::circuit::{engine_report, parse_circuit};
use sisni_core::elements::gain_from_qng;
use sisni_core::fit::FitResult;
use sisni_core::interferometer::{SisniParams, SqMziParams, Topology};
use sisni_core::noise::{advantage_vs_qng, PaNoise, SisniLosses};

const OPERATING_POINT: [&str; 14] = [
    "--qng1-db", "4", "--qng2-db", "6", "--l-is", "0.16", "--l-ii", "0.10", "--l-e", "0.15", "--alpha2", "36",
    "--dphi", "1e-3",
];

fn sisni(args: &[&str]) -> Output {
    sisni_with(args, None, &[])
}

fn sisni_with(args: &[&str], stdin: Option<&str>, env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sisni"));
    cmd.args(args).env_remove("SISNI_FORMAT");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped());
    let mut child = cmd.spawn().expect("binary runs");
    if let Some(text) = stdin {
        child.stdin.take().unwrap().write_all(text.as_bytes()).unwrap();
    }
    drop(child.stdin.take());
    child.wait_with_output().unwrap()
}

fn ok_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    dir.join(format!("{}-{name}", std::process::id()))
}

fn operating_point() -> Topology {
    Topology::Sisni(SisniParams {
        pa1: gain_from_qng(4.0).unwrap(),
        pa2: gain_from_qng(6.0).unwrap(),
        loss_signal: 0.16.try_into().unwrap(),
        loss_idler: 0.10.try_into().unwrap(),
        loss_external: 0.15.try_into().unwrap(),
        alpha: 6.0,
        ..SisniParams::default()
    })
}

#[test]
fn builder_and_document_agree() {
    let topologies = [
        operating_point(),
        Topology::SqMzi(SqMziParams {
            squeezer: gain_from_qng(6.0).unwrap(),
            internal: 0.1.try_into().unwrap(),
            external: 0.3.try_into().unwrap(),
            alpha: 6.0,
            ..SqMziParams::default()
        }),
    ];
    for topo in topologies {
        let (spec, _) = topo.build().unwrap();
        let built = engine_report(&spec, 1e-3).unwrap();
        let parsed = engine_report(&parse_circuit(&spec.to_json()).unwrap(), 1e-3).unwrap();
        for (a, b) in [
            (built.mean_x2, parsed.mean_x2),
            (built.var_x2, parsed.var_x2),
            (built.snr, parsed.snr),
            (built.phase_variance, parsed.phase_variance),
        ] {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} vs {b}");
        }
    }
}

#[test]
fn topology_flags_and_circuit_file_agree() {
    let mut args = vec!["snr", "--topology", "sisni"];
    args.extend(OPERATING_POINT);
    let from_flags = ok_json(&sisni(&args));

    let path = scratch("sisni.json");
    std::fs::write(&path, operating_point().build().unwrap().0.to_json()).unwrap();
    let from_file = ok_json(&sisni(&["snr", "--circuit", path.to_str().unwrap(), "--dphi", "1e-3"]));
    let text = std::fs::read_to_string(&path).unwrap();
    let from_stdin = ok_json(&sisni_with(&["snr", "--circuit", "-", "--dphi", "1e-3"], Some(&text), &[]));

    for key in ["mean_x2", "var_x2", "snr", "phase_variance"] {
        let a = from_flags["outputs"]["engine"][key].as_f64().unwrap();
        let b = from_file["outputs"]["engine"][key].as_f64().unwrap();
        assert!((a - b).abs() <= 1e-12 * a.abs(), "{key}: {a} vs {b}");
        assert_eq!(from_file["outputs"]["engine"][key], from_stdin["outputs"]["engine"][key]);
    }
    assert_eq!(from_file["provenance"], from_stdin["provenance"]);
}

#[test]
fn snr_matches_closed_form() {
    let mut args = vec!["snr", "--topology", "sisni"];
    args.extend(OPERATING_POINT);
    let doc = ok_json(&sisni(&args));
    let out = &doc["outputs"];
    assert_eq!(out["kind"], "report");
    let engine = out["engine"]["snr"].as_f64().unwrap();
    let closed = operating_point().snr_closed(1e-3);
    assert!((engine / closed - 1.0).abs() < 1e-6, "{engine} vs {closed}");
    let pv = out["engine"]["phase_variance"].as_f64().unwrap();
    let pv_closed = out["closed"]["phase_variance"].as_f64().unwrap();
    assert!((pv / pv_closed - 1.0).abs() < 1e-6);
    assert!(out["snr_gain_db"].as_f64().unwrap() > 0.0);
    assert_eq!(doc["schema_version"], "sisni-result/1");
    assert_eq!(doc["provenance"]["param_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn sweep_writes_the_full_plane() {
    let path = scratch("plane.csv");
    let out = sisni(&[
        "sweep", "--topology", "sq-mzi", "--internal", "0:0.9:91", "--external", "0:0.9:91", "--qng-db", "6",
        "--format", "csv", "-o", path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.split_terminator("\r\n").collect();
    assert_eq!(lines[0], "internal_loss,external_loss,advantage_db");
    assert_eq!(lines.len(), 1 + 91 * 91);
    assert!(lines[1].starts_with("0,0,"));
    assert!(lines[92].starts_with("0.01,0,"));
    assert!(lines.last().unwrap().starts_with("0.9,0.9,"));
}

#[test]
fn nested_sweep_is_flat_without_internal_loss() {
    let out = sisni(&[
        "sweep", "--topology", "sisni", "--internal", "0:0.9:10", "--external", "0:0.9:91", "--qng-db", "6",
    ]);
    let doc = ok_json(&out);
    let values: Vec<f64> = doc["outputs"]["values"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(values.len(), 910);
    let first = &values[..91];
    for v in first {
        assert!((v - first[0]).abs() < 1e-9, "{v} vs {}", first[0]);
    }
    // with internal loss the external loss matters again
    let last = &values[9 * 91..];
    assert!((last[0] - last[90]).abs() > 1e-3);
}

fn write_fit_data(path: &PathBuf) {
    let losses = SisniLosses::new(0.16, 0.10, 0.15).unwrap();
    let noise1 = PaNoise { rho: 5e-4, epsilon2: 2.0 };
    let noise2 = PaNoise { rho: 4e-4, epsilon2: 20.0 };
    let mut text = String::from("qng1_db,qng2_db,advantage_db\n");
    for qng1 in [3.0, 5.0] {
        for p in advantage_vs_qng(qng1, &[2.0, 4.0, 6.0, 8.0], &losses, &noise1, &noise2).unwrap() {
            text.push_str(&format!("{qng1},{},{}\n", p.qng2_db, p.advantage_db));
        }
    }
    std::fs::write(path, text).unwrap();
}

#[test]
fn fit_is_byte_identical_for_a_seed() {
    let data = scratch("measured.csv");
    write_fit_data(&data);
    let args = [
        "fit", "--data", data.to_str().unwrap(), "--seed", "7", "--restarts", "2", "--l-is", "0.16", "--l-ii", "0.10",
        "--l-e", "0.15",
    ];
    let a = sisni(&args);
    let b = sisni(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);

    let doc: ResultDoc = serde_json::from_slice(&a.stdout).unwrap();
    let Outputs::Fit(FitResult { residual_rms, .. }) = doc.outputs else {
        panic!("fit output expected");
    };
    assert!(residual_rms < 0.05, "{residual_rms}");
    assert_eq!(doc.command.data.as_ref().map(Vec::len), Some(8));
}

#[test]
fn result_documents_round_trip() {
    let doc = ResultDoc::new(
        CommandEcho {
            args: Sub::Fit(FitArgs {
                data: "x.csv".into(),
                seed: 3,
                restarts: 1,
                max_iterations: 10,
                losses: LossArgs::default(),
            }),
            circuit: None,
            data: None,
        },
        Outputs::Fit(FitResult {
            rho1: 1.0 / 3.0,
            rho2: 1e-300,
            eps1_sq: 2.0_f64.sqrt(),
            eps2_sq: 208.0,
            residual_rms: 0.1 + 0.2,
            iterations: 12,
            converged: true,
        }),
    );
    let back: ResultDoc = serde_json::from_str(&doc.to_json()).unwrap();
    assert_eq!(back, doc);

    for args in [
        vec!["simulate", "--topology", "mzi", "--alpha2", "4", "--l-e", "0.2"],
        vec!["slope", "--topology", "sq-mzi", "--theta", "0:3:7"],
        vec!["wigner", "--topology", "sisni", "--phis", "3.04:3.24:3", "--external", "0:0.9:2", "--step", "0.2"],
        vec!["advantage-curve", "--qng1-db", "4", "--qng2", "2:8:4", "--rho2", "1e-3", "--eps2-sq", "5"],
    ] {
        let out = sisni(&args);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        let doc: ResultDoc = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(serde_json::from_str::<ResultDoc>(&doc.to_json()).unwrap(), doc);
        assert_eq!(doc.to_json().as_bytes(), &out.stdout[..]);
    }
}

#[test]
fn wigner_slices_are_normalized() {
    let doc = ok_json(&sisni(&[
        "wigner", "--topology", "sisni", "--qng-db", "6", "--alpha2", "4", "--external", "0:0.5:2", "--step", "0.1",
    ]));
    let grid: sisni_core::analysis::WignerGrid = serde_json::from_value(doc["outputs"]["grid"].clone()).unwrap();
    for slice in doc["outputs"]["slices"].as_array().unwrap() {
        let density: Vec<f64> = serde_json::from_value(slice["density"].clone()).unwrap();
        assert!((grid.integrate(&density) - 1.0).abs() < 1e-6);
    }
}

#[test]
fn environment_sets_the_default_format() {
    let args = ["slope", "--topology", "mzi", "--theta", "0:1.5707963267948966:2", "--alpha2", "9"];
    let csv = sisni_with(&args, None, &[("SISNI_FORMAT", "csv")]);
    assert!(csv.status.success());
    let text = String::from_utf8(csv.stdout).unwrap();
    assert!(text.starts_with("theta,slope\r\n0,"), "{text}");
    let json = sisni_with(&args, None, &[("SISNI_FORMAT", "json")]);
    assert!(json.stdout.starts_with(b"{"));
    let flag_wins = sisni_with(&[&args[..], &["--format", "json"]].concat(), None, &[("SISNI_FORMAT", "csv")]);
    assert!(flag_wins.stdout.starts_with(b"{"));
}

fn error_json(out: &Output) -> Value {
    assert!(!out.status.success());
    assert!(out.stdout.is_empty());
    serde_json::from_slice(&out.stderr).expect("stderr is a JSON error document")
}

#[test]
fn semantic_errors_name_the_element() {
    let doc = r#"{"schema":"gicirc/1","n_modes":1,"inputs":[{"type":"vacuum"}],
        "elements":[{"type":"loss","mode":0,"L":1.5}],"detect":{"mode":0}}"#;
    let err = error_json(&sisni_with(&["simulate", "--circuit", "-"], Some(doc), &[]));
    assert_eq!(err["error"]["kind"], "element");
    assert_eq!(err["error"]["message"], "L outside [0,1] at element 0");
}

#[test]
fn minimal_document_simulates_vacuum() {
    let doc = r#"{"schema":"gicirc/1","n_modes":1,"inputs":[{"type":"vacuum"}],"detect":{"mode":0}}"#;
    let out = ok_json(&sisni_with(&["simulate", "--circuit", "-"], Some(doc), &[]));
    assert_eq!(out["outputs"]["detected"]["variance"].as_f64(), Some(1.0));
}

#[test]
fn usage_errors_are_machine_readable() {
    let out = sisni(&["snr", "--topology", "mzi", "--circuit", "c.json"]);
    assert_eq!(out.status.code(), Some(2));
    let err = error_json(&out);
    assert_eq!(err["error"]["kind"], "usage");
    assert!(err["error"]["message"].as_str().unwrap().contains("cannot be used with"));

    let err = error_json(&sisni(&["snr", "--topology", "mzi", "--qng-db", "3"]));
    assert_eq!(err["error"]["message"], "--qng-db does not apply to --topology mzi");

    let err = error_json(&sisni(&["sweep", "--topology", "sisni", "--internal", "0:1:0", "--external", "0:1:2"]));
    assert!(err["error"]["message"].as_str().unwrap().contains("count"));

    let err = error_json(&sisni(&["snr", "--circuit", "/nonexistent/c.json"]));
    assert_eq!(err["error"]["kind"], "io");

    let err = error_json(&sisni(&["snr", "--topology", "sisni", "--l-e", "1.5"]));
    assert_eq!(err["error"]["kind"], "range");
    assert!(err["error"]["message"].as_str().unwrap().contains("1.5"));
}
