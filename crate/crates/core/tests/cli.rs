use std::path::Path;
use std::process::{Command, Output};

use frogkit::io::{read_trace_csv, signal_from_json, signal_to_json};
use frogkit::{apply, AmbiguityElement, BandlimitSpec, Signal, Spectrum};
use num_complex::Complex64;
use tempfile::TempDir;

fn frogkit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_frogkit"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn three_signal_example() -> Signal {
    let i = Complex64::i();
    let mut v = vec![Complex64::new(0.0, 0.0); 11];
    v[0] = Complex64::new(1.0, 0.0);
    v[1] = i;
    v[2] = -i;
    v[9] = i;
    v[10] = -i;
    Spectrum::new(v).unwrap().idft()
}

#[test]
fn synthesize_is_deterministic_and_bandlimited() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    for name in ["a.json", "b.json"] {
        let out = frogkit(
            p,
            &[
                "synthesize",
                "--n",
                "16",
                "--b",
                "4",
                "--start",
                "3",
                "--seed",
                "7",
                "--out",
                name,
            ],
        );
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(read(p, "a.json"), read(p, "b.json"));
    let x = signal_from_json(&read(p, "a.json")).unwrap();
    let band = BandlimitSpec::new(4, 3).unwrap();
    assert!(band.conforms(&x.dft(), 1e-12 * x.dft().norm()));

    let out = frogkit(
        p,
        &["synthesize", "--n", "16", "--b", "9", "--out", "c.json"],
    );
    assert_eq!(code(&out), 2);
}

#[test]
fn trace_of_three_signal_variants_coincide() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    let x = three_signal_example();
    let band = BandlimitSpec::new(5, 9).unwrap();
    let variants = [
        x.clone(),
        apply(&AmbiguityElement::translation(3.0), &x.dft(), Some(&band))
            .unwrap()
            .idft(),
        apply(&AmbiguityElement::translation(1.5), &x.dft(), Some(&band))
            .unwrap()
            .idft(),
    ];
    let mut traces = Vec::new();
    for (i, v) in variants.iter().enumerate() {
        let sig = format!("s{i}.json");
        let tr = format!("t{i}.csv");
        std::fs::write(p.join(&sig), signal_to_json(v).unwrap()).unwrap();
        assert_eq!(
            code(&frogkit(
                p,
                &["trace", "--signal", &sig, "--l", "1", "--out", &tr]
            )),
            0
        );
        traces.push(read_trace_csv(read(p, &tr).as_bytes()).unwrap());
    }
    assert!(traces[0].relative_deviation(&traces[1]) <= 1e-10);
    assert!(traces[0].relative_deviation(&traces[2]) <= 1e-10);
}

#[test]
fn trace_of_delta_and_bad_step() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    let mut v = vec![Complex64::new(0.0, 0.0); 6];
    v[0] = Complex64::new(1.0, 0.0);
    std::fs::write(
        p.join("d.json"),
        signal_to_json(&Signal::new(v).unwrap()).unwrap(),
    )
    .unwrap();
    assert_eq!(
        code(&frogkit(
            p,
            &["trace", "--signal", "d.json", "--l", "2", "--out", "t.csv"]
        )),
        0
    );
    let t = read_trace_csv(read(p, "t.csv").as_bytes()).unwrap();
    // δ² = δ: flat unit row at m = 0, nothing at other shifts
    for k in 0..6 {
        assert!((t.get(k, 0) - 1.0).abs() < 1e-15);
        assert!(t.get(k, 1).abs() < 1e-30 && t.get(k, 2).abs() < 1e-30);
    }
    assert_ne!(
        code(&frogkit(
            p,
            &["trace", "--signal", "d.json", "--l", "4", "--out", "u.csv"]
        )),
        0
    );
    assert_eq!(
        code(&frogkit(
            p,
            &[
                "trace",
                "--signal",
                "missing.json",
                "--l",
                "1",
                "--out",
                "u.csv"
            ]
        )),
        2
    );
}

#[test]
fn synthesize_trace_recover_round_trip() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    assert_eq!(
        code(&frogkit(
            p,
            &[
                "synthesize",
                "--n",
                "16",
                "--b",
                "4",
                "--seed",
                "11",
                "--out",
                "s.json"
            ]
        )),
        0
    );
    assert_eq!(
        code(&frogkit(
            p,
            &["trace", "--signal", "s.json", "--l", "4", "--out", "t.csv"]
        )),
        0
    );
    let out = frogkit(
        p,
        &[
            "recover", "--trace", "t.csv", "--b", "4", "--l", "4", "--out", "r.json",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&read(p, "r.json")).unwrap();
    assert_eq!(report["success"], true);
    assert_eq!(report["step_residuals"].as_array().unwrap().len(), 4);

    // --l disagreeing with the trace is a usage error
    assert_eq!(
        code(&frogkit(
            p,
            &["recover", "--trace", "t.csv", "--b", "4", "--l", "2", "--out", "r.json"]
        )),
        2
    );
}

#[test]
fn r3_needs_power_spectrum() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    let synth = [
        "synthesize",
        "--n",
        "15",
        "--b",
        "5",
        "--seed",
        "2",
        "--out",
        "s.json",
        "--power-spectrum-out",
        "p.json",
    ];
    assert_eq!(code(&frogkit(p, &synth)), 0);
    assert_eq!(
        code(&frogkit(
            p,
            &["trace", "--signal", "s.json", "--l", "5", "--out", "t.csv"]
        )),
        0
    );
    assert_eq!(
        code(&frogkit(
            p,
            &["recover", "--trace", "t.csv", "--b", "5", "--out", "r.json"]
        )),
        2
    );
    let with = [
        "recover",
        "--trace",
        "t.csv",
        "--b",
        "5",
        "--power-spectrum",
        "p.json",
        "--out",
        "r.json",
    ];
    assert_eq!(code(&frogkit(p, &with)), 0);
}

#[test]
fn least_squares_mode_reports_objective() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    assert_eq!(
        code(&frogkit(
            p,
            &[
                "synthesize",
                "--n",
                "12",
                "--b",
                "6",
                "--seed",
                "4",
                "--out",
                "s.json"
            ]
        )),
        0
    );
    assert_eq!(
        code(&frogkit(
            p,
            &["trace", "--signal", "s.json", "--l", "1", "--out", "t.csv"]
        )),
        0
    );
    let x = signal_from_json(&read(p, "s.json")).unwrap();
    let init: Vec<Complex64> = x
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| v + 0.01 * if i % 2 == 0 { 1.0 } else { -1.0 })
        .collect();
    std::fs::write(
        p.join("init.json"),
        signal_to_json(&Signal::new(init).unwrap()).unwrap(),
    )
    .unwrap();
    let out = frogkit(
        p,
        &[
            "recover",
            "--trace",
            "t.csv",
            "--b",
            "6",
            "--mode",
            "ls",
            "--init",
            "init.json",
            "--out",
            "ls.json",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&read(p, "ls.json")).unwrap();
    let objective = report["final_objective"].as_f64().unwrap();
    assert!((0.0..1e-10).contains(&objective));
    assert_eq!(report["success"], true);
}

#[test]
fn experiment_csv_shape_and_determinism() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    let args = |out: &'static str| {
        [
            "experiment",
            "--n",
            "8",
            "--l-list",
            "1,2,4",
            "--sigma-list",
            "0,0.5",
            "--trials",
            "4",
            "--seed",
            "3",
            "--out",
            out,
        ]
    };
    assert_eq!(code(&frogkit(p, &args("a.csv"))), 0);
    assert_eq!(code(&frogkit(p, &args("b.csv"))), 0);
    let a = read(p, "a.csv");
    assert_eq!(a, read(p, "b.csv"));
    let lines: Vec<&str> = a.lines().collect();
    assert_eq!(lines[0], "sigma,L,trials,successes,rate");
    assert_eq!(lines.len(), 1 + 2 * 3);
    for row in &lines[1..4] {
        assert!(row.ends_with(",4,4,1.0000000000000000e0"), "{row}");
    }
    assert_eq!(
        code(&frogkit(
            p,
            &["experiment", "--n", "8", "--l-list", "3", "--out", "c.csv"]
        )),
        2
    );
}

#[test]
fn verify_reports_generators() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    assert_eq!(
        code(&frogkit(
            p,
            &[
                "synthesize",
                "--n",
                "16",
                "--b",
                "8",
                "--seed",
                "5",
                "--out",
                "s.json"
            ]
        )),
        0
    );
    let out = frogkit(
        p,
        &[
            "verify", "--signal", "s.json", "--l", "2", "--out", "v.json",
        ],
    );
    assert_eq!(code(&out), 0);
    let report: serde_json::Value = serde_json::from_str(&read(p, "v.json")).unwrap();
    assert!(report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["invariant"] == true));

    // full band: the continuous shift is not a symmetry
    let full = frogkit::rng::complex_normal_signal(16, &mut frogkit::rng::seeded(1));
    std::fs::write(p.join("f.json"), signal_to_json(&full).unwrap()).unwrap();
    let out = frogkit(
        p,
        &[
            "verify", "--signal", "f.json", "--l", "1", "--out", "w.json",
        ],
    );
    assert_eq!(code(&out), 0);
    let report: serde_json::Value = serde_json::from_str(&read(p, "w.json")).unwrap();
    let cont = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["generator"] == "continuous_shift")
        .unwrap();
    assert_eq!(cont["invariant"], false);
    assert!(String::from_utf8_lossy(&out.stdout).contains("continuous_shift  NOT invariant"));

    // reflected copy has the same trace
    let refl = apply(&AmbiguityElement::reflection(), &full.dft(), None)
        .unwrap()
        .idft();
    std::fs::write(p.join("r.json"), signal_to_json(&refl).unwrap()).unwrap();
    let out = frogkit(
        p,
        &[
            "verify",
            "--signal",
            "f.json",
            "--l",
            "1",
            "--compare",
            "r.json",
        ],
    );
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("equal traces"));
}

#[test]
fn usage_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    assert_eq!(code(&frogkit(p, &["recover", "--b", "4"])), 2);
    assert_eq!(code(&frogkit(p, &["bogus"])), 2);
    let help = frogkit(p, &["experiment", "--help"]);
    assert_eq!(code(&help), 0);
    let text = String::from_utf8_lossy(&help.stdout);
    assert!(text.contains("[default: 24]") && text.contains("[default: 1,2,4,8]"));
}
