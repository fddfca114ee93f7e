use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use voxpath::audio::{write_wav_pcm16, Signal};

fn voxpath(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_voxpath")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Harmonic tone with amplitude modulation at 4 Hz.
fn write_tone(path: &Path, f0: f64, am: f64) {
    let rate = 16000.0;
    let x = (0..(0.4 * rate) as usize)
        .map(|n| {
            let t = n as f64 / rate;
            let env = 1.0 + am * (2.0 * PI * 4.0 * t).sin();
            0.2 * env * (1..=5).map(|h| (2.0 * PI * f0 * h as f64 * t).sin() / h as f64).sum::<f64>()
        })
        .collect();
    write_wav_pcm16(path, &Signal::new(x, rate).unwrap()).unwrap();
}

/// 12 speakers per class; `sep` separates the classes, `noise` does not.
fn write_features(path: &Path) {
    let mut s = String::from("path,label,speaker,gender,noise,sep,sparse\n");
    for i in 0..24 {
        let label = if i % 2 == 0 { "healthy" } else { "pathological" };
        let gender = if i % 4 < 2 { "F" } else { "M" };
        let sep = if i % 2 == 0 { i as f64 } else { 100.0 + i as f64 };
        let noise = ((i * 7919) % 23) as f64;
        let sparse = if i < 2 { "1" } else { "" };
        s.push_str(&format!("r{i}.wav,{label},s{i},{gender},{noise},{sep},{sparse}\n"));
    }
    std::fs::write(path, s).unwrap();
}

#[test]
fn extract_writes_matrix_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    write_tone(&dir.path().join("a.wav"), 140.0, 0.0);
    write_tone(&dir.path().join("b.wav"), 190.0, 0.5);
    let manifest = dir.path().join("manifest.csv");
    std::fs::write(&manifest, "path,label,speaker,gender\na.wav,healthy,s1,F\nb.wav,pathological,s2,M\n").unwrap();
    let out = dir.path().join("features.csv");
    let text = stdout(&voxpath(&["extract", "--manifest", p(&manifest), "--out", p(&out)]));
    assert!(text.contains("extracted 2 of 2 recordings, 1404 features"), "{text}");
    let fm = voxpath::matrix::FeatureMatrix::read_csv(&out).unwrap();
    assert_eq!((fm.n_rows(), fm.n_cols()), (2, 1404));
    assert!(voxpath::pipeline::sidecar_path(&out).exists());
}

#[test]
fn select_ranks_ascending() {
    let dir = tempfile::tempdir().unwrap();
    let features = dir.path().join("f.csv");
    write_features(&features);
    let out = dir.path().join("p.csv");
    let text = stdout(&voxpath(&["select", "--features", p(&features), "--out", p(&out)]));
    assert!(text.contains("1 of 3 features pass"), "{text}");
    let mut r = csv::Reader::from_path(&out).unwrap();
    assert_eq!(r.headers().unwrap(), vec!["feature_name", "p_value"]);
    let rows: Vec<(String, f64)> = r.records().map(|x| x.unwrap()).map(|x| (x[0].to_string(), x[1].parse().unwrap())).collect();
    assert_eq!(rows[0].0, "sep");
    assert!(rows.windows(2).all(|w| w[0].1 <= w[1].1));
}

#[test]
fn experiment_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let features = dir.path().join("f.csv");
    write_features(&features);
    let out = dir.path().join("r.json");
    let args = ["experiment", "--features", p(&features), "--classifier", "knn", "--reps", "5", "--seed", "3", "--out", p(&out)];
    let text = stdout(&voxpath(&args));
    assert!(text.contains("Accuracy") && text.contains("knn"), "{text}");
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["repetitions"].as_array().unwrap().len(), 5);
    assert_eq!(report["summary"]["accuracy"]["mean"].as_f64(), Some(100.0));
    let first = std::fs::read(&out).unwrap();
    stdout(&voxpath(&args));
    assert_eq!(std::fs::read(&out).unwrap(), first);
}

#[test]
fn profiles_have_expected_headers() {
    let dir = tempfile::tempdir().unwrap();
    let wav = dir.path().join("a.wav");
    write_tone(&wav, 150.0, 0.8);
    for (cmd, header) in [("psi", "mod_freq_hz,psi"), ("xi", "band_index,xi")] {
        let out = dir.path().join(format!("{cmd}.csv"));
        stdout(&voxpath(&[cmd, "--wav", p(&wav), "--out", p(&out)]));
        let text = std::fs::read_to_string(&out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(header));
        assert!(lines.all(|l| l.split(',').all(|c| c.parse::<f64>().is_ok_and(f64::is_finite))));
    }
}

#[test]
fn rule30_and_bad_thread_count() {
    assert_eq!(stdout(&voxpath(&["rule30", "--n", "226"])).trim(), "13.27");
    assert!(!voxpath(&["rule30", "--n", "0"]).status.success());
    let out = Command::new(env!("CARGO_BIN_EXE_voxpath"))
        .args(["rule30", "--n", "10"])
        .env("VOXPATH_THREADS", "0")
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("VOXPATH_THREADS"));
}
