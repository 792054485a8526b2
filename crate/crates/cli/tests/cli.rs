use std::fs;
use std::path::Path;
use std::process::Command;

fn vaclust(args: &[&str]) -> std::process::Output {
    let out = Command::new(env!("CARGO_BIN_EXE_vaclust")).args(args).env("RUST_LOG", "warn").output().unwrap();
    assert!(out.status.success(), "vaclust {args:?} failed:\n{}", String::from_utf8_lossy(&out.stderr));
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synthetic_features(dir: &Path) {
    let cfg = dir.join("syn.toml");
    fs::write(&cfg, "k = 3\nn_per_class = 12\nframes = 16\nbins = 16\nnoise = 0.0\nseed = 4\n").unwrap();
    vaclust(&["preprocess", "--dataset", "synthetic", "--config", p(&cfg), "--out", p(&dir.join("feat"))]);
}

#[test]
fn baseline_then_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    synthetic_features(dir.path());
    let feat = dir.path().join("feat");
    assert!(feat.join("train.vacf").exists() && feat.join("test.vacf").exists());
    let rep = dir.path().join("km.json");
    let emb = dir.path().join("km.csv");
    vaclust(&["baseline", "--method", "kmeans", "--features", p(&feat), "--k", "3", "--out", p(&rep), "--embeddings", p(&emb)]);
    let out = dir.path().join("m.json");
    vaclust(&["evaluate", "--report", p(&rep), "--embeddings", p(&emb), "--out", p(&out)]);
    let m: serde_json::Value = serde_json::from_slice(&fs::read(&out).unwrap()).unwrap();
    assert_eq!(m["method"], "kmeans");
    assert_eq!(m["n"], 36);
    assert!((m["accuracy"].as_f64().unwrap() - 100.0).abs() < 1e-9);
    for key in ["nmi", "silhouette", "dbi", "chi_x1e3"] {
        assert!(m[key].is_number(), "{key} missing");
    }
}

#[test]
fn train_infer_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    synthetic_features(dir.path());
    let feat = dir.path().join("feat");
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        "[train]\nobjective = \"m2-ac\"\nepochs = 2\nbatch_size = 12\n\n[arch]\nn_clusters = 3\nconv_channels = [4, 8]\nrecurrent_hidden = 8\nlatent_dim = 4\n",
    )
    .unwrap();
    let run = dir.path().join("run");
    vaclust(&["train", "--config", p(&cfg), "--features", p(&feat), "--out", p(&run)]);
    for f in ["config.toml", "checkpoint_final.vack", "train_log.csv", "run_state.json"] {
        assert!(run.join(f).exists(), "{f} missing");
    }
    let ck = run.join("checkpoint_final.vack");
    let rep = dir.path().join("r.json");
    let emb = dir.path().join("r.csv");
    vaclust(&[
        "infer", "--checkpoint", p(&ck), "--features", p(&feat), "--window", "8", "--reset-state", "--out", p(&rep), "--embeddings", p(&emb),
    ]);
    let r: serde_json::Value = serde_json::from_slice(&fs::read(&rep).unwrap()).unwrap();
    assert_eq!(r["method"], "m2-ac");
    assert_eq!(r["rows"].as_array().unwrap().len(), 36);
    assert_eq!(r["plan"]["window_len"], 8);
    let out = vaclust(&["evaluate", "--report", p(&rep), "--embeddings", p(&emb), "--checkpoint", p(&ck)]);
    let m: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(m["params_total"].as_u64().unwrap() > m["params_encoder"].as_u64().unwrap());
}

#[test]
fn experiment_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("exp.toml");
    fs::write(
        &spec,
        "dataset = \"synthetic\"\nmethods = [\"labels\", \"kmeans\", \"gmm-em\"]\nruns = 2\nout = \"res\"\n\n[synthetic]\nn_per_class = 10\nframes = 8\nbins = 8\n",
    )
    .unwrap();
    let out = vaclust(&["experiment", "--spec", p(&spec)]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("kmeans") && text.contains("gmm-em"), "{text}");
    assert!(dir.path().join("res/results.json").exists());
    assert!(dir.path().join("res/results.txt").exists());
}

#[test]
fn bad_input_fails() {
    let dir = tempfile::tempdir().unwrap();
    let st = Command::new(env!("CARGO_BIN_EXE_vaclust"))
        .args(["preprocess", "--dataset", "tau2019", "--out", p(dir.path())])
        .output()
        .unwrap();
    assert!(!st.status.success());
    let st = Command::new(env!("CARGO_BIN_EXE_vaclust")).args(["baseline", "--method", "spectral"]).output().unwrap();
    assert!(!st.status.success());
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for e in fs::read_dir(&dir).unwrap() {
        let path = e.unwrap().path();
        if path.extension().is_some_and(|x| x == "toml") {
            if path.file_name().unwrap().to_str().unwrap().starts_with("train_") {
                vaclust_core::experiments::RunConfig::from_toml(&fs::read_to_string(&path).unwrap()).unwrap();
            } else {
                vaclust_core::experiments::ExperimentSpec::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            }
            n += 1;
        }
    }
    assert!(n >= 5);
}
