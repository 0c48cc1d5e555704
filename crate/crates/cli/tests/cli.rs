//! End-to-end tests against the built binary.

use std::path::Path;
use std::process::{Command, Output};

fn nqac(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nqac"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = nqac(args, dir);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn write_k4(dir: &Path) -> std::path::PathBuf {
    let problem = nqac::ising::IsingProblem::antiferromagnetic_clique(4);
    let path = dir.join("k4.txt");
    std::fs::write(&path, nqac::io::write_instance(&problem)).unwrap();
    path
}

#[test]
fn encode_embed_validate_sample_decode_fit() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    write_k4(dir);

    let out = ok(
        &["encode", "--instance", "k4.txt", "--c", "2", "--gamma", "0.5", "--out", "nested.txt"],
        dir,
    );
    assert!(out.contains("8 code qubits"));

    let out = ok(
        &["embed", "--m", "8", "--seed", "3", "--rows", "4", "--cols", "4", "--out", "emb.txt"],
        dir,
    );
    assert!(out.contains("8 chains of length 3"));

    let out = ok(
        &["validate-embedding", "--embedding", "emb.txt", "--rows", "4", "--cols", "4"],
        dir,
    );
    assert!(out.contains("valid"));

    // Sample the physical problem directly via the library, then decode.
    let graph = nqac::chimera::build_chimera(4, 4, 4, &[]).unwrap();
    let nested =
        nqac::io::read_nested(&std::fs::read_to_string(dir.join("nested.txt")).unwrap()).unwrap();
    let embedding =
        nqac::io::read_embedding(&std::fs::read_to_string(dir.join("emb.txt")).unwrap()).unwrap();
    let physical = nqac::chimera::embed_problem(&nested, &graph, &embedding, 1.0).unwrap();
    std::fs::write(dir.join("phys.txt"), nqac::io::write_instance(&physical.problem)).unwrap();
    ok(
        &["sample", "--instance", "phys.txt", "--beta", "2", "--reads", "500", "--seed", "1",
          "--backend", "mcmc", "--out", "reads.txt"],
        dir,
    );
    let out = ok(
        &["decode", "--nested", "nested.txt", "--embedding", "emb.txt", "--reads", "reads.txt",
          "--rows", "4", "--cols", "4", "--out", "decoded.txt"],
        dir,
    );
    assert!(out.contains("decoded 500 reads"));

    let decoded =
        nqac::io::read_reads(&std::fs::read_to_string(dir.join("decoded.txt")).unwrap()).unwrap();
    assert_eq!(decoded.spin_len(), 4);

    let out = ok(&["fit-beta", "--instance", "k4.txt", "--reads", "decoded.txt"], dir);
    assert!(out.starts_with("beta "));
}

#[test]
fn sample_exact_then_fit_recovers_beta() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    write_k4(dir);
    ok(
        &["sample", "--instance", "k4.txt", "--beta", "1.5", "--reads", "20000", "--seed", "5",
          "--out", "reads.txt"],
        dir,
    );
    let out = ok(&["fit-beta", "--instance", "k4.txt", "--reads", "reads.txt"], dir);
    let beta: f64 = out.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!((beta - 1.5).abs() < 0.1, "fitted {beta}");
}

#[test]
fn validate_rejects_corrupt_embedding_with_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(
        &["embed", "--m", "4", "--seed", "0", "--rows", "4", "--cols", "4", "--out", "emb.txt"],
        dir,
    );
    // Reuse one qubit in two chains.
    let text = std::fs::read_to_string(dir.join("emb.txt")).unwrap();
    let mut embedding = nqac::io::read_embedding(&text).unwrap();
    embedding.chains[1] = embedding.chains[0].clone();
    std::fs::write(dir.join("bad.txt"), nqac::io::write_embedding(&embedding)).unwrap();
    let out = nqac(
        &["validate-embedding", "--embedding", "bad.txt", "--rows", "4", "--cols", "4"],
        dir,
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn embed_capacity_error_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let out = nqac(
        &["embed", "--m", "60", "--rows", "4", "--cols", "4", "--out", "emb.txt"],
        dir,
    );
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn collapse_and_power_law_from_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    // Synthetic logistic curves with an exact boost of 2.
    let mut csv = String::from("C,alpha,p_median,p25,p75\n");
    for c in [1usize, 2] {
        let mu = c as f64;
        for k in 0..12 {
            let alpha = 0.02 * 1.45f64.powi(k);
            let p = 1.0 / (1.0 + (-3.0 * ((mu * alpha).ln() + 1.5)).exp());
            csv.push_str(&format!("{c},{alpha},{p},{},{}\n", p - 0.01, p + 0.01));
        }
    }
    std::fs::write(dir.join("curves.csv"), csv).unwrap();
    let out = ok(&["collapse", "--curves", "curves.csv"], dir);
    let mu2: f64 = out
        .lines()
        .find(|l| l.starts_with("C 2"))
        .unwrap()
        .split_whitespace()
        .nth(3)
        .unwrap()
        .parse()
        .unwrap();
    assert!((mu2 - 2.0).abs() < 0.05, "mu2 {mu2}");

    let mut boosts = String::from("C,mu\n");
    for c in [1usize, 2, 3, 4] {
        boosts.push_str(&format!("{c},{}\n", (c as f64).powf(0.68)));
    }
    std::fs::write(dir.join("boosts.csv"), boosts).unwrap();
    let out = ok(&["power-law", "--boosts", "boosts.csv"], dir);
    let eta: f64 = out.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!((eta - 0.68).abs() < 1e-6);
}

#[test]
fn run_opt_exports_figures() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let config = r#"
master_seed = 7
alpha = [0.02, 0.0525, 0.138, 0.362, 0.95]
c_list = [1, 2]
embeddings = 2
reads = 150

[instance]
source = "clique"
n = 4

[device]
control_noise_sigma = 0.0
reads_per_cycle = 150
beta_phys = 2.0

[graph]
rows = 4
cols = 4
"#;
    std::fs::write(dir.join("config.toml"), config).unwrap();
    let out = ok(&["run-opt", "--config", "config.toml", "--export", "figs"], dir);
    assert!(out.contains("wrote"));
    assert!(dir.join("figs/fig1a.csv").exists());
    let fig1a = std::fs::read_to_string(dir.join("figs/fig1a.csv")).unwrap();
    assert!(fig1a.starts_with("C,alpha,p_median,p25,p75\n"));
}

#[test]
fn bad_config_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("config.toml"), "alpha = [2.0]\n").unwrap();
    let out = nqac(&["run-opt", "--config", "config.toml"], dir);
    assert_eq!(out.status.code(), Some(2));
}
