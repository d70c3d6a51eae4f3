use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use matman::embed::write_checkpoint;
use matman::embed::EmbeddingSet;
use matman::manifolds::ManifoldSpec;
use matman::Matrix;
use serde_json::Value;

fn matman(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_matman"))
        .args(args)
        .env_remove("MM_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let o = matman(args);
    assert!(
        o.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path)
        .unwrap()
        .records()
        .map(|r| r.unwrap())
        .collect()
}

fn preprocess_path3(dir: &Path) -> std::path::PathBuf {
    let edges = dir.join("p3.txt");
    fs::write(&edges, "a b\nb c\n").unwrap();
    let cache = dir.join("cache");
    ok(&["preprocess", p(&edges), "-o", p(&cache)]);
    cache
}

fn config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("exp.toml");
    fs::write(&path, format!("cache = \"cache\"\nout = \"runs\"\n{body}")).unwrap();
    path
}

fn line_embedding(cache: &Path, name: &str, xs: &[f64]) {
    let dir = cache.parent().unwrap().join("runs/cells");
    fs::create_dir_all(&dir).unwrap();
    let spec: ManifoldSpec = "euclidean:1".parse().unwrap();
    let pts = xs.iter().map(|&x| Matrix::column(&[x])).collect();
    let emb = EmbeddingSet::new(&spec, pts, 1.0).unwrap();
    write_checkpoint(dir.join(format!("{name}.mmemb")), &emb).unwrap();
}

#[test]
fn preprocess_path_graph() {
    let t = tempfile::tempdir().unwrap();
    let cache = preprocess_path3(t.path());
    let meta = json(&cache.join("meta.json"));
    assert_eq!(meta["m"], 3);
    assert_eq!(meta["scale"], 2.0);
    assert_eq!(meta["diameter"], 2.0);
    assert_eq!(meta["dropped_nodes"], 0);
    assert!(cache.join("distances.mmdm").exists());

    let edges = t.path().join("p3.txt");
    let again = ok(&["preprocess", p(&edges), "-o", p(&cache)]);
    assert!(again.contains("skipped"), "{again}");
    let forced = ok(&["preprocess", p(&edges), "-o", p(&cache), "--force"]);
    assert!(!forced.contains("skipped"));
}

#[test]
fn preprocess_records_dropped_nodes() {
    let t = tempfile::tempdir().unwrap();
    let edges = t.path().join("g.txt");
    fs::write(&edges, "1 2\n2 3\n3 4\n8 9\n").unwrap();
    let out = t.path().join("c");
    ok(&["preprocess", p(&edges), "-o", p(&out)]);
    let meta = json(&out.join("meta.json"));
    assert_eq!(meta["m"], 4);
    assert_eq!(meta["dropped_nodes"], 2);
}

#[test]
fn embed_runs_every_cell_and_resumes() {
    let t = tempfile::tempdir().unwrap();
    preprocess_path3(t.path());
    let cfg = config(
        t.path(),
        r#"manifolds = ["euclidean:2", "sphere:2"]
losses = ["stress", "rsne:0.5"]
seeds = [0, 1]
max_epochs = 3
"#,
    );
    let out = ok(&["embed", p(&cfg)]);
    assert!(out.starts_with("24 cells: 24 trained, 0 skipped, 0 failed"), "{out}");
    let cells = t.path().join("runs/cells");
    let ckpts: Vec<_> = fs::read_dir(&cells)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "mmemb"))
        .collect();
    assert_eq!(ckpts.len(), 24);
    assert_eq!(csv_rows(&t.path().join("runs/summary.csv")).len(), 24);

    // an interrupted run leaves some cells without checkpoints
    let victim = cells.join("sphere-2__rsne-0.5__rsgd-scale__s1.mmemb");
    assert!(victim.exists());
    fs::remove_file(&victim).unwrap();
    let before = fs::read(cells.join("euclidean-2__stress__radam__s0.mmemb")).unwrap();
    let out = ok(&["embed", p(&cfg)]);
    assert!(out.starts_with("24 cells: 1 trained, 23 skipped, 0 failed"), "{out}");
    assert!(victim.exists());
    let after = fs::read(cells.join("euclidean-2__stress__radam__s0.mmemb")).unwrap();
    assert_eq!(before, after);

    let out = ok(&["embed", p(&cfg), "--force"]);
    assert!(out.starts_with("24 cells: 24 trained"), "{out}");
    assert_eq!(fs::read(cells.join("euclidean-2__stress__radam__s0.mmemb")).unwrap(), before);
}

#[test]
fn single_cell_trains_down() {
    let t = tempfile::tempdir().unwrap();
    preprocess_path3(t.path());
    let cfg = config(
        t.path(),
        r#"manifolds = ["euclidean:2"]
losses = ["stress"]
settings = ["radam"]
learning_rate = 0.05
max_epochs = 200
"#,
    );
    ok(&["embed", p(&cfg)]);
    let hist = csv_rows(&t.path().join("runs/cells/euclidean-2__stress__radam__s0.history.csv"));
    let loss: Vec<f64> = hist.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(loss.len() > 10);
    assert!(loss.last().unwrap() < &(0.1 * loss[0]), "{loss:?}");
    let rec = json(&t.path().join("runs/cells/euclidean-2__stress__radam__s0.json"));
    assert_eq!(rec["status"], "trained");
}

#[test]
fn failed_cells_are_recorded_and_the_run_continues() {
    let t = tempfile::tempdir().unwrap();
    let m = t.path().join("d.txt");
    fs::write(&m, "0 1 2\n1 0 1\n2 1 0\n").unwrap();
    ok(&["preprocess", p(&m), "-o", p(&t.path().join("cache")), "--dissimilarity"]);
    // the neighborhood loss needs adjacency, which a dissimilarity input lacks
    let cfg = config(
        t.path(),
        r#"manifolds = ["euclidean:2"]
losses = ["stress", "neighborhood"]
settings = ["radam"]
max_epochs = 2
"#,
    );
    let out = ok(&["embed", p(&cfg)]);
    assert!(out.starts_with("2 cells: 1 trained, 0 skipped, 1 failed"), "{out}");
    let rows = csv_rows(&t.path().join("runs/summary.csv"));
    let failed: Vec<_> = rows.iter().filter(|r| &r[5] == "failed").collect();
    assert_eq!(failed.len(), 1);
    assert!(!failed[0][8].is_empty());
}

#[test]
fn eval_scores_an_exact_embedding() {
    let t = tempfile::tempdir().unwrap();
    let cache = preprocess_path3(t.path());
    let cfg = config(
        t.path(),
        r#"manifolds = ["euclidean:1"]
losses = ["stress"]
settings = ["radam"]
"#,
    );
    line_embedding(&cache, "euclidean-1__stress__radam__s0", &[0.0, 1.0, 2.0]);
    ok(&["eval", p(&cfg)]);
    let rows = csv_rows(&t.path().join("runs/results.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][5], "100");
    assert_eq!(&rows[0][6], "100");
    assert_eq!(&rows[0][8], "0");
    assert_eq!(&rows[0][9], "ok");
    let report = json(&t.path().join("runs/eval/euclidean-1__stress__radam__s0.metrics.json"));
    assert_eq!(report["avg_distortion"], 0.0);
    assert!(t.path().join("runs/eval/euclidean-1__stress__radam__s0.f1.csv").exists());
}

#[test]
fn eval_takes_independent_extrema() {
    let t = tempfile::tempdir().unwrap();
    let edges = t.path().join("p4.txt");
    fs::write(&edges, "0 1\n1 2\n2 3\n").unwrap();
    let cache = t.path().join("cache");
    ok(&["preprocess", p(&edges), "-o", p(&cache)]);
    let cfg = config(
        t.path(),
        r#"manifolds = ["euclidean:1"]
losses = ["stress"]
settings = ["radam"]
seeds = [0, 1, 2]
"#,
    );
    // seed 0 ranks perfectly but distorts, seed 1 swaps the last two nodes
    // but is nearly isometric, seed 2 was never trained
    line_embedding(&cache, "euclidean-1__stress__radam__s0", &[0.0, 1.0, 2.0, 10.0]);
    line_embedding(&cache, "euclidean-1__stress__radam__s1", &[0.0, 1.0, 2.05, 1.95]);
    ok(&["eval", p(&cfg)]);
    let rows = csv_rows(&t.path().join("runs/results.csv"));
    assert_eq!(rows.len(), 3);
    assert_eq!(&rows[2][9], "missing");
    let f1: Vec<f64> = rows[..2].iter().map(|r| r[5].parse().unwrap()).collect();
    let ad: Vec<f64> = rows[..2].iter().map(|r| r[8].parse().unwrap()).collect();
    let best = csv_rows(&t.path().join("runs/best.csv"));
    assert_eq!(best.len(), 1);
    assert_eq!(&best[0][0], "euclidean:1");
    assert_eq!(best[0][1].parse::<f64>().unwrap(), f1[0].max(f1[1]));
    assert_eq!(best[0][3].parse::<f64>().unwrap(), ad[0].min(ad[1]));
    assert!(f1[0] > f1[1] && ad[1] < ad[0], "{f1:?} {ad:?}");
}

#[test]
fn eval_rejects_checkpoints_of_another_graph() {
    let t = tempfile::tempdir().unwrap();
    let cache = preprocess_path3(t.path());
    let cfg = config(t.path(), "manifolds = [\"euclidean:1\"]\nlosses = [\"stress\"]\nsettings = [\"radam\"]\n");
    line_embedding(&cache, "euclidean-1__stress__radam__s0", &[0.0, 1.0, 2.0, 3.0]);
    let o = matman(&["eval", p(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("4 points"));
}

#[test]
fn dissimilarity_input_has_no_ranking_metrics() {
    let t = tempfile::tempdir().unwrap();
    let m = t.path().join("d.txt");
    fs::write(&m, "0 1 2\n1 0 1\n2 1 0\n").unwrap();
    let cache = t.path().join("cache");
    ok(&["preprocess", p(&m), "-o", p(&cache), "--dissimilarity"]);
    let meta = json(&cache.join("meta.json"));
    assert_eq!(meta["has_graph"], false);
    let cfg = config(t.path(), "manifolds = [\"euclidean:1\"]\nlosses = [\"stress\"]\nsettings = [\"radam\"]\n");
    line_embedding(&cache, "euclidean-1__stress__radam__s0", &[0.0, 1.0, 2.0]);
    ok(&["eval", p(&cfg)]);
    let rows = csv_rows(&t.path().join("runs/results.csv"));
    assert_eq!(&rows[0][5], "NA");
    assert_eq!(&rows[0][6], "NA");
    assert_eq!(&rows[0][8], "0");
}

#[test]
fn analyze_graph_and_checkpoint() {
    let t = tempfile::tempdir().unwrap();
    let tree = t.path().join("tree.txt");
    fs::write(&tree, "0 1\n0 2\n1 3\n1 4\n2 5\n2 6\n").unwrap();
    let out = t.path().join("tree");
    ok(&["analyze", "graph", p(&tree), "-o", p(&out), "--sectional", "50"]);
    let s = json(&out.join("summary.json"));
    assert_eq!(s["delta_max"], 0.0);
    assert_eq!(s["delta_exhaustive"], true);
    assert_eq!(csv_rows(&out.join("ricci_edges.csv")).len(), 6);
    assert_eq!(csv_rows(&out.join("sectional.csv")).len(), 50);

    let spec: ManifoldSpec = "euclidean:2".parse().unwrap();
    let pts = (0..12)
        .map(|i| {
            let a = i as f64;
            Matrix::column(&[a.cos() * a, (1.3 * a).sin()])
        })
        .collect();
    let ckpt = t.path().join("flat.mmemb");
    write_checkpoint(&ckpt, &EmbeddingSet::new(&spec, pts, 1.0).unwrap()).unwrap();
    let out = t.path().join("flat");
    ok(&["analyze", "checkpoint", p(&ckpt), "-o", p(&out), "--triangles", "500"]);
    let s = json(&out.join("angle_summary.json"));
    assert_eq!(s["triangles"], 500);
    let q = &s["quartiles"];
    for k in ["min", "median", "max"] {
        assert!(q[k].as_f64().unwrap().abs() < 1e-8, "{q}");
    }
    let hist = csv_rows(&out.join("angle_hist.csv"));
    let total: u64 = hist.iter().map(|r| r[2].parse::<u64>().unwrap()).sum();
    assert_eq!(total, 500);
}

#[test]
fn sample_sweep_is_reproducible() {
    let t = tempfile::tempdir().unwrap();
    let a = t.path().join("a");
    let b = t.path().join("b");
    for out in [&a, &b] {
        ok(&["sample", "sphere:2", "-o", p(out), "-n", "200", "--sectional", "20", "--angles", "100"]);
    }
    let sa = fs::read(a.join("sweep.csv")).unwrap();
    assert_eq!(sa, fs::read(b.join("sweep.csv")).unwrap());
    assert_eq!(
        fs::read(a.join("angle_hist.csv")).unwrap(),
        fs::read(b.join("angle_hist.csv")).unwrap()
    );
    let rows = csv_rows(&a.join("sweep.csv"));
    assert_eq!(rows.len(), 20);
    let last_median: f64 = rows[19][2].parse().unwrap();
    assert_eq!(last_median, 199.0);

    let o = matman(&["sample", "sphere:2", "-o", p(&a), "--method", "exp-ball"]);
    assert_eq!(o.status.code(), Some(1));
    ok(&["sample", "lorentz:2", "-o", p(&a), "-n", "50", "--method", "exp-ball", "--radius", "2"]);
}

#[test]
fn exit_codes() {
    let t = tempfile::tempdir().unwrap();
    assert_eq!(matman(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(matman(&["--help"]).status.code(), Some(0));
    let missing = t.path().join("nope.txt");
    assert_eq!(
        matman(&["preprocess", p(&missing), "-o", p(&t.path().join("x"))]).status.code(),
        Some(2)
    );
    let threads = Command::new(env!("CARGO_BIN_EXE_matman"))
        .args(["sample", "sphere:2", "-o", p(t.path())])
        .env("MM_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(threads.status.code(), Some(1));

    let cfg = config(t.path(), "manifolds = [\"euclidean:1\"]\nlosses = [\"stress\"]\nseed = 3\n");
    assert_eq!(matman(&["embed", p(&cfg)]).status.code(), Some(1));

    // every triangle of a collapsed embedding is degenerate
    let spec: ManifoldSpec = "euclidean:2".parse().unwrap();
    let pts = vec![Matrix::zeros(2, 1); 5];
    let ckpt = t.path().join("collapsed.mmemb");
    write_checkpoint(&ckpt, &EmbeddingSet::new(&spec, pts, 1.0).unwrap()).unwrap();
    let o = matman(&["analyze", "checkpoint", p(&ckpt), "-o", p(&t.path().join("y"))]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn hyperbolic_tree_embedding_has_thin_triangles() {
    let t = tempfile::tempdir().unwrap();
    // balanced tree, branching 3, height 4
    let mut edges = String::new();
    let mut next = 1;
    let mut layer = vec![0];
    for _ in 0..4 {
        let mut children = Vec::new();
        for &u in &layer {
            for _ in 0..3 {
                edges.push_str(&format!("{u} {next}\n"));
                children.push(next);
                next += 1;
            }
        }
        layer = children;
    }
    let tree = t.path().join("tree.txt");
    fs::write(&tree, edges).unwrap();
    ok(&["preprocess", p(&tree), "-o", p(&t.path().join("cache"))]);
    let cfg = config(
        t.path(),
        "manifolds = [\"lorentz:6\"]\nlosses = [\"distortion\"]\nsettings = [\"radam+scale\"]\n\
         learning_rate = 0.05\nmax_epochs = 600\n",
    );
    ok(&["embed", p(&cfg)]);
    let ckpt = t.path().join("runs/cells/lorentz-6__distortion__radam-scale__s0.mmemb");
    let out = t.path().join("angles");
    ok(&["analyze", "checkpoint", p(&ckpt), "-o", p(&out), "--triangles", "5000"]);
    let median = json(&out.join("angle_summary.json"))["quartiles"]["median"].as_f64().unwrap();
    assert!(median < -0.2, "median normalized angle sum {median}");
}
