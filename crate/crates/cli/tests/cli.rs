use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use svmc_core::instances::read_instance;

fn svmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_svmc"))
        .args(args)
        .env_remove("SVMC_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = svmc(args);
    assert!(
        out.status.success(),
        "svmc {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fails(args: &[&str]) -> String {
    let out = svmc(args);
    assert!(
        !out.status.success(),
        "svmc {args:?} unexpectedly succeeded"
    );
    String::from_utf8(out.stderr).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen(dir: &Path, name: &str, extra: &[&str]) -> PathBuf {
    let out = dir.join(name);
    let mut args = vec!["gen", "--out", s(&out)];
    args.extend_from_slice(extra);
    ok(&args);
    out
}

#[test]
fn gen_writes_files_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen(
        dir.path(),
        "a",
        &["--count", "3", "--seed", "5", "--rows", "1", "--cols", "2"],
    );
    let b = gen(
        dir.path(),
        "b",
        &["--count", "3", "--seed", "5", "--rows", "1", "--cols", "2"],
    );
    for i in 0..3 {
        let name = format!("5-{i}.ising");
        let text_a = std::fs::read(a.join(&name)).unwrap();
        assert_eq!(text_a, std::fs::read(b.join(&name)).unwrap());
        assert_eq!(read_instance(a.join(&name)).unwrap().id(), format!("5-{i}"));
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["instances"].as_array().unwrap().len(), 3);
    assert_eq!(manifest["metadata"]["seed"], "5");
    assert_eq!(std::fs::read_dir(&a).unwrap().count(), 4);
}

#[test]
fn gen_with_mask_yields_valid_instances() {
    let dir = tempfile::tempdir().unwrap();
    let mask = dir.path().join("mask.txt");
    let broken: Vec<String> = (0..20).map(|k| (k * 6 + 1).to_string()).collect();
    std::fs::write(&mask, broken.join("\n") + "\n").unwrap();
    let out = gen(
        dir.path(),
        "c4",
        &[
            "--count",
            "1000",
            "--mask",
            s(&mask),
            "--coupling",
            "range3",
        ],
    );
    let mut n = 0;
    for entry in std::fs::read_dir(&out).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "ising") {
            let inst = read_instance(&path).unwrap();
            assert_eq!(inst.active_count(), 108);
            n += 1;
        }
    }
    assert_eq!(n, 1000);
}

#[test]
fn run_echoes_defaults_and_rejects_zero_runs() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen(
        dir.path(),
        "i",
        &["--count", "2", "--rows", "1", "--cols", "1"],
    );
    let csv = ok(&[
        "run",
        s(&inst),
        "--runs",
        "2",
        "--steps",
        "150000",
        "--threads",
        "1",
    ]);
    assert!(csv.contains("# temperature_ghz: 0.22\n"));
    assert!(csv.contains("# steps: 150000\n"));
    assert!(csv.contains("# seed: 0\n"));
    assert!(csv.contains("instance_id,n_runs,n_success,p_hat,ci_lo,ci_hi\n0-0,2,"));

    let err = fails(&["run", s(&inst), "--runs", "0"]);
    assert!(err.contains("runs"));
    fails(&["run", s(&dir.path().join("missing.ising"))]);
}

#[test]
fn run_is_thread_count_invariant_via_env() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen(
        dir.path(),
        "i",
        &["--count", "4", "--rows", "1", "--cols", "2"],
    );
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out = Command::new(env!("CARGO_BIN_EXE_svmc"))
            .args([
                "run",
                s(&inst),
                "--runs",
                "10",
                "--steps",
                "300",
                "--seed",
                "7",
            ])
            .env("SVMC_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success());
        outputs.push(out.stdout);
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn exact_cache_feeds_run() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen(
        dir.path(),
        "i",
        &["--count", "3", "--rows", "1", "--cols", "1"],
    );
    let cache = dir.path().join("ground.csv");
    ok(&["exact", s(&inst), "--out", s(&cache)]);
    let text = std::fs::read_to_string(&cache).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 4);

    let with_cache = ok(&[
        "run",
        s(&inst),
        "--runs",
        "5",
        "--steps",
        "200",
        "--ground-cache",
        s(&cache),
    ]);
    let without = ok(&["run", s(&inst), "--runs", "5", "--steps", "200"]);
    assert_eq!(with_cache, without);

    // a cache whose energy disagrees with its configuration is rejected
    let bad = dir.path().join("bad.csv");
    let tampered: String = text
        .lines()
        .map(|l| match l.split_once(',') {
            Some((id, rest)) if id == "0-0" => {
                let (_, config) = rest.split_once(',').unwrap();
                format!("{id},-999,{config}\n")
            }
            _ => format!("{l}\n"),
        })
        .collect();
    std::fs::write(&bad, tampered).unwrap();
    fails(&[
        "run",
        s(&inst),
        "--runs",
        "1",
        "--steps",
        "10",
        "--ground-cache",
        s(&bad),
    ]);
}

#[test]
fn every_solver_runs() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen(
        dir.path(),
        "i",
        &["--count", "2", "--rows", "1", "--cols", "1"],
    );
    for solver in ["svmc", "sa_o2", "sa_bits"] {
        let csv = ok(&[
            "run",
            s(&inst),
            "--solver",
            solver,
            "--runs",
            "4",
            "--steps",
            "500",
        ]);
        assert!(csv.contains(&format!("# solver: {solver}\n")));
    }
    let csv = ok(&[
        "run",
        s(&inst),
        "--solver",
        "sa_bits",
        "--runs",
        "2",
        "--steps",
        "50",
        "--sa-ladder",
        "geometric",
    ]);
    assert!(csv.contains("# sa_ladder: geometric(10,0.05)\n"));
}

#[test]
fn stats_histogram_and_score() {
    let dir = tempfile::tempdir().unwrap();
    let results = dir.path().join("p.csv");
    let body: String = (0..20)
        .map(|i| format!("i{i},{}\n", if i % 2 == 0 { 0.0 } else { 1.0 }))
        .collect();
    std::fs::write(&results, format!("instance_id,p\n{body}")).unwrap();
    let hist = dir.path().join("h.csv");
    let stdout = ok(&["stats", s(&results), "--bins", "4", "--out", s(&hist)]);
    assert!(stdout.contains("bimodality score: 1"));
    let text = std::fs::read_to_string(&hist).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(
        rows,
        [
            "bin_lo,bin_hi,count",
            "0,0.25,10",
            "0.25,0.5,0",
            "0.5,0.75,0",
            "0.75,1,10"
        ]
    );

    let few = dir.path().join("few.csv");
    std::fs::write(&few, "instance_id,p\na,0.5\n").unwrap();
    assert!(ok(&["stats", s(&few)]).contains("unavailable"));

    std::fs::write(&few, "instance_id,p\na,x\n").unwrap();
    fails(&["stats", s(&few)]);
}

#[test]
fn correlate_cases() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let c = dir.path().join("c.csv");
    let flat = dir.path().join("flat.csv");
    std::fs::write(&a, "instance_id,p\nx,0.1\ny,0.5\nz,0.8\n").unwrap();
    std::fs::write(&b, "instance_id,p\nz,0.2\ny,0.4\nx,0.3\nw,1\n").unwrap();
    std::fs::write(&c, "instance_id,p\nq,0.1\nr,0.2\n").unwrap();
    std::fs::write(&flat, "instance_id,p\nx,1\ny,1\nz,1\n").unwrap();

    assert!(ok(&["correlate", s(&a), s(&a)]).contains("pearson r = 1 over 3"));

    let scatter = dir.path().join("scatter.csv");
    ok(&["correlate", s(&a), s(&b), "--out", s(&scatter)]);
    let text = std::fs::read_to_string(&scatter).unwrap();
    assert!(text.contains("instance_id,p_a,p_b\nx,0.1,0.3\ny,0.5,0.4\nz,0.8,0.2\n"));

    assert!(fails(&["correlate", s(&a), s(&c)]).contains("overlapping"));
    assert!(fails(&["correlate", s(&a), s(&flat)]).contains("zero variance"));
}

#[test]
fn minima_json() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen(
        dir.path(),
        "i",
        &["--count", "1", "--rows", "1", "--cols", "2"],
    );
    let file = inst.join("0-0.ising");
    let parse = |text: &str| -> serde_json::Value { serde_json::from_str(text).unwrap() };

    let early = parse(&ok(&[
        "minima",
        s(&file),
        "--s-star",
        "0.01",
        "--probes",
        "10",
        "--steps",
        "1000",
    ]));
    assert_eq!(early["distinct_minima"], 1);
    assert_eq!(early["branching"], serde_json::json!([]));

    let one = parse(&ok(&[
        "minima",
        s(&file),
        "--probes",
        "1",
        "--steps",
        "1000",
    ]));
    assert_eq!(one["distinct_minima"], 1);

    let out = dir.path().join("m.json");
    ok(&[
        "minima",
        s(&file),
        "--probes",
        "30",
        "--steps",
        "2000",
        "--seed",
        "4",
        "--out",
        s(&out),
    ]);
    let doc = parse(&std::fs::read_to_string(&out).unwrap());
    let hits: u64 = doc["catalog"]["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["hits"].as_u64().unwrap())
        .sum();
    assert_eq!(hits, 30);
    assert_eq!(doc["metadata"]["n_probes"], "30");
    assert_eq!(doc["metadata"]["seed"], "4");

    fails(&["minima", s(&file), "--s-star", "0"]);
}
