use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SAMPLE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample");

fn sample(name: &str) -> String {
    format!("{SAMPLE}/{name}")
}

fn charmt(args: &[&str]) -> Output {
    charmt_env(args, &[])
}

fn charmt_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_charmt"));
    cmd.args(args).env_remove("CHARMT_SEED");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn without_timestamp(manifest: &str) -> String {
    manifest
        .lines()
        .filter(|l| !l.trim_start().starts_with("\"timestamp\""))
        .collect::<Vec<_>>()
        .join("\n")
}

fn osw_args<'a>(out: &'a str, threads: &'a str, corpus: &'a str, a: &'a str, b: &'a str, r: &'a str) -> Vec<&'a str> {
    vec![
        "--threads",
        threads,
        "osw",
        "--corpus",
        corpus,
        "--align-src-ref",
        r,
        "--align-src-hyp-A",
        a,
        "--align-src-hyp-B",
        b,
        "--systems",
        "byt5,mt5",
        "--out",
        out,
    ]
}

#[test]
fn score_writes_one_row_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("score.csv");
    let o = charmt(&[
        "score",
        "--corpus",
        &sample("corpus.jsonl"),
        "--system",
        "byt5",
        "--metric",
        "chrfpp",
        "--out",
        out.to_str().unwrap(),
    ]);
    ok(&o);
    let csv = read(&out);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines, ["system,metric,n,score", "byt5,chrfpp,5,100"]);

    let manifest: serde_json::Value = serde_json::from_str(&read(&dir.path().join("score.csv.manifest.json"))).unwrap();
    assert_eq!(manifest["subcommand"], "score");
    assert_eq!(manifest["parameters"]["system"], "byt5");
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["outputs"][0]["path"], out.to_str().unwrap());
}

#[test]
fn json_output_keeps_full_precision() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("score.json");
    ok(&charmt(&[
        "--json",
        "score",
        "--corpus",
        &sample("corpus.jsonl"),
        "--system",
        "mt5",
        "--metric",
        "bleu",
        "--out",
        out.to_str().unwrap(),
    ]));
    let v: serde_json::Value = serde_json::from_str(&read(&out)).unwrap();
    let corpus = charmt::corpus_io::parse_corpus(sample("corpus.jsonl")).unwrap();
    let expected = charmt::metrics::bleu(&corpus.hypotheses("mt5").unwrap(), &corpus.references()).unwrap();
    assert_eq!(v["score"].as_f64().unwrap(), expected.value);
}

#[test]
fn outputs_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("osw.csv");
    let out_s = out.to_str().unwrap();
    let (corpus, a, b, r) = (
        sample("corpus.jsonl"),
        sample("align_src_byt5.txt"),
        sample("align_src_mt5.txt"),
        sample("align_src_ref.txt"),
    );
    let mut seen: Vec<(String, String)> = Vec::new();
    for threads in ["1", "1", "4"] {
        ok(&charmt(&osw_args(out_s, threads, &corpus, &a, &b, &r)));
        let manifest = without_timestamp(&read(&dir.path().join("osw.csv.manifest.json")));
        seen.push((read(&out), manifest));
    }
    assert!(seen.windows(2).all(|w| w[0] == w[1]));

    let curves = dir.path().join("curve.csv");
    let mut curve_runs = Vec::new();
    for threads in ["1", "4"] {
        ok(&charmt(&[
            "--threads",
            threads,
            "attr-curves",
            "--attributions",
            &sample("attributions.jsonl"),
            "--exclude-prompt",
            "--out",
            curves.to_str().unwrap(),
        ]));
        curve_runs.push(read(&curves));
    }
    assert_eq!(curve_runs[0], curve_runs[1]);
}

fn control_gen(dir: &Path, tag: &str, seed: &str, env: &[(&str, &str)]) -> (String, String) {
    let corpus: PathBuf = dir.join(format!("{tag}.jsonl"));
    let log: PathBuf = dir.join(format!("{tag}.log.jsonl"));
    ok(&charmt_env(
        &[
            "control-gen",
            "--corpus",
            &sample("corpus.jsonl"),
            "--align",
            &sample("align_src_ref.txt"),
            "--src-tags",
            &sample("src_tags.txt"),
            "--ref-tags",
            &sample("ref_tags.txt"),
            "--seed",
            seed,
            "--out-corpus",
            corpus.to_str().unwrap(),
            "--out-log",
            log.to_str().unwrap(),
        ],
        env,
    ));
    (read(&corpus), read(&log))
}

#[test]
fn control_gen_is_seeded_and_env_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let a = control_gen(dir.path(), "a", "5", &[]);
    let b = control_gen(dir.path(), "b", "5", &[]);
    let c = control_gen(dir.path(), "c", "6", &[]);
    let d = control_gen(dir.path(), "d", "6", &[("CHARMT_SEED", "5")]);
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(a, d);

    // The control corpus itself copies every replacement.
    let out = dir.path().join("copy.csv");
    ok(&charmt(&[
        "control-score",
        "--log",
        dir.path().join("a.log.jsonl").to_str().unwrap(),
        "--hyps",
        &sample("corpus.jsonl"),
        "--out",
        out.to_str().unwrap(),
    ]));
    assert_eq!(
        read(&out),
        "system,replacements,copied,accuracy\nbyt5,4,0,0\nmt5,4,0,0\n"
    );
}

#[test]
fn every_subcommand_exists() {
    for sub in [
        "score",
        "compare",
        "osw",
        "freq",
        "attr-curves",
        "attr-words",
        "attr-osw",
        "zeroshot-predict",
        "degrade",
        "control-gen",
        "control-score",
    ] {
        let o = charmt(&[sub, "--help"]);
        ok(&o);
        assert!(String::from_utf8_lossy(&o.stdout).contains("Usage"), "{sub}");
    }
}

#[test]
fn version_names_formats() {
    let o = charmt(&["--version"]);
    ok(&o);
    let s = String::from_utf8_lossy(&o.stdout);
    assert!(
        s.contains(env!("CARGO_PKG_VERSION")) && s.contains("manifest format 1"),
        "{s}"
    );
}

#[test]
fn exit_codes() {
    assert_eq!(charmt(&["no-such-subcommand"]).status.code(), Some(1));
    assert_eq!(charmt(&["score", "--system", "x"]).status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.json");
    let m = m.to_str().unwrap();
    let missing = charmt(&[
        "--manifest",
        m,
        "score",
        "--corpus",
        "/nonexistent/corpus.jsonl",
        "--system",
        "x",
    ]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("/nonexistent/corpus.jsonl"));

    let unknown_system = charmt(&[
        "--manifest",
        m,
        "score",
        "--corpus",
        &sample("corpus.jsonl"),
        "--system",
        "gpt",
    ]);
    assert_eq!(unknown_system.status.code(), Some(1));

    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "{\"id\":\"a\",\"src\":\"x\",\"ref\":\"y\"}\nnot json\n").unwrap();
    let o = charmt(&[
        "--manifest",
        m,
        "score",
        "--corpus",
        bad.to_str().unwrap(),
        "--system",
        "x",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        String::from_utf8_lossy(&o.stderr).contains(":2"),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn zeroshot_predict_reports_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pred.csv");
    let data = concat!(env!("CARGO_MANIFEST_DIR"), "/data");
    let o = charmt(&[
        "zeroshot-predict",
        "--scores",
        &format!("{data}/zeroshot_deu-eng_large_10k.csv"),
        "--metadata",
        &format!("{data}/flores200_metadata.tsv"),
        "--systems",
        "byt5,mt5",
        "--rule",
        "full",
        "--out",
        out.to_str().unwrap(),
    ]);
    ok(&o);
    assert!(String::from_utf8_lossy(&o.stderr).contains("176/204"));
    assert_eq!(read(&out).lines().count(), 205);
}

#[test]
fn degrade_lists_exclusions() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("deg.csv");
    let ex = dir.path().join("ex.csv");
    ok(&charmt(&[
        "degrade",
        "--scores-low",
        &sample("scores_small.csv"),
        "--scores-high",
        &sample("scores_large.csv"),
        "--system",
        "byt5",
        "--out",
        out.to_str().unwrap(),
        "--excluded-out",
        ex.to_str().unwrap(),
    ]));
    assert_eq!(read(&out).lines().count(), 3);
    assert_eq!(
        read(&ex),
        "system,code,script,reason\nbyt5,kor,Hangul,at_or_below_floor\nbyt5,swh,Latin,at_or_below_floor\n"
    );
}

#[test]
fn attribution_subcommands_run() {
    let dir = tempfile::tempdir().unwrap();
    let words = dir.path().join("words.csv");
    ok(&charmt(&[
        "attr-words",
        "--attributions",
        &sample("attributions.jsonl"),
        "--max-pos",
        "3",
        "--exclude-prompt",
        "--out",
        words.to_str().unwrap(),
    ]));
    assert_eq!(read(&words).lines().next(), Some("position,relative_pct,count"));
    assert_eq!(read(&words).lines().count(), 5);

    let osw = dir.path().join("osw.csv");
    ok(&charmt(&[
        "attr-osw",
        "--attributions",
        &sample("attributions.jsonl"),
        "--corpus",
        &sample("corpus.jsonl"),
        "--align-src-ref",
        &sample("align_src_ref.txt"),
        "--out",
        osw.to_str().unwrap(),
    ]));
    let text = read(&osw);
    assert!(text.contains("\nosw,") && text.contains("\nnon_osw,"), "{text}");
}
