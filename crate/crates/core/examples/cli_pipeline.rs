//! Drives the command-line front end in-process: scores a system, writes
//! the result and its run manifest to a temporary directory, and prints
//! both.

fn main() {
    let corpus = concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample/corpus.jsonl");
    let dir = std::env::temp_dir().join("charmt-cli-example");
    std::fs::create_dir_all(&dir).expect("temp dir");
    let out = dir.join("score.csv");

    let code = charmt::cli::dispatch([
        "charmt",
        "score",
        "--corpus",
        corpus,
        "--system",
        "byt5",
        "--metric",
        "chrfpp",
        "--out",
        out.to_str().expect("utf-8 path"),
    ]);
    assert_eq!(code, 0);
    print!("{}", std::fs::read_to_string(&out).expect("score written"));
    let manifest = dir.join("score.csv.manifest.json");
    println!("{}", std::fs::read_to_string(manifest).expect("manifest written"));
}
