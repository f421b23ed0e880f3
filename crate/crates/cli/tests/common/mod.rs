#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const BIN: &str = env!("CARGO_BIN_EXE_termrec");

pub fn termrec(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("RUST_LOG").output().expect("run termrec")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

pub fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Harvests `url` into `dir/corpus.jsonl`.
pub fn harvest(url: &str, dir: &Path) -> PathBuf {
    let out = dir.join("corpus.jsonl");
    let o = termrec(&["harvest", "--url", url, "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    out
}

pub fn build(archive: &Path, language: &str, dir: &Path) -> PathBuf {
    let out = dir.join(format!("model-{language}.bin"));
    let o = termrec(&["build", "--archive", p(archive), "--out", p(&out), "--language", language]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    out
}
