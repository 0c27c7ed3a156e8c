use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use orthoalign::embeddings::write_word2vec_text;
use orthoalign::synthetic::{SyntheticConfig, SyntheticTask};

struct Workspace {
    dir: tempfile::TempDir,
    task: SyntheticTask,
}

impl Workspace {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let task = SyntheticTask::generate(&SyntheticConfig {
            vocab: 600,
            dim: 20,
            noise: 0.2,
            train_pairs: 250,
            test_pairs: 100,
            ..Default::default()
        })
        .unwrap();
        write_word2vec_text(&task.src, dir.path().join("src.txt")).unwrap();
        write_word2vec_text(&task.tgt, dir.path().join("tgt.txt")).unwrap();
        let lines = |pairs: &[(String, String)]| pairs.iter().map(|(a, b)| format!("{a}\t{b}\n")).collect::<String>();
        fs::write(dir.path().join("train.tsv"), lines(&task.train.pairs)).unwrap();
        fs::write(dir.path().join("test.tsv"), lines(&task.test)).unwrap();
        Self { dir, task }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_orthoalign"))
            .current_dir(self.dir.path())
            .env("RUST_LOG", "warn")
            .args(args)
            .output()
            .unwrap()
    }

    fn align(&self, out: &str, extra: &[&str]) -> Output {
        let mut args = vec!["align", "--src", "src.txt", "--tgt", "tgt.txt", "--dict", "train.tsv", "--out", out];
        args.extend_from_slice(extra);
        self.run(&args)
    }
}

fn assert_ok(o: &Output) {
    assert!(o.status.success(), "status {:?}, stderr: {}", o.status, String::from_utf8_lossy(&o.stderr));
}

fn read(p: &Path) -> Vec<u8> {
    fs::read(p).unwrap()
}

#[test]
fn align_translate_evaluate() {
    let w = Workspace::new();
    assert_ok(&w.align("map.oaln", &["--method", "isf", "--ns", "100"]));

    let words: Vec<&str> = w.task.test.iter().map(|(s, _)| s.as_str()).collect();
    let mut args = vec!["translate", "--src", "src.txt", "--tgt", "tgt.txt", "--artifact", "map.oaln"];
    args.extend(["--method", "isf", "--ns", "100", "--top-k", "3", "nosuchword"]);
    args.extend(&words);
    let o = w.run(&args);
    assert_ok(&o);
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "nosuchword\tOOV");
    let heads: Vec<&str> = lines.iter().copied().filter(|l| !l.starts_with("  ")).collect();
    assert_eq!(heads.len(), 101);
    assert_eq!(lines.len(), 1 + 100 * 4);
    assert!(lines[2].starts_with("  1\t"));

    let eval = |out: &str, extra: &[&str]| {
        let mut args = vec!["evaluate", "--src", "src.txt", "--tgt", "tgt.txt", "--artifact", "map.oaln"];
        args.extend(["--method", "isf", "--ns", "100", "--test", "test.tsv", "--out", out]);
        args.extend_from_slice(extra);
        w.run(&args)
    };
    let o = eval("a.json", &["--tsv", "summary.tsv"]);
    assert_ok(&o);
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.lines().next().unwrap().starts_with("task\tmap\trank"));
    assert_ok(&eval("b.json", &["--serial", "--tsv", "summary.tsv"]));
    assert_eq!(read(&w.path("a.json")), read(&w.path("b.json")));
    assert_eq!(fs::read_to_string(w.path("summary.tsv")).unwrap().lines().count(), 3);

    let report = orthoalign::evaluation::load_report(w.path("a.json")).unwrap();
    assert_eq!(report.counts.evaluated, 100);
    assert!(report.precision_at(1).unwrap() > 0.5);
}

#[test]
fn reruns_are_byte_identical() {
    let w = Workspace::new();
    for out in ["a.oaln", "b.oaln"] {
        assert_ok(&w.align(out, &["--method", "softmax", "--rank", "auto"]));
    }
    assert_eq!(read(&w.path("a.oaln")), read(&w.path("b.oaln")));
}

#[test]
fn pseudo_and_corpus_dictionaries() {
    let w = Workspace::new();
    let o = w.run(&["align", "--src", "src.txt", "--tgt", "tgt.txt", "--dict", "pseudo", "--out", "p.oaln"]);
    assert_eq!(o.status.code(), Some(3), "disjoint vocabularies give an empty pseudo dictionary");

    let corpus = w.task.corpus(400, 8, 1);
    let join = |s: &[Vec<String>]| s.iter().map(|l| l.join(" ") + "\n").collect::<String>();
    fs::write(w.path("c.src"), join(&corpus.source_sentences)).unwrap();
    fs::write(w.path("c.tgt"), join(&corpus.target_sentences)).unwrap();
    let o = w.run(&["align", "--src", "src.txt", "--tgt", "tgt.txt", "--corpus", "c.src", "c.tgt", "--out", "c.oaln"]);
    assert_ok(&o);
    let o = w.run(&[
        "evaluate", "--src", "src.txt", "--tgt", "tgt.txt", "--artifact", "c.oaln", "--corpus", "c.src", "c.tgt",
        "--skip", "300", "--queries", "50", "--out", "s.json",
    ]);
    assert_ok(&o);
    let report = orthoalign::evaluation::load_report(w.path("s.json")).unwrap();
    assert_eq!(report.counts.evaluated, 50);
}

#[test]
fn failures_use_exit_codes_and_one_line() {
    let w = Workspace::new();
    let o = w.run(&["align", "--src", "src.txt"]);
    assert_eq!(o.status.code(), Some(2));
    let o = w.run(&["align", "--src", "missing.txt", "--tgt", "tgt.txt", "--dict", "train.tsv", "--out", "m"]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8(o.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("orthoalign: error["), "{err}");

    fs::write(w.path("bad.oaln"), b"not a map").unwrap();
    let o = w.run(&["translate", "--src", "src.txt", "--tgt", "tgt.txt", "--artifact", "bad.oaln", "s0"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(w.run(&["--help"]).status.success());
}
