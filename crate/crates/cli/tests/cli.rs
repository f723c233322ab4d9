use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn sample(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data").join(name)
}

fn unipos(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_unipos"))
        .args(args)
        .env_remove("UNIPOS_MAP_DIR")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn version_reports_mapping_format() {
    let out = unipos(&["--version"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains(env!("CARGO_PKG_VERSION")), "{text}");
    assert!(text.contains("mapping format 1"), "{text}");
}

#[test]
fn help_exits_zero() {
    let out = unipos(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("induce"));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let out = unipos(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("Usage"));
    let out = unipos(&["map", "--input"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn map_writes_universal_cpostag() {
    let dir = TempDir::new().unwrap();
    let output = dir.path().join("out.conll");
    let input = sample("sample/en-sample.conll");
    let out = unipos(&["map", "--input", path_str(&input), "--map", "en-ptb", "--output", path_str(&output)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = fs::read_to_string(&output).unwrap();
    let first: Vec<&str> = text.lines().next().unwrap().split('\t').collect();
    assert_eq!(first[3], "DET");
    assert_eq!(first[4], "DT");
    let row: Vec<&str> = text
        .lines()
        .take_while(|l| !l.is_empty())
        .map(|l| l.split('\t').nth(3).unwrap())
        .collect();
    assert_eq!(row.join(" "), "DET NOUN NOUN NOUN VERB VERB DET ADJ NOUN ADP DET NOUN .");
}

#[test]
fn map_accepts_a_mapping_path_and_wordtag() {
    let dir = TempDir::new().unwrap();
    let map = dir.path().join("tiny.map");
    fs::write(&map, "# tiny\nDT\tDET\nNN\tNOUN\n").unwrap();
    let input = dir.path().join("in.wt");
    fs::write(&input, "the\tDT\ndog\tNN\n\n").unwrap();
    let out = unipos(&["map", "--input", path_str(&input), "--format", "wordtag", "--map", path_str(&map)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(stdout(&out), "the\tDET\ndog\tNOUN\n\n");
}

#[test]
fn mapping_gap_is_a_data_error_naming_the_tag() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("bad.conll");
    fs::write(&input, "1\tx\t_\t_\tDT\t_\t0\t_\t_\t_\n2\ty\t_\t_\tZZ\t_\t1\t_\t_\t_\n").unwrap();
    let out = unipos(&["map", "--input", path_str(&input), "--map", "en-ptb"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("\"ZZ\"") && err.contains("bad.conll") && err.contains("token 2"), "{err}");

    let out = unipos(&["map", "--input", path_str(&input), "--map", "en-ptb", "--fallback-x"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("\tX\tZZ\t"));
}

#[test]
fn malformed_inputs_report_file_and_line() {
    let dir = TempDir::new().unwrap();
    let map = dir.path().join("broken.map");
    fs::write(&map, "DT\tDET\nNN\tNOUNISH\n").unwrap();
    let input = sample("sample/en-sample.conll");
    let out = unipos(&["map", "--input", path_str(&input), "--map", path_str(&map)]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("broken.map") && err.contains("line 2"), "{err}");

    let conll = dir.path().join("short.conll");
    fs::write(&conll, "1\tx\t_\n").unwrap();
    let out = unipos(&["map", "--input", path_str(&conll), "--map", "en-ptb"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 1"));

    let out = unipos(&["map", "--input", "/nonexistent/file.conll", "--map", "en-ptb"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn map_dir_from_environment_and_config() {
    let dir = TempDir::new().unwrap();
    let maps = dir.path().join("maps");
    fs::create_dir(&maps).unwrap();
    fs::write(maps.join("mine.map"), "DT\tDET\nNN\tNOUN\n").unwrap();
    let input = dir.path().join("in.wt");
    fs::write(&input, "the\tDT\ndog\tNN\n").unwrap();
    let args = ["map", "--input", path_str(&input), "--format", "wordtag", "--map", "mine"];

    assert_eq!(unipos(&args).status.code(), Some(2));

    let out = Command::new(env!("CARGO_BIN_EXE_unipos"))
        .args(args)
        .env("UNIPOS_MAP_DIR", &maps)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));

    let config = dir.path().join("run.toml");
    fs::write(&config, "seed = 4\njobs = 2\nmap_dir = \"maps\"\n").unwrap();
    let mut with_config = vec!["--config", path_str(&config)];
    with_config.extend(args);
    let out = unipos(&with_config);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(stdout(&out), "the\tDET\ndog\tNOUN\n\n");

    fs::write(&config, "colour = \"red\"\n").unwrap();
    assert_eq!(unipos(&with_config).status.code(), Some(1));
}

#[test]
fn validate_reports_coverage() {
    let input = sample("sample/en-sample.conll");
    let out = unipos(&["validate", "--input", path_str(&input), "--map", "en-ptb"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("kind\ttag\tvalue\n"));
    assert!(text.contains("universal\tVERB\t"));
    assert!(text.contains("unused\tUH\t-"));

    let out = unipos(&["validate", "--input", path_str(&input), "--map", "de-tiger"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).contains("unknown\tDT\t-"));
    assert!(stderr(&out).contains("DT"));
}

#[test]
fn train_tag_eval_round_trip() {
    let dir = TempDir::new().unwrap();
    let input = sample("sample/en-sample.conll");
    let model = dir.path().join("m.json");
    let model2 = dir.path().join("m2.json");
    for m in [&model, &model2] {
        let out = unipos(&["train", "--input", path_str(&input), "--model", path_str(m)]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    }
    assert_eq!(fs::read(&model).unwrap(), fs::read(&model2).unwrap());

    let words = sample("sample/en-sample.wt");
    let out = unipos(&["tag", "--model", path_str(&model), "--input", path_str(&words), "--format", "wordtag"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), fs::read_to_string(&words).unwrap());

    let out = unipos(&["eval", "--model", path_str(&model), "--gold", path_str(&input)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "correct\ttotal\taccuracy\n41\t41\t100.0000\n");

    let out = unipos(&["eval", "--model", path_str(&model), "--gold", path_str(&input), "--map", "en-ptb", "--no-beam"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).ends_with("41\t41\t100.0000\n"));

    let universal = dir.path().join("u.json");
    let out = unipos(&[
        "train", "--input", path_str(&input), "--tag-column", "universal", "--map", "en-ptb", "--model",
        path_str(&universal),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let out = unipos(&["tag", "--model", path_str(&universal), "--input", path_str(&input)]);
    assert!(stdout(&out).starts_with("The\tDET\noboist\tNOUN\n"));

    let out = unipos(&["train", "--input", path_str(&input), "--tag-column", "universal", "--model", path_str(&universal)]);
    assert_eq!(out.status.code(), Some(2), "CPOSTAG is empty in the sample");

    fs::write(&model, "{not a model").unwrap();
    let out = unipos(&["tag", "--model", path_str(&model), "--input", path_str(&words), "--format", "wordtag"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn experiment_matrix_and_variance() {
    let dir = TempDir::new().unwrap();
    let input = sample("sample/en-sample.conll");
    let report = dir.path().join("matrix.tsv");
    let out = unipos(&[
        "experiment", "matrix", "--train", path_str(&input), "--test", path_str(&input), "--map", "en-ptb",
        "--report", path_str(&report),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(
        fs::read_to_string(&report).unwrap(),
        "treebank\ttags\tO/O\tU/U\tO/U\nen-ptb\t17\t100.00\t100.00\t100.00\n"
    );

    let table = sample("table1.tsv");
    let out = unipos(&["experiment", "variance", "--input", path_str(&table)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "convention\ttreebanks\tO/O\tU/U\tO/U\nsample\t25\t10.134\t5.241\t5.071\n");
    let out = unipos(&["experiment", "variance", "--input", path_str(&table), "--convention", "population"]);
    assert!(stdout(&out).contains("population\t25\t9.729\t"));

    let out = unipos(&["experiment", "variance", "--input", path_str(&report)]);
    assert_eq!(out.status.code(), Some(2), "one row is too few");
}

fn synthetic_treebank(dir: &Path) -> PathBuf {
    // Universal tags in CPOSTAG, heads in column 7.
    let sentences: &[&[(&str, &str, usize)]] = &[
        &[("the", "DET", 2), ("dog", "NOUN", 3), ("barks", "VERB", 0), (".", ".", 3)],
        &[("dogs", "NOUN", 2), ("bark", "VERB", 0)],
        &[("a", "DET", 2), ("cat", "NOUN", 3), ("sees", "VERB", 0), ("the", "DET", 5), ("dog", "NOUN", 3)],
        &[("she", "PRON", 2), ("runs", "VERB", 0), ("fast", "ADV", 2), (".", ".", 2)],
        &[("old", "ADJ", 2), ("men", "NOUN", 3), ("sleep", "VERB", 0), ("in", "ADP", 3), ("beds", "NOUN", 4)],
    ];
    let mut text = String::new();
    for _ in 0..4 {
        for s in sentences {
            for (i, (form, tag, head)) in s.iter().enumerate() {
                text.push_str(&format!("{}\t{form}\t_\t{tag}\t_\t_\t{head}\t_\t_\t_\n", i + 1));
            }
            text.push('\n');
        }
    }
    let path = dir.join("synthetic.conll");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn induce_is_deterministic_across_jobs() {
    let dir = TempDir::new().unwrap();
    let input = synthetic_treebank(dir.path());
    let run = |jobs: &str, tag: &str| {
        let report = dir.path().join(format!("r{tag}.tsv"));
        let trees = dir.path().join(format!("t{tag}.conll"));
        let out = unipos(&[
            "--jobs", jobs, "induce", "--input", path_str(&input), "--iters", "20", "--rules", "default",
            "--tag-noise", "0.1", "--seed", "5", "--report", path_str(&report), "--output", path_str(&trees),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        (fs::read_to_string(report).unwrap(), fs::read_to_string(trees).unwrap())
    };
    let (r1, t1) = run("1", "a");
    let (r4, t4) = run("4", "b");
    assert_eq!(r1, r4);
    assert_eq!(t1, t4);
    let header = r1.lines().next().unwrap();
    assert!(header.ends_with("log_likelihood\tdirected_accuracy"));
    let row: Vec<&str> = r1.lines().nth(1).unwrap().split('\t').collect();
    assert_eq!(&row[1..8], &["20", "72", "20", "0.1", "5", "default", "single"]);
    // Punctuation is removed before induction.
    assert!(!t1.contains("\t.\t"));
}

#[test]
fn induce_clean_synthetic_corpus() {
    let dir = TempDir::new().unwrap();
    let input = synthetic_treebank(dir.path());
    let out = unipos(&["induce", "--input", path_str(&input), "--iters", "30", "--rules", "default"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let accuracy: f64 = text.lines().nth(1).unwrap().rsplit('\t').next().unwrap().parse().unwrap();
    assert!(accuracy > 70.0, "{text}");
}

#[test]
fn induce_rejects_bad_input() {
    let dir = TempDir::new().unwrap();
    let no_heads = dir.path().join("noheads.conll");
    fs::write(&no_heads, "1\tdog\t_\tNOUN\t_\t_\t_\t_\t_\t_\n").unwrap();
    let out = unipos(&["induce", "--input", path_str(&no_heads)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("gold head"));

    let input = synthetic_treebank(dir.path());
    let out = unipos(&["induce", "--input", path_str(&input), "--tag-noise", "1.5"]);
    assert_eq!(out.status.code(), Some(1));

    let rules = dir.path().join("bad.rules");
    fs::write(&rules, "VERB\tROOT\n").unwrap();
    let out = unipos(&["induce", "--input", path_str(&input), "--rules", path_str(&rules)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 1"));
}
