use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use unipos::dmv::{self, InductionConfig, RootMode, RuleSet};
use unipos::experiment::{self, MatrixConfig, VarianceConvention};
use unipos::hmm::{accuracy, HmmConfig, TrigramHmm};
use unipos::treebank::{self, CpostagMode};
use unipos::{parse_mapping, validate_mapping, Sentence, TagColumn, TagMapping, UniversalTag};

use crate::args::*;
use crate::config::RunConfig;
use crate::error::CliError;

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

/// Runs `f` against the output file, or standard output when `path` is
/// `None`.
fn with_output<F>(path: Option<&Path>, f: F) -> Result<(), CliError>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    match path {
        Some(p) => {
            let mut w = create(p)?;
            f(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(p, e))
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            match f(&mut w).and_then(|_| w.flush()) {
                // A closed pipe (`| head`) is not an error.
                Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
                r => r.map_err(|e| CliError::Data(format!("stdout: {e}"))),
            }
        }
    }
}

fn read_corpus(path: &Path, format: Format, cpostag: CpostagMode) -> Result<Vec<Sentence>, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let reader = BufReader::new(file);
    match format {
        Format::Conllx => treebank::read_conllx_with(reader, cpostag),
        Format::Wordtag => treebank::read_wordtag(reader),
    }
    .map_err(|e| CliError::data(path, e))
}

/// A path that exists, then `<map_dir>/<name>` or `<map_dir>/<name>.map`,
/// then a bundled mapping of that name.
pub fn resolve_mapping(arg: &str, config: &RunConfig) -> Result<TagMapping, CliError> {
    let mut candidates = vec![PathBuf::from(arg)];
    if let Some(dir) = &config.map_dir {
        candidates.push(dir.join(arg));
        candidates.push(dir.join(format!("{arg}.map")));
    }
    for path in candidates {
        if path.is_file() {
            let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
            let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or(arg);
            return parse_mapping(id, &text).map_err(|e| CliError::data(&path, e));
        }
    }
    let name = arg.strip_suffix(".map").unwrap_or(arg);
    TagMapping::bundled(name).ok_or_else(|| {
        CliError::Data(format!(
            "{arg}: no such mapping file (bundled mappings: {})",
            TagMapping::BUNDLED.join(", ")
        ))
    })
}

fn map_corpus(corpus: &[Sentence], mapping: &TagMapping, fallback_x: bool, path: &Path) -> Result<Vec<Sentence>, CliError> {
    treebank::map_corpus(corpus, mapping, fallback_x).map_err(|e| CliError::data(path, e))
}

fn load_model(path: &Path) -> Result<TrigramHmm, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    TrigramHmm::load(BufReader::new(file)).map_err(|e| CliError::data(path, e))
}

pub fn map(args: &MapArgs, config: &RunConfig) -> Result<(), CliError> {
    let mapping = resolve_mapping(&args.mapping.map, config)?;
    let corpus = read_corpus(&args.input.input, args.input.format, CpostagMode::Ignore)?;
    let mapped = map_corpus(&corpus, &mapping, args.mapping.fallback_x, &args.input.input)?;
    with_output(args.output.as_deref(), |w| match args.input.format {
        Format::Conllx => treebank::write_conllx(w, &mapped),
        Format::Wordtag => treebank::write_wordtag(w, &mapped, TagColumn::Universal),
    })
}

pub fn validate(args: &ValidateArgs, config: &RunConfig) -> Result<(), CliError> {
    let mapping = resolve_mapping(&args.map, config)?;
    let corpus = read_corpus(&args.input.input, args.input.format, CpostagMode::Ignore)?;
    let observed = corpus.iter().flat_map(|s| s.tokens().iter().map(|t| t.fine_tag.as_str()));
    let report = validate_mapping(&mapping, observed);
    with_output(None, |w| {
        writeln!(w, "kind\ttag\tvalue")?;
        for t in &report.unknown_tags {
            writeln!(w, "unknown\t{t}\t-")?;
        }
        for t in &report.unused_tags {
            writeln!(w, "unused\t{t}\t-")?;
        }
        for (u, n) in &report.tag_histogram {
            writeln!(w, "universal\t{u}\t{n}")?;
        }
        Ok(())
    })?;
    if report.is_clean() {
        Ok(())
    } else {
        Err(CliError::Data(format!(
            "{}: fine tags not covered by mapping {}: {}",
            args.input.input.display(),
            mapping.treebank_id(),
            report.unknown_tags.join(" ")
        )))
    }
}

/// Reads a corpus whose universal tags come from CPOSTAG or, when given,
/// from a mapping.
fn read_universal(
    path: &Path,
    format: Format,
    map: Option<&str>,
    fallback_x: bool,
    config: &RunConfig,
) -> Result<Vec<Sentence>, CliError> {
    match map {
        Some(arg) => {
            let mapping = resolve_mapping(arg, config)?;
            let corpus = read_corpus(path, format, CpostagMode::Ignore)?;
            map_corpus(&corpus, &mapping, fallback_x, path)
        }
        None => read_corpus(path, format, CpostagMode::Universal),
    }
}

fn tagged(corpus: &[Sentence], column: TagColumn, path: &Path) -> Result<Vec<Vec<(String, String)>>, CliError> {
    corpus
        .iter()
        .enumerate()
        .map(|(i, s)| s.tagged(column).map_err(|e| CliError::data(path, format!("sentence {}: {e}", i + 1))))
        .collect()
}

fn column(c: Column) -> TagColumn {
    match c {
        Column::Original => TagColumn::Original,
        Column::Universal => TagColumn::Universal,
    }
}

pub fn train(args: &TrainArgs, config: &RunConfig) -> Result<(), CliError> {
    let path = &args.input.input;
    let corpus = match args.tag_column {
        Column::Original => read_corpus(path, args.input.format, CpostagMode::Ignore)?,
        Column::Universal => read_universal(path, args.input.format, args.map.as_deref(), args.fallback_x, config)?,
    };
    let data = tagged(&corpus, column(args.tag_column), path)?;
    let model = TrigramHmm::train(&data, HmmConfig::default()).map_err(|e| CliError::data(path, e))?;
    let mut w = create(&args.model)?;
    model.save(&mut w).map_err(|e| CliError::data(&args.model, e))?;
    w.flush().map_err(|e| CliError::io(&args.model, e))
}

pub fn tag(args: &TagArgs) -> Result<(), CliError> {
    let model = load_model(&args.model)?;
    let corpus = read_corpus(&args.input.input, args.input.format, CpostagMode::Ignore)?;
    let words: Vec<Vec<&str>> = corpus.iter().map(|s| s.forms()).collect();
    let predicted = model.tag_corpus(&words, args.beam.beam());
    with_output(args.output.as_deref(), |w| {
        for (sentence, tags) in words.iter().zip(&predicted) {
            for (word, tag) in sentence.iter().zip(tags) {
                writeln!(w, "{word}\t{tag}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    })
}

pub fn eval(args: &EvalArgs, config: &RunConfig) -> Result<(), CliError> {
    let model = load_model(&args.model)?;
    let cpostag = match args.tag_column {
        Column::Original => CpostagMode::Ignore,
        Column::Universal => CpostagMode::Universal,
    };
    let gold = read_corpus(&args.gold, args.format, cpostag)?;
    let gold = tagged(&gold, column(args.tag_column), &args.gold)?;
    let mapping = args.map.as_deref().map(|m| resolve_mapping(m, config)).transpose()?;
    let words: Vec<Vec<&str>> = gold.iter().map(|s| s.iter().map(|(w, _)| w.as_str()).collect()).collect();
    let predicted = model.tag_corpus(&words, args.beam.beam());
    let gold_tags: Vec<Vec<&str>> = gold.iter().map(|s| s.iter().map(|(_, t)| t.as_str()).collect()).collect();
    let acc = accuracy(&predicted, &gold_tags, mapping.as_ref()).map_err(|e| CliError::data(&args.gold, e))?;
    with_output(None, |w| {
        writeln!(w, "correct\ttotal\taccuracy")?;
        writeln!(w, "{}\t{}\t{:.4}", acc.correct, acc.total, acc.fraction() * 100.0)
    })
}

pub fn matrix(args: &MatrixArgs, config: &RunConfig) -> Result<(), CliError> {
    let mapping = resolve_mapping(&args.mapping.map, config)?;
    let train = read_corpus(&args.train, args.format, CpostagMode::Ignore)?;
    let (train, test) = match &args.test {
        Some(path) => (train, read_corpus(path, args.format, CpostagMode::Ignore)?),
        None => {
            if !(args.split > 0.0 && args.split < 1.0) {
                return Err(CliError::Usage(format!("--split must be in (0, 1), got {}", args.split)));
            }
            experiment::split_contiguous(&train, args.split)
        }
    };
    if train.is_empty() || test.is_empty() {
        return Err(CliError::data(&args.train, "training and test sets must both be non-empty"));
    }
    let matrix_config = MatrixConfig {
        hmm: HmmConfig::default(),
        beam: args.beam.beam(),
        fallback_x: args.mapping.fallback_x,
    };
    let result =
        experiment::run_matrix(&train, &test, &mapping, &matrix_config).map_err(|e| CliError::data(&args.train, e))?;
    let report = experiment::format_report(&[result]);
    with_output(args.report.as_deref(), |w| w.write_all(report.as_bytes()))
}

pub fn variance(args: &VarianceArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.input).map_err(|e| CliError::io(&args.input, e))?;
    let results = experiment::parse_report(&text).map_err(|e| CliError::data(&args.input, e))?;
    let convention = match args.convention {
        Convention::Sample => VarianceConvention::Sample,
        Convention::Population => VarianceConvention::Population,
    };
    let v = experiment::variance_report_with(&results, convention).map_err(|e| CliError::data(&args.input, e))?;
    with_output(args.report.as_deref(), |w| {
        writeln!(w, "convention\ttreebanks\tO/O\tU/U\tO/U")?;
        writeln!(
            w,
            "{}\t{}\t{:.3}\t{:.3}\t{:.3}",
            format!("{:?}", args.convention).to_lowercase(),
            results.len(),
            v.var_oo,
            v.var_uu,
            v.var_ou
        )
    })
}

fn load_rules(arg: &str, strength: f64) -> Result<RuleSet, CliError> {
    if !strength.is_finite() || strength < 0.0 {
        return Err(CliError::Usage(format!("--rule-strength must be non-negative, got {strength}")));
    }
    if arg == "default" {
        return Ok(dmv::default_rules(strength));
    }
    let path = Path::new(arg);
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    dmv::parse_rules(&text, strength).map_err(|e| CliError::data(path, e))
}

pub fn induce(args: &InduceArgs, config: &RunConfig) -> Result<(), CliError> {
    if !(0.0..=1.0).contains(&args.tag_noise) {
        return Err(CliError::Usage(format!("--tag-noise must be in [0, 1], got {}", args.tag_noise)));
    }
    if args.max_len == 0 {
        return Err(CliError::Usage("--max-len must be at least 1".into()));
    }
    let path = &args.input;
    let corpus = read_universal(path, Format::Conllx, args.map.as_deref(), args.fallback_x, config)?;
    for (i, s) in corpus.iter().enumerate() {
        let context = |m: &str| CliError::data(path, format!("sentence {}: {m}", i + 1));
        if s.universal_tags().is_none() {
            return Err(context("every token needs a universal tag (CPOSTAG or --map)"));
        }
        if !s.is_empty() && !s.has_heads() {
            return Err(context("every token needs a gold head"));
        }
    }
    let prepared = treebank::prepare_for_induction(&corpus, args.max_len, args.len_before_strip)
        .map_err(|e| CliError::data(path, e))?;
    if prepared.is_empty() {
        return Err(CliError::data(path, format!("no sentences of at most {} tokens", args.max_len)));
    }
    let gold_tags: Vec<Vec<UniversalTag>> = prepared.iter().map(|s| s.universal_tags().unwrap()).collect();
    let gold_heads: Vec<Vec<usize>> = prepared.iter().map(|s| s.heads().unwrap()).collect();
    let seed = args.seed.unwrap_or(config.seed);
    let tags = if args.tag_noise > 0.0 {
        dmv::perturb_tags(&gold_tags, args.tag_noise, seed)
    } else {
        gold_tags
    };
    let rules = args.rules.as_deref().map(|r| load_rules(r, args.rule_strength)).transpose()?;
    let induction_config = InductionConfig {
        em: dmv::EmConfig {
            iterations: args.iters,
            ..dmv::EmConfig::default()
        },
        root_mode: if args.multi_root { RootMode::Multi } else { RootMode::Single },
    };
    let result = dmv::induce(&tags, Some(&gold_heads), &induction_config, rules.as_ref())
        .map_err(|e| CliError::data(path, e))?;

    if let Some(out) = &args.output {
        let induced: Vec<Sentence> = prepared
            .iter()
            .zip(&tags)
            .zip(&result.trees)
            .map(|((s, tags), tree)| {
                let tokens = s
                    .tokens()
                    .iter()
                    .zip(tags)
                    .zip(&tree.heads)
                    .map(|((t, &u), &h)| {
                        let mut t = t.clone().with_universal(u).with_head(h);
                        t.deprel = None;
                        t
                    })
                    .collect();
                Sentence::new(tokens).expect("decoded heads are in range")
            })
            .collect();
        with_output(Some(out), |w| treebank::write_conllx(w, &induced))?;
    }

    let tokens: usize = tags.iter().map(Vec::len).sum();
    let final_ll = match result.log_likelihoods.last() {
        Some(ll) => format!("{ll:.4}"),
        None => "-".to_owned(),
    };
    let rules_label = args.rules.as_deref().unwrap_or("none");
    with_output(args.report.as_deref(), |w| {
        writeln!(
            w,
            "input\tsentences\ttokens\titerations\ttag_noise\tseed\trules\troot\tlog_likelihood\tdirected_accuracy"
        )?;
        writeln!(
            w,
            "{}\t{}\t{tokens}\t{}\t{}\t{seed}\t{rules_label}\t{}\t{final_ll}\t{:.2}",
            path.display(),
            prepared.len(),
            args.iters,
            args.tag_noise,
            if args.multi_root { "multi" } else { "single" },
            result.accuracy.unwrap_or(0.0) * 100.0
        )
    })
}
