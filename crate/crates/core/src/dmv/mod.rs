//! Dependency model with valence over universal tags.
//!
//! A head generates dependents outward on each side, closest first. Before
//! each dependent it decides whether to stop, conditioned on its tag, the
//! direction and whether it already has a dependent on that side. The
//! artificial root is a head at position 0 that only looks right; in the
//! default single-root mode it takes exactly one dependent.
//!
//! Learning is EM with inside-outside expectations. Optional head/dependent
//! rules bias the chart: every arc matching a rule is scaled by
//! `exp(strength)`.

mod chart;
mod sample;

use std::collections::BTreeMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::tagset::UniversalTag;

pub use chart::{decode, inside_outside};
pub use sample::{sample_corpus, sample_sentence};

const N_TAGS: usize = UniversalTag::COUNT;
const N_HEADS: usize = N_TAGS + 1;

/// Additive smoothing applied to expected counts in the M-step.
pub const DEFAULT_SMOOTHING: f64 = 1e-6;

/// Pseudo-count added to every harmonic attachment count.
const HARMONIC_SMOOTHING: f64 = 0.1;

#[derive(Debug, Error)]
pub enum DmvError {
    #[error("sentence is empty")]
    EmptySentence,
    #[error("sentence has zero probability under the model")]
    ZeroProbability,
    #[error("rules line {line}: {message}")]
    Rules { line: usize, message: String },
    #[error("corpus has {0} sentences")]
    EmptyCorpus(usize),
    #[error("sentence {sentence}: {predicted} predicted heads for {gold} gold heads")]
    LengthMismatch {
        sentence: usize,
        predicted: usize,
        gold: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Head {
    Root,
    Tag(UniversalTag),
}

impl Head {
    fn index(self) -> usize {
        match self {
            Head::Tag(t) => t.index(),
            Head::Root => N_TAGS,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Left,
    Right,
}

impl Direction {
    const BOTH: [Direction; 2] = [Direction::Left, Direction::Right];

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RootMode {
    /// The root takes exactly one dependent.
    #[default]
    Single,
    /// The root takes one or more dependents, with learned stop decisions.
    Multi,
}

fn attach_slot(head: usize, dir: usize, dep: usize) -> usize {
    (head * 2 + dir) * N_TAGS + dep
}

fn stop_slot(head: usize, dir: usize, adjacent: bool) -> usize {
    (head * 2 + dir) * 2 + adjacent as usize
}

/// Attachment and stop probabilities.
///
/// Attachment distributions range over the tags observed in the training
/// corpus (the support); other tags have probability zero.
#[derive(Clone, Debug, PartialEq)]
pub struct DmvParameters {
    attach: Vec<f64>,
    stop: Vec<f64>,
    support: [bool; N_TAGS],
    root_mode: RootMode,
}

impl DmvParameters {
    /// Uniform attachments over `support` and stop probability 1/2.
    pub fn uniform(support: &[UniversalTag], root_mode: RootMode) -> DmvParameters {
        let mut mask = [false; N_TAGS];
        for t in support {
            mask[t.index()] = true;
        }
        let k = mask.iter().filter(|&&b| b).count().max(1) as f64;
        let mut attach = vec![0.0; N_HEADS * 2 * N_TAGS];
        for h in 0..N_HEADS {
            for dir in 0..2 {
                for d in 0..N_TAGS {
                    if mask[d] {
                        attach[attach_slot(h, dir, d)] = 1.0 / k;
                    }
                }
            }
        }
        let mut params = DmvParameters {
            attach,
            stop: vec![0.5; N_HEADS * 2 * 2],
            support: mask,
            root_mode,
        };
        params.fix_root_stops();
        params
    }

    /// Sets every attachment and stop probability from closures; attachment
    /// rows are renormalized over the support.
    pub fn from_fn(
        support: &[UniversalTag],
        root_mode: RootMode,
        mut attach: impl FnMut(Head, UniversalTag, Direction) -> f64,
        mut stop: impl FnMut(Head, Direction, bool) -> f64,
    ) -> DmvParameters {
        let mut params = DmvParameters::uniform(support, root_mode);
        for h in heads() {
            for dir in Direction::BOTH {
                let row: Vec<f64> = UniversalTag::ALL
                    .iter()
                    .map(|&d| if params.support[d.index()] { attach(h, d, dir).max(0.0) } else { 0.0 })
                    .collect();
                let total: f64 = row.iter().sum();
                if total > 0.0 {
                    for (d, v) in row.into_iter().enumerate() {
                        params.attach[attach_slot(h.index(), dir.index(), d)] = v / total;
                    }
                }
                for adjacent in [false, true] {
                    params.stop[stop_slot(h.index(), dir.index(), adjacent)] =
                        stop(h, dir, adjacent).clamp(0.0, 1.0);
                }
            }
        }
        params.fix_root_stops();
        params
    }

    fn fix_root_stops(&mut self) {
        let root = Head::Root.index();
        // The root never looks left.
        self.stop[stop_slot(root, Direction::Left.index(), true)] = 1.0;
        self.stop[stop_slot(root, Direction::Left.index(), false)] = 1.0;
        if self.root_mode == RootMode::Single {
            self.stop[stop_slot(root, Direction::Right.index(), true)] = 0.0;
            self.stop[stop_slot(root, Direction::Right.index(), false)] = 1.0;
        }
    }

    pub fn attach(&self, head: Head, dep: UniversalTag, dir: Direction) -> f64 {
        self.attach[attach_slot(head.index(), dir.index(), dep.index())]
    }

    pub fn stop(&self, head: Head, dir: Direction, adjacent: bool) -> f64 {
        self.stop[stop_slot(head.index(), dir.index(), adjacent)]
    }

    pub fn root_mode(&self) -> RootMode {
        self.root_mode
    }

    pub fn support(&self) -> Vec<UniversalTag> {
        UniversalTag::ALL
            .iter()
            .copied()
            .filter(|t| self.support[t.index()])
            .collect()
    }

    /// M-step: renormalize expected counts with additive smoothing.
    fn reestimate(&self, counts: &ExpectedCounts, smoothing: f64) -> DmvParameters {
        let mut next = self.clone();
        let k = self.support.iter().filter(|&&b| b).count() as f64;
        for h in 0..N_HEADS {
            for dir in 0..2 {
                let total: f64 = (0..N_TAGS)
                    .filter(|&d| self.support[d])
                    .map(|d| counts.attach[attach_slot(h, dir, d)])
                    .sum::<f64>()
                    + k * smoothing;
                for d in 0..N_TAGS {
                    let slot = attach_slot(h, dir, d);
                    next.attach[slot] = if self.support[d] {
                        (counts.attach[slot] + smoothing) / total
                    } else {
                        0.0
                    };
                }
                for adjacent in [false, true] {
                    let slot = stop_slot(h, dir, adjacent);
                    let s = counts.stop[slot] + smoothing;
                    let c = counts.cont[slot] + smoothing;
                    next.stop[slot] = s / (s + c);
                }
            }
        }
        next.fix_root_stops();
        next
    }
}

fn heads() -> impl Iterator<Item = Head> {
    UniversalTag::ALL.iter().map(|&t| Head::Tag(t)).chain([Head::Root])
}

/// Expected event counts from one or more sentences.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpectedCounts {
    attach: Vec<f64>,
    stop: Vec<f64>,
    cont: Vec<f64>,
}

impl Default for ExpectedCounts {
    fn default() -> Self {
        ExpectedCounts {
            attach: vec![0.0; N_HEADS * 2 * N_TAGS],
            stop: vec![0.0; N_HEADS * 2 * 2],
            cont: vec![0.0; N_HEADS * 2 * 2],
        }
    }
}

impl ExpectedCounts {
    pub fn attach(&self, head: Head, dep: UniversalTag, dir: Direction) -> f64 {
        self.attach[attach_slot(head.index(), dir.index(), dep.index())]
    }

    pub fn stop(&self, head: Head, dir: Direction, adjacent: bool) -> f64 {
        self.stop[stop_slot(head.index(), dir.index(), adjacent)]
    }

    pub fn cont(&self, head: Head, dir: Direction, adjacent: bool) -> f64 {
        self.cont[stop_slot(head.index(), dir.index(), adjacent)]
    }

    pub fn add(&mut self, other: &ExpectedCounts) {
        for (a, b) in self.attach.iter_mut().zip(&other.attach) {
            *a += b;
        }
        for (a, b) in self.stop.iter_mut().zip(&other.stop) {
            *a += b;
        }
        for (a, b) in self.cont.iter_mut().zip(&other.cont) {
            *a += b;
        }
    }

    /// Largest absolute difference between corresponding entries.
    pub fn max_abs_diff(&self, other: &ExpectedCounts) -> f64 {
        self.attach
            .iter()
            .zip(&other.attach)
            .chain(self.stop.iter().zip(&other.stop))
            .chain(self.cont.iter().zip(&other.cont))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Iterates `(head, dependent, direction, count)` over attachment events.
    pub fn attach_events(&self) -> impl Iterator<Item = (Head, UniversalTag, Direction, f64)> + '_ {
        heads().flat_map(move |h| {
            Direction::BOTH.into_iter().flat_map(move |dir| {
                UniversalTag::ALL
                    .iter()
                    .map(move |&d| (h, d, dir, self.attach(h, d, dir)))
            })
        })
    }
}

/// Head/dependent preferences applied as multiplicative arc weights.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RuleSet {
    /// `exp(strength)` summed into log space per (head, dependent).
    bonus: BTreeMap<(Head, UniversalTag), f64>,
}

impl RuleSet {
    pub fn new() -> RuleSet {
        RuleSet::default()
    }

    /// Adds a rule. Strength must be finite and non-negative; repeating a
    /// pair replaces its strength.
    pub fn insert(&mut self, head: Head, dependent: UniversalTag, strength: f64) {
        assert!(strength.is_finite() && strength >= 0.0, "rule strength {strength}");
        self.bonus.insert((head, dependent), strength);
    }

    pub fn len(&self) -> usize {
        self.bonus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bonus.is_empty()
    }

    pub fn strength(&self, head: Head, dependent: UniversalTag) -> f64 {
        self.bonus.get(&(head, dependent)).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Head, UniversalTag, f64)> + '_ {
        self.bonus.iter().map(|(&(h, d), &s)| (h, d, s))
    }

    /// Same edges with every strength replaced.
    pub fn with_strength(&self, strength: f64) -> RuleSet {
        let mut out = RuleSet::new();
        for (h, d, _) in self.iter() {
            out.insert(h, d, strength);
        }
        out
    }

    /// Dense `(head index, dep index) -> strength` table.
    fn table(&self) -> [[f64; N_TAGS]; N_HEADS] {
        let mut table = [[0.0; N_TAGS]; N_HEADS];
        for (h, d, s) in self.iter() {
            table[h.index()][d.index()] = s;
        }
        table
    }
}

/// Parses `HEAD<TAB>DEPENDENT[<TAB>strength]` lines. `ROOT` may only appear
/// as a head; lines without a strength get `default_strength`.
pub fn parse_rules(text: &str, default_strength: f64) -> Result<RuleSet, DmvError> {
    let mut rules = RuleSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |message: String| DmvError::Rules { line: i + 1, message };
        let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
        if !(2..=3).contains(&cols.len()) {
            return Err(bad(format!("expected 2 or 3 TAB-separated fields, found {}", cols.len())));
        }
        let head = match cols[0] {
            "ROOT" => Head::Root,
            s => Head::Tag(s.parse().map_err(|e: crate::tagset::InvalidUniversalTag| bad(e.to_string()))?),
        };
        if cols[1] == "ROOT" {
            return Err(bad("ROOT cannot be a dependent".into()));
        }
        let dep: UniversalTag = cols[1].parse().map_err(|e: crate::tagset::InvalidUniversalTag| bad(e.to_string()))?;
        let strength = match cols.get(2) {
            Some(s) => s.parse::<f64>().map_err(|_| bad(format!("strength {s:?} is not a number")))?,
            None => default_strength,
        };
        if !strength.is_finite() || strength < 0.0 {
            return Err(bad(format!("strength {strength} must be finite and non-negative")));
        }
        rules.insert(head, dep, strength);
    }
    Ok(rules)
}

/// The bundled default rule list over universal tags.
pub fn default_rules(strength: f64) -> RuleSet {
    parse_rules(include_str!("../../data/usr-default.rules"), strength).expect("bundled rules parse")
}

/// Harmonic initialization: attachment pseudo-counts sum `1/distance` over
/// all ordered token pairs (and `1/n` from the root to each token), plus a
/// small constant, normalized over the corpus tags. Stop probabilities
/// start at 1/2.
pub fn init_harmonic(corpus: &[Vec<UniversalTag>], root_mode: RootMode) -> DmvParameters {
    let mut support = [false; N_TAGS];
    for t in corpus.iter().flatten() {
        support[t.index()] = true;
    }
    let support_tags: Vec<UniversalTag> = UniversalTag::ALL
        .iter()
        .copied()
        .filter(|t| support[t.index()])
        .collect();
    let mut counts = vec![0.0; N_HEADS * 2 * N_TAGS];
    for sentence in corpus {
        let n = sentence.len();
        for (i, &h) in sentence.iter().enumerate() {
            counts[attach_slot(Head::Root.index(), Direction::Right.index(), h.index())] += 1.0 / n as f64;
            for (j, &d) in sentence.iter().enumerate() {
                if i == j {
                    continue;
                }
                let dir = if j < i { Direction::Left } else { Direction::Right };
                counts[attach_slot(h.index(), dir.index(), d.index())] += 1.0 / i.abs_diff(j) as f64;
            }
        }
    }
    DmvParameters::from_fn(
        &support_tags,
        root_mode,
        |h, d, dir| counts[attach_slot(h.index(), dir.index(), d.index())] + HARMONIC_SMOOTHING,
        |_, _, _| 0.5,
    )
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmConfig {
    pub iterations: usize,
    pub smoothing: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            iterations: 50,
            smoothing: DEFAULT_SMOOTHING,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EmOutcome {
    pub params: DmvParameters,
    /// Corpus log-likelihood under the parameters entering each iteration.
    pub log_likelihoods: Vec<f64>,
}

/// E-step over the whole corpus. Sentences are processed in parallel on the
/// current rayon pool; counts are summed in corpus order so the result does
/// not depend on the number of threads.
pub fn expected_counts(
    corpus: &[Vec<UniversalTag>],
    params: &DmvParameters,
    rules: Option<&RuleSet>,
) -> Result<(ExpectedCounts, f64), DmvError> {
    let per_sentence: Vec<(ExpectedCounts, f64)> = corpus
        .par_iter()
        .map(|s| inside_outside(s, params, rules))
        .collect::<Result<_, _>>()?;
    let mut total = ExpectedCounts::default();
    let mut ll = 0.0;
    for (counts, sentence_ll) in &per_sentence {
        total.add(counts);
        ll += sentence_ll;
    }
    Ok((total, ll))
}

pub fn em_train(
    corpus: &[Vec<UniversalTag>],
    init: DmvParameters,
    config: &EmConfig,
    rules: Option<&RuleSet>,
) -> Result<EmOutcome, DmvError> {
    if corpus.is_empty() {
        return Err(DmvError::EmptyCorpus(0));
    }
    let mut params = init;
    let mut log_likelihoods = Vec::with_capacity(config.iterations);
    for _ in 0..config.iterations {
        let (counts, ll) = expected_counts(corpus, &params, rules)?;
        log_likelihoods.push(ll);
        params = params.reestimate(&counts, config.smoothing);
    }
    Ok(EmOutcome {
        params,
        log_likelihoods,
    })
}

/// A projective dependency tree; `heads[i]` is the head of token `i + 1`
/// (0 for the root).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DependencyTree {
    pub heads: Vec<usize>,
}

/// Fraction of tokens whose predicted head equals the gold head.
pub fn directed_accuracy(predicted: &[DependencyTree], gold: &[Vec<usize>]) -> Result<f64, DmvError> {
    if predicted.len() != gold.len() {
        return Err(DmvError::LengthMismatch {
            sentence: predicted.len().min(gold.len()) + 1,
            predicted: predicted.len(),
            gold: gold.len(),
        });
    }
    let mut correct = 0usize;
    let mut total = 0usize;
    for (i, (p, g)) in predicted.iter().zip(gold).enumerate() {
        if p.heads.len() != g.len() {
            return Err(DmvError::LengthMismatch {
                sentence: i + 1,
                predicted: p.heads.len(),
                gold: g.len(),
            });
        }
        correct += p.heads.iter().zip(g).filter(|(a, b)| a == b).count();
        total += g.len();
    }
    Ok(if total == 0 { 0.0 } else { correct as f64 / total as f64 })
}

/// Replaces each tag, with probability `error_rate`, by a draw from the
/// corpus tag distribution with the gold tag excluded. Tokens whose tag is
/// the only one in the corpus are left alone.
pub fn perturb_tags(corpus: &[Vec<UniversalTag>], error_rate: f64, seed: u64) -> Vec<Vec<UniversalTag>> {
    let rate = error_rate.clamp(0.0, 1.0);
    let mut freq = [0u64; N_TAGS];
    for t in corpus.iter().flatten() {
        freq[t.index()] += 1;
    }
    // One sampler per excluded gold tag.
    let samplers: Vec<Option<WeightedIndex<u64>>> = (0..N_TAGS)
        .map(|gold| {
            let weights: Vec<u64> = (0..N_TAGS).map(|t| if t == gold { 0 } else { freq[t] }).collect();
            WeightedIndex::new(weights).ok()
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    corpus
        .iter()
        .map(|sentence| {
            sentence
                .iter()
                .map(|&gold| {
                    if !rng.gen_bool(rate) {
                        return gold;
                    }
                    match &samplers[gold.index()] {
                        Some(s) => UniversalTag::ALL[s.sample(&mut rng)],
                        None => gold,
                    }
                })
                .collect()
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InductionConfig {
    pub em: EmConfig,
    pub root_mode: RootMode,
}

impl Default for InductionConfig {
    fn default() -> Self {
        InductionConfig {
            em: EmConfig::default(),
            root_mode: RootMode::Single,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Induction {
    pub params: DmvParameters,
    pub trees: Vec<DependencyTree>,
    pub log_likelihoods: Vec<f64>,
    /// Directed accuracy against the gold heads, when given.
    pub accuracy: Option<f64>,
}

/// Harmonic initialization, EM, then decoding of the same corpus. Training
/// and evaluation share the corpus.
pub fn induce(
    corpus: &[Vec<UniversalTag>],
    gold_heads: Option<&[Vec<usize>]>,
    config: &InductionConfig,
    rules: Option<&RuleSet>,
) -> Result<Induction, DmvError> {
    let init = init_harmonic(corpus, config.root_mode);
    let outcome = em_train(corpus, init, &config.em, rules)?;
    let trees = corpus
        .par_iter()
        .map(|s| decode(s, &outcome.params, rules))
        .collect::<Result<Vec<_>, _>>()?;
    let accuracy = gold_heads.map(|g| directed_accuracy(&trees, g)).transpose()?;
    Ok(Induction {
        params: outcome.params,
        trees,
        log_likelihoods: outcome.log_likelihoods,
        accuracy,
    })
}
