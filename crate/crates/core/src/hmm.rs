//! Supervised trigram HMM tagger.
//!
//! Transitions are smoothed by linear interpolation of unigram, bigram and
//! trigram relative frequencies with weights from deleted interpolation.
//! Unknown words get tag probabilities from a suffix model (successive
//! abstraction over suffixes of rare training words, separate tables for
//! capitalized and lowercase words). Decoding is second-order Viterbi in log
//! space with optional beam pruning.
//!
//! Each sentence is padded as `BOS BOS t1 .. tn EOS`. The model is agnostic
//! to the tagset: original treebank tags and universal renderings are just
//! strings.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tagset::{TagMapping, UnknownFineTag};

/// `(word, tag)` pairs of one sentence.
pub type TaggedSentence = Vec<(String, String)>;

const MODEL_FORMAT: &str = "unipos-hmm";
const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum HmmError {
    #[error("training corpus has no tokens")]
    EmptyCorpus,
    #[error(transparent)]
    UnknownFineTag(#[from] UnknownFineTag),
    #[error("sentence {sentence}: {predicted} predicted tags for {gold} gold tokens")]
    LengthMismatch {
        sentence: usize,
        predicted: usize,
        gold: usize,
    },
    #[error("model file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HmmConfig {
    pub max_suffix_len: usize,
    /// Words seen at most this often feed the suffix model.
    pub rare_word_threshold: u64,
}

impl Default for HmmConfig {
    fn default() -> Self {
        HmmConfig {
            max_suffix_len: 10,
            rare_word_threshold: 10,
        }
    }
}

/// Default beam factor for tagging: states less likely than the best state in
/// the same column by this factor are dropped.
pub const DEFAULT_BEAM: f64 = 1000.0;

/// Tag n-gram counts over tag indices `0..n_tags`.
///
/// Symbol `n_tags` is the sentence-start boundary in contexts and the
/// sentence-end boundary in predicted positions.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionCounts {
    n_tags: usize,
    /// Predicted-symbol counts: every tag token plus one end symbol per sentence.
    unigram: Vec<u64>,
    #[serde(with = "entries")]
    bigram: BTreeMap<(u32, u32), u64>,
    #[serde(with = "entries")]
    trigram: BTreeMap<(u32, u32, u32), u64>,
    #[serde(skip)]
    bigram_context: Vec<u64>,
    #[serde(skip)]
    trigram_context: BTreeMap<(u32, u32), u64>,
}

impl TransitionCounts {
    pub fn from_tag_sequences<S: AsRef<[usize]>>(n_tags: usize, sequences: &[S]) -> TransitionCounts {
        let boundary = n_tags as u32;
        let mut counts = TransitionCounts {
            n_tags,
            unigram: vec![0; n_tags + 1],
            ..TransitionCounts::default()
        };
        for seq in sequences {
            let seq = seq.as_ref();
            let mut padded = Vec::with_capacity(seq.len() + 3);
            padded.extend([boundary, boundary]);
            padded.extend(seq.iter().map(|&t| t as u32));
            padded.push(boundary);
            for w in padded.windows(3) {
                *counts.trigram.entry((w[0], w[1], w[2])).or_insert(0) += 1;
            }
            for w in padded[1..].windows(2) {
                *counts.bigram.entry((w[0], w[1])).or_insert(0) += 1;
            }
            for &t in &padded[2..] {
                counts.unigram[t as usize] += 1;
            }
        }
        counts.index_contexts();
        counts
    }

    fn index_contexts(&mut self) {
        self.bigram_context = vec![0; self.n_tags + 1];
        for (&(a, _), &c) in &self.bigram {
            self.bigram_context[a as usize] += c;
        }
        self.trigram_context.clear();
        for (&(a, b, _), &c) in &self.trigram {
            *self.trigram_context.entry((a, b)).or_insert(0) += c;
        }
    }

    pub fn n_tags(&self) -> usize {
        self.n_tags
    }

    /// The boundary symbol index.
    pub fn boundary(&self) -> usize {
        self.n_tags
    }

    pub fn trigram(&self, a: usize, b: usize, c: usize) -> u64 {
        self.trigram
            .get(&(a as u32, b as u32, c as u32))
            .copied()
            .unwrap_or(0)
    }

    pub fn bigram(&self, a: usize, b: usize) -> u64 {
        self.bigram.get(&(a as u32, b as u32)).copied().unwrap_or(0)
    }

    pub fn unigram(&self, t: usize) -> u64 {
        self.unigram[t]
    }

    /// Number of trigrams whose first two symbols are `(a, b)`.
    pub fn trigram_context(&self, a: usize, b: usize) -> u64 {
        self.trigram_context
            .get(&(a as u32, b as u32))
            .copied()
            .unwrap_or(0)
    }

    /// Number of bigrams starting with `a`.
    pub fn bigram_context(&self, a: usize) -> u64 {
        self.bigram_context[a]
    }

    /// Total of predicted symbols (tag tokens plus end symbols).
    pub fn total(&self) -> u64 {
        self.unigram.iter().sum()
    }

    /// Contexts `(a, b)` that occur in the training data.
    pub fn observed_contexts(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.trigram_context.keys().map(|&(a, b)| (a as usize, b as usize))
    }

    fn unigram_prob(&self, c: usize) -> f64 {
        ratio(self.unigram[c], self.total())
    }

    fn bigram_prob(&self, b: usize, c: usize) -> f64 {
        ratio(self.bigram(b, c), self.bigram_context[b])
    }

    fn trigram_prob(&self, a: usize, b: usize, c: usize) -> f64 {
        ratio(self.trigram(a, b, c), self.trigram_context(a, b))
    }
}

/// JSON object keys must be strings; tuple-keyed maps go out as entry lists.
mod entries {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<K, V, S>(map: &BTreeMap<K, V>, s: S) -> Result<S::Ok, S::Error>
    where
        K: Serialize,
        V: Serialize,
        S: Serializer,
    {
        s.collect_seq(map.iter())
    }

    pub fn deserialize<'de, K, V, D>(d: D) -> Result<BTreeMap<K, V>, D::Error>
    where
        K: Deserialize<'de> + Ord,
        V: Deserialize<'de>,
        D: Deserializer<'de>,
    {
        Ok(Vec::<(K, V)>::deserialize(d)?.into_iter().collect())
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Interpolation weights `[unigram, bigram, trigram]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lambdas {
    pub weights: [f64; 3],
    /// Trigram counts credited to each order before normalization.
    pub mass: [u64; 3],
}

/// Deleted interpolation: every observed trigram credits its count to the
/// order whose leave-one-out relative frequency is largest. Ties go to the
/// higher order; a trigram with all three estimates zero credits the unigram.
pub fn deleted_interpolation(counts: &TransitionCounts) -> Lambdas {
    fn discounted(num: u64, den: u64) -> f64 {
        if den <= 1 {
            0.0
        } else {
            (num as f64 - 1.0) / (den as f64 - 1.0)
        }
    }
    let total = counts.total();
    let mut mass = [0u64; 3];
    for (&(a, b, c), &n) in &counts.trigram {
        let (a, b, c) = (a as usize, b as usize, c as usize);
        let tri = discounted(n, counts.trigram_context(a, b));
        let bi = discounted(counts.bigram(b, c), counts.bigram_context(b));
        let uni = discounted(counts.unigram(c), total);
        let order = if tri == 0.0 && bi == 0.0 && uni == 0.0 {
            0
        } else if tri >= bi && tri >= uni {
            2
        } else if bi >= uni {
            1
        } else {
            0
        };
        mass[order] += n;
    }
    let sum: u64 = mass.iter().sum();
    let weights = if sum == 0 {
        [1.0, 0.0, 0.0]
    } else {
        mass.map(|m| m as f64 / sum as f64)
    };
    Lambdas { weights, mass }
}

/// Persisted model state; probabilities are derived from these counts on load.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct ModelData {
    format: String,
    version: u32,
    config: HmmConfig,
    tags: Vec<String>,
    transitions: TransitionCounts,
    /// Per word, `(tag, count)` pairs.
    lexicon: BTreeMap<String, Vec<(u32, u64)>>,
    /// Suffix tables for lowercase (0) and capitalized (1) rare words.
    suffixes: [BTreeMap<String, Vec<u64>>; 2],
}

#[derive(Clone, Debug)]
pub struct TrigramHmm {
    data: ModelData,
    lambdas: Lambdas,
    /// Tag-token counts (without end symbols).
    tag_totals: Vec<u64>,
    tag_prior: Vec<f64>,
    theta: f64,
    /// `log P(c | a, b)` for `a, b, c` in `0..=n_tags`.
    log_trans: Vec<f64>,
    lexicon: HashMap<String, Vec<(usize, f64)>>,
}

impl TrigramHmm {
    pub fn train(corpus: &[TaggedSentence], config: HmmConfig) -> Result<TrigramHmm, HmmError> {
        let tagset: BTreeSet<&str> = corpus
            .iter()
            .flat_map(|s| s.iter().map(|(_, t)| t.as_str()))
            .collect();
        if tagset.is_empty() {
            return Err(HmmError::EmptyCorpus);
        }
        let tags: Vec<String> = tagset.iter().map(|t| t.to_string()).collect();
        let index: HashMap<&str, usize> = tagset.iter().enumerate().map(|(i, t)| (*t, i)).collect();

        let sequences: Vec<Vec<usize>> = corpus
            .iter()
            .filter(|s| !s.is_empty())
            .map(|s| s.iter().map(|(_, t)| index[t.as_str()]).collect())
            .collect();
        let transitions = TransitionCounts::from_tag_sequences(tags.len(), &sequences);

        let mut lexicon: BTreeMap<String, BTreeMap<u32, u64>> = BTreeMap::new();
        for (word, tag) in corpus.iter().flatten() {
            *lexicon
                .entry(word.clone())
                .or_default()
                .entry(index[tag.as_str()] as u32)
                .or_insert(0) += 1;
        }

        let mut suffixes: [BTreeMap<String, Vec<u64>>; 2] = Default::default();
        for (word, tags_of_word) in &lexicon {
            let freq: u64 = tags_of_word.values().sum();
            if freq > config.rare_word_threshold {
                continue;
            }
            let table = &mut suffixes[is_capitalized(word) as usize];
            for suffix in suffixes_of(word, config.max_suffix_len) {
                let row = table
                    .entry(suffix.to_owned())
                    .or_insert_with(|| vec![0; tags.len()]);
                for (&t, &c) in tags_of_word {
                    row[t as usize] += c;
                }
            }
        }

        let data = ModelData {
            format: MODEL_FORMAT.to_owned(),
            version: MODEL_VERSION,
            config,
            tags,
            transitions,
            lexicon: lexicon
                .into_iter()
                .map(|(w, m)| (w, m.into_iter().collect()))
                .collect(),
            suffixes,
        };
        Ok(TrigramHmm::from_data(data))
    }

    fn from_data(mut data: ModelData) -> TrigramHmm {
        data.transitions.index_contexts();
        let n = data.tags.len();
        let counts = &data.transitions;
        let lambdas = deleted_interpolation(counts);
        let [l1, l2, l3] = lambdas.weights;

        let mut log_trans = vec![f64::NEG_INFINITY; (n + 1) * (n + 1) * (n + 1)];
        for a in 0..=n {
            for b in 0..=n {
                // An unseen pair has no trigram estimate; its weight moves to
                // the lower orders.
                let (w1, w2, w3) = if counts.trigram_context(a, b) > 0 {
                    (l1, l2, l3)
                } else if l1 + l2 > 0.0 {
                    (l1 / (l1 + l2), l2 / (l1 + l2), 0.0)
                } else {
                    (0.0, 1.0, 0.0)
                };
                for c in 0..=n {
                    let p = w1 * counts.unigram_prob(c)
                        + w2 * counts.bigram_prob(b, c)
                        + w3 * counts.trigram_prob(a, b, c);
                    log_trans[(a * (n + 1) + b) * (n + 1) + c] = p.ln();
                }
            }
        }

        let mut tag_totals = vec![0u64; n];
        for entries in data.lexicon.values() {
            for &(t, c) in entries {
                tag_totals[t as usize] += c;
            }
        }
        let tokens: u64 = tag_totals.iter().sum();
        let tag_prior: Vec<f64> = tag_totals.iter().map(|&c| ratio(c, tokens)).collect();
        let theta = if n < 2 {
            0.0
        } else {
            let mean = tag_prior.iter().sum::<f64>() / n as f64;
            tag_prior.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        };

        let lexicon = data
            .lexicon
            .iter()
            .map(|(w, entries)| {
                let emissions = entries
                    .iter()
                    .map(|&(t, c)| (t as usize, (c as f64 / tag_totals[t as usize] as f64).ln()))
                    .collect();
                (w.clone(), emissions)
            })
            .collect();

        TrigramHmm {
            data,
            lambdas,
            tag_totals,
            tag_prior,
            theta,
            log_trans,
            lexicon,
        }
    }

    pub fn tags(&self) -> &[String] {
        &self.data.tags
    }

    pub fn tag_index(&self, tag: &str) -> Option<usize> {
        self.data.tags.binary_search_by(|t| t.as_str().cmp(tag)).ok()
    }

    pub fn config(&self) -> HmmConfig {
        self.data.config
    }

    pub fn lambdas(&self) -> Lambdas {
        self.lambdas
    }

    pub fn transition_counts(&self) -> &TransitionCounts {
        &self.data.transitions
    }

    /// Suffix-smoothing weight: sample variance of the tag priors.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn is_known(&self, word: &str) -> bool {
        self.lexicon.contains_key(word)
    }

    /// Smoothed `P(next | prev2, prev1)`. `None` is the sentence boundary
    /// (start in the conditioning positions, end in `next`).
    pub fn transition(&self, prev2: Option<usize>, prev1: Option<usize>, next: Option<usize>) -> f64 {
        self.log_transition(prev2, prev1, next).exp()
    }

    pub fn log_transition(&self, prev2: Option<usize>, prev1: Option<usize>, next: Option<usize>) -> f64 {
        let n = self.data.tags.len();
        let [a, b, c] = [prev2, prev1, next].map(|s| s.unwrap_or(n));
        self.log_trans[(a * (n + 1) + b) * (n + 1) + c]
    }

    /// `P(word | tag)` for a training word; 0 for unseen pairs.
    pub fn emission(&self, word: &str, tag: usize) -> f64 {
        self.lexicon
            .get(word)
            .and_then(|e| e.iter().find(|(t, _)| *t == tag))
            .map_or(0.0, |(_, lp)| lp.exp())
    }

    /// Log emission scores of `word` for every tag. Unknown words use
    /// `P(tag | suffix) / P(tag)`.
    pub fn log_emissions(&self, word: &str) -> Vec<f64> {
        let n = self.data.tags.len();
        let mut out = vec![f64::NEG_INFINITY; n];
        match self.lexicon.get(word) {
            Some(entries) => {
                for &(t, lp) in entries {
                    out[t] = lp;
                }
            }
            None => {
                let dist = self.suffix_distribution(word);
                for t in 0..n {
                    if self.tag_prior[t] > 0.0 {
                        out[t] = (dist[t] / self.tag_prior[t]).ln();
                    }
                }
            }
        }
        out
    }

    /// Tag distribution for `word` from its suffixes, ignoring the lexicon.
    ///
    /// Starts from the tag distribution of the rare words in the word's
    /// capitalization class and folds in successively longer matching
    /// suffixes: `P_i = (P̂(t | suffix_i) + θ P_{i-1}) / (1 + θ)`.
    pub fn suffix_distribution(&self, word: &str) -> Vec<f64> {
        let table = &self.data.suffixes[is_capitalized(word) as usize];
        let normalize = |row: &[u64]| -> Vec<f64> {
            let total: u64 = row.iter().sum();
            row.iter().map(|&c| ratio(c, total)).collect()
        };
        let mut dist = match table.get("") {
            Some(row) if row.iter().any(|&c| c > 0) => normalize(row),
            _ => return self.tag_prior.clone(),
        };
        let theta = self.theta;
        for suffix in suffixes_of(word, self.data.config.max_suffix_len).skip(1) {
            let Some(row) = table.get(suffix) else { break };
            let local = normalize(row);
            for (d, l) in dist.iter_mut().zip(local) {
                *d = (l + theta * *d) / (1.0 + theta);
            }
        }
        dist
    }

    /// Best tag-index sequence for `words`. With `beam = Some(f)`, states
    /// whose score is below the column's best divided by `f` are pruned.
    ///
    /// Ties resolve to the lowest tag index.
    pub fn viterbi<S: AsRef<str>>(&self, words: &[S], beam: Option<f64>) -> Vec<usize> {
        let n_words = words.len();
        if n_words == 0 {
            return Vec::new();
        }
        let n = self.data.tags.len();
        let width = n + 1;
        let margin = beam.map_or(f64::INFINITY, f64::ln);
        let state = |a: usize, b: usize| a * n + b;
        let emissions: Vec<Vec<f64>> = words.iter().map(|w| self.log_emissions(w.as_ref())).collect();
        let trans = |a: usize, b: usize, c: usize| self.log_trans[(a * width + b) * width + c];

        // Column i holds scores of states (tag[i-1], tag[i]); a == n is BOS.
        let mut score = vec![f64::NEG_INFINITY; width * n];
        let mut back: Vec<Vec<u32>> = Vec::with_capacity(n_words);
        for b in 0..n {
            score[state(n, b)] = trans(n, n, b) + emissions[0][b];
        }
        back.push(vec![u32::MAX; width * n]);
        prune(&mut score, margin);

        for emission in &emissions[1..] {
            let mut next = vec![f64::NEG_INFINITY; width * n];
            let mut ptr = vec![u32::MAX; width * n];
            for b in 0..n {
                for c in 0..n {
                    if emission[c] == f64::NEG_INFINITY {
                        continue;
                    }
                    let mut best = f64::NEG_INFINITY;
                    let mut arg = u32::MAX;
                    for a in 0..width {
                        let prev = score[state(a, b)];
                        if prev == f64::NEG_INFINITY {
                            continue;
                        }
                        let s = prev + trans(a, b, c);
                        if s > best || arg == u32::MAX {
                            best = s;
                            arg = a as u32;
                        }
                    }
                    if arg != u32::MAX {
                        next[state(b, c)] = best + emission[c];
                        ptr[state(b, c)] = arg;
                    }
                }
            }
            prune(&mut next, margin);
            score = next;
            back.push(ptr);
        }

        let mut best = (f64::NEG_INFINITY, None);
        for a in 0..width {
            for b in 0..n {
                let s = score[state(a, b)];
                if s == f64::NEG_INFINITY {
                    continue;
                }
                let total = s + trans(a, b, n);
                if best.1.is_none() || total > best.0 {
                    best = (total, Some((a, b)));
                }
            }
        }
        // Every path has probability zero: fall back to the lowest tag.
        let Some((mut a, mut b)) = best.1 else {
            return vec![0; n_words];
        };
        let mut out = vec![0; n_words];
        for i in (0..n_words).rev() {
            out[i] = b;
            if i == 0 {
                break;
            }
            let prev = back[i][state(a, b)];
            let prev = if prev == u32::MAX { 0 } else { prev as usize };
            b = a;
            a = prev;
        }
        out
    }

    /// [`viterbi`](Self::viterbi) with tag strings.
    pub fn tag<S: AsRef<str>>(&self, words: &[S], beam: Option<f64>) -> Vec<&str> {
        self.viterbi(words, beam)
            .into_iter()
            .map(|t| self.data.tags[t].as_str())
            .collect()
    }

    /// Tags every sentence; sentences are decoded in parallel on the current
    /// rayon pool and returned in input order.
    pub fn tag_corpus<S: AsRef<str> + Sync>(&self, sentences: &[Vec<S>], beam: Option<f64>) -> Vec<Vec<String>> {
        sentences
            .par_iter()
            .map(|s| self.tag(s, beam).into_iter().map(str::to_owned).collect())
            .collect()
    }

    /// Token accuracy against gold tags. With `mapping`, predicted and gold
    /// tags are both mapped to universal tags before comparison.
    pub fn evaluate(
        &self,
        gold: &[TaggedSentence],
        mapping: Option<&TagMapping>,
        beam: Option<f64>,
    ) -> Result<Accuracy, HmmError> {
        let words: Vec<Vec<&str>> = gold
            .iter()
            .map(|s| s.iter().map(|(w, _)| w.as_str()).collect())
            .collect();
        let predicted = self.tag_corpus(&words, beam);
        let gold_tags: Vec<Vec<&str>> = gold
            .iter()
            .map(|s| s.iter().map(|(_, t)| t.as_str()).collect())
            .collect();
        accuracy(&predicted, &gold_tags, mapping)
    }

    pub fn save<W: Write>(&self, w: W) -> Result<(), HmmError> {
        serde_json::to_writer(w, &self.data).map_err(|e| HmmError::Format(e.to_string()))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.save(&mut out).expect("in-memory serialization");
        out
    }

    pub fn load<R: Read>(r: R) -> Result<TrigramHmm, HmmError> {
        let data: ModelData = serde_json::from_reader(r).map_err(|e| HmmError::Format(e.to_string()))?;
        if data.format != MODEL_FORMAT || data.version != MODEL_VERSION {
            return Err(HmmError::Format(format!(
                "expected {MODEL_FORMAT} v{MODEL_VERSION}, found {} v{}",
                data.format, data.version
            )));
        }
        let n = data.tags.len();
        if n == 0 || data.transitions.n_tags != n || data.transitions.unigram.len() != n + 1 {
            return Err(HmmError::Format("inconsistent tag counts".into()));
        }
        let in_range = |t: u32| (t as usize) < n;
        let tables_ok = data.lexicon.values().flatten().all(|&(t, _)| in_range(t))
            && data.suffixes.iter().flat_map(|s| s.values()).all(|r| r.len() == n)
            && data.transitions.trigram.keys().all(|&(a, b, c)| a as usize <= n && b as usize <= n && c as usize <= n)
            && data.transitions.bigram.keys().all(|&(a, b)| a as usize <= n && b as usize <= n);
        if !tables_ok {
            return Err(HmmError::Format("tag index out of range".into()));
        }
        Ok(TrigramHmm::from_data(data))
    }

    /// Training-token count per tag.
    pub fn tag_totals(&self) -> &[u64] {
        &self.tag_totals
    }
}

fn prune(scores: &mut [f64], margin: f64) {
    if margin.is_infinite() {
        return;
    }
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for s in scores.iter_mut() {
        if *s < best - margin {
            *s = f64::NEG_INFINITY;
        }
    }
}

fn is_capitalized(word: &str) -> bool {
    word.chars().next().is_some_and(char::is_uppercase)
}

/// Suffixes of `word` from the empty one up to `max_len` characters.
fn suffixes_of(word: &str, max_len: usize) -> impl Iterator<Item = &str> {
    let starts: Vec<usize> = word.char_indices().map(|(i, _)| i).collect();
    let len = starts.len().min(max_len);
    (0..=len).map(move |k| {
        if k == 0 {
            &word[word.len()..]
        } else {
            &word[starts[starts.len() - k]..]
        }
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Accuracy {
    pub correct: usize,
    pub total: usize,
}

impl Accuracy {
    /// Fraction correct; 0 for an empty evaluation set.
    pub fn fraction(&self) -> f64 {
        ratio(self.correct as u64, self.total as u64)
    }
}

/// Token accuracy of `predicted` against `gold`, optionally comparing both
/// through `mapping`.
pub fn accuracy<P: AsRef<str>, G: AsRef<str>>(
    predicted: &[Vec<P>],
    gold: &[Vec<G>],
    mapping: Option<&TagMapping>,
) -> Result<Accuracy, HmmError> {
    if predicted.len() != gold.len() {
        return Err(HmmError::LengthMismatch {
            sentence: predicted.len().min(gold.len()) + 1,
            predicted: predicted.len(),
            gold: gold.len(),
        });
    }
    let mut acc = Accuracy::default();
    for (i, (p, g)) in predicted.iter().zip(gold).enumerate() {
        if p.len() != g.len() {
            return Err(HmmError::LengthMismatch {
                sentence: i + 1,
                predicted: p.len(),
                gold: g.len(),
            });
        }
        for (p, g) in p.iter().zip(g) {
            let hit = match mapping {
                Some(m) => m.map_tag(p.as_ref())? == m.map_tag(g.as_ref())?,
                None => p.as_ref() == g.as_ref(),
            };
            acc.correct += hit as usize;
            acc.total += 1;
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sent(spec: &str) -> TaggedSentence {
        spec.split_whitespace()
            .map(|wt| {
                let (w, t) = wt.rsplit_once('/').unwrap();
                (w.to_owned(), t.to_owned())
            })
            .collect()
    }

    #[test]
    fn counts_boundary_trigrams() {
        let m = TrigramHmm::train(&[sent("a/X b/Y")], HmmConfig::default()).unwrap();
        let c = m.transition_counts();
        let (x, y, b) = (0, 1, c.boundary());
        assert_eq!(c.trigram(b, b, x), 1);
        assert_eq!(c.trigram(b, x, y), 1);
        assert_eq!(c.trigram(x, y, b), 1);
        assert_eq!(c.trigram.len(), 3);
        assert_eq!(c.bigram(b, x), 1);
        assert_eq!(c.unigram(b), 1);
        assert_eq!(c.total(), 3);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert!(matches!(
            TrigramHmm::train(&[], HmmConfig::default()),
            Err(HmmError::EmptyCorpus)
        ));
        assert!(matches!(
            TrigramHmm::train(&[Vec::new()], HmmConfig::default()),
            Err(HmmError::EmptyCorpus)
        ));
    }

    #[test]
    fn toy_lambdas_match_hand_execution() {
        // Tag sequences XYX, XX, YXY. Hand-run leave-one-out ratios credit
        // 3 trigrams to the unigram, 6 to the bigram and 2 to the trigram.
        let corpus = [sent("a/X b/Y c/X"), sent("a/X c/X"), sent("b/Y a/X b/Y")];
        let m = TrigramHmm::train(&corpus, HmmConfig::default()).unwrap();
        let l = m.lambdas();
        assert_eq!(l.mass, [3, 6, 2]);
        assert_eq!(l.weights, [3.0 / 11.0, 6.0 / 11.0, 2.0 / 11.0]);
    }

    #[test]
    fn repeated_sentence_favours_trigrams() {
        let corpus = vec![sent("a/X b/Y c/Z"); 10];
        let l = TrigramHmm::train(&corpus, HmmConfig::default()).unwrap().lambdas();
        assert_eq!(l.mass, [0, 0, 40]);
        assert_eq!(l.weights, [0.0, 0.0, 1.0]);
    }

    #[test]
    fn unique_trigrams_push_mass_to_lower_orders() {
        // Every trigram occurs once, so each leave-one-out trigram ratio is 0/0.
        let seq = [vec![0usize, 1, 0, 1]];
        let counts = TransitionCounts::from_tag_sequences(2, &seq);
        assert!(counts.trigram.values().all(|&c| c == 1));
        let l = deleted_interpolation(&counts);
        assert_eq!(l.mass, [3, 2, 0]);
        assert_eq!(l.weights[2], 0.0);
        assert!((l.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn distributions_normalize() {
        let corpus = [
            sent("the/D dog/N barks/V"),
            sent("a/D cat/N sleeps/V quietly/R"),
            sent("dogs/N bark/V"),
            sent("the/D cat/N sees/V the/D dog/N"),
        ];
        let m = TrigramHmm::train(&corpus, HmmConfig::default()).unwrap();
        assert!((m.lambdas().weights.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        let n = m.tags().len();
        let c = m.transition_counts();
        let contexts: Vec<_> = c.observed_contexts().collect();
        assert!(!contexts.is_empty());
        let b = c.boundary();
        let opt = |x: usize| (x != b).then_some(x);
        let reachable = (0..=n).flat_map(|a| (0..=n).map(move |bb| (a, bb))).filter(|&(a, bb)| bb != b || a == b);
        assert!(reachable.clone().count() > contexts.len());
        for (a, bb) in reachable {
            let sum: f64 = (0..n)
                .map(|t| m.transition(opt(a), opt(bb), Some(t)))
                .sum::<f64>()
                + m.transition(opt(a), opt(bb), None);
            assert!((sum - 1.0).abs() < 1e-9, "context ({a},{bb}) sums to {sum}");
        }
        let words: BTreeSet<&str> = corpus.iter().flatten().map(|(w, _)| w.as_str()).collect();
        for t in 0..n {
            let sum: f64 = words.iter().map(|w| m.emission(w, t)).sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn deterministic_corpus_is_reproduced() {
        let corpus = vec![
            sent("the/D dog/N runs/V fast/R"),
            sent("dog/N runs/V the/D fast/R"),
            sent("fast/R the/D runs/V dog/N"),
        ];
        let m = TrigramHmm::train(&corpus, HmmConfig::default()).unwrap();
        for s in &corpus {
            let words: Vec<&str> = s.iter().map(|(w, _)| w.as_str()).collect();
            let gold: Vec<&str> = s.iter().map(|(_, t)| t.as_str()).collect();
            assert_eq!(m.tag(&words, None), gold);
            assert_eq!(m.tag(&words, Some(DEFAULT_BEAM)), gold);
        }
    }

    #[test]
    fn ing_suffix_predicts_verb() {
        let corpus = [
            sent("running/VERB dog/NOUN"),
            sent("singing/VERB cat/NOUN tree/NOUN"),
            sent("eating/VERB house/NOUN"),
            sent("walking/VERB road/NOUN big/ADJ"),
        ];
        let m = TrigramHmm::train(&corpus, HmmConfig::default()).unwrap();
        let dist = m.suffix_distribution("jumping");
        assert!((dist.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let verb = m.tag_index("VERB").unwrap();
        let mode = (0..dist.len()).max_by(|&a, &b| dist[a].total_cmp(&dist[b])).unwrap();
        assert_eq!(mode, verb);
        assert!(dist[verb] > 0.9);
    }

    #[test]
    fn unmatched_suffix_gives_class_prior() {
        let corpus = [sent("ab/A cb/B db/A")];
        let m = TrigramHmm::train(&corpus, HmmConfig::default()).unwrap();
        // Lowercase class prior: A twice, B once.
        let dist = m.suffix_distribution("zzz");
        assert!((dist[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((dist[1] - 1.0 / 3.0).abs() < 1e-12);
        // No capitalized rare words: falls back to the global tag prior.
        assert_eq!(m.suffix_distribution("Zzz"), m.tag_prior);
    }

    #[test]
    fn capitalization_selects_the_submodel() {
        let corpus = [sent("Paris/N sings/V London/N walks/V")];
        let m = TrigramHmm::train(&corpus, HmmConfig::default()).unwrap();
        let n = m.tag_index("N").unwrap();
        let v = m.tag_index("V").unwrap();
        assert!(m.suffix_distribution("Xyz")[n] > 0.99);
        assert!(m.suffix_distribution("xyz")[v] > 0.99);
    }

    #[test]
    fn suffixes_are_character_based() {
        let s: Vec<&str> = suffixes_of("née", 10).collect();
        assert_eq!(s, ["", "e", "ée", "née"]);
        let s: Vec<&str> = suffixes_of("abcdef", 3).collect();
        assert_eq!(s, ["", "f", "ef", "def"]);
    }

    #[test]
    fn accuracy_counts() {
        let gold = vec![vec!["A", "B", "C", "D"]];
        assert_eq!(accuracy(&gold, &gold, None).unwrap().fraction(), 1.0);
        let pred = vec![vec!["A", "B", "C", "X"]];
        assert_eq!(accuracy(&pred, &gold, None).unwrap().fraction(), 0.75);
        assert!(accuracy(&pred, &[vec!["A"]], None).is_err());
    }

    #[test]
    fn mapped_accuracy_merges_fine_tags() {
        let ptb = TagMapping::english_ptb();
        let acc = accuracy(&[vec!["VBZ"]], &[vec!["VBD"]], Some(&ptb)).unwrap();
        assert_eq!(acc.fraction(), 1.0);
        assert_eq!(accuracy(&[vec!["VBZ"]], &[vec!["VBD"]], None).unwrap().fraction(), 0.0);
        assert!(matches!(
            accuracy(&[vec!["QQ"]], &[vec!["VBD"]], Some(&ptb)),
            Err(HmmError::UnknownFineTag(_))
        ));
    }

    #[test]
    fn model_round_trip_is_byte_stable() {
        let corpus = [sent("the/D dog/N barks/V"), sent("a/D cat/N")];
        let m = TrigramHmm::train(&corpus, HmmConfig::default()).unwrap();
        let bytes = m.to_bytes();
        let again = TrigramHmm::train(&corpus, HmmConfig::default()).unwrap().to_bytes();
        assert_eq!(bytes, again);
        let loaded = TrigramHmm::load(bytes.as_slice()).unwrap();
        assert_eq!(loaded.to_bytes(), bytes);
        assert_eq!(loaded.lambdas(), m.lambdas());
        assert!(TrigramHmm::load(&b"{}"[..]).is_err());
    }
}
