//! Exhaustive oracles shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use unipos::dmv::{Direction, DmvParameters, Head, RootMode, RuleSet};
use unipos::hmm::{TaggedSentence, TrigramHmm};
use unipos::UniversalTag;

pub fn random_corpus(rng: &mut ChaCha8Rng, n_tags: usize) -> Vec<TaggedSentence> {
    let vocab = rng.gen_range(3..10);
    (0..rng.gen_range(2..12))
        .map(|_| {
            (0..rng.gen_range(1..7))
                .map(|_| {
                    let w = rng.gen_range(0..vocab);
                    // Words lean toward one tag but stay ambiguous.
                    let t = if rng.gen_bool(0.7) { w % n_tags } else { rng.gen_range(0..n_tags) };
                    (format!("w{w}"), format!("T{t}"))
                })
                .collect()
        })
        .collect()
}

pub fn random_words(rng: &mut ChaCha8Rng) -> Vec<String> {
    (0..rng.gen_range(1..=6))
        .map(|_| match rng.gen_range(0..5) {
            0 => format!("unk{}", rng.gen_range(0..3)),
            1 => format!("W{}", rng.gen_range(0..3)),
            _ => format!("w{}", rng.gen_range(0..9)),
        })
        .collect()
}

pub fn score(model: &TrigramHmm, words: &[String], tags: &[usize]) -> f64 {
    let mut total = 0.0;
    let mut prev2 = None;
    let mut prev1 = None;
    for (w, &t) in words.iter().zip(tags) {
        total += model.log_transition(prev2, prev1, Some(t)) + model.log_emissions(w)[t];
        prev2 = prev1;
        prev1 = Some(t);
    }
    total + model.log_transition(prev2, prev1, None)
}

/// Lexicographically first sequence among those with the highest score.
pub fn brute_force(model: &TrigramHmm, words: &[String]) -> Vec<usize> {
    let n_tags = model.tags().len();
    let n = words.len();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for code in 0..n_tags.pow(n as u32) {
        let mut tags = vec![0; n];
        let mut c = code;
        for slot in tags.iter_mut().rev() {
            *slot = c % n_tags;
            c /= n_tags;
        }
        let s = score(model, words, &tags);
        if best.as_ref().is_none_or(|(b, _)| s > *b) {
            best = Some((s, tags));
        }
    }
    best.unwrap().1
}

pub type Event = (u8, Head, Option<UniversalTag>, Direction, bool);

pub fn is_projective_tree(heads: &[usize]) -> bool {
    let n = heads.len();
    for d in 1..=n {
        // Every chain of heads reaches the root within n steps.
        let mut a = d;
        for _ in 0..n {
            if a == 0 {
                break;
            }
            a = heads[a - 1];
        }
        if a != 0 {
            return false;
        }
    }
    for d in 1..=n {
        let h = heads[d - 1];
        let (lo, hi) = if h < d { (h, d) } else { (d, h) };
        for between in lo + 1..hi {
            let mut a = between;
            while a != 0 && a != h {
                a = heads[a - 1];
            }
            if a != h {
                return false;
            }
        }
    }
    true
}

pub fn all_trees(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut heads = vec![0; n];
    loop {
        if is_projective_tree(&heads) {
            out.push(heads.clone());
        }
        let mut i = 0;
        loop {
            if i == n {
                return out;
            }
            heads[i] += 1;
            if heads[i] <= n {
                break;
            }
            heads[i] = 0;
            i += 1;
        }
    }
}

/// Generative weight of one tree, with each event it uses.
pub fn tree_weight(
    tags: &[UniversalTag],
    heads: &[usize],
    p: &DmvParameters,
    rules: Option<&RuleSet>,
) -> (f64, Vec<Event>) {
    let n = tags.len();
    let head_of = |pos: usize| if pos == 0 { Head::Root } else { Head::Tag(tags[pos - 1]) };
    let mut weight = 1.0;
    let mut events = Vec::new();
    for h in 0..=n {
        let hh = head_of(h);
        for dir in [Direction::Left, Direction::Right] {
            if h == 0 && dir == Direction::Left {
                continue;
            }
            let mut deps: Vec<usize> = (1..=n)
                .filter(|&d| heads[d - 1] == h && ((d < h) == (dir == Direction::Left)))
                .collect();
            deps.sort_by_key(|&d| d.abs_diff(h));
            for (i, &d) in deps.iter().enumerate() {
                let dep = tags[d - 1];
                let bonus = rules.map_or(0.0, |r| r.strength(hh, dep));
                weight *= (1.0 - p.stop(hh, dir, i == 0)) * p.attach(hh, dep, dir) * bonus.exp();
                events.push((1, hh, None, dir, i == 0));
                events.push((2, hh, Some(dep), dir, false));
            }
            weight *= p.stop(hh, dir, deps.is_empty());
            events.push((0, hh, None, dir, deps.is_empty()));
        }
    }
    (weight, events)
}

pub fn random_params(rng: &mut ChaCha8Rng, mode: RootMode) -> DmvParameters {
    let support: Vec<UniversalTag> =
        UniversalTag::ALL.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
    let support = if support.is_empty() { vec![UniversalTag::Noun] } else { support };
    let stops: Vec<f64> = (0..13 * 4).map(|_| rng.gen_range(0.05..0.95)).collect();
    let mut it = stops.into_iter();
    DmvParameters::from_fn(&support, mode, |_, _, _| rng.gen_range(0.01..1.0), |_, _, _| it.next().unwrap())
}

pub fn random_rules(rng: &mut ChaCha8Rng, tags: &[UniversalTag]) -> RuleSet {
    let mut rules = RuleSet::new();
    for _ in 0..rng.gen_range(1..4) {
        let head = if rng.gen_bool(0.3) { Head::Root } else { Head::Tag(tags[rng.gen_range(0..tags.len())]) };
        rules.insert(head, tags[rng.gen_range(0..tags.len())], rng.gen_range(0.0..2.0));
    }
    rules
}

pub fn random_sentence(rng: &mut ChaCha8Rng, p: &DmvParameters, n: usize) -> Vec<UniversalTag> {
    let support = p.support();
    (0..n).map(|_| support[rng.gen_range(0..support.len())]).collect()
}

