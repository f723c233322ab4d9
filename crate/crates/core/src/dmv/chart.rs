//! Split-head chart over positions `0..=n`, position 0 being the root.
//!
//! Items, for head `h`:
//! - `R[h][j]`: `h` with right dependents spanning `h..=j`, still open;
//! - `SR[h][j]`: the same with the right stop decision taken;
//! - `IR[h][k]`: `h` has just taken `k` as its outermost right dependent,
//!   with `k`'s left side sealed;
//! - `L`, `SL`, `IL` mirror these on the left.
//!
//! The root only has right items, and the sentence weight is `SR[0][n]`.

use super::{attach_slot, stop_slot, DependencyTree, Direction, DmvError, DmvParameters, ExpectedCounts, RuleSet};
use crate::tagset::UniversalTag;

const L: usize = Direction::Left as usize;
const R: usize = Direction::Right as usize;

struct Scorer<'a> {
    params: &'a DmvParameters,
    /// Parameter head index per position.
    head: Vec<usize>,
    /// Tag index per position; position 0 is unused.
    tag: Vec<usize>,
    bonus: [[f64; super::N_TAGS]; super::N_HEADS],
}

impl<'a> Scorer<'a> {
    fn new(sentence: &[UniversalTag], params: &'a DmvParameters, rules: Option<&RuleSet>) -> Self {
        let mut head = vec![super::Head::Root.index()];
        let mut tag = vec![0];
        for t in sentence {
            head.push(t.index());
            tag.push(t.index());
        }
        Scorer {
            params,
            head,
            tag,
            bonus: rules.map(RuleSet::table).unwrap_or([[0.0; super::N_TAGS]; super::N_HEADS]),
        }
    }

    fn stop_slot(&self, h: usize, dir: usize, adjacent: bool) -> usize {
        stop_slot(self.head[h], dir, adjacent)
    }

    fn stop(&self, h: usize, dir: usize, adjacent: bool) -> f64 {
        self.params.stop[self.stop_slot(h, dir, adjacent)]
    }

    fn cont(&self, h: usize, dir: usize, adjacent: bool) -> f64 {
        1.0 - self.stop(h, dir, adjacent)
    }

    fn attach_slot(&self, h: usize, d: usize, dir: usize) -> usize {
        attach_slot(self.head[h], dir, self.tag[d])
    }

    fn log_bonus(&self, h: usize, d: usize) -> f64 {
        self.bonus[self.head[h]][self.tag[d]]
    }

    fn arc(&self, h: usize, d: usize, dir: usize) -> f64 {
        self.params.attach[self.attach_slot(h, d, dir)] * self.log_bonus(h, d).exp()
    }
}

/// Expected event counts for one sentence and its log weight (the
/// log-likelihood when no rules are given).
pub fn inside_outside(
    sentence: &[UniversalTag],
    params: &DmvParameters,
    rules: Option<&RuleSet>,
) -> Result<(ExpectedCounts, f64), DmvError> {
    let n = sentence.len();
    if n == 0 {
        return Err(DmvError::EmptySentence);
    }
    let s = Scorer::new(sentence, params, rules);
    let w = n + 1;
    let at = |a: usize, b: usize| a * w + b;
    let zeros = vec![0.0; w * w];
    let (mut r, mut l, mut sr, mut sl, mut ir, mut il) =
        (zeros.clone(), zeros.clone(), zeros.clone(), zeros.clone(), zeros.clone(), zeros.clone());

    for h in 0..=n {
        r[at(h, h)] = 1.0;
        sr[at(h, h)] = s.stop(h, R, true);
        if h > 0 {
            l[at(h, h)] = 1.0;
            sl[at(h, h)] = s.stop(h, L, true);
        }
    }
    for width in 1..=n {
        for h in 0..=n - width {
            let k = h + width;
            let acc: f64 = (h..k).map(|m| r[at(h, m)] * sl[at(k, m + 1)] * s.cont(h, R, m == h)).sum();
            ir[at(h, k)] = acc * s.arc(h, k, R);
        }
        for k in 1..=n - width {
            let h = k + width;
            let acc: f64 = (k..h).map(|m| sr[at(k, m)] * l[at(h, m + 1)] * s.cont(h, L, m + 1 == h)).sum();
            il[at(h, k)] = acc * s.arc(h, k, L);
        }
        for h in 0..=n - width {
            let j = h + width;
            let acc: f64 = (h + 1..=j).map(|k| ir[at(h, k)] * sr[at(k, j)]).sum();
            r[at(h, j)] = acc;
            sr[at(h, j)] = acc * s.stop(h, R, false);
        }
        for i in 1..=n - width {
            let h = i + width;
            let acc: f64 = (i..h).map(|k| il[at(h, k)] * sl[at(k, i)]).sum();
            l[at(h, i)] = acc;
            sl[at(h, i)] = acc * s.stop(h, L, false);
        }
    }

    let z = sr[at(0, n)];
    if !(z > 0.0 && z.is_finite()) {
        return Err(DmvError::ZeroProbability);
    }

    // Outside pass: visit items in reverse inside order, pushing each
    // item's outside weight down to the items it was built from.
    let (mut o_r, mut o_l, mut o_sr, mut o_sl, mut o_ir, mut o_il) =
        (zeros.clone(), zeros.clone(), zeros.clone(), zeros.clone(), zeros.clone(), zeros);
    let mut counts = ExpectedCounts::default();
    o_sr[at(0, n)] = 1.0;
    for width in (1..=n).rev() {
        for h in 0..=n - width {
            let j = h + width;
            let g = o_sr[at(h, j)];
            let st = s.stop(h, R, false);
            o_r[at(h, j)] += g * st;
            counts.stop[s.stop_slot(h, R, false)] += g * r[at(h, j)] * st / z;
        }
        for i in 1..=n - width {
            let h = i + width;
            let g = o_sl[at(h, i)];
            let st = s.stop(h, L, false);
            o_l[at(h, i)] += g * st;
            counts.stop[s.stop_slot(h, L, false)] += g * l[at(h, i)] * st / z;
        }
        for h in 0..=n - width {
            let j = h + width;
            let g = o_r[at(h, j)];
            for k in h + 1..=j {
                o_ir[at(h, k)] += g * sr[at(k, j)];
                o_sr[at(k, j)] += g * ir[at(h, k)];
            }
        }
        for i in 1..=n - width {
            let h = i + width;
            let g = o_l[at(h, i)];
            for k in i..h {
                o_il[at(h, k)] += g * sl[at(k, i)];
                o_sl[at(k, i)] += g * il[at(h, k)];
            }
        }
        for h in 0..=n - width {
            let k = h + width;
            let g = o_ir[at(h, k)];
            let a = s.arc(h, k, R);
            let slot = s.attach_slot(h, k, R);
            for m in h..k {
                let c = s.cont(h, R, m == h);
                let (left, right) = (r[at(h, m)], sl[at(k, m + 1)]);
                o_r[at(h, m)] += g * right * c * a;
                o_sl[at(k, m + 1)] += g * left * c * a;
                let e = g * left * right * c * a / z;
                counts.cont[s.stop_slot(h, R, m == h)] += e;
                counts.attach[slot] += e;
            }
        }
        for k in 1..=n - width {
            let h = k + width;
            let g = o_il[at(h, k)];
            let a = s.arc(h, k, L);
            let slot = s.attach_slot(h, k, L);
            for m in k..h {
                let c = s.cont(h, L, m + 1 == h);
                let (left, right) = (sr[at(k, m)], l[at(h, m + 1)]);
                o_sr[at(k, m)] += g * right * c * a;
                o_l[at(h, m + 1)] += g * left * c * a;
                let e = g * left * right * c * a / z;
                counts.cont[s.stop_slot(h, L, m + 1 == h)] += e;
                counts.attach[slot] += e;
            }
        }
    }
    for h in 0..=n {
        counts.stop[s.stop_slot(h, R, true)] += o_sr[at(h, h)] * sr[at(h, h)] / z;
        if h > 0 {
            counts.stop[s.stop_slot(h, L, true)] += o_sl[at(h, h)] * sl[at(h, h)] / z;
        }
    }
    Ok((counts, z.ln()))
}

/// Log weight, then total arc length and sum of head positions as
/// tie-breakers (smaller wins).
#[derive(Clone, Copy, Debug)]
struct Score {
    lp: f64,
    len: usize,
    heads: usize,
}

const IMPOSSIBLE: Score = Score {
    lp: f64::NEG_INFINITY,
    len: 0,
    heads: 0,
};

impl Score {
    fn unit(lp: f64) -> Score {
        Score { lp, len: 0, heads: 0 }
    }

    fn then(self, other: Score) -> Score {
        Score {
            lp: self.lp + other.lp,
            len: self.len + other.len,
            heads: self.heads + other.heads,
        }
    }

    fn beats(&self, other: &Score) -> bool {
        if self.lp == f64::NEG_INFINITY {
            return false;
        }
        if other.lp == f64::NEG_INFINITY {
            return true;
        }
        let tol = 1e-12 * self.lp.abs().max(other.lp.abs()).max(1.0);
        if (self.lp - other.lp).abs() > tol {
            return self.lp > other.lp;
        }
        (self.len, self.heads) < (other.len, other.heads)
    }
}

fn argbest(candidates: impl Iterator<Item = (usize, Score)>) -> (usize, Score) {
    let mut best = (usize::MAX, IMPOSSIBLE);
    for (i, score) in candidates {
        if best.0 == usize::MAX || score.beats(&best.1) {
            best = (i, score);
        }
    }
    best
}

enum Item {
    R(usize, usize),
    L(usize, usize),
    IR(usize, usize),
    IL(usize, usize),
}

/// Most probable tree. Near-ties within a relative 1e-12 go to the tree
/// with the smaller total arc length, then the smaller sum of head
/// positions.
pub fn decode(
    sentence: &[UniversalTag],
    params: &DmvParameters,
    rules: Option<&RuleSet>,
) -> Result<DependencyTree, DmvError> {
    let n = sentence.len();
    if n == 0 {
        return Err(DmvError::EmptySentence);
    }
    let s = Scorer::new(sentence, params, rules);
    let w = n + 1;
    let at = |a: usize, b: usize| a * w + b;
    let ln = |p: f64| Score::unit(p.ln());
    let arc = |h: usize, d: usize, dir: usize| Score {
        lp: s.params.attach[s.attach_slot(h, d, dir)].ln() + s.log_bonus(h, d),
        len: h.abs_diff(d),
        heads: h,
    };
    let blank = vec![IMPOSSIBLE; w * w];
    let (mut r, mut l, mut sr, mut sl, mut ir, mut il) =
        (blank.clone(), blank.clone(), blank.clone(), blank.clone(), blank.clone(), blank);
    let mut back = vec![[0usize; 4]; w * w];
    const BR: usize = 0;
    const BL: usize = 1;
    const BIR: usize = 2;
    const BIL: usize = 3;

    for h in 0..=n {
        r[at(h, h)] = Score::unit(0.0);
        sr[at(h, h)] = ln(s.stop(h, R, true));
        if h > 0 {
            l[at(h, h)] = Score::unit(0.0);
            sl[at(h, h)] = ln(s.stop(h, L, true));
        }
    }
    for width in 1..=n {
        for h in 0..=n - width {
            let k = h + width;
            let (m, best) = argbest(
                (h..k).map(|m| (m, r[at(h, m)].then(sl[at(k, m + 1)]).then(ln(s.cont(h, R, m == h))))),
            );
            ir[at(h, k)] = best.then(arc(h, k, R));
            back[at(h, k)][BIR] = m;
        }
        for k in 1..=n - width {
            let h = k + width;
            let (m, best) = argbest(
                (k..h).map(|m| (m, sr[at(k, m)].then(l[at(h, m + 1)]).then(ln(s.cont(h, L, m + 1 == h))))),
            );
            il[at(h, k)] = best.then(arc(h, k, L));
            back[at(h, k)][BIL] = m;
        }
        for h in 0..=n - width {
            let j = h + width;
            let (k, best) = argbest((h + 1..=j).map(|k| (k, ir[at(h, k)].then(sr[at(k, j)]))));
            r[at(h, j)] = best;
            sr[at(h, j)] = best.then(ln(s.stop(h, R, false)));
            back[at(h, j)][BR] = k;
        }
        for i in 1..=n - width {
            let h = i + width;
            let (k, best) = argbest((i..h).map(|k| (k, il[at(h, k)].then(sl[at(k, i)]))));
            l[at(h, i)] = best;
            sl[at(h, i)] = best.then(ln(s.stop(h, L, false)));
            back[at(h, i)][BL] = k;
        }
    }
    if sr[at(0, n)].lp == f64::NEG_INFINITY {
        return Err(DmvError::ZeroProbability);
    }

    let mut heads = vec![0; n];
    let mut stack = vec![Item::R(0, n)];
    while let Some(item) = stack.pop() {
        match item {
            Item::R(h, j) if h != j => {
                let k = back[at(h, j)][BR];
                stack.push(Item::IR(h, k));
                stack.push(Item::R(k, j));
            }
            Item::L(h, i) if h != i => {
                let k = back[at(h, i)][BL];
                stack.push(Item::IL(h, k));
                stack.push(Item::L(k, i));
            }
            Item::IR(h, k) => {
                heads[k - 1] = h;
                let m = back[at(h, k)][BIR];
                stack.push(Item::R(h, m));
                stack.push(Item::L(k, m + 1));
            }
            Item::IL(h, k) => {
                heads[k - 1] = h;
                let m = back[at(h, k)][BIL];
                stack.push(Item::R(k, m));
                stack.push(Item::L(h, m + 1));
            }
            _ => {}
        }
    }
    Ok(DependencyTree { heads })
}
