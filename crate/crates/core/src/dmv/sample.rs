//! Drawing tagged trees from the generative model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Direction, DmvParameters, Head};
use crate::tagset::UniversalTag;

struct Node {
    head: Head,
    left: Vec<usize>,
    right: Vec<usize>,
}

fn draw_dependent<G: Rng>(params: &DmvParameters, head: Head, dir: Direction, rng: &mut G) -> UniversalTag {
    let mut u: f64 = rng.gen();
    let mut last = None;
    for &t in UniversalTag::ALL.iter() {
        let p = params.attach(head, t, dir);
        if p <= 0.0 {
            continue;
        }
        last = Some(t);
        if u < p {
            return t;
        }
        u -= p;
    }
    last.expect("attachment row has support")
}

/// Samples one sentence and its heads (0 for the root). Returns `None` when
/// the draw is empty or grows past `max_len` tokens.
pub fn sample_sentence<G: Rng>(
    params: &DmvParameters,
    rng: &mut G,
    max_len: usize,
) -> Option<(Vec<UniversalTag>, Vec<usize>)> {
    let mut nodes = vec![Node {
        head: Head::Root,
        left: Vec::new(),
        right: Vec::new(),
    }];
    let mut pending = vec![0];
    while let Some(id) = pending.pop() {
        let head = nodes[id].head;
        let dirs: &[Direction] = if head == Head::Root { &[Direction::Right] } else { &Direction::BOTH };
        for &dir in dirs {
            let mut adjacent = true;
            while rng.gen::<f64>() >= params.stop(head, dir, adjacent) {
                if nodes.len() > max_len {
                    return None;
                }
                let tag = draw_dependent(params, head, dir, rng);
                let child = nodes.len();
                nodes.push(Node {
                    head: Head::Tag(tag),
                    left: Vec::new(),
                    right: Vec::new(),
                });
                match dir {
                    Direction::Left => nodes[id].left.push(child),
                    Direction::Right => nodes[id].right.push(child),
                }
                pending.push(child);
                adjacent = false;
            }
        }
    }
    if nodes.len() == 1 {
        return None;
    }

    // Dependents were generated closest first, so the left list is read
    // backwards.
    let mut order = Vec::with_capacity(nodes.len() - 1);
    fn walk(nodes: &[Node], id: usize, order: &mut Vec<usize>) {
        for &c in nodes[id].left.iter().rev() {
            walk(nodes, c, order);
        }
        if id != 0 {
            order.push(id);
        }
        for &c in &nodes[id].right {
            walk(nodes, c, order);
        }
    }
    walk(&nodes, 0, &mut order);
    let mut position = vec![0; nodes.len()];
    for (i, &id) in order.iter().enumerate() {
        position[id] = i + 1;
    }
    let mut heads = vec![0; order.len()];
    for (id, node) in nodes.iter().enumerate() {
        for &c in node.left.iter().chain(&node.right) {
            heads[position[c] - 1] = position[id];
        }
    }
    let tags = order
        .iter()
        .map(|&id| match nodes[id].head {
            Head::Tag(t) => t,
            Head::Root => unreachable!(),
        })
        .collect();
    Some((tags, heads))
}

/// `count` sentences of at most `max_len` tokens, redrawing rejected ones.
pub fn sample_corpus(
    params: &DmvParameters,
    count: usize,
    max_len: usize,
    seed: u64,
) -> (Vec<Vec<UniversalTag>>, Vec<Vec<usize>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tags = Vec::with_capacity(count);
    let mut heads = Vec::with_capacity(count);
    while tags.len() < count {
        if let Some((t, h)) = sample_sentence(params, &mut rng, max_len) {
            tags.push(t);
            heads.push(h);
        }
    }
    (tags, heads)
}
