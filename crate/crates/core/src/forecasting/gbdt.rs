//! Gradient-boosted regression trees, squared loss, exact splits.
//!
//! Every feature column is sorted once per fit. A tree is grown level by
//! level: one pass over each sorted column finds the best threshold for all
//! open nodes of the current level at once.

use super::{FittedModel, ForecasterConfig};
use ndarray::{Array2, ArrayView2};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// Regression tree; node 0 is the root. Leaves hold unscaled mean
/// residuals, the learning rate is applied at prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut k = 0;
        loop {
            match &self.nodes[k] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => k = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], k: usize) -> usize {
            match &nodes[k] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

const NOT_SAMPLED: usize = usize::MAX;

#[derive(Debug, Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Totals {
    sum: f64,
    count: usize,
}

/// Best split per open node for one feature.
fn scan_feature(
    feature: usize,
    order: &[u32],
    x: ArrayView2<'_, f64>,
    residual: &[f64],
    slot_of: &[usize],
    totals: &[Totals],
    min_leaf: usize,
) -> Vec<Option<Candidate>> {
    let slots = totals.len();
    let mut left = vec![Totals::default(); slots];
    let mut last = vec![f64::NAN; slots];
    let mut best: Vec<Option<Candidate>> = vec![None; slots];
    for &row in order {
        let row = row as usize;
        let slot = slot_of[row];
        if slot == NOT_SAMPLED {
            continue;
        }
        let v = x[[row, feature]];
        let l = left[slot];
        let tot = totals[slot];
        if l.count >= min_leaf && tot.count - l.count >= min_leaf && v > last[slot] {
            let r_sum = tot.sum - l.sum;
            let r_count = tot.count - l.count;
            let gain =
                l.sum * l.sum / l.count as f64 + r_sum * r_sum / r_count as f64 - tot.sum * tot.sum / tot.count as f64;
            if gain > 0.0 && best[slot].is_none_or(|b| gain > b.gain) {
                let a = last[slot];
                let mut threshold = a + (v - a) / 2.0;
                if threshold >= v {
                    threshold = a;
                }
                best[slot] = Some(Candidate {
                    gain,
                    feature,
                    threshold,
                });
            }
        }
        left[slot].sum += residual[row];
        left[slot].count += 1;
        last[slot] = v;
    }
    best
}

fn grow_tree(
    x: ArrayView2<'_, f64>,
    residual: &[f64],
    orders: &[Vec<u32>],
    sampled: &[bool],
    config: &ForecasterConfig,
) -> Tree {
    let rows = x.nrows();
    // node id per row, NOT_SAMPLED for rows outside this tree's sample
    let mut node_of: Vec<usize> = sampled.iter().map(|s| if *s { 0 } else { NOT_SAMPLED }).collect();
    let mut nodes: Vec<Node> = vec![Node::Leaf { value: 0.0 }];
    let mut open: Vec<usize> = vec![0];

    for _ in 0..config.max_depth {
        if open.is_empty() {
            break;
        }
        let mut slot_of_node = vec![NOT_SAMPLED; nodes.len()];
        for (slot, &node) in open.iter().enumerate() {
            slot_of_node[node] = slot;
        }
        let mut totals = vec![Totals::default(); open.len()];
        let slot_of: Vec<usize> = (0..rows)
            .map(|r| match node_of[r] {
                NOT_SAMPLED => NOT_SAMPLED,
                nd => slot_of_node[nd],
            })
            .collect();
        for r in 0..rows {
            if slot_of[r] != NOT_SAMPLED {
                totals[slot_of[r]].sum += residual[r];
                totals[slot_of[r]].count += 1;
            }
        }
        let per_feature: Vec<Vec<Option<Candidate>>> = orders
            .par_iter()
            .enumerate()
            .map(|(f, order)| scan_feature(f, order, x, residual, &slot_of, &totals, config.min_samples_leaf))
            .collect();

        let mut next_open = Vec::new();
        let mut splits: Vec<Option<(usize, f64, usize, usize)>> = vec![None; open.len()];
        for (slot, &node) in open.iter().enumerate() {
            // features scanned in index order; ties keep the lower index
            let mut best: Option<Candidate> = None;
            for cands in &per_feature {
                if let Some(c) = cands[slot] {
                    if best.is_none_or(|b| c.gain > b.gain) {
                        best = Some(c);
                    }
                }
            }
            if let Some(c) = best {
                let left = nodes.len();
                let right = left + 1;
                nodes.push(Node::Leaf { value: 0.0 });
                nodes.push(Node::Leaf { value: 0.0 });
                nodes[node] = Node::Split {
                    feature: c.feature,
                    threshold: c.threshold,
                    left,
                    right,
                };
                splits[slot] = Some((c.feature, c.threshold, left, right));
                next_open.push(left);
                next_open.push(right);
            }
        }
        for r in 0..rows {
            if slot_of[r] == NOT_SAMPLED {
                continue;
            }
            if let Some((f, thr, left, right)) = splits[slot_of[r]] {
                node_of[r] = if x[[r, f]] <= thr { left } else { right };
            }
        }
        open = next_open;
    }

    let mut sums = vec![Totals::default(); nodes.len()];
    for r in 0..rows {
        if node_of[r] != NOT_SAMPLED {
            sums[node_of[r]].sum += residual[r];
            sums[node_of[r]].count += 1;
        }
    }
    for (k, node) in nodes.iter_mut().enumerate() {
        if let Node::Leaf { value } = node {
            *value = if sums[k].count > 0 {
                sums[k].sum / sums[k].count as f64
            } else {
                0.0
            };
        }
    }
    Tree { nodes }
}

/// Mean that is exact when every value is equal.
pub(super) fn stable_mean(y: &[f64]) -> f64 {
    if y.iter().all(|v| *v == y[0]) {
        y[0]
    } else {
        y.iter().sum::<f64>() / y.len() as f64
    }
}

pub(super) fn fit(x: &Array2<f64>, y: &[f64], config: &ForecasterConfig) -> FittedModel {
    let standard = x.as_standard_layout();
    let x = standard.view();
    let (rows, d) = x.dim();
    let orders: Vec<Vec<u32>> = (0..d)
        .into_par_iter()
        .map(|f| {
            let mut idx: Vec<u32> = (0..rows as u32).collect();
            idx.sort_by(|&a, &b| x[[a as usize, f]].total_cmp(&x[[b as usize, f]]).then(a.cmp(&b)));
            idx
        })
        .collect();

    let base = stable_mean(y);
    let mut pred = vec![base; rows];
    let mut residual = vec![0.0; rows];
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let take = ((rows as f64 * config.subsample).round() as usize).clamp(1, rows);
    let mut trees = Vec::with_capacity(config.trees);

    for _ in 0..config.trees {
        for r in 0..rows {
            residual[r] = y[r] - pred[r];
        }
        let mut sampled = vec![take == rows; rows];
        if take < rows {
            for r in sample(&mut rng, rows, take) {
                sampled[r] = true;
            }
        }
        let tree = grow_tree(x, &residual, &orders, &sampled, config);
        let empty = tree.nodes.len() == 1 && matches!(tree.nodes[0], Node::Leaf { value } if value == 0.0);
        if empty && take == rows {
            // nothing left to fit; further trees would be identical
            trees.push(tree);
            break;
        }
        for r in 0..rows {
            let row = x.row(r);
            pred[r] += config.learning_rate * tree.predict(row.as_slice().expect("standard layout"));
        }
        trees.push(tree);
    }
    FittedModel::Gbdt { base, trees }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_split_on_step_function() {
        let x = Array2::from_shape_fn((20, 1), |(r, _)| r as f64);
        let y: Vec<f64> = (0..20).map(|r| if r < 8 { -1.0 } else { 1.0 }).collect();
        let cfg = ForecasterConfig {
            trees: 1,
            max_depth: 1,
            learning_rate: 1.0,
            ..Default::default()
        };
        let FittedModel::Gbdt { base, trees } = fit(&x, &y, &cfg) else {
            unreachable!()
        };
        let Node::Split { feature, threshold, .. } = trees[0].nodes[0] else {
            panic!("root should split")
        };
        assert_eq!(feature, 0);
        assert_eq!(threshold, 7.5);
        assert_eq!(base + trees[0].predict(&[3.0]), -1.0);
        assert_eq!(base + trees[0].predict(&[12.0]), 1.0);
    }

    #[test]
    fn split_gain_matches_brute_force() {
        // best single split by exhaustive search over thresholds
        let xs = [0.3, 0.1, 0.9, 0.5, 0.7, 0.2, 0.8, 0.4, 0.6, 0.0];
        let ys = [1.0, 3.0, -2.0, 0.5, -1.0, 2.0, -1.5, 0.7, 0.0, 2.5];
        let mut best = (f64::NEG_INFINITY, 0.0);
        for &thr in &xs {
            let (l, r): (Vec<f64>, Vec<f64>) = {
                let l = xs
                    .iter()
                    .zip(&ys)
                    .filter(|(x, _)| **x <= thr)
                    .map(|(_, y)| *y)
                    .collect::<Vec<_>>();
                let r = xs
                    .iter()
                    .zip(&ys)
                    .filter(|(x, _)| **x > thr)
                    .map(|(_, y)| *y)
                    .collect::<Vec<_>>();
                (l, r)
            };
            if l.is_empty() || r.is_empty() {
                continue;
            }
            let sse = |v: &[f64]| {
                let m = v.iter().sum::<f64>() / v.len() as f64;
                v.iter().map(|a| (a - m) * (a - m)).sum::<f64>()
            };
            let score = -(sse(&l) + sse(&r));
            if score > best.0 {
                best = (score, thr);
            }
        }
        let x = Array2::from_shape_vec((10, 1), xs.to_vec()).unwrap();
        let cfg = ForecasterConfig {
            trees: 1,
            max_depth: 1,
            ..Default::default()
        };
        let FittedModel::Gbdt { trees, .. } = fit(&x, &ys, &cfg) else {
            unreachable!()
        };
        let Node::Split { threshold, .. } = trees[0].nodes[0] else {
            panic!("root should split")
        };
        let next = xs.iter().copied().filter(|v| *v > best.1).fold(f64::INFINITY, f64::min);
        assert!(threshold >= best.1 && threshold < next);
    }

    #[test]
    fn depth_is_bounded() {
        let x = Array2::from_shape_fn((64, 2), |(r, c)| ((r * 7 + c * 13) % 64) as f64);
        let y: Vec<f64> = (0..64).map(|r| ((r * 31) % 17) as f64).collect();
        let cfg = ForecasterConfig {
            trees: 5,
            max_depth: 2,
            ..Default::default()
        };
        let FittedModel::Gbdt { trees, .. } = fit(&x, &y, &cfg) else {
            unreachable!()
        };
        assert!(trees.iter().all(|t| t.depth() <= 2));
    }

    #[test]
    fn min_leaf_respected() {
        let x = Array2::from_shape_fn((30, 1), |(r, _)| r as f64);
        let mut y = vec![0.0; 30];
        y[0] = 100.0;
        let cfg = ForecasterConfig {
            trees: 1,
            max_depth: 1,
            min_samples_leaf: 5,
            ..Default::default()
        };
        let FittedModel::Gbdt { trees, .. } = fit(&x, &y, &cfg) else {
            unreachable!()
        };
        if let Node::Split { threshold, .. } = trees[0].nodes[0] {
            assert!(threshold >= 4.0);
        }
    }
}
