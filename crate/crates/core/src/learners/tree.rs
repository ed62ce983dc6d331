//! Second-order regression trees shared by boosting and the screening forest.

use alloc::vec::Vec;

use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;

const LEAF: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    /// Split input, or `u32::MAX` for a leaf.
    pub feature: u32,
    pub threshold: f64,
    pub left: u32,
    pub right: u32,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut k = 0usize;
        loop {
            let node = &self.nodes[k];
            if node.feature == LEAF {
                return node.value;
            }
            k = if x[node.feature as usize] <= node.threshold {
                node.left as usize
            } else {
                node.right as usize
            };
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.feature == LEAF).count()
    }
}

pub(super) struct GrowParams {
    pub max_depth: Option<usize>,
    /// Minimum `count` mass on each side of a split.
    pub min_leaf: f64,
    /// Inputs tried per node; `None` tries all of them.
    pub mtry: Option<usize>,
}

/// Grows a tree on `samples` maximising `G_L^2/H_L + G_R^2/H_R - G^2/H`,
/// with leaf values `G/H`. For squared loss (`g = w r`, `h = w`) the gain is
/// the weighted sum-of-squares reduction, which is added to `importance`.
#[allow(clippy::too_many_arguments)]
pub(super) fn grow(
    x: &Matrix,
    g: &[f64],
    h: &[f64],
    count: &[f64],
    samples: Vec<usize>,
    params: &GrowParams,
    mut rng: Option<&mut ChaCha8Rng>,
    mut importance: Option<&mut [f64]>,
) -> Tree {
    let p = x.cols();
    let mut nodes: Vec<Node> = Vec::new();
    // (node slot, samples, depth)
    let mut stack: Vec<(usize, Vec<usize>, usize)> = Vec::new();
    nodes.push(leaf(0.0));
    stack.push((0, samples, 0));
    let mut order: Vec<usize> = Vec::new();

    while let Some((slot, idx, depth)) = stack.pop() {
        let (gs, hs, cs) = idx.iter().fold((0.0, 0.0, 0.0), |a, &i| (a.0 + g[i], a.1 + h[i], a.2 + count[i]));
        let value = if hs > 0.0 { gs / hs } else { 0.0 };
        nodes[slot] = leaf(value);
        let depth_ok = params.max_depth.is_none_or(|d| depth < d);
        if !depth_ok || cs < 2.0 * params.min_leaf || !(hs > 0.0) || idx.len() < 2 {
            continue;
        }
        let parent = gs * gs / hs;
        let features: Vec<usize> = match (params.mtry, rng.as_deref_mut()) {
            (Some(m), Some(r)) if m < p => {
                let mut f = sample(r, p, m).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..p).collect(),
        };
        let mut best: Option<(f64, usize, f64)> = None;
        for &f in &features {
            order.clear();
            order.extend_from_slice(&idx);
            order.sort_by(|&a, &b| x.get(a, f).total_cmp(&x.get(b, f)));
            let (mut gl, mut hl, mut cl) = (0.0, 0.0, 0.0);
            for k in 0..order.len() - 1 {
                let i = order[k];
                gl += g[i];
                hl += h[i];
                cl += count[i];
                let (xa, xb) = (x.get(i, f), x.get(order[k + 1], f));
                if xa == xb || cl < params.min_leaf || cs - cl < params.min_leaf {
                    continue;
                }
                let hr = hs - hl;
                if !(hl > 0.0 && hr > 0.0) {
                    continue;
                }
                let gr = gs - gl;
                let gain = gl * gl / hl + gr * gr / hr - parent;
                if best.is_none_or(|b| gain > b.0) {
                    best = Some((gain, f, 0.5 * (xa + xb)));
                }
            }
        }
        let Some((gain, f, thr)) = best else { continue };
        if !(gain > 1e-12 * parent.abs().max(1e-300)) {
            continue;
        }
        if let Some(imp) = importance.as_deref_mut() {
            imp[f] += gain;
        }
        let (left, right): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| x.get(i, f) <= thr);
        let l = nodes.len();
        nodes.push(leaf(0.0));
        nodes.push(leaf(0.0));
        nodes[slot] = Node {
            feature: f as u32,
            threshold: thr,
            left: l as u32,
            right: (l + 1) as u32,
            value,
        };
        stack.push((l + 1, right, depth + 1));
        stack.push((l, left, depth + 1));
    }
    Tree { nodes }
}

fn leaf(value: f64) -> Node {
    Node {
        feature: LEAF,
        threshold: 0.0,
        left: 0,
        right: 0,
        value,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn single_split_recovers_step() {
        let rows: Vec<[f64; 2]> = (0..20).map(|i| [i as f64, ((i * 3) % 7) as f64]).collect();
        let x = Matrix::from_rows(&rows);
        let y: Vec<f64> = (0..20).map(|i| if i < 10 { 1.0 } else { 5.0 }).collect();
        let w = vec![1.0; 20];
        let params = GrowParams { max_depth: Some(1), min_leaf: 1.0, mtry: None };
        let tree = grow(&x, &y, &w, &w, (0..20).collect(), &params, None, None);
        assert_eq!(tree.n_leaves(), 2);
        assert_eq!(tree.predict(&[3.0, 0.0]), 1.0);
        assert_eq!(tree.predict(&[15.0, 0.0]), 5.0);
        assert_eq!(tree.nodes[0].threshold, 9.5);
    }

    #[test]
    fn min_leaf_blocks_small_children() {
        let rows: Vec<[f64; 1]> = (0..6).map(|i| [i as f64]).collect();
        let x = Matrix::from_rows(&rows);
        let y = [0.0, 0.0, 0.0, 0.0, 0.0, 9.0];
        let w = [1.0; 6];
        let params = GrowParams { max_depth: None, min_leaf: 2.0, mtry: None };
        let tree = grow(&x, &y, &w, &w, (0..6).collect(), &params, None, None);
        assert!(tree.nodes.iter().all(|n| n.feature == LEAF || n.threshold != 4.5));
    }
}
