//! Greedy CART regression tree: splits minimize squared error, leaves hold
//! the mean of their samples.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn predict(&self, x: &[f64]) -> f64 {
        match self {
            TreeNode::Leaf { value } => *value,
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if x[*feature] <= *threshold {
                    left.predict(x)
                } else {
                    right.predict(x)
                }
            }
        }
    }
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    score: f64, // combined children SSE; lower is better
}

pub fn fit_tree(x: &[Vec<f64>], y: &[f64], max_depth: usize, min_leaf: usize) -> TreeNode {
    let indices: Vec<usize> = (0..y.len()).collect();
    grow(x, y, &indices, max_depth, min_leaf)
}

fn mean(y: &[f64], indices: &[usize]) -> f64 {
    indices.iter().map(|&i| y[i]).sum::<f64>() / indices.len() as f64
}

fn grow(x: &[Vec<f64>], y: &[f64], indices: &[usize], depth: usize, min_leaf: usize) -> TreeNode {
    if depth == 0 || indices.len() < 2 * min_leaf {
        return TreeNode::Leaf {
            value: mean(y, indices),
        };
    }
    match best_split(x, y, indices, min_leaf) {
        None => TreeNode::Leaf {
            value: mean(y, indices),
        },
        Some(split) => {
            let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
                .iter()
                .partition(|&&i| x[i][split.feature] <= split.threshold);
            TreeNode::Split {
                feature: split.feature,
                threshold: split.threshold,
                left: Box::new(grow(x, y, &left_idx, depth - 1, min_leaf)),
                right: Box::new(grow(x, y, &right_idx, depth - 1, min_leaf)),
            }
        }
    }
}

/// Scans every feature with a single sorted pass using prefix sums; split
/// thresholds sit midway between consecutive distinct values.
fn best_split(x: &[Vec<f64>], y: &[f64], indices: &[usize], min_leaf: usize) -> Option<BestSplit> {
    let n = indices.len();
    let n_features = x[0].len();
    let total_sum: f64 = indices.iter().map(|&i| y[i]).sum();
    let total_sq: f64 = indices.iter().map(|&i| y[i] * y[i]).sum();
    let parent_sse = total_sq - total_sum * total_sum / n as f64;

    let mut best: Option<BestSplit> = None;
    let mut order: Vec<usize> = indices.to_vec();
    for feature in 0..n_features {
        order.sort_by(|&a, &b| x[a][feature].partial_cmp(&x[b][feature]).unwrap());
        let mut left_sum = 0.0;
        let mut left_sq = 0.0;
        for (pos, &i) in order.iter().enumerate().take(n - 1) {
            left_sum += y[i];
            left_sq += y[i] * y[i];
            let left_n = pos + 1;
            let right_n = n - left_n;
            if left_n < min_leaf || right_n < min_leaf {
                continue;
            }
            let here = x[i][feature];
            let next = x[order[pos + 1]][feature];
            if next <= here {
                continue; // no boundary between equal values
            }
            let right_sum = total_sum - left_sum;
            let right_sq = total_sq - left_sq;
            let score = (left_sq - left_sum * left_sum / left_n as f64)
                + (right_sq - right_sum * right_sum / right_n as f64);
            if best.as_ref().is_none_or(|b| score < b.score) {
                best = Some(BestSplit {
                    feature,
                    threshold: 0.5 * (here + next),
                    score,
                });
            }
        }
    }
    // require a strict improvement so constant targets stay a single leaf
    best.filter(|b| b.score < parent_sse - 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn depth_one_clean_split() {
        // 1-D step data split cleanly at x = 0.5
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 / 10.0 + 0.05]).collect();
        let y: Vec<f64> = (0..10).map(|i| if i < 5 { 0.0 } else { 1.0 }).collect();
        let tree = fit_tree(&x, &y, 1, 1);

        // independent oracle: enumerate every candidate boundary and verify
        // 0.5 minimizes the combined SSE
        let mut best = (f64::INFINITY, 0.0);
        for b in 1..10 {
            let thr = (x[b - 1][0] + x[b][0]) / 2.0;
            let (l, r): (Vec<f64>, Vec<f64>) =
                y.iter().enumerate().partition_map_at(b);
            let sse = sse_around_mean(&l) + sse_around_mean(&r);
            if sse < best.0 {
                best = (sse, thr);
            }
        }
        match tree {
            TreeNode::Split {
                threshold,
                ref left,
                ref right,
                ..
            } => {
                assert_abs_diff_eq!(threshold, best.1, epsilon = 1e-12);
                assert_eq!(left.predict(&[0.0]), 0.0);
                assert_eq!(right.predict(&[1.0]), 1.0);
            }
            other => panic!("expected a split, got {other:?}"),
        }
    }

    fn sse_around_mean(v: &[f64]) -> f64 {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|a| (a - m) * (a - m)).sum()
    }

    trait PartitionAt {
        fn partition_map_at(self, at: usize) -> (Vec<f64>, Vec<f64>);
    }

    impl<'a, I: Iterator<Item = (usize, &'a f64)>> PartitionAt for I {
        fn partition_map_at(self, at: usize) -> (Vec<f64>, Vec<f64>) {
            let mut l = Vec::new();
            let mut r = Vec::new();
            for (i, &v) in self {
                if i < at {
                    l.push(v);
                } else {
                    r.push(v);
                }
            }
            (l, r)
        }
    }

    #[test]
    fn constant_target_is_single_leaf() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let y = vec![0.5; 20];
        let tree = fit_tree(&x, &y, 4, 1);
        assert_eq!(tree, TreeNode::Leaf { value: 0.5 });
    }

    #[test]
    fn min_leaf_respected() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect();
        // min_leaf 5 forbids isolating the outlier
        let tree = fit_tree(&x, &y, 3, 5);
        fn min_count(node: &TreeNode, x: &[Vec<f64>]) -> usize {
            match node {
                TreeNode::Leaf { .. } => x.len(),
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    let (l, r): (Vec<Vec<f64>>, Vec<Vec<f64>>) =
                        x.iter().cloned().partition(|row| row[*feature] <= *threshold);
                    min_count(left, &l).min(min_count(right, &r))
                }
            }
        }
        assert!(min_count(&tree, &x) >= 5);
    }

    #[test]
    fn identical_rows_fall_back_to_mean() {
        let x = vec![vec![1.0, 2.0]; 8];
        let y = vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0];
        let tree = fit_tree(&x, &y, 4, 1);
        assert_eq!(tree, TreeNode::Leaf { value: 0.5 });
    }
}
