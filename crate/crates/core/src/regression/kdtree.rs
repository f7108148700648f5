//! Exact k-nearest-neighbour queries over a static point set.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Debug, Clone)]
enum Node {
    Leaf(Vec<usize>),
    Split {
        axis: usize,
        value: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<Vec<f64>>,
    root: Node,
}

const LEAF_SIZE: usize = 8;

/// A neighbour candidate; ordered by distance, then index, so ties resolve
/// to the lower index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub dist2: f64,
    pub index: usize,
}

impl Eq for Neighbor {}

impl Ord for Neighbor {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist2
            .total_cmp(&other.dist2)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Neighbor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl KdTree {
    pub fn build(points: Vec<Vec<f64>>) -> Self {
        let mut idx: Vec<usize> = (0..points.len()).collect();
        let root = build_node(&points, &mut idx, 0);
        Self { points, root }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    /// The `k` nearest points to `q`, closest first.
    pub fn nearest(&self, q: &[f64], k: usize) -> Vec<Neighbor> {
        let mut heap = BinaryHeap::with_capacity(k + 1);
        if k > 0 {
            self.search(&self.root, q, k, &mut heap);
        }
        let mut out = heap.into_vec();
        out.sort();
        out
    }

    fn search(&self, node: &Node, q: &[f64], k: usize, heap: &mut BinaryHeap<Neighbor>) {
        match node {
            Node::Leaf(items) => {
                for &i in items {
                    let cand = Neighbor {
                        dist2: crate::linalg::sq_dist(q, &self.points[i]),
                        index: i,
                    };
                    if heap.len() < k {
                        heap.push(cand);
                    } else if heap.peek().is_some_and(|worst| cand < *worst) {
                        heap.pop();
                        heap.push(cand);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[*axis] - value;
                let (near, far) = if diff <= 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, k, heap);
                let plane = diff * diff;
                // equality still visits: a point on the plane may tie
                if heap.len() < k || heap.peek().is_some_and(|w| plane <= w.dist2) {
                    self.search(far, q, k, heap);
                }
            }
        }
    }
}

fn build_node(points: &[Vec<f64>], idx: &mut [usize], depth: usize) -> Node {
    if idx.len() <= LEAF_SIZE || points.first().map_or(0, Vec::len) == 0 {
        return Node::Leaf(idx.to_vec());
    }
    let dim = points[0].len();
    // split along the widest axis
    let spread = |a: usize| {
        let (lo, hi) = idx.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
            (lo.min(points[i][a]), hi.max(points[i][a]))
        });
        hi - lo
    };
    let axis = (0..dim)
        .max_by(|&a, &b| spread(a).total_cmp(&spread(b)).then(b.cmp(&a)))
        .unwrap_or(depth % dim);
    if spread(axis) == 0.0 {
        return Node::Leaf(idx.to_vec());
    }
    idx.sort_by(|&a, &b| points[a][axis].total_cmp(&points[b][axis]).then(a.cmp(&b)));
    let mid = idx.len() / 2;
    let value = points[idx[mid - 1]][axis];
    let (l, r) = idx.split_at_mut(mid);
    Node::Split {
        axis,
        value,
        left: Box::new(build_node(points, l, depth + 1)),
        right: Box::new(build_node(points, r, depth + 1)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_brute_force() {
        let pts: Vec<Vec<f64>> = (0..300)
            .map(|i| {
                let t = i as f64 * 0.731;
                vec![t.sin() * 3.0, (1.7 * t).cos(), (0.3 * t).sin()]
            })
            .collect();
        let tree = KdTree::build(pts.clone());
        for q in [[0.1, 0.2, -0.3], [2.5, -1.0, 0.0], [10.0, 10.0, 10.0]] {
            let got: Vec<usize> = tree.nearest(&q, 7).iter().map(|n| n.index).collect();
            let mut all: Vec<Neighbor> = pts
                .iter()
                .enumerate()
                .map(|(i, p)| Neighbor {
                    dist2: crate::linalg::sq_dist(&q, p),
                    index: i,
                })
                .collect();
            all.sort();
            let want: Vec<usize> = all[..7].iter().map(|n| n.index).collect();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn duplicates_break_ties_by_index() {
        let tree = KdTree::build(vec![vec![1.0]; 20]);
        let got: Vec<usize> = tree.nearest(&[1.0], 3).iter().map(|n| n.index).collect();
        assert_eq!(got, vec![0, 1, 2]);
    }
}
