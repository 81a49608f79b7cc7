//! 3D kd-tree for nearest-neighbor queries.
//!
//! Used by the statistical filter, ICP correspondence search, chamfer
//! distance, and normal estimation. Query results are deterministic: ties on
//! distance are broken by the smaller point index.

use nalgebra::Vector3;

#[derive(Debug, Clone)]
struct Node {
    /// Index into `points`.
    point: u32,
    axis: u8,
    left: i32,
    right: i32,
}

/// Immutable kd-tree over a borrowed point slice.
#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<Vector3<f64>>,
    nodes: Vec<Node>,
    root: i32,
}

impl KdTree {
    pub fn build(points: &[Vector3<f64>]) -> Self {
        let mut indices: Vec<u32> = (0..points.len() as u32).collect();
        let mut nodes = Vec::with_capacity(points.len());
        let root = Self::build_rec(points, &mut indices[..], 0, &mut nodes);
        Self {
            points: points.to_vec(),
            nodes,
            root,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    fn build_rec(points: &[Vector3<f64>], indices: &mut [u32], depth: usize, nodes: &mut Vec<Node>) -> i32 {
        if indices.is_empty() {
            return -1;
        }
        let axis = (depth % 3) as u8;
        let mid = indices.len() / 2;
        // Median split; ties broken by index so the tree shape is input-order independent.
        indices.select_nth_unstable_by(mid, |&a, &b| {
            let (pa, pb) = (points[a as usize][axis as usize], points[b as usize][axis as usize]);
            pa.partial_cmp(&pb).unwrap().then(a.cmp(&b))
        });
        let point = indices[mid];
        let (lo, hi) = indices.split_at_mut(mid);
        let left = Self::build_rec(points, lo, depth + 1, nodes);
        let right = Self::build_rec(points, &mut hi[1..], depth + 1, nodes);
        nodes.push(Node { point, axis, left, right });
        (nodes.len() - 1) as i32
    }

    /// Nearest neighbor; `None` for an empty tree.
    pub fn nearest_one(&self, query: &Vector3<f64>) -> Option<(usize, f64)> {
        let mut best: Option<(u32, f64)> = None;
        self.nearest_rec(self.root, query, &mut best);
        best.map(|(i, d2)| (i as usize, d2.sqrt()))
    }

    /// Nearest neighbor within `radius` (Euclidean), if any.
    pub fn nearest_within(&self, query: &Vector3<f64>, radius: f64) -> Option<(usize, f64)> {
        self.nearest_one(query).filter(|&(_, d)| d <= radius)
    }

    /// `k` nearest neighbors, closest first. Excludes `exclude` if given
    /// (used for self-queries). Returns fewer when the tree is small.
    pub fn k_nearest(&self, query: &Vector3<f64>, k: usize, exclude: Option<usize>) -> Vec<(usize, f64)> {
        if k == 0 {
            return Vec::new();
        }
        // Max-heap of (dist2, index) capped at k.
        let mut heap: Vec<(f64, u32)> = Vec::with_capacity(k + 1);
        self.knn_rec(self.root, query, k, exclude, &mut heap);
        heap.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        heap.into_iter().map(|(d2, i)| (i as usize, d2.sqrt())).collect()
    }

    fn nearest_rec(&self, node: i32, query: &Vector3<f64>, best: &mut Option<(u32, f64)>) {
        if node < 0 {
            return;
        }
        let n = &self.nodes[node as usize];
        let p = &self.points[n.point as usize];
        let d2 = (p - query).norm_squared();
        let better = match *best {
            None => true,
            Some((bi, bd2)) => d2 < bd2 || (d2 == bd2 && n.point < bi),
        };
        if better {
            *best = Some((n.point, d2));
        }
        let axis = n.axis as usize;
        let delta = query[axis] - p[axis];
        let (near, far) = if delta < 0.0 { (n.left, n.right) } else { (n.right, n.left) };
        self.nearest_rec(near, query, best);
        if best.map_or(true, |(_, bd2)| delta * delta <= bd2) {
            self.nearest_rec(far, query, best);
        }
    }

    fn knn_rec(&self, node: i32, query: &Vector3<f64>, k: usize, exclude: Option<usize>, heap: &mut Vec<(f64, u32)>) {
        if node < 0 {
            return;
        }
        let n = &self.nodes[node as usize];
        let p = &self.points[n.point as usize];
        if exclude != Some(n.point as usize) {
            let d2 = (p - query).norm_squared();
            if heap.len() < k {
                heap.push((d2, n.point));
                if heap.len() == k {
                    heap.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(b.1.cmp(&a.1)));
                }
            } else if d2 < heap[0].0 {
                heap[0] = (d2, n.point);
                // Restore "largest first" on the small fixed-size buffer.
                heap.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(b.1.cmp(&a.1)));
            }
        }
        let axis = n.axis as usize;
        let delta = query[axis] - p[axis];
        let (near, far) = if delta < 0.0 { (n.left, n.right) } else { (n.right, n.left) };
        self.knn_rec(near, query, k, exclude, heap);
        if heap.len() < k || delta * delta <= heap[0].0 {
            self.knn_rec(far, query, k, exclude, heap);
        }
    }
}
