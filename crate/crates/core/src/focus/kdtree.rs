//! Static 2-D kd-tree with median splits.

/// Balanced 2-D kd-tree over points carrying a payload.
///
/// Nodes are stored in an implicit layout: the subtree of `items[lo..hi]`
/// has its splitting point at the midpoint, children on either side.
#[derive(Clone, Debug)]
pub struct KdTree<T> {
    items: Vec<([f64; 2], T)>,
}

impl<T: Clone> KdTree<T> {
    pub fn build(points: impl IntoIterator<Item = ([f64; 2], T)>) -> Self {
        let mut items: Vec<_> = points.into_iter().collect();
        let len = items.len();
        build_rec(&mut items[..len], 0);
        Self { items }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &([f64; 2], T)> {
        self.items.iter()
    }

    /// Closest point to `query` and its distance.
    pub fn nearest(&self, query: [f64; 2]) -> Option<(&[f64; 2], &T, f64)> {
        let mut best: Option<(usize, f64)> = None;
        self.nearest_rec(0, self.items.len(), 0, query, &mut best);
        best.map(|(i, d2)| (&self.items[i].0, &self.items[i].1, d2.sqrt()))
    }

    fn nearest_rec(&self, lo: usize, hi: usize, axis: usize, q: [f64; 2], best: &mut Option<(usize, f64)>) {
        if lo >= hi {
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let p = self.items[mid].0;
        let d2 = dist2(p, q);
        if best.is_none_or(|(_, bd)| d2 < bd) {
            *best = Some((mid, d2));
        }
        let diff = q[axis] - p[axis];
        let (near, far) = if diff < 0.0 { ((lo, mid), (mid + 1, hi)) } else { ((mid + 1, hi), (lo, mid)) };
        self.nearest_rec(near.0, near.1, axis ^ 1, q, best);
        if best.is_none_or(|(_, bd)| diff * diff < bd) {
            self.nearest_rec(far.0, far.1, axis ^ 1, q, best);
        }
    }

    /// All payloads whose point lies within `radius` of `query`.
    pub fn within(&self, query: [f64; 2], radius: f64) -> Vec<T> {
        let mut out = Vec::new();
        self.within_rec(0, self.items.len(), 0, query, radius * radius, &mut out);
        out
    }

    fn within_rec(&self, lo: usize, hi: usize, axis: usize, q: [f64; 2], r2: f64, out: &mut Vec<T>) {
        if lo >= hi {
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let (p, ref payload) = self.items[mid];
        if dist2(p, q) <= r2 {
            out.push(payload.clone());
        }
        let diff = q[axis] - p[axis];
        if diff <= 0.0 || diff * diff <= r2 {
            self.within_rec(lo, mid, axis ^ 1, q, r2, out);
        }
        if diff >= 0.0 || diff * diff <= r2 {
            self.within_rec(mid + 1, hi, axis ^ 1, q, r2, out);
        }
    }
}

fn build_rec<T>(items: &mut [([f64; 2], T)], axis: usize) {
    if items.len() <= 1 {
        return;
    }
    let mid = items.len() / 2;
    items.select_nth_unstable_by(mid, |a, b| a.0[axis].total_cmp(&b.0[axis]));
    let (left, rest) = items.split_at_mut(mid);
    build_rec(left, axis ^ 1);
    build_rec(&mut rest[1..], axis ^ 1);
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}
