//! Complete binary trees over leaf weights.
//!
//! [`SumTree`] recomputes each ancestor as the sum of its two children on
//! every update, never by adding deltas, so the root is a deterministic
//! function of the current leaves and does not drift over long runs.

/// Sum tree over nonnegative leaf weights with O(log n) update and
/// proportional sampling.
#[derive(Debug, Clone)]
pub struct SumTree {
    cap: usize,
    nodes: Vec<f64>,
}

impl SumTree {
    pub fn new(len: usize) -> Self {
        let cap = len.max(1).next_power_of_two();
        SumTree {
            cap,
            nodes: vec![0.0; 2 * cap],
        }
    }

    pub fn from_weights(weights: &[f64]) -> Self {
        let mut t = SumTree::new(weights.len());
        t.nodes[t.cap..t.cap + weights.len()].copy_from_slice(weights);
        for i in (1..t.cap).rev() {
            t.nodes[i] = t.nodes[2 * i] + t.nodes[2 * i + 1];
        }
        t
    }

    pub fn capacity(&self) -> usize {
        self.cap
    }

    /// Doubles capacity until `len` leaves fit, keeping existing weights.
    pub fn reserve(&mut self, len: usize) {
        if len <= self.cap {
            return;
        }
        let leaves: Vec<f64> = self.nodes[self.cap..].to_vec();
        let mut grown = SumTree::new(len);
        grown.nodes[grown.cap..grown.cap + leaves.len()].copy_from_slice(&leaves);
        for i in (1..grown.cap).rev() {
            grown.nodes[i] = grown.nodes[2 * i] + grown.nodes[2 * i + 1];
        }
        *self = grown;
    }

    pub fn get(&self, i: usize) -> f64 {
        self.nodes[self.cap + i]
    }

    pub fn set(&mut self, i: usize, w: f64) {
        debug_assert!(w >= 0.0 && w.is_finite(), "bad weight {w}");
        let mut k = self.cap + i;
        self.nodes[k] = w;
        while k > 1 {
            k /= 2;
            self.nodes[k] = self.nodes[2 * k] + self.nodes[2 * k + 1];
        }
    }

    pub fn total(&self) -> f64 {
        self.nodes[1]
    }

    /// Leaf index whose cumulative interval contains `u`, for `u` in
    /// [0, total). Never returns a zero-weight leaf while the total is positive.
    pub fn find(&self, mut u: f64) -> usize {
        let mut k = 1;
        while k < self.cap {
            let left = self.nodes[2 * k];
            let right = self.nodes[2 * k + 1];
            if (u < left && left > 0.0) || right <= 0.0 {
                k *= 2;
            } else {
                u -= left;
                k = 2 * k + 1;
            }
        }
        k - self.cap
    }

    pub fn leaves(&self) -> &[f64] {
        &self.nodes[self.cap..]
    }
}

/// Min tree over leaf keys (event times); `argmin` in O(1), update in O(log n).
#[derive(Debug, Clone)]
pub struct MinTree {
    cap: usize,
    keys: Vec<f64>,
    best: Vec<usize>,
}

impl MinTree {
    pub fn new(len: usize) -> Self {
        let cap = len.max(1).next_power_of_two();
        let mut best = vec![0; 2 * cap];
        for (i, b) in best.iter_mut().enumerate().skip(cap) {
            *b = i - cap;
        }
        let mut t = MinTree {
            cap,
            keys: vec![f64::INFINITY; cap],
            best,
        };
        for k in (1..cap).rev() {
            t.pull(k);
        }
        t
    }

    fn pull(&mut self, k: usize) {
        let (l, r) = (self.best[2 * k], self.best[2 * k + 1]);
        self.best[k] = if self.keys[r] < self.keys[l] { r } else { l };
    }

    pub fn set(&mut self, i: usize, key: f64) {
        self.keys[i] = key;
        let mut k = (self.cap + i) / 2;
        while k >= 1 {
            self.pull(k);
            k /= 2;
        }
    }

    pub fn get(&self, i: usize) -> f64 {
        self.keys[i]
    }

    /// Index and key of the smallest leaf (ties go to the lower index).
    pub fn min(&self) -> (usize, f64) {
        let i = if self.cap == 1 { 0 } else { self.best[1] };
        (i, self.keys[i])
    }
}
