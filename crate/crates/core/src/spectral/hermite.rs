//! Gauss–Hermite rules for `∫ f(t) exp(-t²) dt`.
//!
//! Nodes are the eigenvalues of the Jacobi matrix (Golub–Welsch), found with
//! implicit QL so large rules stay O(n²), then polished by Newton steps on the
//! orthonormal Hermite recurrence. Weights use `w = 1/(n·p_{n-1}(t)²)` with a
//! running log-scale so nodes far in the tail underflow to zero weight
//! instead of overflowing.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    /// Builds an `n`-point rule. Panics if `n == 0`.
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "a quadrature rule needs at least one node");
        let mut diag = vec![0.0; n];
        let mut sub: Vec<f64> = (1..n).map(|k| (k as f64 / 2.0).sqrt()).collect();
        sub.push(0.0);
        tridiagonal_ql(&mut diag, &mut sub);
        diag.sort_by(f64::total_cmp);

        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for &guess in &diag {
            let mut t = guess;
            for _ in 0..3 {
                let r = recurrence(n, t);
                let step = r.ratio / (2.0 * n as f64).sqrt();
                t -= step;
                if step.abs() <= 1e-16 * t.abs().max(1.0) {
                    break;
                }
            }
            let r = recurrence(n, t);
            let log_w = -(n as f64).ln() - 2.0 * r.log_abs_prev;
            nodes.push(t);
            weights.push(log_w.exp());
        }
        // Exact symmetry of the rule.
        for i in 0..n / 2 {
            let j = n - 1 - i;
            let t = 0.5 * (nodes[j] - nodes[i]);
            let w = 0.5 * (weights[i] + weights[j]);
            nodes[i] = -t;
            nodes[j] = t;
            weights[i] = w;
            weights[j] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Shared rule for `n` nodes, built once per process.
    pub fn cached(n: usize) -> Arc<Self> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussHermite>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(rule) = cache.lock().expect("rule cache poisoned").get(&n) {
            return Arc::clone(rule);
        }
        let rule = Arc::new(Self::new(n));
        cache.lock().expect("rule cache poisoned").entry(n).or_insert(rule).clone()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }
}

struct Recurrence {
    /// p_n(t)/p_{n-1}(t)
    ratio: f64,
    /// ln|p_{n-1}(t)| for the orthonormal polynomial.
    log_abs_prev: f64,
}

fn recurrence(n: usize, t: f64) -> Recurrence {
    // Orthonormal w.r.t. exp(-t²): p_0 = π^(-1/4), p_{k+1} = t√(2/(k+1)) p_k - √(k/(k+1)) p_{k-1}.
    let mut prev = 0.0;
    let mut cur = std::f64::consts::PI.powf(-0.25);
    let mut log_scale = 0.0;
    for k in 0..n {
        let next = t * (2.0 / (k + 1) as f64).sqrt() * cur - (k as f64 / (k + 1) as f64).sqrt() * prev;
        prev = cur;
        cur = next;
        let mag = cur.abs().max(prev.abs());
        if mag > 1e150 {
            prev /= mag;
            cur /= mag;
            log_scale += mag.ln();
        }
    }
    Recurrence { ratio: cur / prev, log_abs_prev: prev.abs().ln() + log_scale }
}

/// Eigenvalues of a symmetric tridiagonal matrix by implicit QL with Wilkinson shifts.
/// `diag` is overwritten with the eigenvalues; `sub[i]` couples rows i and i+1 (last entry unused).
fn tridiagonal_ql(diag: &mut [f64], sub: &mut [f64]) {
    let n = diag.len();
    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if sub[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            assert!(iterations <= 60, "QL iteration failed to converge");

            let mut g = (diag[l + 1] - diag[l]) / (2.0 * sub[l]);
            let r = g.hypot(1.0);
            g = diag[m] - diag[l] + sub[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * sub[i];
                let b = c * sub[i];
                let r = f.hypot(g);
                sub[i + 1] = r;
                if r == 0.0 {
                    diag[i + 1] -= p;
                    sub[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                let r = (diag[i] - g) * s + 2.0 * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            diag[l] -= p;
            sub[l] = g;
            sub[m] = 0.0;
        }
    }
}
