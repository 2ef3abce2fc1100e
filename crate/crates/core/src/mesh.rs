//! Graded time meshes on `(0, T]` with an optional tail on `(T, 1]`.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::quad::product_trapezoid_weights;

pub const DEFAULT_NODES: usize = 512;
pub const MAX_GRADING: f64 = 6.0;

/// `t_k = T (k/K)^p`, `k = 1..K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradedMesh {
    t_final: f64,
    count: usize,
    power: f64,
    nodes: Vec<f64>,
}

impl GradedMesh {
    pub fn new(t_final: f64, count: usize, power: f64) -> Result<Self> {
        if !(t_final > 0.0 && t_final <= 1.0) {
            return Err(LabError::Params(format!(
                "final time must lie in (0, 1], got {t_final}"
            )));
        }
        if count < 2 {
            return Err(LabError::Params(format!("need at least 2 nodes, got {count}")));
        }
        if !(power >= 1.0 && power.is_finite()) {
            return Err(LabError::Params(format!("grading power must be >= 1, got {power}")));
        }
        let nodes = (1..=count)
            .map(|k| {
                if k == count {
                    t_final
                } else {
                    t_final * (k as f64 / count as f64).powf(power)
                }
            })
            .collect();
        Ok(GradedMesh {
            t_final,
            count,
            power,
            nodes,
        })
    }

    /// Grading `p = ceil(1/λ_1)` capped at 6.
    pub fn default_power(lambda_1: f64) -> f64 {
        if lambda_1 > 0.0 {
            (1.0 / lambda_1).ceil().clamp(1.0, MAX_GRADING)
        } else {
            MAX_GRADING
        }
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Same final time and grading with `factor` times as many nodes.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        GradedMesh::new(self.t_final, self.count * factor, self.power)
    }

    /// Geometric tail nodes on `(T, 1]` with step ratio matching the last graded step.
    pub fn tail(&self) -> Vec<f64> {
        if self.t_final >= 1.0 {
            return Vec::new();
        }
        let ratio = 1.0 + self.power / self.count as f64;
        let m = ((1.0 / self.t_final).ln() / ratio.ln()).ceil().max(1.0) as usize;
        let step = (1.0 / self.t_final).ln() / m as f64;
        (1..=m)
            .map(|j| {
                if j == m {
                    1.0
                } else {
                    self.t_final * (step * j as f64).exp()
                }
            })
            .collect()
    }

    /// Index `k` with `nodes[k] <= t <= nodes[k+1]` (clamped).
    pub fn bracket(&self, t: f64) -> Result<usize> {
        let lo = self.nodes[0];
        let hi = self.t_final;
        if !(t >= lo * (1.0 - 1e-12) && t <= hi * (1.0 + 1e-12)) {
            return Err(LabError::Range { t, lo, hi });
        }
        let k = self.nodes.partition_point(|&s| s <= t);
        Ok(k.saturating_sub(1).min(self.count - 2))
    }
}

/// Backward cumulative product-trapezoid integrals `∫_{t_i}^{t_end} t^β f(t) dt`
/// for every node, where `f` is linear between nodes and given by sample values.
///
/// Returns one accumulated vector per node (the last is zero).
pub fn backward_cumulative(nodes: &[f64], beta: f64, samples: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = nodes.len();
    let len = samples.first().map_or(0, |s| s.len());
    let mut out = vec![vec![0.0; len]; m];
    for i in (0..m - 1).rev() {
        let (wl, wr) = product_trapezoid_weights(nodes[i], nodes[i + 1], beta);
        let (head, tail) = out.split_at_mut(i + 1);
        let acc = &mut head[i];
        let next = &tail[0];
        for (((a, n), l), r) in acc.iter_mut().zip(next).zip(&samples[i]).zip(&samples[i + 1]) {
            *a = n + wl * l + wr * r;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_nodes() {
        let m = GradedMesh::new(1.0, 512, 6.0).unwrap();
        let n = m.nodes();
        assert_eq!(n.len(), 512);
        assert_eq!(*n.last().unwrap(), 1.0);
        assert!(n.windows(2).all(|w| w[0] < w[1]));
        assert!((n[0] - 512f64.powf(-6.0)).abs() < 1e-30);
        assert!(m.tail().is_empty());
        assert!(GradedMesh::new(0.0, 10, 2.0).is_err());
        assert!(GradedMesh::new(1.5, 10, 2.0).is_err());
        assert!(GradedMesh::new(0.5, 10, 0.5).is_err());
        assert_eq!(GradedMesh::default_power(0.175), 6.0);
        assert_eq!(GradedMesh::default_power(0.4), 3.0);
    }

    #[test]
    fn tail_reaches_one() {
        let m = GradedMesh::new(0.1, 64, 4.0).unwrap();
        let tail = m.tail();
        assert_eq!(*tail.last().unwrap(), 1.0);
        assert!(tail[0] > 0.1);
        assert!(tail.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn bracket_lookup() {
        let m = GradedMesh::new(1.0, 16, 2.0).unwrap();
        let k = m.bracket(0.5).unwrap();
        assert!(m.nodes()[k] <= 0.5 && 0.5 <= m.nodes()[k + 1]);
        assert_eq!(m.bracket(1.0).unwrap(), 14);
        assert!(m.bracket(2.0).is_err());
        assert!(m.bracket(1e-9).is_err());
    }

    #[test]
    fn backward_cumulative_power_law() {
        // ∫_t^1 s^{-1.55} ds with f = 1
        let m = GradedMesh::new(1.0, 64, 6.0).unwrap();
        let samples = vec![vec![1.0]; 64];
        let out = backward_cumulative(m.nodes(), -1.55, &samples);
        for (t, v) in m.nodes().iter().zip(&out) {
            let exact = (t.powf(-0.55) - 1.0) / 0.55;
            assert!((v[0] - exact).abs() < 1e-10 * exact.max(1.0));
        }
    }
}
