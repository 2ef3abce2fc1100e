//! The skew-symmetric transport operator `B w = s·∇w + ½(∇·s)w` in dealiased form
//! `½(P s·∇ P w + P ∇·(s P w))`, `P` the 2/3-rule projection, and midpoint steppers.

use std::sync::Arc;

use crate::error::{LabError, Result};
use crate::grid::{Grid, C64};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Transport operator for one real velocity field `s` (physical samples per axis).
pub struct TransportOp<'a> {
    grid: &'a Arc<Grid>,
    s: &'a [Vec<f64>],
}

impl<'a> TransportOp<'a> {
    pub fn new(grid: &'a Arc<Grid>, s: &'a [Vec<f64>]) -> Result<Self> {
        if s.len() != grid.dim() || s.iter().any(|c| c.len() != grid.total()) {
            return Err(LabError::Shape("velocity field does not match grid".into()));
        }
        Ok(TransportOp { grid, s })
    }

    /// `out = B w`.
    pub fn apply(&self, w: &[C64], out: &mut [C64]) {
        let g = self.grid;
        let mask = g.dealias_mask();
        let total = g.total();
        let mut a = w.to_vec();
        g.forward(&mut a);
        for (c, &keep) in a.iter_mut().zip(mask) {
            if !keep {
                *c = ZERO;
            }
        }
        let mut pw = a.clone();
        g.inverse(&mut pw);

        let mut first = vec![ZERO; total];
        let mut buf = vec![ZERO; total];
        for (axis, s_axis) in self.s.iter().enumerate() {
            let k = g.k_axis(axis);
            for ((b, c), &kk) in buf.iter_mut().zip(&a).zip(k) {
                *b = C64::new(-c.im * kk, c.re * kk);
            }
            g.inverse(&mut buf);
            for ((f, b), &sv) in first.iter_mut().zip(&buf).zip(s_axis) {
                *f += b * sv;
            }
        }
        g.forward(&mut first);

        for (axis, s_axis) in self.s.iter().enumerate() {
            let k = g.k_axis(axis);
            for ((b, p), &sv) in buf.iter_mut().zip(&pw).zip(s_axis) {
                *b = p * sv;
            }
            g.forward(&mut buf);
            for ((f, b), &kk) in first.iter_mut().zip(&buf).zip(k) {
                *f += C64::new(-b.im * kk, b.re * kk);
            }
        }
        for (i, (o, f)) in out.iter_mut().zip(&first).enumerate() {
            *o = if mask[i] { f * 0.5 } else { ZERO };
        }
        g.inverse(out);
    }

    /// Explicit midpoint step with the operator frozen over the step.
    pub fn explicit_midpoint(&self, w: &[C64], dt: f64) -> Vec<C64> {
        let mut k1 = vec![ZERO; w.len()];
        self.apply(w, &mut k1);
        let half: Vec<C64> = w.iter().zip(&k1).map(|(a, b)| a + b * (0.5 * dt)).collect();
        let mut k2 = vec![ZERO; w.len()];
        self.apply(&half, &mut k2);
        w.iter().zip(&k2).map(|(a, b)| a + b * dt).collect()
    }

    /// Implicit midpoint (Cayley) step `w' = w + dt B (w + w')/2`, solved by
    /// fixed-point iteration; exactly norm preserving at convergence.
    pub fn implicit_midpoint(&self, w: &[C64], dt: f64, tol: f64, max_iter: usize) -> Result<(Vec<C64>, usize)> {
        let n = w.len();
        let mut bw = vec![ZERO; n];
        self.apply(w, &mut bw);
        let base: Vec<C64> = w.iter().zip(&bw).map(|(a, b)| a + b * (0.5 * dt)).collect();
        let mut cur: Vec<C64> = w.iter().zip(&bw).map(|(a, b)| a + b * dt).collect();
        let scale = w.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt().max(1e-300);
        let mut tmp = vec![ZERO; n];
        for it in 1..=max_iter {
            self.apply(&cur, &mut tmp);
            let mut diff = 0.0;
            for ((c, b), t) in cur.iter_mut().zip(&base).zip(&tmp) {
                let next = b + t * (0.5 * dt);
                diff += (next - *c).norm_sqr();
                *c = next;
            }
            if diff.sqrt() <= tol * scale {
                return Ok((cur, it));
            }
            if !diff.is_finite() {
                break;
            }
        }
        Err(LabError::Stability {
            t: f64::NAN,
            drift: f64::NAN,
            retries: max_iter,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridSpec, SpectralField};

    fn setup() -> (Arc<Grid>, Vec<Vec<f64>>, SpectralField) {
        let g = Grid::new(GridSpec::new(2, 32, 20.0).unwrap()).unwrap();
        let phi = SpectralField::from_fn(&g, |x| C64::new((-(x[0] * x[0] + 2.0 * x[1] * x[1]) / 8.0).exp(), 0.0));
        let s: Vec<Vec<f64>> = crate::grid::gradient(&phi)
            .components()
            .iter()
            .map(|c| c.real_part())
            .collect();
        let w = SpectralField::from_fn(&g, |x| {
            C64::from_polar((-(x[0] - 1.0).powi(2) / 2.0 - x[1] * x[1] / 3.0).exp(), 0.3 * x[0])
        });
        (g, s, w)
    }

    #[test]
    fn operator_is_skew() {
        let (g, s, w) = setup();
        let op = TransportOp::new(&g, &s).unwrap();
        let v = SpectralField::from_fn(&g, |x| C64::new((-(x[0] * x[0] + x[1] * x[1]) / 4.0).exp(), x[1].sin() * 0.1));
        let mut bw = vec![ZERO; g.total()];
        let mut bv = vec![ZERO; g.total()];
        op.apply(w.values(), &mut bw);
        op.apply(v.values(), &mut bv);
        let lhs: C64 = v.values().iter().zip(&bw).map(|(a, b)| a.conj() * b).sum();
        let rhs: C64 = bv.iter().zip(w.values()).map(|(a, b)| a.conj() * b).sum();
        assert!((lhs + rhs).norm() < 1e-12 * lhs.norm().max(1.0));
    }

    #[test]
    fn implicit_step_conserves_norm() {
        let (g, s, w) = setup();
        let op = TransportOp::new(&g, &s).unwrap();
        let (next, it) = op.implicit_midpoint(w.values(), 0.2, 1e-14, 100).unwrap();
        assert!(it < 100);
        let n0: f64 = w.values().iter().map(|v| v.norm_sqr()).sum();
        let n1: f64 = next.iter().map(|v| v.norm_sqr()).sum();
        assert!(((n1 - n0) / n0).abs() < 1e-13);
    }

    #[test]
    fn zero_velocity_is_identity() {
        let (g, _, w) = setup();
        let s = vec![vec![0.0; g.total()]; 2];
        let op = TransportOp::new(&g, &s).unwrap();
        let next = op.explicit_midpoint(w.values(), 0.5);
        for (a, b) in next.iter().zip(w.values()) {
            assert!((a - b).norm() < 1e-15);
        }
    }
}
