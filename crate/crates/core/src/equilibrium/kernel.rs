//! Grid sums of the equilibrium, its potential integrand and Hessian weight.
//!
//! Exponents are evaluated in a shifted basis `(1, q, |q|²/(2m))` with
//! `q = p − s`, which keeps the Newton system well scaled when the grid is
//! centred far from the origin.

use nalgebra::Vector3;

use super::IntraAlpha;
use crate::grid::{MomentumGrid, Moments};
use crate::statistics::{kernel, ParticleStatistics};

#[derive(Debug, Clone, Copy)]
pub(crate) struct Basis<'a> {
    pub grid: &'a MomentumGrid,
    pub mass: f64,
    pub shift: Vector3<f64>,
}

/// Quadrature sums (already multiplied by `Δp³`).
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Accum {
    pub value: f64,
    pub m: [f64; 5],
    pub h: [[f64; 5]; 5],
}

impl<'a> Basis<'a> {
    pub fn new(grid: &'a MomentumGrid, mass: f64, shift: Vector3<f64>) -> Self {
        Basis { grid, mass, shift }
    }

    pub fn theta_from_alpha(&self, a: &IntraAlpha) -> [f64; 5] {
        let s = self.shift;
        let m = self.mass;
        let t0 = a.a0 + a.a1.dot(&s) + a.a2 * s.norm_squared() / (2.0 * m);
        let ts = a.a1 + s * (a.a2 / m);
        [t0, ts.x, ts.y, ts.z, a.a2]
    }

    pub fn alpha_from_theta(&self, t: &[f64; 5]) -> IntraAlpha {
        let s = self.shift;
        let m = self.mass;
        let a2 = t[4];
        let a1 = Vector3::new(t[1], t[2], t[3]) - s * (a2 / m);
        let a0 = t[0] - a1.dot(&s) - a2 * s.norm_squared() / (2.0 * m);
        IntraAlpha { a0, a1, a2 }
    }

    /// Physical moments `(n, P, E)` to shifted-basis moments.
    pub fn moments_to_theta(&self, mom: &Moments) -> [f64; 5] {
        let s = self.shift;
        let m = self.mass;
        let q = mom.p - s * mom.n;
        let e = mom.e - s.dot(&mom.p) / m + s.norm_squared() * mom.n / (2.0 * m);
        [mom.n, q.x, q.y, q.z, e]
    }

    pub fn moments_from_theta(&self, t: &[f64; 5]) -> Moments {
        let s = self.shift;
        let m = self.mass;
        let p = Vector3::new(t[1], t[2], t[3]) + s * t[0];
        let e = t[4] + s.dot(&p) / m - s.norm_squared() * t[0] / (2.0 * m);
        Moments::new(t[0], p, e)
    }

    fn axis_terms(&self, r: usize, ts: f64, te: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let inv2m = 0.5 / self.mass;
        let q: Vec<f64> = self.grid.axis(r).iter().map(|p| p - self.shift[r]).collect();
        let e: Vec<f64> = q.iter().map(|q| q * q * inv2m).collect();
        let s: Vec<f64> = q.iter().zip(&e).map(|(q, e)| ts * q + te * e).collect();
        (q, e, s)
    }

    /// Largest exponent over the grid (the exponent is separable per axis).
    pub fn max_exponent(&self, t: &[f64; 5]) -> f64 {
        let mut x = t[0];
        for r in 0..3 {
            let (_, _, s) = self.axis_terms(r, t[1 + r], t[4]);
            x += s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        }
        x
    }

    /// Sums of `w(K)`, `K ψ` and (optionally) `ζ ψ ψᵀ`; `None` if infeasible.
    pub fn accumulate(&self, t: &[f64; 5], stats: ParticleStatistics, hessian: bool) -> Option<Accum> {
        let max_x = self.max_exponent(t);
        match stats {
            ParticleStatistics::Boson if !(max_x < 0.0) => return None,
            ParticleStatistics::Classical if !(max_x < 700.0) => return None,
            _ if max_x.is_nan() => return None,
            _ => {}
        }
        let n = self.grid.nodes_per_axis();
        let w = self.grid.axis_weights();
        let (qx, ex, sx) = self.axis_terms(0, t[1], t[4]);
        let (qy, ey, sy) = self.axis_terms(1, t[2], t[4]);
        let (qz, ez, sz) = self.axis_terms(2, t[3], t[4]);

        let mut acc = Accum::default();
        let (mut v, mut m, mut h) = (0.0, [0.0; 5], [[0.0; 5]; 5]);
        for i in 0..n {
            for j in 0..n {
                let base = t[0] + sx[i] + sy[j];
                let wij = w[i] * w[j];
                let (a, b, exy) = (qx[i], qy[j], ex[i] + ey[j]);
                // line sums over the last axis
                let (mut lw, mut l0, mut lz, mut le) = (0.0, 0.0, 0.0, 0.0);
                let (mut h0, mut hz, mut hzz, mut he, mut hze, mut hee) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
                for k in 0..n {
                    let kn = kernel(base + sz[k], stats)?;
                    let wk = w[k];
                    let (z, e) = (qz[k], ez[k]);
                    lw += wk * kn.w;
                    let kw = wk * kn.k;
                    l0 += kw;
                    lz += kw * z;
                    le += kw * e;
                    if hessian {
                        let zw = wk * kn.zeta;
                        h0 += zw;
                        hz += zw * z;
                        hzz += zw * z * z;
                        he += zw * e;
                        hze += zw * z * e;
                        hee += zw * e * e;
                    }
                }
                v += wij * lw;
                let le_full = exy * l0 + le;
                m[0] += wij * l0;
                m[1] += wij * a * l0;
                m[2] += wij * b * l0;
                m[3] += wij * lz;
                m[4] += wij * le_full;
                if hessian {
                    let e4 = exy * h0 + he;
                    h[0][0] += wij * h0;
                    h[0][1] += wij * a * h0;
                    h[0][2] += wij * b * h0;
                    h[0][3] += wij * hz;
                    h[0][4] += wij * e4;
                    h[1][1] += wij * a * a * h0;
                    h[1][2] += wij * a * b * h0;
                    h[1][3] += wij * a * hz;
                    h[1][4] += wij * a * e4;
                    h[2][2] += wij * b * b * h0;
                    h[2][3] += wij * b * hz;
                    h[2][4] += wij * b * e4;
                    h[3][3] += wij * hzz;
                    h[3][4] += wij * (exy * hz + hze);
                    h[4][4] += wij * (exy * exy * h0 + 2.0 * exy * he + hee);
                }
            }
        }
        let dv = self.grid.cell_volume();
        acc.value = v * dv;
        for r in 0..5 {
            acc.m[r] = m[r] * dv;
            if hessian {
                for c in r..5 {
                    acc.h[r][c] = h[r][c] * dv;
                    acc.h[c][r] = acc.h[r][c];
                }
            }
        }
        Some(acc)
    }

    /// Node values of the equilibrium with shifted parameters `t`.
    pub fn fill(&self, t: &[f64; 5], stats: ParticleStatistics, out: &mut [f64]) -> Option<()> {
        let n = self.grid.nodes_per_axis();
        let (_, _, sx) = self.axis_terms(0, t[1], t[4]);
        let (_, _, sy) = self.axis_terms(1, t[2], t[4]);
        let (_, _, sz) = self.axis_terms(2, t[3], t[4]);
        let mut idx = 0;
        for i in 0..n {
            for j in 0..n {
                let base = t[0] + sx[i] + sy[j];
                for k in 0..n {
                    out[idx] = kernel(base + sz[k], stats)?.k;
                    idx += 1;
                }
            }
        }
        Some(())
    }
}
