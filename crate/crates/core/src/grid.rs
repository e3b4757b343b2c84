//! Per-species momentum grids and trapezoidal moment quadrature.
//!
//! Nodes form a tensor grid centred at `m·u_mix`. Node values of a distribution
//! are stored with the last axis fastest: index `(i·n + j)·n + k`.

use nalgebra::Vector3;

use crate::error::{Error, Result};

/// Default number of intervals per axis.
pub const DEFAULT_INTERVALS: usize = 48;
/// Half-width of the grid in units of `m·v_th`.
pub const EXTENT_THERMAL: f64 = 6.0;

/// Density, momentum and kinetic energy of a distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub n: f64,
    pub p: Vector3<f64>,
    pub e: f64,
}

impl Moments {
    pub fn zero() -> Self {
        Moments {
            n: 0.0,
            p: Vector3::zeros(),
            e: 0.0,
        }
    }

    pub fn new(n: f64, p: Vector3<f64>, e: f64) -> Self {
        Moments { n, p, e }
    }

    /// Analytic moments of a Maxwellian with density `n`, drift `u`, temperature `t`.
    pub fn maxwellian(n: f64, u: Vector3<f64>, t: f64, mass: f64) -> Self {
        Moments {
            n,
            p: u * (n * mass),
            e: 0.5 * (3.0 * n * t + n * mass * u.norm_squared()),
        }
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.n, self.p.x, self.p.y, self.p.z, self.e]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Moments {
            n: a[0],
            p: Vector3::new(a[1], a[2], a[3]),
            e: a[4],
        }
    }

    /// Internal energy `E − |P|²/(2mn)`.
    pub fn internal_energy(&self, mass: f64) -> f64 {
        self.e - self.p.norm_squared() / (2.0 * mass * self.n)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Moments {
            n: self.n * s,
            p: self.p * s,
            e: self.e * s,
        }
    }
}

impl std::ops::Add for Moments {
    type Output = Moments;
    fn add(self, o: Moments) -> Moments {
        Moments {
            n: self.n + o.n,
            p: self.p + o.p,
            e: self.e + o.e,
        }
    }
}

/// Uniform tensor momentum grid with trapezoidal weights.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumGrid {
    nodes_per_axis: usize,
    spacing: f64,
    center: Vector3<f64>,
    axes: [Vec<f64>; 3],
    weights: Vec<f64>,
}

impl MomentumGrid {
    /// Grid with the default 48 intervals per axis.
    pub fn build(mass: f64, mixture_velocity: Vector3<f64>, mixture_temperature: f64) -> Result<Self> {
        Self::with_intervals(mass, mixture_velocity, mixture_temperature, DEFAULT_INTERVALS)
    }

    /// Grid spanning `±6 m v_th` around `m u_mix` with `intervals` cells per axis.
    pub fn with_intervals(
        mass: f64,
        mixture_velocity: Vector3<f64>,
        mixture_temperature: f64,
        intervals: usize,
    ) -> Result<Self> {
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::Config(format!("mass must be positive, got {mass}")));
        }
        if !(mixture_temperature > 0.0) || !mixture_temperature.is_finite() {
            return Err(Error::Config(format!(
                "mixture temperature must be positive, got {mixture_temperature}"
            )));
        }
        if intervals < 2 {
            return Err(Error::Config(format!(
                "momentum grid needs at least 2 intervals, got {intervals}"
            )));
        }
        let vth = (mixture_temperature / mass).sqrt();
        let half = EXTENT_THERMAL * mass * vth;
        let spacing = 2.0 * half / intervals as f64;
        Ok(Self::uniform(mixture_velocity * mass, spacing, intervals + 1))
    }

    /// Grid with explicit centre, spacing and node count.
    pub fn uniform(center: Vector3<f64>, spacing: f64, nodes_per_axis: usize) -> Self {
        assert!(nodes_per_axis >= 2 && spacing > 0.0);
        let intervals = (nodes_per_axis - 1) as f64;
        let axes = [0, 1, 2].map(|r| {
            let lo = center[r] - 0.5 * intervals * spacing;
            (0..nodes_per_axis)
                .map(|i| lo + i as f64 * spacing)
                .collect::<Vec<_>>()
        });
        let mut weights = vec![1.0; nodes_per_axis];
        weights[0] = 0.5;
        weights[nodes_per_axis - 1] = 0.5;
        MomentumGrid {
            nodes_per_axis,
            spacing,
            center,
            axes,
            weights,
        }
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.nodes_per_axis
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn center(&self) -> Vector3<f64> {
        self.center
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.nodes_per_axis.pow(3)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `Δp³`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(3)
    }

    pub fn axis(&self, r: usize) -> &[f64] {
        &self.axes[r]
    }

    /// One-dimensional trapezoid weights, shared by all axes.
    pub fn axis_weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.nodes_per_axis + j) * self.nodes_per_axis + k
    }

    pub fn node(&self, i: usize, j: usize, k: usize) -> Vector3<f64> {
        Vector3::new(self.axes[0][i], self.axes[1][j], self.axes[2][k])
    }

    pub fn weight(&self, i: usize, j: usize, k: usize) -> f64 {
        self.weights[i] * self.weights[j] * self.weights[k]
    }

    /// Lower and upper node coordinate along axis `r`.
    pub fn range(&self, r: usize) -> (f64, f64) {
        (self.axes[r][0], self.axes[r][self.nodes_per_axis - 1])
    }

    /// `max_q |p¹_q|`.
    pub fn max_abs_p1(&self) -> f64 {
        let (lo, hi) = self.range(0);
        lo.abs().max(hi.abs())
    }

    /// Discrete `∫ 1 dp`: the largest density a fermion field can carry.
    pub fn saturation_density(&self) -> f64 {
        let s: f64 = self.weights.iter().sum();
        s * s * s * self.cell_volume()
    }

    /// Evaluate `f(p)` at every node in storage order.
    pub fn sample(&self, mut f: impl FnMut(Vector3<f64>) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for &px in &self.axes[0] {
            for &py in &self.axes[1] {
                for &pz in &self.axes[2] {
                    out.push(f(Vector3::new(px, py, pz)));
                }
            }
        }
        out
    }
}

/// `Σ_q ω_q v_q Δp³`.
pub fn integrate(values: &[f64], grid: &MomentumGrid) -> f64 {
    let n = grid.nodes_per_axis;
    debug_assert_eq!(values.len(), grid.len());
    let w = &grid.weights;
    let mut total = 0.0;
    for i in 0..n {
        let mut plane = 0.0;
        for j in 0..n {
            let row = &values[(i * n + j) * n..(i * n + j + 1) * n];
            let line: f64 = row.iter().zip(w).map(|(v, wk)| v * wk).sum();
            plane += w[j] * line;
        }
        total += w[i] * plane;
    }
    total * grid.cell_volume()
}

/// Discrete `(n, P, E)` of `f` on `grid`.
pub fn compute_moments(f: &[f64], grid: &MomentumGrid, mass: f64) -> Moments {
    let n = grid.nodes_per_axis;
    debug_assert_eq!(f.len(), grid.len());
    let w = &grid.weights;
    let (ax, ay, az) = (&grid.axes[0], &grid.axes[1], &grid.axes[2]);
    let mut acc = [0.0f64; 5];
    for i in 0..n {
        let mut plane = [0.0f64; 5];
        for j in 0..n {
            let row = &f[(i * n + j) * n..(i * n + j + 1) * n];
            let (mut s0, mut sz, mut szz) = (0.0, 0.0, 0.0);
            for k in 0..n {
                let v = row[k] * w[k];
                s0 += v;
                sz += v * az[k];
                szz += v * az[k] * az[k];
            }
            let wj = w[j];
            let py = ay[j];
            plane[0] += wj * s0;
            plane[1] += wj * s0 * py;
            plane[2] += wj * sz;
            plane[3] += wj * (s0 * py * py + szz);
        }
        let wi = w[i];
        let px = ax[i];
        acc[0] += wi * plane[0];
        acc[1] += wi * plane[0] * px;
        acc[2] += wi * plane[1];
        acc[3] += wi * plane[2];
        acc[4] += wi * (plane[0] * px * px + plane[3]);
    }
    let dv = grid.cell_volume();
    Moments {
        n: acc[0] * dv,
        p: Vector3::new(acc[1], acc[2], acc[3]) * dv,
        e: acc[4] * dv / (2.0 * mass),
    }
}

/// `T = (2/3)(E/n − |P|²/(2 m n²))`.
pub fn kinetic_temperature(mom: &Moments, mass: f64) -> Result<f64> {
    if !(mom.n > 0.0) {
        return Err(Error::Domain(format!(
            "kinetic temperature needs positive density, got {}",
            mom.n
        )));
    }
    Ok(2.0 / 3.0 * (mom.e / mom.n - mom.p.norm_squared() / (2.0 * mass * mom.n * mom.n)))
}

/// Mass-weighted mean velocity `Σ P_k / Σ N_k`.
pub fn mixture_velocity(parts: &[(Moments, f64)]) -> Result<Vector3<f64>> {
    let (mut p, mut rho) = (Vector3::zeros(), 0.0);
    for (m, mass) in parts {
        p += m.p;
        rho += m.n * mass;
    }
    if !(rho > 0.0) {
        return Err(Error::Domain("mixture velocity needs positive total density".into()));
    }
    Ok(p / rho)
}

/// Mixture temperature: density-weighted kinetic temperatures plus the
/// contribution of the relative drift between species.
pub fn mixture_temperature(parts: &[(Moments, f64)]) -> Result<f64> {
    let n_tot: f64 = parts.iter().map(|(m, _)| m.n).sum();
    if !(n_tot > 0.0) {
        return Err(Error::Domain("mixture temperature needs positive total density".into()));
    }
    let u = mixture_velocity(parts)?;
    let mut acc = 0.0;
    for (m, mass) in parts {
        if m.n > 0.0 {
            let uk = m.p / (m.n * mass);
            acc += m.n * kinetic_temperature(m, *mass)? + (m.n * mass) * (uk - u).norm_squared() / 3.0;
        }
    }
    Ok(acc / n_tot)
}

/// Two-species convenience form of [`mixture_temperature`].
pub fn mixture_temperature_pair(m1: &Moments, m2: &Moments, mass1: f64, mass2: f64) -> Result<f64> {
    mixture_temperature(&[(*m1, mass1), (*m2, mass2)])
}

/// Maxwellian `n (2π m T)^{-3/2} exp(−|p − m u|²/(2 m T))` sampled on the grid.
pub fn sample_maxwellian(grid: &MomentumGrid, mass: f64, n: f64, u: Vector3<f64>, t: f64) -> Vec<f64> {
    let norm = n / (2.0 * std::f64::consts::PI * mass * t).powf(1.5);
    let pc = u * mass;
    grid.sample(|p| norm * (-(p - pc).norm_squared() / (2.0 * mass * t)).exp())
}
