//! Pointwise kernels for the three particle statistics.
//!
//! With `x = α·𝐩(p)` the equilibrium is `K = 1/(e^{−x} + τ)`. Every statistic
//! shares `dw/dx = −K` for the dual potential integrand `w`, and `dK/dx = K(1 − τK)`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParticleStatistics {
    Fermion,
    Classical,
    Boson,
}

impl ParticleStatistics {
    pub const ALL: [ParticleStatistics; 3] = [Self::Fermion, Self::Classical, Self::Boson];

    /// `τ`: +1, 0 or −1.
    pub fn tau(self) -> f64 {
        match self {
            Self::Fermion => 1.0,
            Self::Classical => 0.0,
            Self::Boson => -1.0,
        }
    }

    pub fn from_tau(tau: i32) -> Option<Self> {
        match tau {
            1 => Some(Self::Fermion),
            0 => Some(Self::Classical),
            -1 => Some(Self::Boson),
            _ => None,
        }
    }

    /// One-letter code used in scenario names (`f`, `c`, `b`).
    pub fn code(self) -> char {
        match self {
            Self::Fermion => 'f',
            Self::Classical => 'c',
            Self::Boson => 'b',
        }
    }

    pub fn from_code(c: char) -> Option<Self> {
        match c {
            'f' => Some(Self::Fermion),
            'c' => Some(Self::Classical),
            'b' => Some(Self::Boson),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Fermion => "fermion",
            Self::Classical => "classical",
            Self::Boson => "boson",
        }
    }
}

impl fmt::Display for ParticleStatistics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ParticleStatistics {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fermion" | "fermi" | "fd" | "+1" | "1" => Ok(Self::Fermion),
            "classical" | "maxwell" | "0" => Ok(Self::Classical),
            "boson" | "bose" | "be" | "-1" => Ok(Self::Boson),
            other => Err(format!("unknown statistics '{other}'")),
        }
    }
}

/// Collision invariants `(1, p, |p|²/(2m))`.
pub fn moment_vector(p: Vector3<f64>, mass: f64) -> [f64; 5] {
    [1.0, p.x, p.y, p.z, p.norm_squared() / (2.0 * mass)]
}

/// `1/(e^{−x} + τ)` for an exponent `x = α·𝐩`.
pub fn equilibrium_from_exponent(x: f64, stats: ParticleStatistics) -> Result<f64> {
    kernel(x, stats)
        .map(|k| k.k)
        .ok_or_else(|| Error::Feasibility(format!("exponent {x} is outside the {stats} domain")))
}

/// `K(p) = 1/(e^{−α·𝐩(p)} + τ)`.
pub fn eval_equilibrium(alpha: &[f64; 5], p: Vector3<f64>, mass: f64, stats: ParticleStatistics) -> Result<f64> {
    let v = moment_vector(p, mass);
    let x: f64 = alpha.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
    equilibrium_from_exponent(x, stats)
}

/// Entropy integrand `h_τ(z) = z ln z + τ⁻¹(1 − τz) ln(1 − τz)`.
pub fn entropy_integrand(z: f64, stats: ParticleStatistics) -> Result<f64> {
    let zlnz = |z: f64| if z == 0.0 { 0.0 } else { z * z.ln() };
    match stats {
        _ if !(z >= 0.0) => Err(Error::Domain(format!("entropy argument {z} is negative"))),
        ParticleStatistics::Classical => Ok(zlnz(z)),
        ParticleStatistics::Fermion => {
            if z >= 1.0 {
                Err(Error::Domain(format!("fermion occupation {z} is not below 1")))
            } else {
                Ok(zlnz(z) + (1.0 - z) * (-z).ln_1p())
            }
        }
        ParticleStatistics::Boson => Ok(zlnz(z) - (1.0 + z) * z.ln_1p()),
    }
}

/// `h_τ′(z) = ln(z/(1 − τz))`.
pub fn entropy_derivative(z: f64, stats: ParticleStatistics) -> f64 {
    (z / (1.0 - stats.tau() * z)).ln()
}

/// Dual potential integrand: `−K`, `ln(1 − K)` or `−ln(1 + K)`.
pub fn potential_integrand(k: f64, stats: ParticleStatistics) -> Result<f64> {
    match stats {
        _ if !(k >= 0.0) => Err(Error::Domain(format!("equilibrium value {k} is negative"))),
        ParticleStatistics::Classical => Ok(-k),
        ParticleStatistics::Fermion => {
            if k >= 1.0 {
                Err(Error::Domain(format!("fermion equilibrium value {k} is not below 1")))
            } else {
                Ok((-k).ln_1p())
            }
        }
        ParticleStatistics::Boson => Ok(-k.ln_1p()),
    }
}

/// Hessian weight `ζ = dK/dx`: `K` for classical, `K² e^{−x}` otherwise.
pub fn hessian_weight(k: f64, exponent: f64, stats: ParticleStatistics) -> f64 {
    match stats {
        ParticleStatistics::Classical => k,
        _ => k * k * (-exponent).exp(),
    }
}

/// Equilibrium value, Hessian weight and potential integrand at exponent `x`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Kernel {
    pub k: f64,
    pub zeta: f64,
    pub w: f64,
}

/// Numerically stable evaluation of [`Kernel`]; `None` outside the domain.
#[inline(always)]
pub(crate) fn kernel(x: f64, stats: ParticleStatistics) -> Option<Kernel> {
    match stats {
        ParticleStatistics::Classical => {
            let k = x.exp();
            if k.is_finite() {
                Some(Kernel { k, zeta: k, w: -k })
            } else {
                None
            }
        }
        ParticleStatistics::Fermion => {
            if x.is_nan() {
                return None;
            }
            if x > 0.0 {
                let e = (-x).exp();
                let k = 1.0 / (1.0 + e);
                Some(Kernel {
                    k,
                    zeta: k * e * k,
                    w: -(x + e.ln_1p()),
                })
            } else {
                let e = x.exp();
                let k = e / (1.0 + e);
                Some(Kernel {
                    k,
                    zeta: k * (1.0 - k),
                    w: -e.ln_1p(),
                })
            }
        }
        ParticleStatistics::Boson => {
            if !(x < 0.0) {
                return None;
            }
            let om = -x.exp_m1();
            let k = x.exp() / om;
            Some(Kernel {
                k,
                zeta: k * (1.0 + k),
                w: (-x.exp()).ln_1p(),
            })
        }
    }
}

const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];
const ETA_PANELS: usize = 600;

/// `η_τ(c) = ∫ (e^{|p|²+c} + τ)⁻¹ dp` and `η^E_τ(c) = ∫ |p|² (e^{|p|²+c} + τ)⁻¹ dp`
/// by radial Gauss–Legendre quadrature.
pub fn eta_integrals(c: f64, stats: ParticleStatistics) -> Result<(f64, f64)> {
    if !c.is_finite() {
        return Err(Error::Domain(format!("eta integrals need a finite c, got {c}")));
    }
    if stats == ParticleStatistics::Boson && c <= 0.0 {
        return Err(Error::Domain(format!("boson eta integrals need c > 0, got {c}")));
    }
    if stats == ParticleStatistics::Classical {
        let base = PI.powf(1.5) * (-c).exp();
        return Ok((base, 1.5 * base));
    }
    let tau = stats.tau();
    // Beyond r² = max(−c, 0) + 40 the integrand is below e^{-40} of its bulk.
    let r_max = ((-c).max(0.0) + 40.0).sqrt();
    let h = r_max / ETA_PANELS as f64;
    let (mut s0, mut s2) = (0.0, 0.0);
    for panel in 0..ETA_PANELS {
        let mid = (panel as f64 + 0.5) * h;
        for (xi, wi) in GL5_NODES.iter().zip(GL5_WEIGHTS.iter()) {
            let r = mid + 0.5 * h * xi;
            let r2 = r * r;
            // 1/(e^{r²+c} + τ) = e^{−(r²+c)}/(1 + τ e^{−(r²+c)})
            let e = (-(r2 + c)).exp();
            let occ = e / (1.0 + tau * e);
            let g = wi * r2 * occ;
            s0 += g;
            s2 += g * r2;
        }
    }
    let scale = 4.0 * PI * 0.5 * h;
    Ok((s0 * scale, s2 * scale))
}
