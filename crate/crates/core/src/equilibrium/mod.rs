//! Equilibrium parameters from moment constraints.
//!
//! Intra-species equilibria minimize `c ∫ w(K) dp + μ·α` over the 5-vector α;
//! inter-species pairs share the momentum and energy multipliers and minimize
//! the coefficient-weighted sum of both species' potentials over a 6-vector.

mod kernel;
pub mod newton;

use std::f64::consts::PI;

use nalgebra::{SMatrix, SVector, Vector3};

use crate::error::{Error, Result};
use crate::grid::{compute_moments, MomentumGrid, Moments};
use crate::statistics::ParticleStatistics;

pub(crate) use kernel::Basis;
pub use newton::{newton_minimize, ConvexPotential, NewtonOptions, NewtonOutcome, PotentialEval};

/// Fermion targets must stay below this fraction of the grid saturation density.
pub const SATURATION_FRACTION: f64 = 0.999;

/// Multipliers of `(1, p, |p|²/(2m))` for one equilibrium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntraAlpha {
    pub a0: f64,
    pub a1: Vector3<f64>,
    pub a2: f64,
}

impl IntraAlpha {
    pub fn new(a0: f64, a1: Vector3<f64>, a2: f64) -> Self {
        IntraAlpha { a0, a1, a2 }
    }

    /// Parameters of the identically zero equilibrium.
    pub fn vacuum() -> Self {
        IntraAlpha {
            a0: f64::NEG_INFINITY,
            a1: Vector3::zeros(),
            a2: -1.0,
        }
    }

    pub fn is_vacuum(&self) -> bool {
        self.a0 == f64::NEG_INFINITY
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.a0, self.a1.x, self.a1.y, self.a1.z, self.a2]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        IntraAlpha {
            a0: a[0],
            a1: Vector3::new(a[1], a[2], a[3]),
            a2: a[4],
        }
    }

    /// `α·𝐩(p)`.
    pub fn exponent(&self, p: Vector3<f64>, mass: f64) -> f64 {
        self.a0 + self.a1.dot(&p) + self.a2 * p.norm_squared() / (2.0 * mass)
    }

    /// Exact parameters of the Maxwellian with the given moments.
    pub fn maxwellian_fit(mom: &Moments, mass: f64) -> Result<Self> {
        let t = crate::grid::kinetic_temperature(mom, mass)?;
        if !(t > 0.0) {
            return Err(Error::Domain(format!("moments have non-positive temperature {t}")));
        }
        let u = mom.p / (mom.n * mass);
        Ok(Self::maxwellian(mom.n, u, t, mass))
    }

    /// Parameters of `n (2π m T)^{-3/2} exp(−|p − m u|²/(2 m T))`.
    pub fn maxwellian(n: f64, u: Vector3<f64>, t: f64, mass: f64) -> Self {
        IntraAlpha {
            a0: (n / (2.0 * PI * mass * t).powf(1.5)).ln() - mass * u.norm_squared() / (2.0 * t),
            a1: u / t,
            a2: -1.0 / t,
        }
    }
}

/// Parameters of an inter-species pair `(K_kj, K_jk)` with shared `a1`, `a2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterAlpha {
    pub a12_0: f64,
    pub a21_0: f64,
    pub a1: Vector3<f64>,
    pub a2: f64,
}

impl InterAlpha {
    /// Parameters of the first member `K_kj`.
    pub fn first(&self) -> IntraAlpha {
        IntraAlpha::new(self.a12_0, self.a1, self.a2)
    }

    /// Parameters of the second member `K_jk`.
    pub fn second(&self) -> IntraAlpha {
        IntraAlpha::new(self.a21_0, self.a1, self.a2)
    }

    fn from_parts(a12_0: f64, a21_0: f64, shared: &IntraAlpha) -> Self {
        InterAlpha {
            a12_0,
            a21_0,
            a1: shared.a1,
            a2: shared.a2,
        }
    }

    /// `(c_kj, c_jk)` of the pair for masses `(m_k, m_j)`.
    pub fn c_pair(&self, m1: f64, m2: f64) -> Result<(f64, f64)> {
        let (_, _, c12) = alpha_to_abc(&self.first(), m1)?;
        let (_, _, c21) = alpha_to_abc(&self.second(), m2)?;
        Ok((c12, c21))
    }
}

/// `(a, b, c)` of `1/(e^{m a |p/m − b|² + c} + τ)`.
pub fn alpha_to_abc(alpha: &IntraAlpha, mass: f64) -> Result<(f64, Vector3<f64>, f64)> {
    if !(alpha.a2 < 0.0) {
        return Err(Error::Domain(format!("a2 must be negative, got {}", alpha.a2)));
    }
    let a = -alpha.a2 / 2.0;
    let b = -alpha.a1 / alpha.a2;
    let c = -alpha.a0 + mass * alpha.a1.norm_squared() / (2.0 * alpha.a2);
    Ok((a, b, c))
}

/// Inverse of [`alpha_to_abc`].
pub fn abc_to_alpha(a: f64, b: Vector3<f64>, c: f64, mass: f64) -> IntraAlpha {
    let a2 = -2.0 * a;
    let a1 = -b * a2;
    let a0 = -c + mass * a1.norm_squared() / (2.0 * a2);
    IntraAlpha { a0, a1, a2 }
}

/// `coeff · ∫ G 𝐩 dp`.
pub fn assemble_targets_intra(g: &[f64], grid: &MomentumGrid, mass: f64, coeff: f64) -> [f64; 5] {
    compute_moments(g, grid, mass).scaled(coeff).as_array()
}

/// Inter targets from per-species moments and coefficients.
pub fn inter_targets_from_moments(m1: &Moments, m2: &Moments, c1: f64, c2: f64) -> [f64; 6] {
    let p = m1.p * c1 + m2.p * c2;
    [c1 * m1.n, c2 * m2.n, p.x, p.y, p.z, c1 * m1.e + c2 * m2.e]
}

/// `∫ (1,0,p,|p|²/2m₁) c₁G₁ + (0,1,p,|p|²/2m₂) c₂G₂ dp`.
#[allow(clippy::too_many_arguments)]
pub fn assemble_targets_inter(
    g1: &[f64],
    g2: &[f64],
    grid1: &MomentumGrid,
    grid2: &MomentumGrid,
    m1: f64,
    m2: f64,
    c1: f64,
    c2: f64,
) -> [f64; 6] {
    inter_targets_from_moments(&compute_moments(g1, grid1, m1), &compute_moments(g2, grid2, m2), c1, c2)
}

/// Result of an intra-species solve.
#[derive(Debug, Clone, Copy)]
pub struct IntraSolution {
    pub alpha: IntraAlpha,
    pub iterations: usize,
    pub residual: f64,
    /// Discrete moments of `K(α)` (without the coefficient).
    pub moments: Moments,
}

/// Result of an inter-species pair solve.
#[derive(Debug, Clone, Copy)]
pub struct InterSolution {
    pub alpha: InterAlpha,
    pub iterations: usize,
    pub residual: f64,
    pub moments1: Moments,
    pub moments2: Moments,
}

/// Equilibrium node values of `alpha` on `grid`.
pub fn equilibrium_values(
    alpha: &IntraAlpha,
    grid: &MomentumGrid,
    mass: f64,
    stats: ParticleStatistics,
    out: &mut [f64],
) -> Result<()> {
    if alpha.is_vacuum() {
        out.fill(0.0);
        return Ok(());
    }
    let basis = Basis::new(grid, mass, grid.center());
    basis
        .fill(&basis.theta_from_alpha(alpha), stats, out)
        .ok_or_else(|| Error::Feasibility(format!("{stats} equilibrium is infeasible on the grid")))
}

/// Discrete moments of the equilibrium `alpha`.
pub fn equilibrium_moments(
    alpha: &IntraAlpha,
    grid: &MomentumGrid,
    mass: f64,
    stats: ParticleStatistics,
) -> Result<Moments> {
    if alpha.is_vacuum() {
        return Ok(Moments::zero());
    }
    let basis = Basis::new(grid, mass, grid.center());
    let t = basis.theta_from_alpha(alpha);
    let acc = basis
        .accumulate(&t, stats, false)
        .ok_or_else(|| Error::Feasibility(format!("{stats} equilibrium is infeasible on the grid")))?;
    Ok(basis.moments_from_theta(&acc.m))
}

/// Value, gradient and Hessian of the convex intra potential
/// `−c Σ ω w(K) Δp³ − μ·α` in the physical α coordinates.
pub fn intra_potential(
    alpha: &IntraAlpha,
    targets: &[f64; 5],
    grid: &MomentumGrid,
    mass: f64,
    stats: ParticleStatistics,
    coeff: f64,
) -> Option<PotentialEval<5>> {
    let basis = Basis::new(grid, mass, Vector3::zeros());
    let pot = IntraPotential {
        basis,
        stats,
        coeff,
        mu: *targets,
        density: targets[0],
    };
    pot.evaluate(&SVector::from(alpha.as_array()))
}

/// Value, gradient and Hessian of the convex inter potential in the physical
/// 6-vector coordinates (same sign convention as [`intra_potential`]).
#[allow(clippy::too_many_arguments)]
pub fn inter_potential(
    alpha: &InterAlpha,
    targets: &[f64; 6],
    grids: (&MomentumGrid, &MomentumGrid),
    masses: (f64, f64),
    stats: (ParticleStatistics, ParticleStatistics),
    coeffs: (f64, f64),
) -> Option<PotentialEval<6>> {
    let pot = InterPotential {
        b1: Basis::new(grids.0, masses.0, Vector3::zeros()),
        b2: Basis::new(grids.1, masses.1, Vector3::zeros()),
        s1: stats.0,
        s2: stats.1,
        c1: coeffs.0,
        c2: coeffs.1,
        mu: *targets,
        density: targets[0] + targets[1],
    };
    let x = SVector::from([alpha.a12_0, alpha.a21_0, alpha.a1.x, alpha.a1.y, alpha.a1.z, alpha.a2]);
    pot.evaluate(&x)
}

struct IntraPotential<'a> {
    basis: Basis<'a>,
    stats: ParticleStatistics,
    coeff: f64,
    mu: [f64; 5],
    density: f64,
}

impl ConvexPotential<5> for IntraPotential<'_> {
    fn evaluate(&self, x: &SVector<f64, 5>) -> Option<PotentialEval<5>> {
        let t: [f64; 5] = (*x).into();
        let acc = self.basis.accumulate(&t, self.stats, true)?;
        let c = self.coeff;
        let mu = SVector::from(self.mu);
        let m = SVector::from(acc.m);
        Some(PotentialEval {
            value: -(c * acc.value + mu.dot(x)),
            gradient: m * c - mu,
            hessian: SMatrix::from_fn(|r, s| c * acc.h[r][s]),
        })
    }

    fn density_scale(&self) -> f64 {
        self.density
    }
}

struct InterPotential<'a> {
    b1: Basis<'a>,
    b2: Basis<'a>,
    s1: ParticleStatistics,
    s2: ParticleStatistics,
    c1: f64,
    c2: f64,
    mu: [f64; 6],
    density: f64,
}

impl ConvexPotential<6> for InterPotential<'_> {
    fn evaluate(&self, x: &SVector<f64, 6>) -> Option<PotentialEval<6>> {
        let t1 = [x[0], x[2], x[3], x[4], x[5]];
        let t2 = [x[1], x[2], x[3], x[4], x[5]];
        let a1 = self.b1.accumulate(&t1, self.s1, true)?;
        let a2 = self.b2.accumulate(&t2, self.s2, true)?;
        let (c1, c2) = (self.c1, self.c2);
        let mu = SVector::from(self.mu);
        let value = -(c1 * a1.value + c2 * a2.value + mu.dot(x));
        let mut g = -mu;
        g[0] += c1 * a1.m[0];
        g[1] += c2 * a2.m[0];
        for r in 0..4 {
            g[2 + r] += c1 * a1.m[1 + r] + c2 * a2.m[1 + r];
        }
        let mut h = SMatrix::<f64, 6, 6>::zeros();
        h[(0, 0)] = c1 * a1.h[0][0];
        h[(1, 1)] = c2 * a2.h[0][0];
        for r in 0..4 {
            h[(0, 2 + r)] = c1 * a1.h[0][1 + r];
            h[(2 + r, 0)] = h[(0, 2 + r)];
            h[(1, 2 + r)] = c2 * a2.h[0][1 + r];
            h[(2 + r, 1)] = h[(1, 2 + r)];
            for s in 0..4 {
                h[(2 + r, 2 + s)] = c1 * a1.h[1 + r][1 + s] + c2 * a2.h[1 + r][1 + s];
            }
        }
        Some(PotentialEval {
            value,
            gradient: g,
            hessian: h,
        })
    }

    fn density_scale(&self) -> f64 {
        self.density
    }
}

fn check_realizable(mom: &Moments, mass: f64, what: &str) -> Result<()> {
    let ok = mom.n > 0.0
        && mom.n.is_finite()
        && mom.p.iter().all(|v| v.is_finite())
        && mom.e.is_finite()
        && mom.internal_energy(mass) > 0.0;
    if ok {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "{what} targets are not realizable (n={:e}, P={:?}, E={:e})",
            mom.n,
            mom.p.as_slice(),
            mom.e
        )))
    }
}

fn check_saturation(n: f64, grid: &MomentumGrid, stats: ParticleStatistics) -> Result<()> {
    if stats == ParticleStatistics::Fermion {
        let limit = grid.saturation_density();
        if n >= SATURATION_FRACTION * limit {
            return Err(Error::Saturation { density: n, limit });
        }
    }
    Ok(())
}

/// Lower `t0` until the exponent is negative everywhere (boson feasibility).
fn make_feasible(basis: &Basis, t: &mut [f64; 5], stats: ParticleStatistics) {
    if stats == ParticleStatistics::Boson {
        let mx = basis.max_exponent(t);
        if mx >= -1e-3 {
            t[0] -= mx + 0.5;
        }
    }
}

/// Solve for the intra equilibrium whose discrete moments equal `targets / coeff`.
pub fn solve_intra(
    targets: &[f64; 5],
    grid: &MomentumGrid,
    mass: f64,
    stats: ParticleStatistics,
    coeff: f64,
    warm_start: Option<&IntraAlpha>,
    opts: &NewtonOptions,
) -> Result<IntraSolution> {
    if !(coeff > 0.0) {
        return Err(Error::Domain(format!("intra coefficient must be positive, got {coeff}")));
    }
    let mom = Moments::from_array(*targets).scaled(1.0 / coeff);
    if targets.iter().all(|v| *v == 0.0) {
        return Ok(IntraSolution {
            alpha: IntraAlpha::vacuum(),
            iterations: 0,
            residual: 0.0,
            moments: Moments::zero(),
        });
    }
    check_realizable(&mom, mass, "intra")?;
    check_saturation(mom.n, grid, stats)?;

    let basis = Basis::new(grid, mass, grid.center());
    let mu = basis.moments_to_theta(&Moments::from_array(*targets));
    let pot = IntraPotential {
        basis,
        stats,
        coeff,
        mu,
        density: targets[0],
    };
    let run = |start: IntraAlpha| -> Result<NewtonOutcome<5>> {
        let mut t = basis.theta_from_alpha(&start);
        make_feasible(&basis, &mut t, stats);
        newton_minimize(&pot, SVector::from(t), opts)
    };
    let fit = || IntraAlpha::maxwellian_fit(&mom, mass);
    let out = match warm_start.filter(|w| !w.is_vacuum() && w.a2 < 0.0) {
        Some(w) => match run(*w) {
            Ok(o) => o,
            Err(_) => run(fit()?)?,
        },
        None => run(fit()?)?,
    };
    let t: [f64; 5] = out.x.into();
    let m_theta: [f64; 5] = ((SVector::from(mu) + out.eval.gradient) / coeff).into();
    Ok(IntraSolution {
        alpha: basis.alpha_from_theta(&t),
        iterations: out.iterations,
        residual: out.residual,
        moments: basis.moments_from_theta(&m_theta),
    })
}

/// Closed-form classical fit of an inter problem (common drift and temperature).
fn inter_fit(targets: &[f64; 6], masses: (f64, f64), coeffs: (f64, f64)) -> Result<InterAlpha> {
    let rho = masses.0 * targets[0] + masses.1 * targets[1];
    let p = Vector3::new(targets[2], targets[3], targets[4]);
    let u = p / rho;
    let internal = targets[5] - p.norm_squared() / (2.0 * rho);
    let t = 2.0 / 3.0 * internal / (targets[0] + targets[1]);
    if !(t > 0.0) {
        return Err(Error::Domain(format!("inter targets have non-positive temperature {t}")));
    }
    let n1 = targets[0] / coeffs.0;
    let n2 = targets[1] / coeffs.1;
    let f1 = IntraAlpha::maxwellian(n1, u, t, masses.0);
    let f2 = IntraAlpha::maxwellian(n2, u, t, masses.1);
    Ok(InterAlpha::from_parts(f1.a0, f2.a0, &f1))
}

/// Solve for the inter pair whose densities match the `μ⁰` slots and whose
/// coefficient-weighted momentum and energy match the shared slots.
#[allow(clippy::too_many_arguments)]
pub fn solve_inter(
    targets: &[f64; 6],
    grids: (&MomentumGrid, &MomentumGrid),
    masses: (f64, f64),
    stats: (ParticleStatistics, ParticleStatistics),
    coeffs: (f64, f64),
    warm_start: Option<&InterAlpha>,
    opts: &NewtonOptions,
) -> Result<InterSolution> {
    if !(coeffs.0 > 0.0 && coeffs.1 > 0.0) {
        return Err(Error::Domain(format!("inter coefficients must be positive, got {coeffs:?}")));
    }
    let (z1, z2) = (targets[0] == 0.0, targets[1] == 0.0);
    if z1 || z2 {
        return solve_inter_degenerate(targets, grids, masses, stats, coeffs, opts, z1, z2);
    }
    let rho = masses.0 * targets[0] + masses.1 * targets[1];
    let p = Vector3::new(targets[2], targets[3], targets[4]);
    let realizable = targets[0] > 0.0
        && targets[1] > 0.0
        && targets.iter().all(|v| v.is_finite())
        && targets[5] - p.norm_squared() / (2.0 * rho) > 0.0;
    if !realizable {
        return Err(Error::Domain(format!("inter targets are not realizable: {targets:?}")));
    }
    check_saturation(targets[0] / coeffs.0, grids.0, stats.0)?;
    check_saturation(targets[1] / coeffs.1, grids.1, stats.1)?;

    let u_ref = grids.0.center() / masses.0;
    let b1 = Basis::new(grids.0, masses.0, u_ref * masses.0);
    let b2 = Basis::new(grids.1, masses.1, u_ref * masses.1);
    // Shared slots in the shifted basis.
    let q = p - u_ref * rho;
    let e = targets[5] - u_ref.dot(&p) + 0.5 * u_ref.norm_squared() * rho;
    let mu = [targets[0], targets[1], q.x, q.y, q.z, e];
    let pot = InterPotential {
        b1,
        b2,
        s1: stats.0,
        s2: stats.1,
        c1: coeffs.0,
        c2: coeffs.1,
        mu,
        density: targets[0] + targets[1],
    };
    let to_theta = |a: &InterAlpha| -> [f64; 6] {
        let t1 = b1.theta_from_alpha(&a.first());
        let t2 = b2.theta_from_alpha(&a.second());
        [t1[0], t2[0], t1[1], t1[2], t1[3], t1[4]]
    };
    let run = |start: InterAlpha| -> Result<NewtonOutcome<6>> {
        let mut t = to_theta(&start);
        let mut t1 = [t[0], t[2], t[3], t[4], t[5]];
        let mut t2 = [t[1], t[2], t[3], t[4], t[5]];
        make_feasible(&b1, &mut t1, stats.0);
        make_feasible(&b2, &mut t2, stats.1);
        t[0] = t1[0];
        t[1] = t2[0];
        newton_minimize(&pot, SVector::from(t), opts)
    };
    let fit = || inter_fit(targets, masses, coeffs);
    let out = match warm_start.filter(|w| w.a12_0.is_finite() && w.a21_0.is_finite() && w.a2 < 0.0) {
        Some(w) => match run(*w) {
            Ok(o) => o,
            Err(_) => run(fit()?)?,
        },
        None => run(fit()?)?,
    };
    let x = out.x;
    let a1 = b1.alpha_from_theta(&[x[0], x[2], x[3], x[4], x[5]]);
    let a2 = b2.alpha_from_theta(&[x[1], x[2], x[3], x[4], x[5]]);
    let alpha = InterAlpha::from_parts(a1.a0, a2.a0, &a1);
    let moments1 = equilibrium_moments(&alpha.first(), grids.0, masses.0, stats.0)?;
    let moments2 = equilibrium_moments(&alpha.second(), grids.1, masses.1, stats.1)?;
    Ok(InterSolution {
        alpha,
        iterations: out.iterations,
        residual: out.residual,
        moments1,
        moments2,
    })
}

#[allow(clippy::too_many_arguments)]
fn solve_inter_degenerate(
    targets: &[f64; 6],
    grids: (&MomentumGrid, &MomentumGrid),
    masses: (f64, f64),
    stats: (ParticleStatistics, ParticleStatistics),
    coeffs: (f64, f64),
    opts: &NewtonOptions,
    z1: bool,
    z2: bool,
) -> Result<InterSolution> {
    let shared = [targets[2], targets[3], targets[4], targets[5]];
    if z1 && z2 {
        if shared.iter().any(|v| *v != 0.0) {
            return Err(Error::Domain("inter targets carry momentum or energy without density".into()));
        }
        let v = IntraAlpha::vacuum();
        return Ok(InterSolution {
            alpha: InterAlpha::from_parts(v.a0, v.a0, &v),
            iterations: 0,
            residual: 0.0,
            moments1: Moments::zero(),
            moments2: Moments::zero(),
        });
    }
    // One member is vacuum: the other carries all shared moments alone.
    let (k, grid, mass, st, c) = if z1 {
        (1, grids.1, masses.1, stats.1, coeffs.1)
    } else {
        (0, grids.0, masses.0, stats.0, coeffs.0)
    };
    let intra_targets = [targets[k], shared[0], shared[1], shared[2], shared[3]];
    let sol = solve_intra(&intra_targets, grid, mass, st, c, None, opts)?;
    let ninf = f64::NEG_INFINITY;
    let (a12, a21, m1, m2) = if z1 {
        (ninf, sol.alpha.a0, Moments::zero(), sol.moments)
    } else {
        (sol.alpha.a0, ninf, sol.moments, Moments::zero())
    };
    Ok(InterSolution {
        alpha: InterAlpha::from_parts(a12, a21, &sol.alpha),
        iterations: sol.iterations,
        residual: sol.residual,
        moments1: m1,
        moments2: m2,
    })
}
