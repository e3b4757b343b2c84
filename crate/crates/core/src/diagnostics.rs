//! Entropy, conservation totals, temperatures and the analytic relaxation laws.

use nalgebra::Vector3;

use crate::equilibrium::{IntraAlpha, NewtonOptions};
use crate::error::{Error, Result};
use crate::grid::{compute_moments, integrate, kinetic_temperature, mixture_temperature, Moments};
use crate::nspecies::{fit_equilibria, CellEquilibria};
use crate::species::SpeciesSet;
use crate::state::{DistributionField, SimulationState};
use crate::statistics::{entropy_integrand, eta_integrals, ParticleStatistics};
use crate::transport::SpatialMesh;

/// `∫ h_τ(f) dp` on one cell.
pub fn cell_entropy(f: &[f64], set: &SpeciesSet, k: usize) -> Result<f64> {
    let sp = &set.species[k];
    let mut h = Vec::with_capacity(f.len());
    for (q, &z) in f.iter().enumerate() {
        h.push(entropy_integrand(z, sp.statistics).map_err(|e| {
            Error::Diagnostic(format!("species '{}' node {q}: {e}", sp.label))
        })?);
    }
    Ok(integrate(&h, &sp.grid))
}

/// `Σ_k Σ_i ∫ h_τk(f_k) dp Δx`; pass `dx = None` for a space-homogeneous state.
pub fn total_entropy(set: &SpeciesSet, fields: &[DistributionField], dx: Option<f64>) -> Result<f64> {
    let mut total = 0.0;
    for (k, f) in fields.iter().enumerate() {
        for c in 0..f.cells() {
            total += cell_entropy(f.cell(c), set, k).map_err(|e| e.in_cell(c))?;
        }
    }
    Ok(total * dx.unwrap_or(1.0))
}

/// `ϑ = 1/(2a) = −1/a2`.
pub fn physical_temperature(alpha: &IntraAlpha) -> Result<f64> {
    if !(alpha.a2 < 0.0) || alpha.is_vacuum() {
        return Err(Error::Domain(format!(
            "physical temperature needs a2 < 0 and a non-vacuum equilibrium, got {alpha:?}"
        )));
    }
    Ok(-1.0 / alpha.a2)
}

/// `E/n − |P|²/(2nN)`, the per-particle internal energy (3/2 of `T_kin`).
pub fn internal_energy_per_particle(mom: &Moments, mass: f64) -> f64 {
    mom.internal_energy(mass) / mom.n
}

/// Exponent `(ν̃_12 N_2 + ν̃_21 N_1)/(N_1 + N_2)` of the velocity-gap decay.
pub fn velocity_decay_rate(m1: &Moments, m2: &Moments, masses: (f64, f64), nu12: f64, nu21: f64) -> f64 {
    let (n1, n2) = (m1.n * masses.0, m2.n * masses.1);
    (nu12 * n2 + nu21 * n1) / (n1 + n2)
}

/// `P_1/N_1 − P_2/N_2` at time `t` from the initial moments.
pub fn analytic_velocity_gap(
    t: f64,
    m1: &Moments,
    m2: &Moments,
    masses: (f64, f64),
    nu12: f64,
    nu21: f64,
) -> Vector3<f64> {
    let gap0 = m1.p / (m1.n * masses.0) - m2.p / (m2.n * masses.1);
    gap0 * (-velocity_decay_rate(m1, m2, masses, nu12, nu21) * t).exp()
}

/// One sample `(s, c_12(s), c_21(s))` of the inter-species equilibrium trajectory.
pub type CSample = (f64, f64, f64);

/// Gap of `E/n − |P|²/(2nN)` between species 1 and 2 at time `t`, for a common
/// inter-species frequency `nu`. The history integral uses the trapezoidal rule
/// over `history`, which must start at `s = 0` and reach `t`.
#[allow(clippy::too_many_arguments)]
pub fn analytic_kinetic_temperature_gap(
    t: f64,
    m1: &Moments,
    m2: &Moments,
    masses: (f64, f64),
    stats: (ParticleStatistics, ParticleStatistics),
    nu: f64,
    history: &[CSample],
) -> Result<f64> {
    let (ma, mb) = masses;
    let (big1, big2) = (m1.n * ma, m2.n * mb);
    let decay = (-nu * t).exp();
    let gap0 = internal_energy_per_particle(m1, ma) - internal_energy_per_particle(m2, mb);
    let du = m1.p / big1 - m2.p / big2;
    let drift = 0.5 * ma * mb * (m2.n * big2 - m1.n * big1) / (big1 + big2).powi(2) * decay * (1.0 - decay)
        * du.norm_squared();
    let mut out = decay * gap0 + drift;
    if stats.0 == ParticleStatistics::Classical && stats.1 == ParticleStatistics::Classical {
        return Ok(out);
    }
    if t == 0.0 {
        return Ok(out);
    }
    let used: Vec<&CSample> = history.iter().filter(|s| s.0 <= t * (1.0 + 1e-12)).collect();
    let complete = used.first().map_or(false, |s| s.0.abs() <= 1e-12 * t.max(1.0))
        && used.last().map_or(false, |s| (s.0 - t).abs() <= 1e-9 * t.max(1.0));
    if used.len() < 2 || !complete {
        return Err(Error::Diagnostic(format!(
            "history of c12, c21 must cover [0, {t}] for the kinetic temperature law"
        )));
    }
    let w0 = m1.e + m2.e - (m1.p + m2.p).norm_squared() / (2.0 * (big1 + big2));
    let (s1, s2) = (ma.powf(1.5), mb.powf(1.5));
    let integrand = |s: &CSample| -> Result<f64> {
        let e1 = s1 * eta_integrals(s.1, stats.0)?.1;
        let e2 = s2 * eta_integrals(s.2, stats.1)?.1;
        Ok((nu * (s.0 - t)).exp() * (e1 / m1.n - e2 / m2.n) / (e1 + e2))
    };
    let mut integral = 0.0;
    let mut prev = integrand(used[0])?;
    for w in used.windows(2) {
        let next = integrand(w[1])?;
        integral += 0.5 * (w[1].0 - w[0].0) * (prev + next);
        prev = next;
    }
    out += nu * w0 * integral;
    Ok(out)
}

/// Density-weighted mean of the initial kinetic temperatures plus the drift term.
pub fn equilibrium_temperature(parts: &[(Moments, f64)]) -> Result<f64> {
    mixture_temperature(parts)
}

/// Per-species entries of a [`DiagnosticsRecord`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeciesDiagnostics {
    pub n: f64,
    pub p: Vector3<f64>,
    pub e: f64,
    pub t_kin: f64,
    pub theta: f64,
}

/// `(c_kj, c_jk)` of one unordered pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairDiagnostics {
    pub k: usize,
    pub j: usize,
    pub c_kj: f64,
    pub c_jk: f64,
}

/// Diagnostics at one recorded time. Moments are domain totals; `theta` and
/// `c` are density-weighted cell averages (exact values for one cell).
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub time: f64,
    pub species: Vec<SpeciesDiagnostics>,
    pub p_total: Vector3<f64>,
    pub e_total: f64,
    pub entropy: f64,
    pub dhdt: f64,
    /// `|P_1/N_1 − P_2/N_2|`.
    pub vel_gap: f64,
    /// `T_kin,1 − T_kin,2`.
    pub tkin_gap: f64,
    /// `ϑ_1 − ϑ_2`.
    pub theta_gap: f64,
    pub pairs: Vec<PairDiagnostics>,
}

/// Domain-integrated moments per species.
pub fn domain_moments(set: &SpeciesSet, fields: &[DistributionField], dx: Option<f64>) -> Vec<Moments> {
    let w = dx.unwrap_or(1.0);
    set.species
        .iter()
        .zip(fields)
        .map(|(sp, f)| {
            let mut acc = Moments::zero();
            for c in 0..f.cells() {
                acc = acc + compute_moments(f.cell(c), &sp.grid, sp.mass);
            }
            acc.scaled(w)
        })
        .collect()
}

/// Equilibria of every cell of the state itself, warm-started from the
/// equilibria cached in the state.
pub fn fit_state_equilibria(
    set: &SpeciesSet,
    state: &SimulationState,
    opts: &NewtonOptions,
) -> Result<Vec<CellEquilibria>> {
    use rayon::prelude::*;
    (0..state.cells())
        .into_par_iter()
        .map(|c| {
            let f = state.cell(c);
            let warm = state.equilibria.get(c).and_then(|w| w.as_ref());
            fit_equilibria(&f, set, warm, opts).map(|r| r.0).map_err(|e| e.in_cell(c))
        })
        .collect()
}

/// Build the record of `state`; `prev` supplies the entropy difference quotient.
pub fn record(
    set: &SpeciesSet,
    state: &SimulationState,
    mesh: Option<&SpatialMesh>,
    prev: Option<&DiagnosticsRecord>,
    opts: &NewtonOptions,
) -> Result<DiagnosticsRecord> {
    let dx = mesh.map(|m| m.dx());
    let moms = domain_moments(set, &state.fields, dx);
    let eq = fit_state_equilibria(set, state, opts)?;
    let s = set.len();

    // density-weighted averages of ϑ_k and the pair c's
    let mut theta = vec![0.0; s];
    let mut weight = vec![0.0; s];
    let pairs = set.pairs();
    let mut cs = vec![(0.0, 0.0, 0.0); pairs.len()];
    for (c, e) in eq.iter().enumerate() {
        let n: Vec<f64> = (0..s)
            .map(|k| compute_moments(state.fields[k].cell(c), &set.species[k].grid, set.species[k].mass).n)
            .collect();
        for k in 0..s {
            if n[k] > 0.0 && !e.intra[k].is_vacuum() {
                theta[k] += n[k] * physical_temperature(&e.intra[k])?;
                weight[k] += n[k];
            }
        }
        for (p, &(k, j)) in pairs.iter().enumerate() {
            let a = e.inter[p];
            if a.a12_0.is_finite() && a.a21_0.is_finite() && set.freqs.get(k, j) > 0.0 {
                let (ckj, cjk) = a.c_pair(set.species[k].mass, set.species[j].mass)?;
                let w = n[k] + n[j];
                cs[p].0 += w * ckj;
                cs[p].1 += w * cjk;
                cs[p].2 += w;
            }
        }
    }
    let mut species = Vec::with_capacity(s);
    for k in 0..s {
        let m = moms[k];
        let t_kin = if m.n > 0.0 { kinetic_temperature(&m, set.species[k].mass)? } else { f64::NAN };
        let th = if weight[k] > 0.0 { theta[k] / weight[k] } else { f64::NAN };
        species.push(SpeciesDiagnostics {
            n: m.n,
            p: m.p,
            e: m.e,
            t_kin,
            theta: th,
        });
    }
    let pair_diag = pairs
        .iter()
        .zip(&cs)
        .map(|(&(k, j), c)| PairDiagnostics {
            k,
            j,
            c_kj: if c.2 > 0.0 { c.0 / c.2 } else { f64::NAN },
            c_jk: if c.2 > 0.0 { c.1 / c.2 } else { f64::NAN },
        })
        .collect();
    let entropy = total_entropy(set, &state.fields, dx)?;
    let dhdt = match prev {
        Some(p) if state.time > p.time => (entropy - p.entropy) / (state.time - p.time),
        _ => 0.0,
    };
    let (vel_gap, tkin_gap, theta_gap) = if s >= 2 {
        let (a, b) = (&species[0], &species[1]);
        let (ma, mb) = (set.species[0].mass, set.species[1].mass);
        (
            (a.p / (a.n * ma) - b.p / (b.n * mb)).norm(),
            a.t_kin - b.t_kin,
            a.theta - b.theta,
        )
    } else {
        (0.0, 0.0, 0.0)
    };
    Ok(DiagnosticsRecord {
        time: state.time,
        p_total: moms.iter().map(|m| m.p).sum(),
        e_total: moms.iter().map(|m| m.e).sum(),
        species,
        entropy,
        dhdt,
        vel_gap,
        tkin_gap,
        theta_gap,
        pairs: pair_diag,
    })
}

/// Per-cell values of the final profile.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileRow {
    pub x: f64,
    /// `(n, U_x, T_kin, ϑ)` per species.
    pub species: Vec<(f64, f64, f64, f64)>,
}

/// Cell profiles of a spatial state.
pub fn profile(
    set: &SpeciesSet,
    state: &SimulationState,
    mesh: &SpatialMesh,
    opts: &NewtonOptions,
) -> Result<Vec<ProfileRow>> {
    let eq = fit_state_equilibria(set, state, opts)?;
    let mut rows = Vec::with_capacity(state.cells());
    for (c, e) in eq.iter().enumerate() {
        let mut sp = Vec::with_capacity(set.len());
        for (k, s) in set.species.iter().enumerate() {
            let m = compute_moments(state.fields[k].cell(c), &s.grid, s.mass);
            if m.n > 0.0 {
                let theta = physical_temperature(&e.intra[k]).unwrap_or(f64::NAN);
                sp.push((m.n, m.p.x / (m.n * s.mass), kinetic_temperature(&m, s.mass)?, theta));
            } else {
                sp.push((0.0, 0.0, f64::NAN, f64::NAN));
            }
        }
        rows.push(ProfileRow {
            x: mesh.center(c),
            species: sp,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::MomentumGrid;
    use crate::species::{CollisionFrequencies, Species};
    use approx::assert_relative_eq;
    use ParticleStatistics::*;

    fn relaxation_moments() -> (Moments, Moments) {
        (
            Moments::maxwellian(1.0, Vector3::new(0.5, 0.0, 0.0), 1.0, 1.0),
            Moments::maxwellian(1.2, Vector3::new(0.1, 0.0, 0.0), 0.5, 1.5),
        )
    }

    fn one_species(stats: ParticleStatistics) -> SpeciesSet {
        let g = MomentumGrid::with_intervals(1.0, Vector3::zeros(), 1.0, 8).unwrap();
        let sp = Species {
            label: "a".into(),
            mass: 1.0,
            statistics: stats,
            grid: g,
        };
        SpeciesSet::new(vec![sp], CollisionFrequencies::uniform(1, 1.0)).unwrap()
    }

    #[test]
    fn entropy_examples() {
        let set = one_species(Fermion);
        let g = &set.species[0].grid;
        let zero = DistributionField::zeros(1, g.len());
        assert_eq!(total_entropy(&set, &[zero], None).unwrap(), 0.0);
        let half = DistributionField::from_cells(vec![vec![0.5; g.len()]]);
        let (lo, hi) = g.range(0);
        let vol = (hi - lo).powi(3);
        assert_relative_eq!(total_entropy(&set, &[half], None).unwrap(), -vol * 2f64.ln(), max_relative = 1e-13);
        let one = DistributionField::from_cells(vec![vec![1.0; g.len()]]);
        assert!(matches!(total_entropy(&set, &[one], None), Err(Error::Cell { .. })));
    }

    #[test]
    fn physical_temperature_of_maxwellian_fit() {
        let a = IntraAlpha::maxwellian(1.0, Vector3::zeros(), 1.0, 1.0);
        assert_relative_eq!(physical_temperature(&a).unwrap(), 1.0, epsilon = 1e-15);
        assert!(physical_temperature(&IntraAlpha::new(0.0, Vector3::zeros(), 0.1)).is_err());
    }

    #[test]
    fn velocity_gap_law() {
        let (m1, m2) = relaxation_moments();
        let g0 = analytic_velocity_gap(0.0, &m1, &m2, (1.0, 1.5), 1.0, 1.0);
        assert_relative_eq!(g0.x, 0.4, epsilon = 1e-14);
        assert_relative_eq!(velocity_decay_rate(&m1, &m2, (1.0, 1.5), 1.0, 1.0), 1.0, epsilon = 1e-14);
        let g = analytic_velocity_gap(2.0, &m1, &m2, (1.0, 1.5), 1.0, 1.0);
        assert_relative_eq!(g.x, 0.4 * (-2.0f64).exp(), epsilon = 1e-14);
        let same = Moments::maxwellian(1.2, Vector3::new(0.5, 0.0, 0.0), 0.5, 1.5);
        assert_eq!(analytic_velocity_gap(3.0, &m1, &same, (1.0, 1.5), 1.0, 1.0).norm(), 0.0);
    }

    #[test]
    fn classical_temperature_law_has_no_history_term() {
        let (m1, m2) = relaxation_moments();
        let stats = (Classical, Classical);
        let t0 = analytic_kinetic_temperature_gap(0.0, &m1, &m2, (1.0, 1.5), stats, 1.0, &[]).unwrap();
        assert_relative_eq!(t0, 1.5 * (1.0 - 0.5), epsilon = 1e-14);
        let t = 1.3;
        let e = (-t as f64).exp();
        // N1 = 1, N2 = 1.8, n1 N1 = 1, n2 N2 = 2.16
        let expect = e * 0.75 + 0.5 * 1.5 * (2.16 - 1.0) / 2.8f64.powi(2) * e * (1.0 - e) * 0.16;
        let got = analytic_kinetic_temperature_gap(t, &m1, &m2, (1.0, 1.5), stats, 1.0, &[]).unwrap();
        assert_relative_eq!(got, expect, epsilon = 1e-14);
    }

    #[test]
    fn quantum_temperature_law_needs_history() {
        let (m1, m2) = relaxation_moments();
        let r = analytic_kinetic_temperature_gap(1.0, &m1, &m2, (1.0, 1.5), (Fermion, Fermion), 1.0, &[]);
        assert!(matches!(r, Err(Error::Diagnostic(_))));
    }

    #[test]
    fn duhamel_term_with_constant_history() {
        // Constant c's make the integral (1 − e^{−νt})/ν times the bracket.
        let (m1, m2) = relaxation_moments();
        let (c12, c21) = (1.0, 1.5);
        let hist: Vec<CSample> = (0..=2000).map(|i| (i as f64 * 1e-3, c12, c21)).collect();
        let t = 2.0;
        let stats = (Fermion, Boson);
        let got = analytic_kinetic_temperature_gap(t, &m1, &m2, (1.0, 1.5), stats, 1.0, &hist).unwrap();
        let closed = analytic_kinetic_temperature_gap(t, &m1, &m2, (1.0, 1.5), (Classical, Classical), 1.0, &[]).unwrap();
        let e1 = eta_integrals(c12, Fermion).unwrap().1;
        let e2 = 1.5f64.powf(1.5) * eta_integrals(c21, Boson).unwrap().1;
        let w0 = m1.e + m2.e - (m1.p + m2.p).norm_squared() / (2.0 * 2.8);
        let q = (e1 / 1.0 - e2 / 1.2) / (e1 + e2);
        let expect = closed + w0 * q * (1.0 - (-t).exp());
        assert_relative_eq!(got, expect, max_relative = 1e-7);
    }

    #[test]
    fn sfe_equilibrium_temperature() {
        let parts = [
            (Moments::maxwellian(1.0, Vector3::zeros(), 15.0, 58_000.0), 58_000.0),
            (Moments::maxwellian(6.0, Vector3::zeros(), 15.0, 34_000.0), 34_000.0),
            (Moments::maxwellian(53.0, Vector3::zeros(), 100.0, 1.0), 1.0),
        ];
        assert_relative_eq!(equilibrium_temperature(&parts).unwrap(), 90.083333, epsilon = 1e-5);
        assert_relative_eq!(equilibrium_temperature(&parts[2..]).unwrap(), 100.0, epsilon = 1e-12);
    }
}
