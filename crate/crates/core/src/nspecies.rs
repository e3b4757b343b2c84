//! Implicit relaxation for any number of species with binary interactions.
//!
//! Per cell the update is `ψ_k = d_k(G_k + γΔt ν̃_kk K_kk + γΔt Σ_j ν̃_kj K_kj)`
//! with `d_k = 1/(1 + γΔt Σ_j ν̃_kj)`. The inter pairs are solved first on
//! targets built from `G`; the intra equilibrium `K_kk` is then solved so that
//! it carries exactly the moments of `ψ_k`, which makes the update the exact
//! implicit Euler step of the relaxation system.

use crate::equilibrium::{
    equilibrium_values, inter_targets_from_moments, solve_inter, solve_intra, InterAlpha, InterSolution, IntraAlpha,
    IntraSolution, NewtonOptions,
};
use crate::error::Result;
use crate::grid::{compute_moments, Moments};
use crate::species::SpeciesSet;

/// Equilibrium parameters of one spatial cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellEquilibria {
    /// `K_kk` per species.
    pub intra: Vec<IntraAlpha>,
    /// `(K_kj, K_jk)` per unordered pair in [`SpeciesSet::pairs`] order.
    pub inter: Vec<InterAlpha>,
}

impl CellEquilibria {
    pub fn vacuum(set: &SpeciesSet) -> Self {
        let v = IntraAlpha::vacuum();
        let pair = InterAlpha {
            a12_0: v.a0,
            a21_0: v.a0,
            a1: v.a1,
            a2: v.a2,
        };
        CellEquilibria {
            intra: vec![v; set.len()],
            inter: vec![pair; set.pairs().len()],
        }
    }

    /// Parameters of `K_kj` (`K_kk` when `k == j`).
    pub fn member(&self, set: &SpeciesSet, k: usize, j: usize) -> IntraAlpha {
        if k == j {
            return self.intra[k];
        }
        let p = &self.inter[set.pair_index(k, j)];
        if k < j {
            p.first()
        } else {
            p.second()
        }
    }
}

/// Newton bookkeeping accumulated over solves.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SolveStats {
    pub solves: usize,
    pub iterations: usize,
    pub max_residual: f64,
}

impl SolveStats {
    pub fn merge(&mut self, o: &SolveStats) {
        self.solves += o.solves;
        self.iterations += o.iterations;
        self.max_residual = self.max_residual.max(o.max_residual);
    }

    fn record(&mut self, iterations: usize, residual: f64) {
        self.solves += 1;
        self.iterations += iterations;
        self.max_residual = self.max_residual.max(residual);
    }
}

/// Independent equilibrium problems of one cell. `None` entries are skipped.
#[derive(Debug, Clone, Default)]
pub struct PairProblems {
    /// `(targets, coeff)` per species.
    pub intra: Vec<Option<([f64; 5], f64)>>,
    /// `(targets, c_k, c_j)` per unordered pair.
    pub inter: Vec<Option<([f64; 6], f64, f64)>>,
}

#[derive(Debug, Clone, Default)]
pub struct PairSolutions {
    pub intra: Vec<Option<IntraSolution>>,
    pub inter: Vec<Option<InterSolution>>,
}

impl PairSolutions {
    pub fn stats(&self) -> SolveStats {
        let mut s = SolveStats::default();
        for x in self.intra.iter().flatten() {
            s.record(x.iterations, x.residual);
        }
        for x in self.inter.iter().flatten() {
            s.record(x.iterations, x.residual);
        }
        s
    }
}

/// Solve every intra and inter problem of a cell; all solves are independent.
pub fn solve_all_pairs(
    set: &SpeciesSet,
    problems: &PairProblems,
    warm: Option<&CellEquilibria>,
    opts: &NewtonOptions,
) -> Result<PairSolutions> {
    let mut out = PairSolutions {
        intra: vec![None; set.len()],
        inter: vec![None; set.pairs().len()],
    };
    for (k, prob) in problems.intra.iter().enumerate() {
        if let Some((targets, coeff)) = prob {
            let sp = &set.species[k];
            let w = warm.map(|w| &w.intra[k]);
            out.intra[k] = Some(solve_intra(targets, &sp.grid, sp.mass, sp.statistics, *coeff, w, opts)?);
        }
    }
    for (p, (k, j)) in set.pairs().into_iter().enumerate() {
        if let Some(Some((targets, ck, cj))) = problems.inter.get(p) {
            let (a, b) = (&set.species[k], &set.species[j]);
            let w = warm.map(|w| &w.inter[p]);
            out.inter[p] = Some(solve_inter(
                targets,
                (&a.grid, &b.grid),
                (a.mass, b.mass),
                (a.statistics, b.statistics),
                (*ck, *cj),
                w,
                opts,
            )?);
        }
    }
    Ok(out)
}

/// Output of the implicit update of one cell.
#[derive(Debug, Clone)]
pub struct CellUpdate {
    pub psi: Vec<Vec<f64>>,
    pub equilibria: CellEquilibria,
    pub stats: SolveStats,
}

/// `d_k = 1/(1 + γΔt Σ_j ν̃_kj)` per species.
pub fn stage_coefficients(set: &SpeciesSet, gamma_dt: f64) -> Vec<f64> {
    (0..set.len()).map(|k| 1.0 / (1.0 + gamma_dt * set.freqs.row_sum(k))).collect()
}

/// Implicit relaxation update of one cell.
pub fn implicit_update_nspecies(
    g: &[&[f64]],
    gamma_dt: f64,
    set: &SpeciesSet,
    warm: Option<&CellEquilibria>,
    opts: &NewtonOptions,
) -> Result<CellUpdate> {
    let s = set.len();
    let h = gamma_dt;
    let base = warm.cloned().unwrap_or_else(|| CellEquilibria::vacuum(set));
    if h == 0.0 {
        return Ok(CellUpdate {
            psi: g.iter().map(|x| x.to_vec()).collect(),
            equilibria: base,
            stats: SolveStats::default(),
        });
    }
    let nu = &set.freqs;
    let mom: Vec<Moments> = (0..s)
        .map(|k| compute_moments(g[k], &set.species[k].grid, set.species[k].mass))
        .collect();
    let sk: Vec<f64> = (0..s).map(|k| 1.0 + h * nu.cross_sum(k)).collect();
    let dk = stage_coefficients(set, h);
    let pairs = set.pairs();

    // Inter pairs on G-based targets.
    let mut inter_probs = PairProblems {
        intra: vec![None; s],
        inter: vec![None; pairs.len()],
    };
    for (p, &(k, j)) in pairs.iter().enumerate() {
        if nu.get(k, j) > 0.0 {
            let (ck, cj) = (nu.get(k, j) / sk[k], nu.get(j, k) / sk[j]);
            inter_probs.inter[p] = Some((inter_targets_from_moments(&mom[k], &mom[j], ck, cj), ck, cj));
        }
    }
    let inter = solve_all_pairs(set, &inter_probs, warm, opts)?;

    // Moments of ψ_k, then K_kk matching them.
    let mut intra_probs = PairProblems {
        intra: vec![None; s],
        inter: vec![None; pairs.len()],
    };
    for k in 0..s {
        let nkk = nu.get(k, k);
        if nkk <= 0.0 {
            continue;
        }
        let mut psi = mom[k];
        for j in 0..s {
            if j == k {
                continue;
            }
            if let Some(sol) = &inter.inter[set.pair_index(k, j)] {
                let kj = if k < j { sol.moments1 } else { sol.moments2 };
                psi = psi + kj.scaled(h * nu.get(k, j));
            }
        }
        let psi = psi.scaled(1.0 / sk[k]);
        let coeff = dk[k] * nkk;
        intra_probs.intra[k] = Some((psi.scaled(coeff).as_array(), coeff));
    }
    let intra = solve_all_pairs(set, &intra_probs, warm, opts)?;

    let mut equilibria = base;
    for k in 0..s {
        if let Some(sol) = &intra.intra[k] {
            equilibria.intra[k] = sol.alpha;
        }
    }
    for (p, sol) in inter.inter.iter().enumerate() {
        if let Some(sol) = sol {
            equilibria.inter[p] = sol.alpha;
        }
    }
    let mut stats = inter.stats();
    stats.merge(&intra.stats());

    let mut psi = Vec::with_capacity(s);
    for k in 0..s {
        let sp = &set.species[k];
        let mut acc = g[k].to_vec();
        let mut kv = vec![0.0; acc.len()];
        for j in 0..s {
            let v = nu.get(k, j);
            if v <= 0.0 {
                continue;
            }
            equilibrium_values(&equilibria.member(set, k, j), &sp.grid, sp.mass, sp.statistics, &mut kv)?;
            let c = h * v;
            acc.iter_mut().zip(&kv).for_each(|(a, b)| *a += c * b);
        }
        let d = dk[k];
        acc.iter_mut().for_each(|a| *a *= d);
        psi.push(acc);
    }
    Ok(CellUpdate { psi, equilibria, stats })
}

/// Relaxation right-hand side `Σ_j ν̃_kj (K_kj − f_k)` for species `k`.
pub fn assemble_rhs(k: usize, f: &[&[f64]], set: &SpeciesSet, eq: &CellEquilibria) -> Result<Vec<f64>> {
    let sp = &set.species[k];
    let mut out = vec![0.0; f[k].len()];
    let mut kv = vec![0.0; f[k].len()];
    for j in 0..set.len() {
        let v = set.freqs.get(k, j);
        if v <= 0.0 {
            continue;
        }
        equilibrium_values(&eq.member(set, k, j), &sp.grid, sp.mass, sp.statistics, &mut kv)?;
        for ((o, kj), fk) in out.iter_mut().zip(&kv).zip(f[k]) {
            *o += v * (kj - fk);
        }
    }
    Ok(out)
}

/// Equilibria of the state `f` itself: `K_kk` with the moments of `f_k` and
/// each pair with the model weights `ν̃_kj`, `ν̃_jk`.
pub fn fit_equilibria(
    f: &[&[f64]],
    set: &SpeciesSet,
    warm: Option<&CellEquilibria>,
    opts: &NewtonOptions,
) -> Result<(CellEquilibria, SolveStats)> {
    let s = set.len();
    let pairs = set.pairs();
    let mom: Vec<Moments> = (0..s)
        .map(|k| compute_moments(f[k], &set.species[k].grid, set.species[k].mass))
        .collect();
    let mut probs = PairProblems {
        intra: mom.iter().map(|m| Some((m.as_array(), 1.0))).collect(),
        inter: vec![None; pairs.len()],
    };
    for (p, &(k, j)) in pairs.iter().enumerate() {
        let (ck, cj) = (set.freqs.get(k, j), set.freqs.get(j, k));
        if ck > 0.0 {
            probs.inter[p] = Some((inter_targets_from_moments(&mom[k], &mom[j], ck, cj), ck, cj));
        }
    }
    let sol = solve_all_pairs(set, &probs, warm, opts)?;
    let mut eq = warm.cloned().unwrap_or_else(|| CellEquilibria::vacuum(set));
    for k in 0..s {
        if let Some(x) = &sol.intra[k] {
            eq.intra[k] = x.alpha;
        }
    }
    for (p, x) in sol.inter.iter().enumerate() {
        if let Some(x) = x {
            eq.inter[p] = x.alpha;
        }
    }
    Ok((eq, sol.stats()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{sample_maxwellian, MomentumGrid};
    use crate::species::{CollisionFrequencies, Species};
    use crate::statistics::ParticleStatistics::{self, *};
    use approx::assert_relative_eq;
    use nalgebra::Vector3;

    fn set3(nu: f64, stats: [ParticleStatistics; 3]) -> SpeciesSet {
        let masses = [1.0, 2.0, 0.5];
        let species = (0..3)
            .map(|k| Species {
                label: format!("s{k}"),
                mass: masses[k],
                statistics: stats[k],
                grid: MomentumGrid::with_intervals(masses[k], Vector3::zeros(), 1.0, 20).unwrap(),
            })
            .collect();
        SpeciesSet::new(species, CollisionFrequencies::uniform(3, nu)).unwrap()
    }

    fn fields3(set: &SpeciesSet) -> Vec<Vec<f64>> {
        let data = [(1.0, 0.3, 1.2), (0.5, -0.2, 0.7), (0.8, 0.0, 1.0)];
        (0..3)
            .map(|k| {
                let sp = &set.species[k];
                let (n, u, t) = data[k];
                sample_maxwellian(&sp.grid, sp.mass, n, Vector3::new(u, 0.1 * u, 0.0), t)
            })
            .collect()
    }

    fn totals(set: &SpeciesSet, f: &[Vec<f64>]) -> (Vec<f64>, Vector3<f64>, f64) {
        let mut n = vec![];
        let mut p = Vector3::zeros();
        let mut e = 0.0;
        for (k, sp) in set.species.iter().enumerate() {
            let m = compute_moments(&f[k], &sp.grid, sp.mass);
            n.push(m.n);
            p += m.p;
            e += m.e;
        }
        (n, p, e)
    }

    fn refs(f: &[Vec<f64>]) -> Vec<&[f64]> {
        f.iter().map(|v| v.as_slice()).collect()
    }

    #[test]
    fn zero_step_is_identity() {
        let set = set3(1.0, [Fermion, Classical, Boson]);
        let f = fields3(&set);
        let up = implicit_update_nspecies(&refs(&f), 0.0, &set, None, &NewtonOptions::default()).unwrap();
        assert_eq!(up.psi, f);
    }

    #[test]
    fn three_species_conserve_and_satisfy_summed_constraints() {
        let set = set3(1.3, [Fermion, Classical, Boson]);
        let f = fields3(&set);
        let h = 0.05;
        let up = implicit_update_nspecies(&refs(&f), h, &set, None, &NewtonOptions::default()).unwrap();
        let (n0, p0, e0) = totals(&set, &f);
        let (n1, p1, e1) = totals(&set, &up.psi);
        for k in 0..3 {
            assert_relative_eq!(n0[k], n1[k], max_relative = 1e-13);
        }
        assert!((p0 - p1).norm() <= 1e-13 * p0.norm());
        assert_relative_eq!(e0, e1, max_relative = 1e-13);

        // Σ_k d_k [ν̃_kk M(K_kk) + Σ_j ν̃_kj M(K_kj)] = Σ_k d_k (Σ_j ν̃_kj) M(G_k)
        let d = stage_coefficients(&set, h);
        let mut lhs = [0.0; 5];
        let mut rhs = [0.0; 5];
        for k in 0..3 {
            let sp = &set.species[k];
            let mg = compute_moments(&f[k], &sp.grid, sp.mass).as_array();
            for j in 0..3 {
                let nu = set.freqs.get(k, j);
                let mut kv = vec![0.0; sp.grid.len()];
                equilibrium_values(&up.equilibria.member(&set, k, j), &sp.grid, sp.mass, sp.statistics, &mut kv).unwrap();
                let mk = compute_moments(&kv, &sp.grid, sp.mass).as_array();
                for r in 1..5 {
                    lhs[r] += d[k] * nu * mk[r];
                    rhs[r] += d[k] * nu * mg[r];
                }
                lhs[0] += d[k] * nu * mk[0];
                rhs[0] += d[k] * nu * mg[0];
            }
        }
        for r in 0..5 {
            assert!((lhs[r] - rhs[r]).abs() < 1e-9, "component {r}: {} vs {}", lhs[r], rhs[r]);
        }
    }

    #[test]
    fn three_species_pair_solves_match_summed_constraints() {
        // Decoupled targets with weights d_k ν̃ on G.
        let set = set3(0.8, [Classical, Fermion, Fermion]);
        let f = fields3(&set);
        let h = 0.1;
        let d = stage_coefficients(&set, h);
        let mom: Vec<Moments> = (0..3)
            .map(|k| compute_moments(&f[k], &set.species[k].grid, set.species[k].mass))
            .collect();
        let probs = PairProblems {
            intra: (0..3)
                .map(|k| {
                    let c = d[k] * set.freqs.get(k, k);
                    Some((mom[k].scaled(c).as_array(), c))
                })
                .collect(),
            inter: set
                .pairs()
                .iter()
                .map(|&(k, j)| {
                    let (ck, cj) = (d[k] * set.freqs.get(k, j), d[j] * set.freqs.get(j, k));
                    Some((inter_targets_from_moments(&mom[k], &mom[j], ck, cj), ck, cj))
                })
                .collect(),
        };
        let sol = solve_all_pairs(&set, &probs, None, &NewtonOptions::default()).unwrap();
        assert_eq!(sol.intra.iter().flatten().count(), 3);
        assert_eq!(sol.inter.iter().flatten().count(), 3);
        let mut resid = [0.0f64; 5];
        for k in 0..3 {
            let sk = sol.intra[k].as_ref().unwrap();
            let c = d[k] * set.freqs.get(k, k);
            let a = sk.moments.scaled(c).as_array();
            let b = mom[k].scaled(c).as_array();
            for r in 0..5 {
                resid[r] += a[r] - b[r];
            }
        }
        for (p, &(k, j)) in set.pairs().iter().enumerate() {
            let s = sol.inter[p].as_ref().unwrap();
            let (ck, cj) = (d[k] * set.freqs.get(k, j), d[j] * set.freqs.get(j, k));
            let a = s.moments1.scaled(ck).as_array();
            let b = s.moments2.scaled(cj).as_array();
            let ga = mom[k].scaled(ck).as_array();
            let gb = mom[j].scaled(cj).as_array();
            for r in 0..5 {
                resid[r] += a[r] + b[r] - ga[r] - gb[r];
            }
        }
        for r in resid {
            assert!(r.abs() < 1e-9, "{resid:?}");
        }
    }

    #[test]
    fn single_species_rhs_and_one_intra_solve() {
        let g = MomentumGrid::with_intervals(1.0, Vector3::zeros(), 1.0, 16).unwrap();
        let sp = Species {
            label: "a".into(),
            mass: 1.0,
            statistics: Fermion,
            grid: g.clone(),
        };
        let set = SpeciesSet::new(vec![sp], CollisionFrequencies::uniform(1, 2.0)).unwrap();
        let f = vec![sample_maxwellian(&g, 1.0, 0.7, Vector3::new(0.2, 0.0, 0.0), 0.9)];
        let probs = PairProblems {
            intra: vec![Some((compute_moments(&f[0], &g, 1.0).as_array(), 1.0))],
            inter: vec![],
        };
        let sol = solve_all_pairs(&set, &probs, None, &NewtonOptions::default()).unwrap();
        assert_eq!(sol.stats().solves, 1);
        let eq = CellEquilibria {
            intra: vec![sol.intra[0].unwrap().alpha],
            inter: vec![],
        };
        let rhs = assemble_rhs(0, &refs(&f), &set, &eq).unwrap();
        let mut kv = vec![0.0; g.len()];
        equilibrium_values(&eq.intra[0], &g, 1.0, Fermion, &mut kv).unwrap();
        for ((r, k), fv) in rhs.iter().zip(&kv).zip(&f[0]) {
            assert_relative_eq!(*r, 2.0 * (k - fv), epsilon = 1e-15);
        }
    }

    #[test]
    fn rhs_vanishes_at_equilibrium() {
        let set = set3(1.0, [Fermion, Fermion, Classical]);
        let f = fields3(&set);
        // relax hard to equilibrium
        let mut cur = f.clone();
        let mut warm = None;
        for _ in 0..80 {
            let up = implicit_update_nspecies(&refs(&cur), 1e6, &set, warm.as_ref(), &NewtonOptions::default()).unwrap();
            cur = up.psi;
            warm = Some(up.equilibria);
        }
        let (eq, _) = fit_equilibria(&refs(&cur), &set, warm.as_ref(), &NewtonOptions::default()).unwrap();
        for k in 0..3 {
            let r = assemble_rhs(k, &refs(&cur), &set, &eq).unwrap();
            let scale = cur[k].iter().cloned().fold(0.0, f64::max);
            let worst = r.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            assert!(worst < 1e-8 * scale, "species {k}: {worst}");
        }
    }
}
