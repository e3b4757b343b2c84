use rayon::prelude::*;

use crate::equilibrium::NewtonOptions;
use crate::error::Result;
use crate::nspecies::{implicit_update_nspecies, CellEquilibria, SolveStats};
use crate::species::SpeciesSet;
use crate::state::DistributionField;

pub use crate::nspecies::stage_coefficients;
pub use crate::species::CollisionFrequencies;

/// Relaxed fields together with the equilibria solved in every cell.
#[derive(Debug, Clone)]
pub struct RelaxationOutput {
    pub fields: Vec<DistributionField>,
    pub equilibria: Vec<CellEquilibria>,
    pub stats: SolveStats,
}

/// `ψ_k = d_k G_k + d_k γΔt Σ_j ν̃_kj K_kj` in every cell.
pub fn implicit_update(
    g: &[DistributionField],
    gamma_dt: f64,
    set: &SpeciesSet,
    warm: &[Option<CellEquilibria>],
    opts: &NewtonOptions,
) -> Result<RelaxationOutput> {
    let cells = g.first().map_or(0, |f| f.cells());
    let per_cell: Vec<_> = (0..cells)
        .into_par_iter()
        .map(|c| {
            let slices: Vec<&[f64]> = g.iter().map(|f| f.cell(c)).collect();
            implicit_update_nspecies(&slices, gamma_dt, set, warm.get(c).and_then(|w| w.as_ref()), opts)
                .map_err(|e| e.in_cell(c))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut fields: Vec<DistributionField> = g.iter().map(|f| DistributionField::zeros(cells, f.nodes())).collect();
    let mut equilibria = Vec::with_capacity(cells);
    let mut stats = SolveStats::default();
    for (c, up) in per_cell.into_iter().enumerate() {
        for (k, psi) in up.psi.into_iter().enumerate() {
            fields[k].cell_mut(c).copy_from_slice(&psi);
        }
        stats.merge(&up.stats);
        equilibria.push(up.equilibria);
    }
    Ok(RelaxationOutput {
        fields,
        equilibria,
        stats,
    })
}

/// Backward Euler relaxation step over `dt`.
pub fn relax_backward_euler(
    f: &[DistributionField],
    dt: f64,
    set: &SpeciesSet,
    warm: &[Option<CellEquilibria>],
    opts: &NewtonOptions,
) -> Result<RelaxationOutput> {
    implicit_update(f, dt, set, warm, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::total_entropy;
    use crate::grid::{compute_moments, sample_maxwellian, MomentumGrid};
    use crate::species::Species;
    use crate::statistics::ParticleStatistics::{self, *};
    use approx::assert_relative_eq;
    use nalgebra::Vector3;

    fn relaxation_set(stats: (ParticleStatistics, ParticleStatistics), nu: f64, intervals: usize) -> SpeciesSet {
        let masses = [1.0, 1.5];
        let species = [stats.0, stats.1]
            .iter()
            .zip(masses)
            .enumerate()
            .map(|(k, (s, m))| Species {
                label: format!("{}", k + 1),
                mass: m,
                statistics: *s,
                grid: MomentumGrid::with_intervals(m, Vector3::new(0.68 / 2.8, 0.0, 0.0), 0.742857, intervals).unwrap(),
            })
            .collect();
        SpeciesSet::new(species, CollisionFrequencies::uniform(2, nu)).unwrap()
    }

    fn relaxation_fields(set: &SpeciesSet) -> Vec<DistributionField> {
        let data = [(1.0, 0.5, 1.0), (1.2, 0.1, 0.5)];
        set.species
            .iter()
            .zip(data)
            .map(|(sp, (n, u, t))| {
                DistributionField::from_cells(vec![sample_maxwellian(&sp.grid, sp.mass, n, Vector3::new(u, 0.0, 0.0), t)])
            })
            .collect()
    }

    fn totals(set: &SpeciesSet, f: &[DistributionField]) -> (Vec<f64>, Vector3<f64>, f64) {
        let mut n = vec![];
        let (mut p, mut e) = (Vector3::zeros(), 0.0);
        for (sp, fk) in set.species.iter().zip(f) {
            let m = compute_moments(fk.cell(0), &sp.grid, sp.mass);
            n.push(m.n);
            p += m.p;
            e += m.e;
        }
        (n, p, e)
    }

    #[test]
    fn stage_coefficient_for_relaxation_data() {
        let set = relaxation_set((Fermion, Fermion), 1.0, 8);
        let d = stage_coefficients(&set, 0.01);
        assert_relative_eq!(d[0], 1.0 / 1.02, epsilon = 1e-15);
        assert_relative_eq!(d[0], 0.980392, epsilon = 1e-6);
        assert_eq!(d[0], d[1]);
    }

    #[test]
    fn zero_step_is_identity() {
        let set = relaxation_set((Fermion, Boson), 1.0, 16);
        let f = relaxation_fields(&set);
        let out = relax_backward_euler(&f, 0.0, &set, &[None], &NewtonOptions::default()).unwrap();
        assert_eq!(out.fields, f);
    }

    #[test]
    fn step_conserves_and_dissipates() {
        for stats in [(Fermion, Fermion), (Boson, Classical), (Fermion, Boson)] {
            let set = relaxation_set(stats, 1.0, 24);
            let f = relaxation_fields(&set);
            let out = relax_backward_euler(&f, 0.01, &set, &[None], &NewtonOptions::default()).unwrap();
            let (n0, p0, e0) = totals(&set, &f);
            let (n1, p1, e1) = totals(&set, &out.fields);
            assert_relative_eq!(n0[0], n1[0], max_relative = 1e-13);
            assert_relative_eq!(n0[1], n1[1], max_relative = 1e-13);
            assert!((p0 - p1).norm() < 1e-13 * p0.norm());
            assert_relative_eq!(e0, e1, max_relative = 1e-13);
            let h0 = total_entropy(&set, &f, None).unwrap();
            let h1 = total_entropy(&set, &out.fields, None).unwrap();
            assert!(h1 < h0, "{stats:?}: {h1} >= {h0}");
            assert!(out.fields.iter().all(|x| x.min() >= 0.0));
        }
    }

    #[test]
    fn stiff_step_still_conserves() {
        let set = relaxation_set((Fermion, Fermion), 2e4, 16);
        let f = relaxation_fields(&set);
        let out = relax_backward_euler(&f, 0.01, &set, &[None], &NewtonOptions::default()).unwrap();
        let (n0, p0, e0) = totals(&set, &f);
        let (n1, p1, e1) = totals(&set, &out.fields);
        assert_relative_eq!(n0[0], n1[0], max_relative = 1e-12);
        assert_relative_eq!(n0[1], n1[1], max_relative = 1e-12);
        assert!((p0 - p1).norm() < 1e-12 * p0.norm());
        assert_relative_eq!(e0, e1, max_relative = 1e-12);
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let set = relaxation_set((Fermion, Classical), 1.0, 16);
        let mut f = relaxation_fields(&set);
        let mut warm = vec![None];
        for _ in 0..3 {
            let out = relax_backward_euler(&f, 1e7, &set, &warm, &NewtonOptions::default()).unwrap();
            f = out.fields;
            warm = out.equilibria.into_iter().map(Some).collect();
        }
        let out = relax_backward_euler(&f, 0.01, &set, &warm, &NewtonOptions::default()).unwrap();
        for (a, b) in out.fields.iter().zip(&f) {
            let scale = b.max();
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                assert!((x - y).abs() < 1e-10 * scale);
            }
        }
    }

    #[test]
    fn fermion_bound_preserved() {
        let set = relaxation_set((Fermion, Fermion), 1.0, 12);
        let mut f = relaxation_fields(&set);
        // push species 1 close to saturation at the centre
        for v in f[0].as_mut_slice() {
            *v = (*v * 6.0).min(0.95);
        }
        let out = relax_backward_euler(&f, 0.5, &set, &[None], &NewtonOptions::default()).unwrap();
        assert!(out.fields.iter().all(|x| x.max() < 1.0 && x.min() >= 0.0));
    }
}
