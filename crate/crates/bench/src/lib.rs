//! Fixtures shared by the criterion benchmarks.

use qbgk_core::grid::sample_maxwellian;
use qbgk_core::nalgebra::Vector3;
use qbgk_core::{CollisionFrequencies, DistributionField, MomentumGrid, ParticleStatistics, Species, SpeciesSet};

/// Two-species relaxation data on grids with `intervals` intervals per axis.
pub fn relaxation_pair(stats: (ParticleStatistics, ParticleStatistics), intervals: usize) -> (SpeciesSet, Vec<DistributionField>) {
    let masses = [1.0, 1.5];
    let data = [(1.0, 0.5, 1.0), (1.2, 0.1, 0.5)];
    let species: Vec<Species> = [stats.0, stats.1]
        .iter()
        .enumerate()
        .map(|(k, s)| Species {
            label: format!("{}", k + 1),
            mass: masses[k],
            statistics: *s,
            grid: MomentumGrid::with_intervals(masses[k], Vector3::new(0.275, 0.0, 0.0), 0.742857, intervals)
                .expect("valid grid"),
        })
        .collect();
    let fields = species
        .iter()
        .zip(data)
        .map(|(sp, (n, u, t))| {
            DistributionField::from_cells(vec![sample_maxwellian(&sp.grid, sp.mass, n, Vector3::new(u, 0.0, 0.0), t)])
        })
        .collect();
    let set = SpeciesSet::new(species, CollisionFrequencies::uniform(2, 1.0)).expect("valid set");
    (set, fields)
}
