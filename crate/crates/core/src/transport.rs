//! Finite-volume advection in x (slab geometry) with upwind and minmod fluxes.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{compute_moments, MomentumGrid};
use crate::species::SpeciesSet;
use crate::state::DistributionField;

/// Ghost cells on each side of the mesh.
pub const GHOST_WIDTH: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryMode {
    Periodic,
    Zero,
    /// Zero-gradient outflow.
    Copy,
}

impl FromStr for BoundaryMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "periodic" => Ok(Self::Periodic),
            "zero" => Ok(Self::Zero),
            "copy" | "outflow" => Ok(Self::Copy),
            o => Err(format!("unknown boundary mode '{o}'")),
        }
    }
}

impl fmt::Display for BoundaryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Periodic => "periodic",
            Self::Zero => "zero",
            Self::Copy => "copy",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FluxOrder {
    First,
    Second,
}

impl FluxOrder {
    pub fn from_int(o: u32) -> Option<Self> {
        match o {
            1 => Some(Self::First),
            2 => Some(Self::Second),
            _ => None,
        }
    }

    pub fn as_int(self) -> u32 {
        match self {
            Self::First => 1,
            Self::Second => 2,
        }
    }

    /// CFL factor β.
    pub fn beta(self) -> f64 {
        match self {
            Self::First => 1.0,
            Self::Second => 2.0 / 3.0,
        }
    }
}

/// Uniform cells on `[x_min, x_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialMesh {
    pub x_min: f64,
    pub x_max: f64,
    pub cells: usize,
    pub boundary: BoundaryMode,
}

impl SpatialMesh {
    pub fn new(x_min: f64, x_max: f64, cells: usize, boundary: BoundaryMode) -> Result<Self> {
        if !(x_max > x_min) || cells == 0 {
            return Err(Error::Config(format!(
                "invalid spatial mesh [{x_min}, {x_max}] with {cells} cells"
            )));
        }
        Ok(SpatialMesh {
            x_min,
            x_max,
            cells,
            boundary,
        })
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.cells as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx()
    }

    /// Index of the cell providing ghost/interior cell `i`, or `None` for a zero ghost.
    pub fn source_cell(&self, i: isize) -> Option<usize> {
        let n = self.cells as isize;
        if (0..n).contains(&i) {
            return Some(i as usize);
        }
        match self.boundary {
            BoundaryMode::Periodic => Some(i.rem_euclid(n) as usize),
            BoundaryMode::Zero => None,
            BoundaryMode::Copy => Some(i.clamp(0, n - 1) as usize),
        }
    }
}

/// `s · min(|a|,|b|,|c|)` when all three share the sign `s`, else 0.
pub fn minmod3(a: f64, b: f64, c: f64) -> f64 {
    if a > 0.0 && b > 0.0 && c > 0.0 {
        a.min(b).min(c)
    } else if a < 0.0 && b < 0.0 && c < 0.0 {
        a.max(b).max(c)
    } else {
        0.0
    }
}

#[inline(always)]
fn flux(v: f64, gm: f64, g0: f64, g1: f64, g2: f64, order: FluxOrder) -> f64 {
    let jump = g1 - g0;
    let phi = match order {
        FluxOrder::First => 0.0,
        FluxOrder::Second => minmod3(g0 - gm, jump, g2 - g1),
    };
    0.5 * v * (g1 + g0) - 0.5 * v.abs() * (jump - phi)
}

/// Pad a grid function with ghost cells per the mesh boundary mode.
pub fn with_ghosts(g: &[f64], mesh: &SpatialMesh) -> Vec<f64> {
    let w = GHOST_WIDTH as isize;
    (-w..g.len() as isize + w)
        .map(|i| mesh.source_cell(i).map_or(0.0, |c| g[c]))
        .collect()
}

/// Interface fluxes `𝓕_{i−1/2}`, `i = 0..=I`, of a ghost-padded grid function.
pub fn numerical_flux(padded: &[f64], p1: f64, mass: f64, order: FluxOrder) -> Vec<f64> {
    let v = p1 / mass;
    let w = GHOST_WIDTH;
    let cells = padded.len() - 2 * w;
    (0..=cells)
        .map(|i| {
            // interface between cells i−1 and i
            let c = i + w - 1;
            flux(v, padded[c - 1], padded[c], padded[c + 1], padded[c + 2], order)
        })
        .collect()
}

/// Tendencies `𝒯_i = (𝓕_{i+1/2} − 𝓕_{i−1/2})/Δx` of one species, and the net
/// moment inflow rate `∫ (𝓕_left − 𝓕_right) 𝐩 dp` through the two boundaries.
pub fn transport_operator(
    g: &DistributionField,
    mesh: &SpatialMesh,
    grid: &MomentumGrid,
    mass: f64,
    order: FluxOrder,
) -> (DistributionField, [f64; 5]) {
    let nodes = g.nodes();
    let n = grid.nodes_per_axis();
    let v: Vec<f64> = (0..nodes).map(|q| grid.axis(0)[q / (n * n)] / mass).collect();
    let zero = vec![0.0; nodes];
    let block = |i: isize| -> &[f64] { mesh.source_cell(i).map_or(zero.as_slice(), |c| g.cell(c)) };
    let interface = |i: isize, out: &mut [f64]| {
        // interface between cells i and i+1
        let (bm, b0, b1, b2) = (block(i - 1), block(i), block(i + 1), block(i + 2));
        for q in 0..nodes {
            out[q] = flux(v[q], bm[q], b0[q], b1[q], b2[q], order);
        }
    };
    let inv_dx = 1.0 / mesh.dx();
    let mut out = DistributionField::zeros(mesh.cells, nodes);
    out.as_mut_slice()
        .par_chunks_mut(nodes)
        .enumerate()
        .for_each_init(
            || (vec![0.0; nodes], vec![0.0; nodes]),
            |(left, right), (i, t)| {
                interface(i as isize - 1, left);
                interface(i as isize, right);
                for q in 0..nodes {
                    t[q] = (right[q] - left[q]) * inv_dx;
                }
            },
        );
    let mut fl = vec![0.0; nodes];
    let mut fr = vec![0.0; nodes];
    interface(-1, &mut fl);
    interface(mesh.cells as isize - 1, &mut fr);
    let ml = compute_moments(&fl, grid, mass).as_array();
    let mr = compute_moments(&fr, grid, mass).as_array();
    let mut inflow = [0.0; 5];
    for r in 0..5 {
        inflow[r] = ml[r] - mr[r];
    }
    (out, inflow)
}

/// `min_k β m_k Δx / max_q |p¹_q|`.
pub fn cfl_max_dt(set: &SpeciesSet, mesh: &SpatialMesh, order: FluxOrder) -> f64 {
    set.species
        .iter()
        .map(|sp| order.beta() * sp.mass * mesh.dx() / sp.grid.max_abs_p1())
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::integrate;
    use crate::species::{CollisionFrequencies, Species};
    use crate::statistics::ParticleStatistics;
    use approx::assert_relative_eq;
    use nalgebra::Vector3;

    #[test]
    fn minmod_examples() {
        assert_eq!(minmod3(1.0, 2.0, 3.0), 1.0);
        assert_eq!(minmod3(-1.0, 2.0, 3.0), 0.0);
        assert_eq!(minmod3(-2.0, -1.0, -3.0), -1.0);
        assert_eq!(minmod3(0.0, 1.0, 1.0), 0.0);
    }

    fn periodic(cells: usize) -> SpatialMesh {
        SpatialMesh::new(0.0, 1.0, cells, BoundaryMode::Periodic).unwrap()
    }

    #[test]
    fn constant_data_has_no_divergence() {
        let mesh = periodic(10);
        let g = vec![0.7; 10];
        for order in [FluxOrder::First, FluxOrder::Second] {
            let f = numerical_flux(&with_ghosts(&g, &mesh), -1.3, 1.0, order);
            assert!(f.iter().all(|x| (x - (-1.3 * 0.7)).abs() < 1e-15));
        }
    }

    #[test]
    fn first_order_is_upwind() {
        let mesh = periodic(6);
        let g: Vec<f64> = (0..6).map(|i| (i * i) as f64).collect();
        let f = numerical_flux(&with_ghosts(&g, &mesh), 2.0, 1.0, FluxOrder::First);
        for i in 1..6 {
            assert_eq!(f[i], 2.0 * g[i - 1]);
        }
        let f = numerical_flux(&with_ghosts(&g, &mesh), -2.0, 1.0, FluxOrder::First);
        for i in 1..6 {
            assert_eq!(f[i], -2.0 * g[i]);
        }
    }

    #[test]
    fn second_order_reconstructs_linear_data() {
        let mesh = SpatialMesh::new(0.0, 1.0, 8, BoundaryMode::Copy).unwrap();
        let g: Vec<f64> = (0..8).map(|i| 1.0 + 0.5 * i as f64).collect();
        let padded = with_ghosts(&g, &mesh);
        for v in [1.7, -0.4] {
            let f = numerical_flux(&padded, v, 1.0, FluxOrder::Second);
            // interior interfaces whose stencil stays inside the mesh
            for i in 2..7 {
                let face = 0.5 * (g[i - 1] + g[i]);
                assert_relative_eq!(f[i], v * face, epsilon = 1e-14);
            }
        }
    }

    fn one_node_grid() -> MomentumGrid {
        MomentumGrid::uniform(Vector3::new(1.0, 0.0, 0.0), 0.5, 3)
    }

    #[test]
    fn upwind_bump_moves_right() {
        let grid = one_node_grid();
        let mesh = periodic(5);
        let nodes = grid.len();
        let mut cells = vec![vec![0.0; nodes]; 5];
        cells[2] = vec![1.0; nodes];
        let g = DistributionField::from_cells(cells);
        let (t, _) = transport_operator(&g, &mesh, &grid, 1.0, FluxOrder::First);
        let dt = 0.05;
        let dx = mesh.dx();
        // node with p¹ = 1.5 (i_x = 2)
        let q = grid.index(2, 1, 1);
        let frac = 1.5 * dt / dx;
        assert_relative_eq!(1.0 - dt * t.cell(2)[q], 1.0 - frac, epsilon = 1e-14);
        assert_relative_eq!(-dt * t.cell(3)[q], frac, epsilon = 1e-14);
    }

    #[test]
    fn periodic_transport_conserves_and_stays_bounded() {
        let grid = MomentumGrid::with_intervals(1.0, Vector3::zeros(), 1.0, 6).unwrap();
        let mesh = periodic(40);
        let nodes = grid.len();
        let cells: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                let x = mesh.center(i);
                vec![0.5 + 0.4 * (2.0 * std::f64::consts::PI * x).sin(); nodes]
            })
            .collect();
        let mut g = DistributionField::from_cells(cells);
        let sp = Species {
            label: "a".into(),
            mass: 1.0,
            statistics: ParticleStatistics::Fermion,
            grid: grid.clone(),
        };
        let set = SpeciesSet::new(vec![sp], CollisionFrequencies::uniform(1, 0.0)).unwrap();
        let dt = cfl_max_dt(&set, &mesh, FluxOrder::Second);
        let mass0: f64 = (0..40).map(|i| integrate(g.cell(i), &grid)).sum();
        for _ in 0..50 {
            let (t, inflow) = transport_operator(&g, &mesh, &grid, 1.0, FluxOrder::Second);
            assert!(inflow.iter().all(|x| x.abs() < 1e-14));
            g.axpy(-dt, &t);
        }
        let mass1: f64 = (0..40).map(|i| integrate(g.cell(i), &grid)).sum();
        assert_relative_eq!(mass0, mass1, max_relative = 1e-13);
        assert!(g.min() >= 0.1 - 1e-12 && g.max() <= 0.9 + 1e-12);
    }

    #[test]
    fn cfl_examples() {
        let mk = |m: f64, half: f64| Species {
            label: "a".into(),
            mass: m,
            statistics: ParticleStatistics::Classical,
            grid: MomentumGrid::uniform(Vector3::zeros(), half / 24.0, 49),
        };
        let mesh = SpatialMesh::new(0.0, 1.0, 100, BoundaryMode::Zero).unwrap();
        let one = SpeciesSet::new(vec![mk(1.0, 6.0)], CollisionFrequencies::uniform(1, 1.0)).unwrap();
        let dt1 = cfl_max_dt(&one, &mesh, FluxOrder::First);
        assert_relative_eq!(dt1, 1.0 / 600.0, max_relative = 1e-14);
        assert_relative_eq!(cfl_max_dt(&one, &mesh, FluxOrder::Second), dt1 * 2.0 / 3.0, max_relative = 1e-14);
        let two = SpeciesSet::new(vec![mk(1.0, 6.0), mk(1.0, 12.0)], CollisionFrequencies::uniform(2, 1.0)).unwrap();
        assert_relative_eq!(cfl_max_dt(&two, &mesh, FluxOrder::First), 1.0 / 1200.0, max_relative = 1e-14);
    }

    #[test]
    fn ghost_modes() {
        let g = [1.0, 2.0, 3.0];
        let m = |b| SpatialMesh::new(0.0, 1.0, 3, b).unwrap();
        assert_eq!(with_ghosts(&g, &m(BoundaryMode::Periodic)), vec![2.0, 3.0, 1.0, 2.0, 3.0, 1.0, 2.0]);
        assert_eq!(with_ghosts(&g, &m(BoundaryMode::Zero)), vec![0.0, 0.0, 1.0, 2.0, 3.0, 0.0, 0.0]);
        assert_eq!(with_ghosts(&g, &m(BoundaryMode::Copy)), vec![1.0, 1.0, 1.0, 2.0, 3.0, 3.0, 3.0]);
    }
}
