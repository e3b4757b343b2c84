use crate::nspecies::CellEquilibria;

/// Node values of one species on every spatial cell; cell blocks are contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionField {
    cells: usize,
    nodes: usize,
    data: Vec<f64>,
}

impl DistributionField {
    pub fn zeros(cells: usize, nodes: usize) -> Self {
        DistributionField {
            cells,
            nodes,
            data: vec![0.0; cells * nodes],
        }
    }

    pub fn from_cells(cells: Vec<Vec<f64>>) -> Self {
        let nodes = cells.first().map_or(0, |c| c.len());
        assert!(cells.iter().all(|c| c.len() == nodes));
        DistributionField {
            cells: cells.len(),
            nodes,
            data: cells.concat(),
        }
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn cell(&self, i: usize) -> &[f64] {
        &self.data[i * self.nodes..(i + 1) * self.nodes]
    }

    pub fn cell_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.nodes..(i + 1) * self.nodes]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn min(&self) -> f64 {
        self.data.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `self += a · other`.
    pub fn axpy(&mut self, a: f64, other: &DistributionField) {
        self.data.iter_mut().zip(&other.data).for_each(|(x, y)| *x += a * y);
    }
}

/// Distributions of all species plus per-cell equilibrium warm starts.
#[derive(Debug, Clone)]
pub struct SimulationState {
    pub fields: Vec<DistributionField>,
    pub time: f64,
    /// Latest solved equilibria per cell (warm starts and diagnostics).
    pub equilibria: Vec<Option<CellEquilibria>>,
}

impl SimulationState {
    pub fn new(fields: Vec<DistributionField>) -> Self {
        let cells = fields.first().map_or(0, |f| f.cells());
        assert!(fields.iter().all(|f| f.cells() == cells));
        SimulationState {
            fields,
            time: 0.0,
            equilibria: vec![None; cells],
        }
    }

    pub fn cells(&self) -> usize {
        self.fields.first().map_or(0, |f| f.cells())
    }

    /// Node slices of every species in cell `i`.
    pub fn cell(&self, i: usize) -> Vec<&[f64]> {
        self.fields.iter().map(|f| f.cell(i)).collect()
    }
}
