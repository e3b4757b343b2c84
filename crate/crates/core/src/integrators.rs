//! Time stepping: first-order splitting and the ARS(2,2,2) IMEX scheme.

use log::{debug, warn};
use nalgebra::Vector3;

use crate::diagnostics::{record, DiagnosticsRecord};
use crate::equilibrium::NewtonOptions;
use crate::error::{Error, Result};
use crate::grid::compute_moments;
use crate::nspecies::{assemble_rhs, CellEquilibria, SolveStats};
use crate::relaxation::implicit_update;
use crate::species::SpeciesSet;
use crate::state::{DistributionField, SimulationState};
use crate::statistics::ParticleStatistics;
use crate::transport::{cfl_max_dt, transport_operator, FluxOrder, SpatialMesh};

/// The ARS(2,2,2) coefficients `γ = 1 − √2/2`, `δ = 1 − 1/(2γ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ButcherPair {
    pub gamma: f64,
    pub delta: f64,
}

impl ButcherPair {
    pub fn ars222() -> Self {
        let gamma = 1.0 - std::f64::consts::SQRT_2 / 2.0;
        ButcherPair {
            gamma,
            delta: 1.0 - 1.0 / (2.0 * gamma),
        }
    }

    /// Implicit tableau rows `(c_i; a_i1, a_i2, a_i3)` and weights.
    pub fn implicit(&self) -> ([[f64; 4]; 3], [f64; 3]) {
        let g = self.gamma;
        (
            [[0.0, 0.0, 0.0, 0.0], [g, 0.0, g, 0.0], [1.0, 0.0, 1.0 - g, g]],
            [0.0, 1.0 - g, g],
        )
    }

    /// Explicit tableau rows `(c_i; a_i1, a_i2, a_i3)` and weights.
    pub fn explicit(&self) -> ([[f64; 4]; 3], [f64; 3]) {
        let (g, d) = (self.gamma, self.delta);
        (
            [[0.0, 0.0, 0.0, 0.0], [g, g, 0.0, 0.0], [1.0, d, 1.0 - d, 0.0]],
            [d, 1.0 - d, 0.0],
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Backward Euler relaxation followed by forward Euler transport.
    FirstOrder,
    Ars222,
}

impl Scheme {
    pub fn from_int(o: u32) -> Option<Self> {
        match o {
            1 => Some(Self::FirstOrder),
            2 => Some(Self::Ars222),
            _ => None,
        }
    }

    pub fn as_int(self) -> u32 {
        match self {
            Self::FirstOrder => 1,
            Self::Ars222 => 2,
        }
    }
}

/// Species-wise totals used for conservation checks.
#[derive(Debug, Clone, PartialEq)]
pub struct Totals {
    pub n: Vec<f64>,
    pub p: Vector3<f64>,
    pub e: f64,
    /// `Σ_k sqrt(2 m_k n_k E_k)`, an upper bound of `Σ_k |P_k|`.
    pub p_scale: f64,
}

impl Totals {
    pub fn of(set: &SpeciesSet, fields: &[DistributionField], dx: Option<f64>) -> Self {
        let moms = crate::diagnostics::domain_moments(set, fields, dx);
        Totals {
            n: moms.iter().map(|m| m.n).collect(),
            p: moms.iter().map(|m| m.p).sum(),
            e: moms.iter().map(|m| m.e).sum(),
            p_scale: moms
                .iter()
                .zip(&set.species)
                .map(|(m, sp)| (2.0 * sp.mass * m.n * m.e).max(0.0).sqrt())
                .sum(),
        }
    }

    /// Largest relative change against `before` after removing `inflow`.
    pub fn drift(&self, before: &Totals, inflow: &[[f64; 5]]) -> f64 {
        let mut worst: f64 = 0.0;
        let mut p_in = Vector3::zeros();
        let mut e_in = 0.0;
        for k in 0..self.n.len() {
            let i = inflow.get(k).copied().unwrap_or([0.0; 5]);
            p_in += Vector3::new(i[1], i[2], i[3]);
            e_in += i[4];
            let scale = before.n[k].abs().max(self.n[k].abs());
            if scale > 0.0 {
                worst = worst.max((self.n[k] - before.n[k] - i[0]).abs() / scale);
            }
        }
        let ps = before.p_scale.max(self.p_scale);
        if ps > 0.0 {
            worst = worst.max((self.p - before.p - p_in).norm() / ps);
        }
        let es = before.e.abs().max(self.e.abs());
        if es > 0.0 {
            worst = worst.max((self.e - before.e - e_in).abs() / es);
        }
        worst
    }
}

/// What happened during one step.
#[derive(Debug, Clone, Default)]
pub struct StepReport {
    pub stats: SolveStats,
    /// Smallest value after the step.
    pub min_f: f64,
    /// Smallest value entering an implicit stage of the second-order scheme,
    /// before any clamping.
    pub min_stage_input: f64,
    /// Largest value of any fermion species after the step.
    pub max_fermion_f: f64,
    /// Moments entering the domain through the boundaries during the step, per species.
    pub inflow: Vec<[f64; 5]>,
    pub warnings: Vec<String>,
}

/// A configured solver: species, optional spatial mesh and scheme choices.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub set: SpeciesSet,
    pub mesh: Option<SpatialMesh>,
    pub scheme: Scheme,
    pub flux_order: FluxOrder,
    pub newton: NewtonOptions,
    /// Turn monitor warnings into [`Error::Invariant`].
    pub strict: bool,
    /// Set negative values produced by ARS stages to zero.
    pub clamp_negative: bool,
    /// Per-step relative conservation drift tolerated under `strict`.
    pub conservation_tol: f64,
}

type Tendencies = (Vec<DistributionField>, Vec<[f64; 5]>);

impl Simulation {
    pub fn new(set: SpeciesSet, mesh: Option<SpatialMesh>, scheme: Scheme, flux_order: FluxOrder) -> Self {
        Simulation {
            set,
            mesh,
            scheme,
            flux_order,
            newton: NewtonOptions::default(),
            strict: false,
            clamp_negative: false,
            conservation_tol: 1e-11,
        }
    }

    pub fn dx(&self) -> Option<f64> {
        self.mesh.map(|m| m.dx())
    }

    /// Largest stable step of the transport part, infinite without a mesh.
    pub fn max_dt(&self) -> f64 {
        match &self.mesh {
            Some(m) => cfl_max_dt(&self.set, m, self.flux_order),
            None => f64::INFINITY,
        }
    }

    fn check_cfl(&self, dt: f64) -> Result<()> {
        let lim = self.max_dt();
        if dt > lim * (1.0 + 1e-12) {
            return Err(Error::Config(format!("time step {dt} exceeds the CFL bound {lim}")));
        }
        Ok(())
    }

    fn transport(&self, f: &[DistributionField]) -> Option<Tendencies> {
        let mesh = self.mesh.as_ref()?;
        let (t, inflow) = self
            .set
            .species
            .iter()
            .zip(f)
            .map(|(sp, fk)| transport_operator(fk, mesh, &sp.grid, sp.mass, self.flux_order))
            .unzip();
        Some((t, inflow))
    }

    fn monitor(&self, label: &str, f: &[DistributionField], report: &mut StepReport) -> Result<()> {
        let stage = label != "step";
        for (sp, fk) in self.set.species.iter().zip(f) {
            let lo = fk.min();
            if stage {
                report.min_stage_input = report.min_stage_input.min(lo);
            } else {
                report.min_f = report.min_f.min(lo);
            }
            if lo < 0.0 {
                let msg = format!("{label}: species '{}' has negative value {lo:e}", sp.label);
                if self.strict {
                    return Err(Error::Invariant(msg));
                }
                if stage && self.clamp_negative {
                    debug!("{msg}, clamped");
                } else {
                    warn!("{msg}");
                    report.warnings.push(msg);
                }
            }
        }
        Ok(())
    }

    fn clamp(&self, f: &mut [DistributionField]) {
        if self.clamp_negative {
            for fk in f {
                fk.as_mut_slice().iter_mut().for_each(|v| *v = v.max(0.0));
            }
        }
    }

    fn finish(&self, state: &mut SimulationState, fields: Vec<DistributionField>, eq: Vec<CellEquilibria>, report: &mut StepReport) -> Result<()> {
        self.monitor("step", &fields, report)?;
        for (sp, fk) in self.set.species.iter().zip(&fields) {
            if sp.statistics == ParticleStatistics::Fermion {
                let hi = fk.max();
                report.max_fermion_f = report.max_fermion_f.max(hi);
                if hi >= 1.0 {
                    let msg = format!("fermion species '{}' reached {hi}", sp.label);
                    if self.strict {
                        return Err(Error::Invariant(msg));
                    }
                    warn!("{msg}");
                    report.warnings.push(msg);
                }
            }
        }
        state.fields = fields;
        state.equilibria = eq.into_iter().map(Some).collect();
        Ok(())
    }

    fn new_report(&self) -> StepReport {
        StepReport {
            min_f: f64::INFINITY,
            min_stage_input: f64::INFINITY,
            max_fermion_f: 0.0,
            inflow: vec![[0.0; 5]; self.set.len()],
            ..Default::default()
        }
    }

    /// Backward Euler relaxation, then forward Euler transport.
    pub fn step_first_order(&self, state: &mut SimulationState, dt: f64) -> Result<StepReport> {
        self.check_cfl(dt)?;
        let mut report = self.new_report();
        let relaxed = implicit_update(&state.fields, dt, &self.set, &state.equilibria, &self.newton)?;
        report.stats = relaxed.stats;
        let mut fields = relaxed.fields;
        if let Some((t, inflow)) = self.transport(&fields) {
            for (k, (fk, tk)) in fields.iter_mut().zip(&t).enumerate() {
                fk.axpy(-dt, tk);
                report.inflow[k] = inflow[k].map(|v| dt * v);
            }
        }
        self.finish(state, fields, relaxed.equilibria, &mut report)?;
        state.time += dt;
        Ok(report)
    }

    /// One ARS(2,2,2) step; `𝓡(f⁽¹⁾)` reuses the stage-1 equilibria.
    pub fn step_ars222(&self, state: &mut SimulationState, dt: f64) -> Result<StepReport> {
        self.check_cfl(dt)?;
        let ButcherPair { gamma, delta } = ButcherPair::ars222();
        let h = gamma * dt;
        let mut report = self.new_report();
        let t0 = self.transport(&state.fields);

        let mut g1 = state.fields.clone();
        if let Some((t, _)) = &t0 {
            for (g, tk) in g1.iter_mut().zip(t) {
                g.axpy(-dt * gamma, tk);
            }
        }
        self.monitor("stage 1 input", &g1, &mut report)?;
        self.clamp(&mut g1);
        let s1 = implicit_update(&g1, h, &self.set, &state.equilibria, &self.newton)?;
        report.stats.merge(&s1.stats);
        let f1 = s1.fields;

        let mut g2 = state.fields.clone();
        let t1 = self.transport(&f1);
        if let (Some((ta, ia)), Some((tb, ib))) = (&t0, &t1) {
            for k in 0..g2.len() {
                g2[k].axpy(-dt * delta, &ta[k]);
                g2[k].axpy(-dt * (1.0 - delta), &tb[k]);
                for r in 0..5 {
                    report.inflow[k][r] = dt * (delta * ia[k][r] + (1.0 - delta) * ib[k][r]);
                }
            }
        }
        let w = dt * (1.0 - gamma);
        for c in 0..state.cells() {
            let cell: Vec<&[f64]> = f1.iter().map(|f| f.cell(c)).collect();
            for k in 0..self.set.len() {
                let r = assemble_rhs(k, &cell, &self.set, &s1.equilibria[c]).map_err(|e| e.in_cell(c))?;
                g2[k].cell_mut(c).iter_mut().zip(&r).for_each(|(g, rv)| *g += w * rv);
            }
        }
        self.monitor("stage 2 input", &g2, &mut report)?;
        self.clamp(&mut g2);
        let warm: Vec<Option<CellEquilibria>> = s1.equilibria.into_iter().map(Some).collect();
        let s2 = implicit_update(&g2, h, &self.set, &warm, &self.newton)?;
        report.stats.merge(&s2.stats);
        self.finish(state, s2.fields, s2.equilibria, &mut report)?;
        state.time += dt;
        Ok(report)
    }

    pub fn step(&self, state: &mut SimulationState, dt: f64) -> Result<StepReport> {
        match self.scheme {
            Scheme::FirstOrder => self.step_first_order(state, dt),
            Scheme::Ars222 => self.step_ars222(state, dt),
        }
    }

    /// Advance to `t_end` with steps of `dt` (the last one shortened), recording
    /// diagnostics every `stride` steps and at the end. Records and the
    /// per-step conservation drift are written into `out` as they are produced,
    /// so they survive an error.
    pub fn run(&self, state: &mut SimulationState, t_end: f64, dt: f64, stride: usize, out: &mut RunOutput) -> Result<()> {
        if !(dt > 0.0) {
            return Err(Error::Config(format!("time step must be positive, got {dt}")));
        }
        let stride = stride.max(1);
        let dx = self.dx();
        if out.records.is_empty() {
            out.records.push(record(&self.set, state, self.mesh.as_ref(), None, &self.newton)?);
        }
        let tol = t_end.abs().max(1.0) * 1e-12;
        let mut steps = 0usize;
        while state.time < t_end - tol {
            let remaining = t_end - state.time;
            let h = if remaining <= dt * (1.0 + 1e-9) { remaining } else { dt };
            let before = Totals::of(&self.set, &state.fields, dx);
            let report = self.step(state, h)?;
            if (t_end - state.time).abs() <= tol {
                state.time = t_end;
            }
            let after = Totals::of(&self.set, &state.fields, dx);
            let drift = after.drift(&before, &report.inflow);
            out.max_drift = out.max_drift.max(drift);
            out.drifts.push(drift);
            out.min_f = out.min_f.min(report.min_f);
            out.min_stage_input = out.min_stage_input.min(report.min_stage_input);
            out.max_fermion_f = out.max_fermion_f.max(report.max_fermion_f);
            out.stats.merge(&report.stats);
            out.warnings.extend(report.warnings);
            for (k, i) in report.inflow.iter().enumerate() {
                if out.inflow.len() <= k {
                    out.inflow.push([0.0; 5]);
                }
                for r in 0..5 {
                    out.inflow[k][r] += i[r];
                }
            }
            if self.strict && drift > self.conservation_tol {
                return Err(Error::Invariant(format!(
                    "conservation drift {drift:e} at t = {} exceeds {:e}",
                    state.time, self.conservation_tol
                )));
            }
            steps += 1;
            out.steps += 1;
            let last = state.time >= t_end - tol;
            if steps % stride == 0 || last {
                let prev = out.records.last();
                let rec = record(&self.set, state, self.mesh.as_ref(), prev, &self.newton)?;
                if self.strict && self.scheme == Scheme::FirstOrder && self.mesh.is_none() {
                    if let Some(p) = prev {
                        let tol = 1e-13 * p.entropy.abs().max(1.0);
                        if rec.entropy > p.entropy + tol {
                            return Err(Error::Invariant(format!(
                                "entropy increased from {} to {} at t = {}",
                                p.entropy, rec.entropy, rec.time
                            )));
                        }
                    }
                }
                out.records.push(rec);
            }
        }
        Ok(())
    }
}

/// Accumulated output of [`Simulation::run`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<DiagnosticsRecord>,
    pub steps: usize,
    /// Relative conservation drift of every step.
    pub drifts: Vec<f64>,
    pub max_drift: f64,
    pub min_f: f64,
    pub min_stage_input: f64,
    pub max_fermion_f: f64,
    /// Moments that entered through the boundaries over the whole run, per species.
    pub inflow: Vec<[f64; 5]>,
    pub stats: SolveStats,
    pub warnings: Vec<String>,
}

impl Default for RunOutput {
    fn default() -> Self {
        RunOutput {
            records: vec![],
            steps: 0,
            drifts: vec![],
            max_drift: 0.0,
            min_f: f64::INFINITY,
            min_stage_input: f64::INFINITY,
            max_fermion_f: 0.0,
            inflow: vec![],
            stats: SolveStats::default(),
            warnings: vec![],
        }
    }
}

/// Species moments of one cell, convenient for tests and presets.
pub fn cell_moments(set: &SpeciesSet, state: &SimulationState, c: usize) -> Vec<crate::grid::Moments> {
    set.species
        .iter()
        .zip(&state.fields)
        .map(|(sp, f)| compute_moments(f.cell(c), &sp.grid, sp.mass))
        .collect()
}
