//! Lindblad master-equation integration on the column-stacked density matrix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{CMatrix, DensityMatrix, ModeDims, QuantumOperator, C64};
use crate::io::SeriesTable;
use crate::model::{build_conversion_model, DriveConfig, LindbladModel, ModelOptions, SystemParams};
use crate::sparse::CsrMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub n_points: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, n_points: usize) -> Result<Self> {
        let g = TimeGrid { t_start, t_end, n_points };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > self.t_start) || !self.t_start.is_finite() || !self.t_end.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "time grid needs t_end > t_start, got [{}, {}]",
                self.t_start, self.t_end
            )));
        }
        if self.n_points < 2 {
            return Err(Error::InvalidParameter(format!("time grid needs >= 2 points, got {}", self.n_points)));
        }
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        let n = self.n_points;
        let dt = (self.t_end - self.t_start) / (n - 1) as f64;
        (0..n).map(|k| if k + 1 == n { self.t_end } else { self.t_start + dt * k as f64 }).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { rtol: 1e-8, atol: 1e-10, max_steps: 5_000_000 }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0) || !(self.atol > 0.0) {
            return Err(Error::InvalidParameter("solver tolerances must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Observable {
    pub name: String,
    pub values: Vec<C64>,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub dims: ModeDims,
    pub times: Vec<f64>,
    /// Empty in storage-lean runs.
    pub states: Vec<DensityMatrix>,
    pub observables: Vec<Observable>,
    /// Largest `|tr ρ − 1|` seen at the recorded points.
    pub max_trace_drift: f64,
    pub steps: usize,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn observable(&self, name: &str) -> Option<&[C64]> {
        self.observables.iter().find(|o| o.name == name).map(|o| o.values.as_slice())
    }

    pub fn final_state(&self) -> Option<&DensityMatrix> {
        self.states.last()
    }

    /// Time plus the real part of every recorded observable.
    pub fn table(&self) -> SeriesTable {
        let mut cols = vec!["time".to_string()];
        cols.extend(self.observables.iter().map(|o| o.name.clone()));
        let mut t = SeriesTable::new(cols);
        for (k, &time) in self.times.iter().enumerate() {
            let mut row = vec![time];
            row.extend(self.observables.iter().map(|o| o.values[k].re));
            t.rows.push(row);
        }
        t
    }
}

/// `L = I⊗A + Bᵀ⊗I + Σ L̄⊗L` with `A = −iH_eff`, `B = iH_eff†`.
pub fn liouvillian(model: &LindbladModel) -> CsrMatrix {
    let d = model.dims.total();
    let i = C64::new(0.0, 1.0);
    let mut heff = model.hamiltonian.matrix().clone();
    for c in &model.collapse_ops {
        let m = c.op.matrix();
        heff -= (m.adjoint() * m) * (i * 0.5);
    }
    let a: CMatrix = &heff * (-i);
    let b: CMatrix = heff.adjoint() * i;
    let nz = |m: &CMatrix| -> Vec<(usize, usize, C64)> {
        let mut v = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                if m[(r, c)] != C64::new(0.0, 0.0) {
                    v.push((r, c, m[(r, c)]));
                }
            }
        }
        v
    };
    let a_nz = nz(&a);
    let b_nz = nz(&b);
    let mut trip = Vec::with_capacity(d * (a_nz.len() + b_nz.len()));
    for j in 0..d {
        for &(r, c, v) in &a_nz {
            trip.push((j * d + r, j * d + c, v));
        }
    }
    for &(r, c, v) in &b_nz {
        // (Bᵀ ⊗ I)[(c·d + k), (r·d + k)] = B[r, c]
        for k in 0..d {
            trip.push((c * d + k, r * d + k, v));
        }
    }
    for col in &model.collapse_ops {
        let l = nz(col.op.matrix());
        for &(p, q, lpq) in &l {
            for &(r, c, lrc) in &l {
                trip.push((p * d + r, q * d + c, lpq.conj() * lrc));
            }
        }
    }
    CsrMatrix::from_triplets(d * d, trip)
}

// Dormand–Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Adaptive integrator for `dy/dt = L y` with a fixed sparse generator.
pub struct LinearOdeSolver<'a> {
    gen: &'a CsrMatrix,
    opts: SolverOptions,
    steps: usize,
    rejected: usize,
}

impl<'a> LinearOdeSolver<'a> {
    pub fn new(gen: &'a CsrMatrix, opts: SolverOptions) -> Self {
        LinearOdeSolver { gen, opts, steps: 0, rejected: 0 }
    }

    /// Integrates `y0` through `times`, calling `record` at each time (the first included).
    pub fn integrate<F>(&mut self, y0: &[C64], times: &[f64], mut record: F) -> Result<()>
    where
        F: FnMut(usize, &[C64]) -> Result<()>,
    {
        let n = y0.len();
        let mut y = y0.to_vec();
        record(0, &y)?;
        if times.len() < 2 {
            return Ok(());
        }
        let zero = C64::new(0.0, 0.0);
        let mut k: Vec<Vec<C64>> = (0..7).map(|_| vec![zero; n]).collect();
        let mut tmp = vec![zero; n];
        let mut y_new = vec![zero; n];
        self.gen.matvec_into(&y, &mut k[0]);

        let mut t = times[0];
        let mut h = self.initial_step(&y, &k[0], times[times.len() - 1] - t);
        for (idx, &t_out) in times.iter().enumerate().skip(1) {
            while t < t_out {
                if self.steps + self.rejected >= self.opts.max_steps {
                    return Err(Error::IntegrationFailure { t_reached: t, reason: "step budget exhausted".into() });
                }
                let remaining = t_out - t;
                let last = h >= remaining * (1.0 - 1e-12);
                let hs = if last { remaining } else { h };
                if hs <= 1e-14 * t.abs().max(1.0) {
                    return Err(Error::IntegrationFailure { t_reached: t, reason: "step size underflow".into() });
                }

                let stage = |tmp: &mut Vec<C64>, k: &Vec<Vec<C64>>, coeffs: &[(usize, f64)]| {
                    for i in 0..n {
                        let mut acc = y[i];
                        for &(j, a) in coeffs {
                            acc += k[j][i] * (a * hs);
                        }
                        tmp[i] = acc;
                    }
                };
                stage(&mut tmp, &k, &[(0, A21)]);
                self.gen.matvec_into(&tmp, &mut k[1]);
                stage(&mut tmp, &k, &[(0, A31), (1, A32)]);
                self.gen.matvec_into(&tmp, &mut k[2]);
                stage(&mut tmp, &k, &[(0, A41), (1, A42), (2, A43)]);
                self.gen.matvec_into(&tmp, &mut k[3]);
                stage(&mut tmp, &k, &[(0, A51), (1, A52), (2, A53), (3, A54)]);
                self.gen.matvec_into(&tmp, &mut k[4]);
                stage(&mut tmp, &k, &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)]);
                self.gen.matvec_into(&tmp, &mut k[5]);
                for i in 0..n {
                    y_new[i] = y[i] + (k[0][i] * B1 + k[2][i] * B3 + k[3][i] * B4 + k[4][i] * B5 + k[5][i] * B6) * hs;
                }
                let (k_rest, k_last) = k.split_at_mut(6);
                self.gen.matvec_into(&y_new, &mut k_last[0]);

                let mut err_sq = 0.0;
                for i in 0..n {
                    let e = (k_rest[0][i] * E1
                        + k_rest[2][i] * E3
                        + k_rest[3][i] * E4
                        + k_rest[4][i] * E5
                        + k_rest[5][i] * E6
                        + k_last[0][i] * E7)
                        * hs;
                    let sc = self.opts.atol + self.opts.rtol * y[i].norm().max(y_new[i].norm());
                    err_sq += (e.norm() / sc).powi(2);
                }
                let err = (err_sq / n as f64).sqrt();
                if !err.is_finite() {
                    return Err(Error::IntegrationFailure { t_reached: t, reason: "non-finite error estimate".into() });
                }
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if err <= 1.0 {
                    self.steps += 1;
                    t = if last { t_out } else { t + hs };
                    std::mem::swap(&mut y, &mut y_new);
                    k.swap(0, 6);
                    // A step clipped to an output time should not shrink the next one.
                    h = if last { h.max(hs * factor) } else { hs * factor };
                } else {
                    self.rejected += 1;
                    h = hs * factor.min(1.0);
                }
            }
            record(idx, &y)?;
        }
        Ok(())
    }

    fn initial_step(&self, y: &[C64], f: &[C64], span: f64) -> f64 {
        let n = y.len() as f64;
        let scale = |v: &[C64]| {
            (v.iter()
                .zip(y)
                .map(|(a, b)| (a.norm() / (self.opts.atol + self.opts.rtol * b.norm())).powi(2))
                .sum::<f64>()
                / n)
                .sqrt()
        };
        let d0 = scale(y);
        let d1 = scale(f);
        let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h.min(span).max(1e-12 * span.abs().max(1.0))
    }

    pub fn steps(&self) -> (usize, usize) {
        (self.steps, self.rejected)
    }
}

fn check_rho(model: &LindbladModel, rho0: &DensityMatrix) -> Result<()> {
    if rho0.dims() != model.dims {
        return Err(Error::DimensionMismatch { expected: model.dims.total(), actual: rho0.dim() });
    }
    Ok(())
}

/// Precompiled master equation for repeated evolutions of one model.
pub struct MasterEquation {
    dims: ModeDims,
    gen: CsrMatrix,
    opts: SolverOptions,
}

impl MasterEquation {
    pub fn new(model: &LindbladModel, opts: SolverOptions) -> Result<Self> {
        opts.validate()?;
        Ok(MasterEquation { dims: model.dims, gen: liouvillian(model), opts })
    }

    pub fn generator(&self) -> &CsrMatrix {
        &self.gen
    }

    /// Full states at every grid time.
    pub fn evolve(&self, rho0: &DensityMatrix, grid: &TimeGrid) -> Result<Trajectory> {
        self.run(rho0, grid, &[], true)
    }

    /// Storage-lean run recording only `tr(O ρ)` for each named operator.
    pub fn evolve_observables(
        &self,
        rho0: &DensityMatrix,
        grid: &TimeGrid,
        observables: &[(&str, &QuantumOperator)],
    ) -> Result<Trajectory> {
        self.run(rho0, grid, observables, false)
    }

    fn run(
        &self,
        rho0: &DensityMatrix,
        grid: &TimeGrid,
        observables: &[(&str, &QuantumOperator)],
        keep_states: bool,
    ) -> Result<Trajectory> {
        grid.validate()?;
        if rho0.dims() != self.dims {
            return Err(Error::DimensionMismatch { expected: self.dims.total(), actual: rho0.dim() });
        }
        for (_, op) in observables {
            if op.dims() != self.dims {
                return Err(Error::DimensionMismatch { expected: self.dims.total(), actual: op.dim() });
            }
        }
        let d = self.dims.total();
        let times = grid.times();
        // tr(Oρ) = Σ O_ij ρ_ji with ρ_ji stored at i·d + j.
        let compiled: Vec<Vec<(usize, C64)>> = observables
            .iter()
            .map(|(_, op)| {
                let m = op.matrix();
                let mut v = Vec::new();
                for i in 0..d {
                    for j in 0..d {
                        if m[(i, j)] != C64::new(0.0, 0.0) {
                            v.push((i * d + j, m[(i, j)]));
                        }
                    }
                }
                v
            })
            .collect();
        let mut values: Vec<Vec<C64>> = vec![Vec::with_capacity(times.len()); observables.len()];
        let mut states = Vec::new();
        let mut drift: f64 = 0.0;
        let dims = self.dims;

        let mut ode = LinearOdeSolver::new(&self.gen, self.opts);
        ode.integrate(rho0.matrix().as_slice(), &times, |_, y| {
            let tr: C64 = (0..d).map(|i| y[i * d + i]).sum();
            drift = drift.max((tr - 1.0).norm());
            for (k, terms) in compiled.iter().enumerate() {
                values[k].push(terms.iter().map(|&(idx, o)| o * y[idx]).sum());
            }
            if keep_states {
                states.push(DensityMatrix::from_matrix_unchecked(dims, CMatrix::from_column_slice(d, d, y))?);
            }
            Ok(())
        })?;
        let (steps, rejected) = ode.steps();
        log::debug!("evolve: {steps} steps, {rejected} rejected, trace drift {drift:.2e}");
        Ok(Trajectory {
            dims,
            times,
            states,
            observables: observables
                .iter()
                .zip(values)
                .map(|((name, _), values)| Observable { name: name.to_string(), values })
                .collect(),
            max_trace_drift: drift,
            steps,
            rejected_steps: rejected,
        })
    }
}

pub fn evolve(model: &LindbladModel, rho0: &DensityMatrix, grid: &TimeGrid) -> Result<Trajectory> {
    evolve_with(model, rho0, grid, SolverOptions::default())
}

pub fn evolve_with(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
    opts: SolverOptions,
) -> Result<Trajectory> {
    check_rho(model, rho0)?;
    MasterEquation::new(model, opts)?.evolve(rho0, grid)
}

/// `tr(O ρ)`; for Hermitian `O` the imaginary part is checked against 1e-9.
pub fn expectation(rho: &DensityMatrix, op: &QuantumOperator) -> Result<C64> {
    if rho.dims() != op.dims() {
        return Err(Error::DimensionMismatch { expected: op.dim(), actual: rho.dim() });
    }
    let v = (op.matrix() * rho.matrix()).trace();
    if op.is_hermitian(1e-12) && v.im.abs() > 1e-9 * rho.trace().abs().max(1.0) {
        return Err(Error::InvalidState(format!("Hermitian expectation has imaginary part {:.3e}", v.im)));
    }
    Ok(v)
}

/// Population summed over the reservoir: `P_{|n,q⟩}`.
pub fn cavity_transmon_projector(n: usize, q: usize, dims: ModeDims) -> Result<QuantumOperator> {
    let mut m = CMatrix::zeros(dims.total(), dims.total());
    for r in 0..dims.n_res {
        let i = dims.index([n, q, r])?;
        m[(i, i)] = C64::new(1.0, 0.0);
    }
    QuantumOperator::new(dims, m)
}

pub fn transmon_projector(q: usize, dims: ModeDims) -> Result<QuantumOperator> {
    let mut m = CMatrix::zeros(dims.total(), dims.total());
    for n in 0..dims.n_cav {
        for r in 0..dims.n_res {
            let i = dims.index([n, q, r])?;
            m[(i, i)] = C64::new(1.0, 0.0);
        }
    }
    QuantumOperator::new(dims, m)
}

/// Setup shared by conversion runs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConversionSetup {
    pub dims: ModeDims,
    pub options: ModelOptions,
    pub solver: SolverOptions,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConversionCurve {
    pub initial_fock: usize,
    pub times: Vec<f64>,
    /// `P_{|n+1,g⟩} − P_{|n+1,e⟩}`
    pub converted: Vec<f64>,
    pub p_ng: Vec<f64>,
    pub p_ne: Vec<f64>,
    pub p_initial: Vec<f64>,
    pub transmon_e: Vec<f64>,
    pub transmon_f: Vec<f64>,
    /// First time the converted population reaches 0.5, linearly interpolated.
    pub halftime: Option<f64>,
    pub max_trace_drift: f64,
}

impl ConversionCurve {
    pub fn table(&self) -> SeriesTable {
        let cols = ["time", "converted", "p_ng", "p_ne", "p_initial", "transmon_e", "transmon_f"];
        let mut t = SeriesTable::new(cols.iter().map(|s| s.to_string()).collect());
        for k in 0..self.times.len() {
            t.rows.push(vec![
                self.times[k],
                self.converted[k],
                self.p_ng[k],
                self.p_ne[k],
                self.p_initial[k],
                self.transmon_e[k],
                self.transmon_f[k],
            ]);
        }
        t
    }

    pub fn final_value(&self) -> f64 {
        *self.converted.last().unwrap_or(&f64::NAN)
    }
}

/// First upward crossing of `level`, linearly interpolated between samples.
pub fn first_crossing(times: &[f64], values: &[f64], level: f64) -> Option<f64> {
    if values.first().is_some_and(|&v| v >= level) {
        return times.first().copied();
    }
    for k in 1..values.len() {
        if values[k] >= level && values[k - 1] < level {
            let f = (level - values[k - 1]) / (values[k] - values[k - 1]);
            return Some(times[k - 1] + f * (times[k] - times[k - 1]));
        }
    }
    None
}

pub fn conversion_curve(
    params: &SystemParams,
    cfg: &DriveConfig,
    initial_even_fock: usize,
    grid: &TimeGrid,
) -> Result<ConversionCurve> {
    conversion_curve_with(params, cfg, initial_even_fock, grid, &ConversionSetup::default())
}

/// Evolves `|n,g,0⟩` under the PReSPA model and tracks conversion into `|n+1,g⟩`.
pub fn conversion_curve_with(
    params: &SystemParams,
    cfg: &DriveConfig,
    initial_even_fock: usize,
    grid: &TimeGrid,
    setup: &ConversionSetup,
) -> Result<ConversionCurve> {
    let n = initial_even_fock;
    if !n.is_multiple_of(2) || n > 4 {
        return Err(Error::InvalidParameter(format!("initial Fock state must be 0, 2 or 4, got {n}")));
    }
    let dims = setup.dims;
    if n + 1 >= dims.n_cav {
        return Err(Error::OutOfRange(format!("Fock {} exceeds cavity truncation {}", n + 1, dims.n_cav)));
    }
    let model = build_conversion_model(params, cfg, dims, &setup.options)?;
    let rho0 = DensityMatrix::pure(&crate::hilbert::fock_state([n, 0, 0], dims)?);
    let png = cavity_transmon_projector(n + 1, 0, dims)?;
    let pne = cavity_transmon_projector(n + 1, 1, dims)?;
    let pinit = cavity_transmon_projector(n, 0, dims)?;
    let pe = transmon_projector(1, dims)?;
    let pf = transmon_projector(2, dims)?;
    let me = MasterEquation::new(&model, setup.solver)?;
    let traj = me.evolve_observables(
        &rho0,
        grid,
        &[("p_ng", &png), ("p_ne", &pne), ("p_initial", &pinit), ("transmon_e", &pe), ("transmon_f", &pf)],
    )?;
    let re = |name: &str| -> Vec<f64> { traj.observable(name).unwrap().iter().map(|z| z.re).collect() };
    let p_ng = re("p_ng");
    let p_ne = re("p_ne");
    let converted: Vec<f64> = p_ng.iter().zip(&p_ne).map(|(g, e)| g - e).collect();
    let halftime = first_crossing(&traj.times, &converted, 0.5);
    Ok(ConversionCurve {
        initial_fock: n,
        times: traj.times.clone(),
        converted,
        p_ng,
        p_ne,
        p_initial: re("p_initial"),
        transmon_e: re("transmon_e"),
        transmon_f: re("transmon_f"),
        halftime,
        max_trace_drift: traj.max_trace_drift,
    })
}
