//! Logical codes, logical readout, fidelities and lifetime fits.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{
    annihilation, embed, kron, parity_phases, CMatrix, CVector, DensityMatrix, Mode, ModeDims, QuantumOperator,
    StateVector, C64,
};
use crate::io::SeriesTable;
use crate::model::LindbladModel;
use crate::solver::{MasterEquation, SolverOptions, TimeGrid};
use crate::tomography::cavity_state;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
    Mixed,
}

#[derive(Clone, Debug)]
pub struct LogicalCode {
    pub name: String,
    pub zero_l: StateVector,
    pub one_l: StateVector,
    pub nbar: f64,
    pub parity: Parity,
}

fn mean_photons(psi: &StateVector) -> f64 {
    psi.amplitudes().iter().enumerate().map(|(n, a)| n as f64 * a.norm_sqr()).sum()
}

fn support_parity(psi: &StateVector) -> Option<usize> {
    let mut p = None;
    for (n, a) in psi.amplitudes().iter().enumerate() {
        if a.norm() > 1e-12 {
            match p {
                None => p = Some(n % 2),
                Some(q) if q != n % 2 => return None,
                _ => {}
            }
        }
    }
    p
}

impl LogicalCode {
    /// Checks orthogonality and equal mean photon number.
    pub fn new(name: &str, zero_l: StateVector, one_l: StateVector) -> Result<Self> {
        if !zero_l.dims().is_single() || zero_l.dims() != one_l.dims() {
            return Err(Error::InvalidDimension("codewords must share one single-mode space".into()));
        }
        let ov = zero_l.inner(&one_l).norm();
        if ov > 1e-12 {
            return Err(Error::InvalidState(format!("codewords overlap by {ov:.2e}")));
        }
        let (n0, n1) = (mean_photons(&zero_l), mean_photons(&one_l));
        let parity = match (support_parity(&zero_l), support_parity(&one_l)) {
            (Some(0), Some(0)) => Parity::Even,
            (Some(1), Some(1)) => Parity::Odd,
            _ => Parity::Mixed,
        };
        Ok(LogicalCode { name: name.into(), zero_l, one_l, nbar: 0.5 * (n0 + n1), parity })
    }

    pub fn dim(&self) -> usize {
        self.zero_l.dims().n_cav
    }

    pub fn has_equal_nbar(&self) -> bool {
        (mean_photons(&self.zero_l) - mean_photons(&self.one_l)).abs() < 1e-9
    }

    /// `c0|0_L⟩ + c1|1_L⟩`.
    pub fn logical_state(&self, c0: C64, c1: C64) -> Result<StateVector> {
        StateVector::new(self.zero_l.dims(), self.zero_l.amplitudes() * c0 + self.one_l.amplitudes() * c1)
    }
}

/// `(|1⟩+|5⟩)/√2` and `|3⟩`.
pub fn binomial_code(dims: ModeDims) -> Result<LogicalCode> {
    if dims.n_cav < 6 {
        return Err(Error::InvalidDimension(format!("binomial code needs n_cav >= 6, got {}", dims.n_cav)));
    }
    let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let zero = StateVector::from_fock_amplitudes(dims.n_cav, &[(1, s), (5, s)])?;
    let one = StateVector::from_fock_amplitudes(dims.n_cav, &[(3, C64::new(1.0, 0.0))])?;
    LogicalCode::new("binomial", zero, one)
}

pub fn fock01_code(dims: ModeDims) -> Result<LogicalCode> {
    if dims.n_cav < 2 {
        return Err(Error::InvalidDimension(format!("Fock encoding needs n_cav >= 2, got {}", dims.n_cav)));
    }
    let one = C64::new(1.0, 0.0);
    let zero = StateVector::from_fock_amplitudes(dims.n_cav, &[(0, one)])?;
    let one_l = StateVector::from_fock_amplitudes(dims.n_cav, &[(1, one)])?;
    LogicalCode::new("fock01", zero, one_l)
}

pub const CARDINAL_LABELS: [&str; 6] = ["+Z", "-Z", "+X", "-X", "+Y", "-Y"];

/// Logical coefficients of the cardinal states, in `CARDINAL_LABELS` order.
pub fn cardinal_coefficients() -> [(C64, C64); 6] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [
        (C64::new(1.0, 0.0), C64::new(0.0, 0.0)),
        (C64::new(0.0, 0.0), C64::new(1.0, 0.0)),
        (C64::new(s, 0.0), C64::new(s, 0.0)),
        (C64::new(s, 0.0), C64::new(-s, 0.0)),
        (C64::new(s, 0.0), C64::new(0.0, s)),
        (C64::new(s, 0.0), C64::new(0.0, -s)),
    ]
}

pub fn cardinal_states(code: &LogicalCode) -> Result<Vec<StateVector>> {
    cardinal_coefficients().iter().map(|&(a, b)| code.logical_state(a, b)).collect()
}

/// `Π_m = e^{i2πn/m}` on the cavity.
pub fn generalized_parity(m: usize, dims: ModeDims) -> Result<QuantumOperator> {
    if m == 0 {
        return Err(Error::InvalidParameter("parity order must be positive".into()));
    }
    let d = CMatrix::from_diagonal(&CVector::from_vec(parity_phases(m, dims.n_cav)));
    embed(&QuantumOperator::single(d)?, Mode::Cavity, dims)
}

/// `⟨ψ|ρ|ψ⟩`.
pub fn state_fidelity(rho: &DensityMatrix, psi: &StateVector) -> Result<f64> {
    if rho.dims() != psi.dims() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), actual: psi.dims().total() });
    }
    let v = psi.amplitudes();
    let f = v.dotc(&(rho.matrix() * v)).re;
    Ok(f.clamp(0.0, 1.0))
}

pub fn process_fidelity(f_avg: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&f_avg) {
        return Err(Error::OutOfRange(format!("average fidelity {f_avg} outside [0, 1]")));
    }
    Ok(0.25 + 1.5 * (f_avg - 0.5))
}

pub fn tau_process(t_eq: f64, t_p: f64) -> f64 {
    1.0 / ((2.0 / 3.0) / t_eq + (1.0 / 3.0) / t_p)
}

fn orthonormal_complement(span: &[CVector], support: &[usize], dim: usize) -> Vec<CVector> {
    let mut basis: Vec<CVector> = span.to_vec();
    let mut out = Vec::new();
    for &k in support {
        let mut v = CVector::zeros(dim);
        v[k] = C64::new(1.0, 0.0);
        for b in &basis {
            let p = b.dotc(&v);
            v -= b * p;
        }
        let nrm = v.norm();
        if nrm > 1e-9 {
            v.unscale_mut(nrm);
            basis.push(v.clone());
            out.push(v);
        }
    }
    out
}

fn support_of(v: &CVector) -> Vec<usize> {
    v.iter().enumerate().filter(|(_, a)| a.norm() > 1e-12).map(|(k, _)| k).collect()
}

/// Reads a cavity state back into a logical qubit.
///
/// Each branch is a pair of cavity vectors mapped onto logical `|0⟩` and
/// `|1⟩`; a missing side contributes only population. The code branch is
/// followed by the within-support complements of each codeword, then the
/// single-loss branch `a|c⟩` and its complements when it is orthogonal to
/// everything before it.
#[derive(Clone, Debug)]
pub struct LogicalDecoder {
    branches: Vec<[Option<CVector>; 2]>,
}

impl LogicalDecoder {
    pub fn new(code: &LogicalCode) -> Result<Self> {
        let d = code.dim();
        let z = code.zero_l.amplitudes().clone();
        let o = code.one_l.amplitudes().clone();
        let mut branches = vec![[Some(z.clone()), Some(o.clone())]];
        let mut seen = vec![z.clone(), o.clone()];
        Self::push_complements(&mut branches, &mut seen, [&z, &o], d);

        let a = annihilation(d)?.into_matrix();
        let (ez, eo) = (&a * &z, &a * &o);
        let (nz, no) = (ez.norm(), eo.norm());
        if nz > 1e-9 && no > 1e-9 {
            let (ez, eo) = (ez.unscale(nz), eo.unscale(no));
            let clear = seen.iter().all(|s| s.dotc(&ez).norm() < 1e-9 && s.dotc(&eo).norm() < 1e-9)
                && ez.dotc(&eo).norm() < 1e-9;
            if clear {
                branches.push([Some(ez.clone()), Some(eo.clone())]);
                seen.push(ez.clone());
                seen.push(eo.clone());
                Self::push_complements(&mut branches, &mut seen, [&ez, &eo], d);
            }
        }
        Ok(LogicalDecoder { branches })
    }

    fn push_complements(
        branches: &mut Vec<[Option<CVector>; 2]>,
        seen: &mut Vec<CVector>,
        pair: [&CVector; 2],
        d: usize,
    ) {
        for (side, v) in pair.iter().enumerate() {
            for c in orthonormal_complement(&[(*v).clone()], &support_of(v), d) {
                let mut b = [None, None];
                b[side] = Some(c.clone());
                branches.push(b);
                seen.push(c);
            }
        }
    }

    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }

    /// Logical 2×2 density matrix `ρ_q[i,j] = Σ_k ⟨w_{i,k}|ρ|w_{j,k}⟩`.
    pub fn readout(&self, rho_cav: &CMatrix) -> nalgebra::Matrix2<C64> {
        let mut q = nalgebra::Matrix2::zeros();
        for b in &self.branches {
            let rw: [Option<CVector>; 2] = [b[0].as_ref().map(|w| rho_cav * w), b[1].as_ref().map(|w| rho_cav * w)];
            for i in 0..2 {
                for j in 0..2 {
                    if let (Some(wi), Some(rwj)) = (&b[i], &rw[j]) {
                        q[(i, j)] += wi.dotc(rwj);
                    }
                }
            }
        }
        q
    }
}

/// Ideal decoding unitary on cavity ⊗ transmon, identity on the reservoir.
///
/// Maps `|u₀,g⟩ → |0,g⟩`, `|v₀,g⟩ → |0,e⟩` and `|u₁,g⟩ → |1,g⟩`, with
/// `u₀ = (|1⟩+|5⟩)/√2`, `v₀ = |3⟩`, `u₁ = (|1⟩−|5⟩)/√2`. Both the domain and the
/// image are completed by Gram–Schmidt over the computational basis in index
/// order, and the completions are paired in that order.
pub fn decode_map(dims: ModeDims) -> Result<QuantumOperator> {
    if dims.n_cav < 6 || dims.n_tmon < 2 {
        return Err(Error::InvalidDimension(format!("decode map needs n_cav >= 6 and n_tmon >= 2, got {dims:?}")));
    }
    let (nc, nt) = (dims.n_cav, dims.n_tmon);
    let dct = nc * nt;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let ket = |amps: &[(usize, usize, f64)]| {
        let mut v = CVector::zeros(dct);
        for &(n, q, a) in amps {
            v[n * nt + q] = C64::new(a, 0.0);
        }
        v
    };
    let domain = [ket(&[(1, 0, s), (5, 0, s)]), ket(&[(3, 0, 1.0)]), ket(&[(1, 0, s), (5, 0, -s)])];
    let image = [ket(&[(0, 0, 1.0)]), ket(&[(0, 1, 1.0)]), ket(&[(1, 0, 1.0)])];
    let all: Vec<usize> = (0..dct).collect();
    let mut dom: Vec<CVector> = domain.to_vec();
    dom.extend(orthonormal_complement(&domain, &all, dct));
    let mut img: Vec<CVector> = image.to_vec();
    img.extend(orthonormal_complement(&image, &all, dct));
    let mut u = CMatrix::zeros(dct, dct);
    for (t, f) in img.iter().zip(&dom) {
        u += t * f.adjoint();
    }
    QuantumOperator::new(dims, kron(&u, &CMatrix::identity(dims.n_res, dims.n_res)))
}

/// Rotating-frame detuning that best equalizes the energies within each
/// codeword's Fock support, from the diagonal of `H` on `|n,g,0⟩`.
pub fn kerr_frame_detuning(model: &LindbladModel, code: &LogicalCode) -> Result<f64> {
    let dims = model.dims;
    let (mut num, mut den) = (0.0, 0.0);
    for w in [&code.zero_l, &code.one_l] {
        let sup = support_of(w.amplitudes());
        for (a, &i) in sup.iter().enumerate() {
            for &j in &sup[a + 1..] {
                let (ii, jj) = (dims.index([i, 0, 0])?, dims.index([j, 0, 0])?);
                let de = model.hamiltonian.matrix()[(ii, ii)].re - model.hamiltonian.matrix()[(jj, jj)].re;
                let dg = model.frame_charge.matrix()[(ii, ii)].re - model.frame_charge.matrix()[(jj, jj)].re;
                num += de * dg;
                den += dg * dg;
            }
        }
    }
    Ok(if den > 0.0 { -num / den } else { 0.0 })
}

fn codeword_energy(model: &LindbladModel, w: &StateVector) -> Result<f64> {
    let dims = model.dims;
    let mut e = 0.0;
    for (n, a) in w.amplitudes().iter().enumerate() {
        let i = dims.index([n, 0, 0])?;
        e += a.norm_sqr() * model.hamiltonian.matrix()[(i, i)].re;
    }
    Ok(e)
}

/// Cardinal-state fidelities versus time.
#[derive(Clone, Debug, Serialize)]
pub struct LogicalDecay {
    pub code: String,
    pub times: Vec<f64>,
    /// One series per cardinal state, in `CARDINAL_LABELS` order.
    pub fidelities: Vec<Vec<f64>>,
    pub frame_detuning: f64,
    pub logical_frequency: f64,
}

impl LogicalDecay {
    pub fn average(&self) -> Vec<f64> {
        (0..self.times.len()).map(|k| self.fidelities.iter().map(|f| f[k]).sum::<f64>() / 6.0).collect()
    }

    pub fn process(&self) -> Vec<f64> {
        self.average().into_iter().map(|f| 0.25 + 1.5 * (f - 0.5)).collect()
    }

    pub fn pole(&self) -> Vec<f64> {
        (0..self.times.len()).map(|k| 0.5 * (self.fidelities[0][k] + self.fidelities[1][k])).collect()
    }

    pub fn equator(&self) -> Vec<f64> {
        (0..self.times.len()).map(|k| self.fidelities[2..].iter().map(|f| f[k]).sum::<f64>() / 4.0).collect()
    }

    pub fn table(&self) -> SeriesTable {
        let mut cols = vec!["time_us".to_string()];
        cols.extend(CARDINAL_LABELS.iter().map(|l| format!("F{l}")));
        cols.extend(["F_avg", "F_process"].map(String::from));
        let mut t = SeriesTable::new(cols);
        let (avg, proc) = (self.average(), self.process());
        for k in 0..self.times.len() {
            let mut row = vec![self.times[k]];
            row.extend(self.fidelities.iter().map(|f| f[k]));
            row.push(avg[k]);
            row.push(proc[k]);
            t.push(row).expect("row width matches columns");
        }
        t
    }
}

/// Evolves the six cardinal states and reads them out logically.
///
/// The model is moved to the frame from [`kerr_frame_detuning`], the logical
/// reference rotates at the residual codeword splitting, and states of the
/// full model start in `|g,0⟩` and are reduced to the cavity before readout.
pub fn logical_decay(
    model: &LindbladModel,
    code: &LogicalCode,
    grid: &TimeGrid,
    opts: SolverOptions,
) -> Result<LogicalDecay> {
    let dims = model.dims;
    if dims.n_cav != code.dim() {
        return Err(Error::DimensionMismatch { expected: dims.n_cav, actual: code.dim() });
    }
    let delta = kerr_frame_detuning(model, code)?;
    let framed = model.in_rotating_frame(delta);
    let omega_l = codeword_energy(&framed, &code.one_l)? - codeword_energy(&framed, &code.zero_l)?;
    let me = MasterEquation::new(&framed, opts)?;
    let decoder = LogicalDecoder::new(code)?;
    let coeffs = cardinal_coefficients();
    let fidelities: Vec<Vec<f64>> = coeffs
        .par_iter()
        .map(|&(c0, c1)| -> Result<Vec<f64>> {
            let psi = code.logical_state(c0, c1)?.embed_cavity(dims, 0, 0)?;
            let traj = me.evolve(&DensityMatrix::pure(&psi), grid)?;
            traj.times
                .iter()
                .zip(&traj.states)
                .map(|(&t, rho)| {
                    let q = decoder.readout(cavity_state(rho)?.matrix());
                    let r = nalgebra::Vector2::new(c0, c1 * C64::from_polar(1.0, -omega_l * t));
                    Ok(r.dotc(&(q * r)).re)
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(LogicalDecay {
        code: code.name.clone(),
        times: grid.times(),
        fidelities,
        frame_detuning: delta,
        logical_frequency: omega_l,
    })
}

/// `offset + amplitude·e^{−t/tau}`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ExpFit {
    pub offset: f64,
    pub offset_fixed: bool,
    pub amplitude: f64,
    pub tau: f64,
    pub tau_err: f64,
    pub rms_residual: f64,
}

impl ExpFit {
    pub fn eval(&self, t: f64) -> f64 {
        self.offset + self.amplitude * (-t / self.tau).exp()
    }
}

/// Least squares for the linear coefficients at fixed `tau`; returns them and the SSE.
fn linear_part(ts: &[f64], ys: &[f64], tau: f64, fixed: Option<f64>) -> (f64, f64, f64) {
    let e: Vec<f64> = ts.iter().map(|t| (-t / tau).exp()).collect();
    let (off, amp) = match fixed {
        Some(c) => {
            let num: f64 = e.iter().zip(ys).map(|(e, y)| e * (y - c)).sum();
            let den: f64 = e.iter().map(|e| e * e).sum();
            (c, if den > 0.0 { num / den } else { 0.0 })
        }
        None => {
            let m = ts.len() as f64;
            let (se, see): (f64, f64) = (e.iter().sum(), e.iter().map(|e| e * e).sum());
            let (sy, sey): (f64, f64) = (ys.iter().sum(), e.iter().zip(ys).map(|(e, y)| e * y).sum());
            let det = m * see - se * se;
            if det.abs() < 1e-14 * m * see.max(1e-300) {
                (sy / m, 0.0)
            } else {
                ((see * sy - se * sey) / det, (m * sey - se * sy) / det)
            }
        }
    };
    let sse = e.iter().zip(ys).map(|(e, y)| (y - off - amp * e).powi(2)).sum();
    (off, amp, sse)
}

/// Single-exponential fit by variable projection over `log tau`.
pub fn fit_exponential(ts: &[f64], ys: &[f64], fixed_offset: Option<f64>) -> Result<ExpFit> {
    let n_par = if fixed_offset.is_some() { 2 } else { 3 };
    if ts.len() != ys.len() || ts.len() <= n_par {
        return Err(Error::InvalidParameter(format!("need more than {n_par} matched samples for an exponential fit")));
    }
    let span = ts.last().unwrap() - ts[0];
    if !(span > 0.0) || ys.iter().any(|y| !y.is_finite()) {
        return Err(Error::InvalidParameter("fit data must be finite on an increasing time span".into()));
    }
    let sse = |lt: f64| linear_part(ts, ys, lt.exp(), fixed_offset).2;
    let (lo, hi) = ((span / 1e3).ln(), (span * 1e3).ln());
    let n = 241;
    let grid: Vec<f64> = (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&g| sse(g)).collect();
    let kbest = (0..n).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    let (mut a, mut b) = (grid[kbest.saturating_sub(1)], grid[(kbest + 1).min(n - 1)]);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut x1, mut x2) = (b - g * (b - a), a + g * (b - a));
    let (mut f1, mut f2) = (sse(x1), sse(x2));
    for _ in 0..200 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = sse(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = sse(x2);
        }
        if (b - a).abs() < 1e-12 {
            break;
        }
    }
    let tau = (0.5 * (a + b)).exp();
    let (off, amp, s) = linear_part(ts, ys, tau, fixed_offset);
    let m = ts.len();
    let rms = (s / m as f64).sqrt();
    if kbest == 0 || kbest == n - 1 {
        return Err(Error::FitFailure {
            residual: rms,
            reason: format!("decay time pinned at the search edge ({tau:.3e} for span {span:.3e})"),
        });
    }
    if amp.abs() < 1e-12 {
        return Err(Error::FitFailure { residual: rms, reason: "no decaying component".into() });
    }
    // Covariance s²(JᵀJ)⁻¹ with columns ∂/∂(amp, tau[, offset]).
    let mut jac = DMatrix::<f64>::zeros(m, n_par);
    for (k, &t) in ts.iter().enumerate() {
        let e = (-t / tau).exp();
        jac[(k, 0)] = e;
        jac[(k, 1)] = amp * t / (tau * tau) * e;
        if n_par == 3 {
            jac[(k, 2)] = 1.0;
        }
    }
    let s2 = s / (m - n_par) as f64;
    let tau_err = (jac.transpose() * &jac).try_inverse().map(|c| (s2 * c[(1, 1)]).max(0.0).sqrt()).unwrap_or(f64::NAN);
    Ok(ExpFit { offset: off, offset_fixed: fixed_offset.is_some(), amplitude: amp, tau, tau_err, rms_residual: rms })
}

#[derive(Clone, Debug, Serialize)]
pub struct LifetimeFit {
    #[serde(rename = "T_p")]
    pub t_p: f64,
    #[serde(rename = "T_p_err")]
    pub t_p_err: f64,
    #[serde(rename = "T_eq")]
    pub t_eq: f64,
    #[serde(rename = "T_eq_err")]
    pub t_eq_err: f64,
    pub tau_process: f64,
    pub pole: ExpFit,
    pub equator: ExpFit,
}

/// Fits pole and equator decays inside `window` (all samples when `None`).
///
/// Poles use a free offset; equators decay towards 1/2.
pub fn fit_lifetime(decay: &LogicalDecay, window: Option<(f64, f64)>) -> Result<LifetimeFit> {
    let (lo, hi) = window.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    let keep: Vec<usize> = (0..decay.times.len()).filter(|&k| decay.times[k] >= lo && decay.times[k] <= hi).collect();
    let ts: Vec<f64> = keep.iter().map(|&k| decay.times[k]).collect();
    let (pole, eq) = (decay.pole(), decay.equator());
    let pole: Vec<f64> = keep.iter().map(|&k| pole[k]).collect();
    let eq: Vec<f64> = keep.iter().map(|&k| eq[k]).collect();
    let pf = fit_exponential(&ts, &pole, None)?;
    let ef = fit_exponential(&ts, &eq, Some(0.5))?;
    Ok(LifetimeFit {
        t_p: pf.tau,
        t_p_err: pf.tau_err,
        t_eq: ef.tau,
        t_eq_err: ef.tau_err,
        tau_process: tau_process(ef.tau, pf.tau),
        pole: pf,
        equator: ef,
    })
}

pub fn logical_lifetime(
    model: &LindbladModel,
    code: &LogicalCode,
    grid: &TimeGrid,
    window: Option<(f64, f64)>,
    opts: SolverOptions,
) -> Result<(LogicalDecay, LifetimeFit)> {
    let decay = logical_decay(model, code, grid, opts)?;
    let fit = fit_lifetime(&decay, window)?;
    Ok((decay, fit))
}

/// First time the series falls below `level`, linearly interpolated.
pub fn first_fall_below(times: &[f64], values: &[f64], level: f64) -> Option<f64> {
    for k in 1..values.len().min(times.len()) {
        if values[k - 1] >= level && values[k] < level {
            let f = (values[k - 1] - level) / (values[k - 1] - values[k]);
            return Some(times[k - 1] + f * (times[k] - times[k - 1]));
        }
    }
    None
}

/// Time at which the process fidelity first drops below `1/e`.
pub fn one_over_e_time(decay: &LogicalDecay) -> Option<f64> {
    first_fall_below(&decay.times, &decay.process(), (-1.0f64).exp())
}
