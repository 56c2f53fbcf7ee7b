//! Hamiltonians and dissipators for the three-mode conversion model and the
//! single-mode effective model.
//!
//! Frequencies in [`SystemParams`] and [`DriveConfig`] are cyclic (MHz or kHz);
//! builders multiply by 2π once. Rates are plain inverse microseconds.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{annihilation, diagonal, embed, transition, Mode, ModeDims, QuantumOperator, C64};

pub const TWO_PI: f64 = 2.0 * PI;

/// Device parameters. Frequencies are cyclic (MHz unless noted), times in µs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    pub omega_q: f64,
    pub omega_a: f64,
    pub omega_r: f64,
    pub alpha_q: f64,
    pub chi_ge: f64,
    pub chi_ef: f64,
    pub chi_gf: f64,
    pub chi_qr: f64,
    #[serde(default)]
    pub chi_ar: f64,
    /// Cavity self-Kerr, kHz.
    pub kerr: f64,
    /// Sixth-order cavity–transmon shift, kHz.
    pub chi_q_prime: f64,
    pub kappa_r: f64,
    pub t1a: f64,
    pub t2a: f64,
    pub t1ge: f64,
    pub t1ef: f64,
    pub t2r: f64,
    pub t2e: f64,
    pub t2gf: f64,
    pub p_e_thermal: f64,
    pub p1_thermal: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        SystemParams {
            omega_q: 3482.9,
            omega_a: 4657.9,
            omega_r: 8725.0,
            alpha_q: 134.28,
            chi_ge: 1.12,
            chi_ef: 0.95,
            chi_gf: 2.07,
            chi_qr: 1.13,
            chi_ar: 0.0,
            kerr: 3.3,
            chi_q_prime: 1.9,
            kappa_r: 0.58,
            t1a: 136.0,
            t2a: 235.0,
            t1ge: 50.0,
            t1ef: 31.0,
            t2r: 53.0,
            t2e: 70.0,
            t2gf: 30.0,
            p_e_thermal: 0.017,
            p1_thermal: 0.006,
        }
    }
}

fn rate(t: f64) -> f64 {
    if t.is_infinite() {
        0.0
    } else {
        1.0 / t
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("omega_q", self.omega_q),
            ("omega_a", self.omega_a),
            ("omega_r", self.omega_r),
            ("alpha_q", self.alpha_q),
            ("t1a", self.t1a),
            ("t2a", self.t2a),
            ("t1ge", self.t1ge),
            ("t1ef", self.t1ef),
            ("t2r", self.t2r),
            ("t2e", self.t2e),
            ("t2gf", self.t2gf),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be > 0, got {v}")));
            }
        }
        let finite = [
            ("chi_ge", self.chi_ge),
            ("chi_ef", self.chi_ef),
            ("chi_gf", self.chi_gf),
            ("chi_qr", self.chi_qr),
            ("chi_ar", self.chi_ar),
            ("kerr", self.kerr),
            ("chi_q_prime", self.chi_q_prime),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite, got {v}")));
            }
        }
        if !(self.kappa_r >= 0.0) || !self.kappa_r.is_finite() {
            return Err(Error::InvalidParameter(format!("kappa_r must be >= 0, got {}", self.kappa_r)));
        }
        if (self.chi_gf - self.chi_ge - self.chi_ef).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "chi_gf = {} differs from chi_ge + chi_ef = {}",
                self.chi_gf,
                self.chi_ge + self.chi_ef
            )));
        }
        for (name, p) in [("p_e_thermal", self.p_e_thermal), ("p1_thermal", self.p1_thermal)] {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!("{name} must lie in [0, 1), got {p}")));
            }
        }
        if self.dephasing_rate() < -1e-15 {
            return Err(Error::InvalidParameter(format!(
                "t2r = {} exceeds 2 t1ge = {}; pure dephasing would be negative",
                self.t2r,
                2.0 * self.t1ge
            )));
        }
        Ok(())
    }

    /// Transmon pure dephasing `1/T2R − 1/(2 T1ge)`, 1/µs.
    pub fn dephasing_rate(&self) -> f64 {
        rate(self.t2r) - 0.5 * rate(self.t1ge)
    }

    /// `1 / Γ_φ`, µs.
    pub fn t_phi(&self) -> f64 {
        1.0 / self.dephasing_rate()
    }

    /// g–f pure dephasing `1/T2gf − 1/(2 T1ef)`, 1/µs.
    pub fn gf_dephasing_rate(&self) -> f64 {
        rate(self.t2gf) - 0.5 * rate(self.t1ef)
    }

    /// Cavity pure dephasing `1/T2a − 1/(2 T1a)`, 1/µs.
    pub fn cavity_dephasing_rate(&self) -> f64 {
        rate(self.t2a) - 0.5 * rate(self.t1a)
    }

    pub fn kappa_a(&self) -> f64 {
        rate(self.t1a)
    }

    /// Equilibrium excitation rate implied by `p_e_thermal`, 1/µs.
    pub fn thermal_gamma_up(&self) -> f64 {
        self.p_e_thermal / (1.0 - self.p_e_thermal) * rate(self.t1ge)
    }
}

/// PReSPA comb settings. Rabi rates and detuning in kHz (cyclic).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveConfig {
    pub omega1: f64,
    pub omega2: f64,
    #[serde(default = "default_targets")]
    pub photon_targets: Vec<usize>,
    #[serde(default)]
    pub detuning: f64,
}

fn default_targets() -> Vec<usize> {
    vec![1, 3, 5]
}

impl Default for DriveConfig {
    fn default() -> Self {
        DriveConfig { omega1: 55.0, omega2: 160.0, photon_targets: default_targets(), detuning: 0.0 }
    }
}

impl DriveConfig {
    pub fn validate(&self, dims: ModeDims) -> Result<()> {
        if !(self.omega1 >= 0.0) || !(self.omega2 >= 0.0) {
            return Err(Error::InvalidParameter("Rabi rates must be >= 0".into()));
        }
        if !self.detuning.is_finite() {
            return Err(Error::InvalidParameter("detuning must be finite".into()));
        }
        if self.photon_targets.is_empty() {
            return Err(Error::InvalidParameter("photon_targets is empty".into()));
        }
        for &n in &self.photon_targets {
            if n % 2 == 0 {
                return Err(Error::InvalidParameter(format!("photon target {n} is not odd")));
            }
            if n >= dims.n_cav {
                return Err(Error::OutOfRange(format!("photon target {n} exceeds cavity truncation {}", dims.n_cav)));
            }
        }
        Ok(())
    }
}

/// Optional terms for the three-mode model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelOptions {
    pub kerr: bool,
    pub chi_q_prime: bool,
    pub transmon_dephasing: bool,
    pub gf_dephasing: bool,
    /// Thermal `|g⟩→|e⟩` rate in 1/µs; `None` disables it.
    pub gamma_up: Option<f64>,
}

impl Default for ModelOptions {
    fn default() -> Self {
        ModelOptions { kerr: true, chi_q_prime: false, transmon_dephasing: true, gf_dephasing: false, gamma_up: None }
    }
}

/// Optional terms for the effective cavity model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EffectiveOptions {
    pub kerr: bool,
    pub cavity_dephasing: bool,
}

impl Default for EffectiveOptions {
    fn default() -> Self {
        EffectiveOptions { kerr: true, cavity_dephasing: true }
    }
}

#[derive(Clone, Debug)]
pub struct CollapseOp {
    pub label: String,
    pub op: QuantumOperator,
}

#[derive(Clone, Debug)]
pub struct LindbladModel {
    pub hamiltonian: QuantumOperator,
    pub collapse_ops: Vec<CollapseOp>,
    pub dims: ModeDims,
    /// Conserved charge of the drive terms; adding a multiple of it to the
    /// Hamiltonian moves to a rotating frame without changing populations.
    pub frame_charge: QuantumOperator,
}

impl LindbladModel {
    pub fn new(
        hamiltonian: QuantumOperator,
        collapse_ops: Vec<CollapseOp>,
        frame_charge: QuantumOperator,
    ) -> Result<Self> {
        let dims = hamiltonian.dims();
        let defect = hamiltonian.hermiticity_defect();
        if defect > 1e-9 {
            return Err(Error::InvalidParameter(format!("Hamiltonian not Hermitian ({defect:.2e})")));
        }
        for c in &collapse_ops {
            if c.op.dims() != dims {
                return Err(Error::DimensionMismatch { expected: dims.total(), actual: c.op.dim() });
            }
        }
        Ok(LindbladModel { hamiltonian, collapse_ops, dims, frame_charge })
    }

    /// Same dissipators, Hamiltonian shifted by `delta · charge`.
    pub fn in_rotating_frame(&self, delta: f64) -> LindbladModel {
        LindbladModel {
            hamiltonian: &self.hamiltonian + &self.frame_charge.scale_re(delta),
            collapse_ops: self.collapse_ops.clone(),
            dims: self.dims,
            frame_charge: self.frame_charge.clone(),
        }
    }

    pub fn collapse(&self, label: &str) -> Option<&QuantumOperator> {
        self.collapse_ops.iter().find(|c| c.label == label).map(|c| &c.op)
    }
}

fn op_in(dims: ModeDims, mode: Mode, single: Result<QuantumOperator>) -> Result<QuantumOperator> {
    embed(&single?, mode, dims)
}

fn require_three_level(dims: ModeDims) -> Result<()> {
    dims.validate()?;
    if dims.n_tmon < 3 || dims.n_res < 2 || dims.is_single() {
        return Err(Error::InvalidDimension(format!(
            "three-mode model needs n_tmon >= 3 and n_res >= 2, got {dims:?}"
        )));
    }
    Ok(())
}

fn cavity_kerr_operator(dims: ModeDims) -> Result<QuantumOperator> {
    // a†²a² = n(n−1)
    let vals: Vec<f64> = (0..dims.n_cav).map(|n| (n * n.saturating_sub(1)) as f64).collect();
    op_in(dims, Mode::Cavity, diagonal(&vals))
}

/// Dispersive Hamiltonian in the linear rotating frame, rad/µs.
pub fn build_static_hamiltonian(params: &SystemParams, dims: ModeDims) -> Result<QuantumOperator> {
    params.validate()?;
    require_three_level(dims)?;
    let nt = dims.n_tmon;
    let n_a = op_in(dims, Mode::Cavity, crate::hilbert::number(dims.n_cav))?;
    let n_r = op_in(dims, Mode::Reservoir, crate::hilbert::number(dims.n_res))?;
    let pe = op_in(dims, Mode::Transmon, transition(1, 1, nt))?;
    let pf = op_in(dims, Mode::Transmon, transition(2, 2, nt))?;
    let anh: Vec<f64> = (0..nt).map(|k| (k * k.saturating_sub(1)) as f64).collect();
    let qq = op_in(dims, Mode::Transmon, diagonal(&anh))?;

    let mut h = qq.scale_re(-params.alpha_q / 2.0);
    h = &h - &(&pe * &n_a).scale_re(params.chi_ge);
    h = &h - &(&pf * &n_a).scale_re(params.chi_gf);
    h = &h - &cavity_kerr_operator(dims)?.scale_re(params.kerr * 1e-3 / 2.0);
    h = &h - &(&pe * &n_r).scale_re(params.chi_qr);
    Ok(h.scale_re(TWO_PI))
}

/// Two-stage PReSPA drive in the frame of the dispersive Hamiltonian, rad/µs.
pub fn build_drive_hamiltonian(cfg: &DriveConfig, dims: ModeDims) -> Result<QuantumOperator> {
    require_three_level(dims)?;
    cfg.validate(dims)?;
    let one = C64::new(1.0, 0.0);
    let mut m = crate::hilbert::CMatrix::zeros(dims.total(), dims.total());
    let w1 = TWO_PI * cfg.omega1 * 1e-3;
    let w2 = TWO_PI * cfg.omega2 * 1e-3;
    let det = TWO_PI * cfg.detuning * 1e-3;
    for &n in &cfg.photon_targets {
        let err = dims.index([n - 1, 0, 0])?;
        let mid = dims.index([n, 2, 0])?;
        let out = dims.index([n, 0, 1])?;
        m[(mid, err)] += one * w1;
        m[(err, mid)] += one * w1;
        m[(out, mid)] += one * w2;
        m[(mid, out)] += one * w2;
        m[(mid, mid)] += one * det;
    }
    QuantumOperator::new(dims, m)
}

/// Dissipators of the three-mode model with the default channel set.
pub fn build_collapse_ops(params: &SystemParams, dims: ModeDims) -> Result<Vec<CollapseOp>> {
    build_collapse_ops_with(params, dims, &ModelOptions::default())
}

pub fn build_collapse_ops_with(params: &SystemParams, dims: ModeDims, opts: &ModelOptions) -> Result<Vec<CollapseOp>> {
    params.validate()?;
    require_three_level(dims)?;
    let nt = dims.n_tmon;
    let mut ops = Vec::new();
    let mut push = |label: &str, r: f64, op: QuantumOperator| {
        if r > 0.0 {
            ops.push(CollapseOp { label: label.to_string(), op: op.scale_re(r.sqrt()) });
        }
    };
    push("cavity_loss", rate(params.t1a), op_in(dims, Mode::Cavity, annihilation(dims.n_cav))?);
    push("transmon_eg", rate(params.t1ge), op_in(dims, Mode::Transmon, transition(0, 1, nt))?);
    push("transmon_fe", rate(params.t1ef), op_in(dims, Mode::Transmon, transition(1, 2, nt))?);
    push("reservoir_decay", TWO_PI * params.kappa_r, op_in(dims, Mode::Reservoir, annihilation(dims.n_res))?);
    if opts.transmon_dephasing {
        let levels: Vec<f64> = (0..nt).map(|k| k as f64).collect();
        push("transmon_dephasing", 2.0 * params.dephasing_rate(), op_in(dims, Mode::Transmon, diagonal(&levels))?);
    }
    if opts.gf_dephasing {
        let g = params.gf_dephasing_rate();
        if g < 0.0 {
            return Err(Error::InvalidParameter(format!("g-f pure dephasing rate {g:.3e} is negative")));
        }
        push("transmon_gf_dephasing", 2.0 * g, op_in(dims, Mode::Transmon, transition(2, 2, nt))?);
    }
    if let Some(up) = opts.gamma_up {
        if !(up >= 0.0) {
            return Err(Error::InvalidParameter(format!("gamma_up must be >= 0, got {up}")));
        }
        push("transmon_heating", up, op_in(dims, Mode::Transmon, transition(1, 0, nt))?);
    }
    Ok(ops)
}

/// Charge `n_a − q̂/2 − n_r`, conserved by every PReSPA drive term.
fn conversion_charge(dims: ModeDims) -> Result<QuantumOperator> {
    let n_a = op_in(dims, Mode::Cavity, crate::hilbert::number(dims.n_cav))?;
    let n_r = op_in(dims, Mode::Reservoir, crate::hilbert::number(dims.n_res))?;
    let half: Vec<f64> = (0..dims.n_tmon).map(|k| k as f64 / 2.0).collect();
    let q = op_in(dims, Mode::Transmon, diagonal(&half))?;
    Ok(&(&n_a - &q) - &n_r)
}

/// Full three-mode PReSPA model: drive plus residual terms and dissipators.
pub fn build_conversion_model(
    params: &SystemParams,
    cfg: &DriveConfig,
    dims: ModeDims,
    opts: &ModelOptions,
) -> Result<LindbladModel> {
    let mut h = build_drive_hamiltonian(cfg, dims)?;
    if opts.kerr {
        h = &h - &cavity_kerr_operator(dims)?.scale_re(TWO_PI * params.kerr * 1e-3 / 2.0);
    }
    if opts.chi_q_prime {
        let levels: Vec<f64> = (0..dims.n_tmon).map(|k| k as f64).collect();
        let qn = op_in(dims, Mode::Transmon, diagonal(&levels))?;
        h = &h + &(&qn * &cavity_kerr_operator(dims)?).scale_re(TWO_PI * params.chi_q_prime * 1e-3 / 2.0);
    }
    let ops = build_collapse_ops_with(params, dims, opts)?;
    LindbladModel::new(h, ops, conversion_charge(dims)?)
}

/// `Π_cor = √κ_cor Σ_n |2n+1⟩⟨2n|` on a single mode.
pub fn correction_operator(kappa_cor: f64, n_cav: usize) -> Result<QuantumOperator> {
    let mut m = crate::hilbert::CMatrix::zeros(n_cav, n_cav);
    let s = C64::new(kappa_cor.sqrt(), 0.0);
    let mut n = 0;
    while n + 1 < n_cav {
        m[(n + 1, n)] = s;
        n += 2;
    }
    QuantumOperator::single(m)
}

/// Single-mode model with engineered parity recovery `D[Π_cor]`.
pub fn build_effective_model(kappa_cor: f64, params: &SystemParams, dims: ModeDims) -> Result<LindbladModel> {
    build_effective_model_with(kappa_cor, params, dims, &EffectiveOptions::default())
}

pub fn build_effective_model_with(
    kappa_cor: f64,
    params: &SystemParams,
    dims: ModeDims,
    opts: &EffectiveOptions,
) -> Result<LindbladModel> {
    params.validate()?;
    if !dims.is_single() {
        return Err(Error::InvalidDimension(format!("effective model needs n_tmon = n_res = 1, got {dims:?}")));
    }
    if !(kappa_cor >= 0.0) || !kappa_cor.is_finite() {
        return Err(Error::InvalidParameter(format!("kappa_cor must be >= 0, got {kappa_cor}")));
    }
    let n = dims.n_cav;
    let mut h = QuantumOperator::zeros(dims);
    if opts.kerr {
        h = cavity_kerr_operator(dims)?.scale_re(-TWO_PI * params.kerr * 1e-3 / 2.0);
    }
    let mut ops = Vec::new();
    let ka = params.kappa_a();
    if ka > 0.0 {
        ops.push(CollapseOp { label: "cavity_loss".into(), op: annihilation(n)?.scale_re(ka.sqrt()) });
    }
    if kappa_cor > 0.0 {
        ops.push(CollapseOp { label: "correction".into(), op: correction_operator(kappa_cor, n)? });
    }
    if opts.cavity_dephasing {
        let g = params.cavity_dephasing_rate();
        if g < -1e-15 {
            return Err(Error::InvalidParameter(format!("cavity pure dephasing rate {g:.3e} is negative")));
        }
        if g > 0.0 {
            ops.push(CollapseOp {
                label: "cavity_dephasing".into(),
                op: crate::hilbert::number(n)?.scale_re((2.0 * g).sqrt()),
            });
        }
    }
    LindbladModel::new(h, ops, crate::hilbert::number(n)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{fock_state, max_abs};
    use approx::assert_abs_diff_eq;

    fn dims() -> ModeDims {
        ModeDims::default()
    }

    fn diag(h: &QuantumOperator, occ: [usize; 3]) -> f64 {
        let i = dims().index(occ).unwrap();
        h.matrix()[(i, i)].re
    }

    #[test]
    fn static_hamiltonian_matrix_elements() {
        let p = SystemParams::default();
        let h = build_static_hamiltonian(&p, dims()).unwrap();
        assert!(h.is_hermitian(1e-12));
        let expect = -TWO_PI * 3.0 * 1.12 - TWO_PI * (3.3e-3 / 2.0) * 6.0;
        assert_abs_diff_eq!(diag(&h, [3, 1, 0]), expect, epsilon = 1e-12);
        for n in 0..10usize {
            let k = -TWO_PI * (3.3e-3 / 2.0) * (n * n.saturating_sub(1)) as f64;
            assert_abs_diff_eq!(diag(&h, [n, 0, 0]), k, epsilon = 1e-12);
        }
        // |1,f,0⟩: dispersive −χ_gf plus the −α anharmonic offset of the f level.
        assert_abs_diff_eq!(diag(&h, [1, 2, 0]), -TWO_PI * 2.07 - TWO_PI * 134.28, epsilon = 1e-9);
        assert_abs_diff_eq!(diag(&h, [0, 1, 1]), -TWO_PI * 1.13, epsilon = 1e-12);
    }

    #[test]
    fn drive_hamiltonian_elements() {
        let cfg = DriveConfig { omega1: 55.0, omega2: 160.0, ..Default::default() };
        let h = build_drive_hamiltonian(&cfg, dims()).unwrap();
        let d = dims();
        let el = |a: [usize; 3], b: [usize; 3]| h.matrix()[(d.index(a).unwrap(), d.index(b).unwrap())];
        assert_abs_diff_eq!(el([1, 2, 0], [0, 0, 0]).re, TWO_PI * 0.055, epsilon = 1e-14);
        assert_abs_diff_eq!(el([3, 0, 1], [3, 2, 0]).re, TWO_PI * 0.160, epsilon = 1e-14);
        assert_eq!(el([2, 2, 0], [1, 0, 0]).norm(), 0.0);
        assert!(h.is_hermitian(0.0));
        let zero = build_drive_hamiltonian(&DriveConfig { omega1: 0.0, omega2: 0.0, ..Default::default() }, d).unwrap();
        assert_eq!(max_abs(zero.matrix()), 0.0);
        let bad = DriveConfig { photon_targets: vec![11], ..Default::default() };
        assert!(build_drive_hamiltonian(&bad, d).is_err());
    }

    #[test]
    fn drive_annihilates_code_states() {
        let h = build_drive_hamiltonian(&DriveConfig::default(), dims()).unwrap();
        for n in [1, 3, 5] {
            let v = h.apply(&fock_state([n, 0, 0], dims()).unwrap()).unwrap();
            assert_eq!(v.norm(), 0.0);
        }
    }

    #[test]
    fn collapse_rates() {
        let p = SystemParams::default();
        let ops = build_collapse_ops(&p, dims()).unwrap();
        let a = &ops.iter().find(|c| c.label == "cavity_loss").unwrap().op;
        let i1 = dims().index([1, 0, 0]).unwrap();
        let i0 = dims().index([0, 0, 0]).unwrap();
        assert_abs_diff_eq!(a.matrix()[(i0, i1)].re.powi(2), 7.35e-3, epsilon = 1e-5);
        assert_abs_diff_eq!(p.dephasing_rate(), 1.0 / 53.0 - 1.0 / 100.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.dephasing_rate(), 8.87e-3, epsilon = 1e-5);
        assert_eq!(ops.len(), 5);
    }

    #[test]
    fn infinite_coherence_gives_no_dissipators() {
        let p = SystemParams {
            t1a: f64::INFINITY,
            t2a: f64::INFINITY,
            t1ge: f64::INFINITY,
            t1ef: f64::INFINITY,
            t2r: f64::INFINITY,
            t2e: f64::INFINITY,
            t2gf: f64::INFINITY,
            kappa_r: 0.0,
            ..Default::default()
        };
        assert!(build_collapse_ops(&p, dims()).unwrap().is_empty());
    }

    #[test]
    fn charge_commutes_with_drive() {
        let m =
            build_conversion_model(&SystemParams::default(), &DriveConfig::default(), dims(), &ModelOptions::default())
                .unwrap();
        assert!(max_abs(m.hamiltonian.commutator(&m.frame_charge).matrix()) < 1e-12);
    }

    #[test]
    fn correction_operator_definition() {
        let p = correction_operator(0.25, 8).unwrap();
        assert_abs_diff_eq!(p.matrix()[(3, 2)].re, 0.5, epsilon = 1e-15);
        assert_eq!(p.matrix().column(3).norm(), 0.0);
        let pp = &p.dagger() * &p;
        for n in 0..8 {
            let expect = if n % 2 == 0 && n + 1 < 8 { 0.25 } else { 0.0 };
            assert_abs_diff_eq!(pp.matrix()[(n, n)].re, expect, epsilon = 1e-15);
        }
    }

    #[test]
    fn effective_model_shape() {
        let p = SystemParams::default();
        let m = build_effective_model(0.25, &p, ModeDims::single(10).unwrap()).unwrap();
        assert_eq!(m.collapse_ops.len(), 3);
        assert!(build_effective_model(0.25, &p, dims()).is_err());
        assert_abs_diff_eq!(m.hamiltonian.matrix()[(5, 5)].re, -TWO_PI * 3.3e-3 / 2.0 * 20.0, epsilon = 1e-14);
    }

    #[test]
    fn params_validation() {
        assert!(SystemParams::default().validate().is_ok());
        assert!(SystemParams { chi_gf: 2.5, ..Default::default() }.validate().is_err());
        assert!(SystemParams { t2r: 120.0, ..Default::default() }.validate().is_err());
        assert!(SystemParams { t1a: 0.0, ..Default::default() }.validate().is_err());
    }
}
