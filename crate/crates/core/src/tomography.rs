//! Reduced states, Wigner functions and coherence ratios.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{annihilation, eigh, CMatrix, DensityMatrix, Mode, ModeDims, C64};
use crate::io::{format_float, write_comment_header};

/// Reduced density matrix of one mode.
pub fn partial_trace(rho: &DensityMatrix, keep: Mode) -> Result<DensityMatrix> {
    let dims = rho.dims();
    let d = dims.get(keep);
    if dims.is_single() && keep == Mode::Cavity {
        return Ok(rho.clone());
    }
    let out_dims = ModeDims::single(d)?;
    let m = rho.matrix();
    let mut out = CMatrix::zeros(d, d);
    let total = dims.total();
    for i in 0..total {
        let oi = dims.occupations(i);
        for j in 0..total {
            let oj = dims.occupations(j);
            let k = keep.index();
            let same_rest = (0..3).all(|x| x == k || oi[x] == oj[x]);
            if same_rest {
                out[(oi[k], oj[k])] += m[(i, j)];
            }
        }
    }
    DensityMatrix::from_matrix_unchecked(out_dims, out)
}

/// Cavity state of `rho`, reducing over transmon and reservoir if present.
pub fn cavity_state(rho: &DensityMatrix) -> Result<DensityMatrix> {
    partial_trace(rho, Mode::Cavity)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WignerGrid {
    pub re_max: f64,
    pub im_max: f64,
    pub n_re: usize,
    pub n_im: usize,
}

impl Default for WignerGrid {
    fn default() -> Self {
        WignerGrid { re_max: 3.2, im_max: 3.2, n_re: 81, n_im: 81 }
    }
}

impl WignerGrid {
    pub fn square(half_width: f64, n: usize) -> Self {
        WignerGrid { re_max: half_width, im_max: half_width, n_re: n, n_im: n }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.re_max > 0.0) || !(self.im_max > 0.0) || self.n_re < 2 || self.n_im < 2 {
            return Err(Error::InvalidParameter(format!("invalid Wigner grid {self:?}")));
        }
        Ok(())
    }

    pub fn re_axis(&self) -> Vec<f64> {
        crate::cascade::axis((-self.re_max, self.re_max), self.n_re)
    }

    pub fn im_axis(&self) -> Vec<f64> {
        crate::cascade::axis((-self.im_max, self.im_max), self.n_im)
    }

    pub fn cell_area(&self) -> f64 {
        (2.0 * self.re_max / (self.n_re - 1) as f64) * (2.0 * self.im_max / (self.n_im - 1) as f64)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WignerMap {
    pub re_axis: Vec<f64>,
    pub im_axis: Vec<f64>,
    /// `values[i][j]` at `α = re_axis[j] + i·im_axis[i]`.
    pub values: Vec<Vec<f64>>,
    pub cell_area: f64,
}

impl WignerMap {
    pub fn alpha(&self, i: usize, j: usize) -> C64 {
        C64::new(self.re_axis[j], self.im_axis[i])
    }

    /// `Σ W ΔA`, which approximates `tr ρ` when the grid covers the state.
    pub fn integral(&self) -> f64 {
        self.values.iter().flatten().sum::<f64>() * self.cell_area
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// Columns `re_alpha, im_alpha, w`.
    pub fn write_csv<W: Write>(&self, mut w: W, header: &[String]) -> Result<()> {
        write_comment_header(&mut w, header)?;
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["re_alpha", "im_alpha", "w"])?;
        for (i, row) in self.values.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                csv.write_record([format_float(self.re_axis[j]), format_float(self.im_axis[i]), format_float(*v)])?;
            }
        }
        csv.flush()?;
        Ok(())
    }

    /// Binary greyscale PGM, `−2/π` black and `+2/π` white, top row at largest Im α.
    pub fn write_pgm<W: Write>(&self, mut w: W) -> Result<()> {
        let h = self.values.len();
        let wd = self.re_axis.len();
        write!(w, "P5\n{wd} {h}\n255\n")?;
        let lim = 2.0 / PI;
        let mut buf = Vec::with_capacity(h * wd);
        for row in self.values.iter().rev() {
            for v in row {
                buf.push((((v / lim).clamp(-1.0, 1.0) + 1.0) * 127.5).round() as u8);
            }
        }
        w.write_all(&buf)?;
        Ok(())
    }
}

/// Displaced-parity evaluator with a padded truncation for the displacement.
pub struct WignerEngine {
    n_rho: usize,
    /// Eigen-decomposition of `i(a† − a)` in the padded space.
    mu: Vec<f64>,
    vecs: CMatrix,
}

impl WignerEngine {
    pub fn new(n_rho: usize, max_abs_alpha: f64) -> Result<Self> {
        if n_rho < 2 {
            return Err(Error::InvalidDimension(format!("Wigner needs dimension >= 2, got {n_rho}")));
        }
        let pad = (max_abs_alpha + ((n_rho - 1) as f64).sqrt() + 3.0).powi(2).ceil() as usize;
        let n_pad = pad.max(n_rho + 10);
        let a = annihilation(n_pad)?.into_matrix();
        let h = (a.adjoint() - a) * C64::new(0.0, 1.0);
        let (mu, vecs) = eigh(&h);
        Ok(WignerEngine { n_rho, mu, vecs })
    }

    /// `W(α) = (2/π) Σ_k (−1)^k (D(α)† ρ D(α))_kk`.
    pub fn value(&self, rho: &CMatrix, alpha: C64) -> f64 {
        let n = self.n_rho;
        let np = self.mu.len();
        let r = alpha.norm();
        let theta = alpha.arg();
        // D(r) = V diag(e^{−iμr}) V†; only the first n rows are needed.
        let phases: Vec<C64> = self.mu.iter().map(|&m| C64::from_polar(1.0, -m * r)).collect();
        let mut rows = CMatrix::zeros(n, np);
        for m in 0..n {
            let vm: Vec<C64> = (0..np).map(|j| self.vecs[(m, j)] * phases[j]).collect();
            for k in 0..np {
                let acc: C64 = vm.iter().enumerate().map(|(j, v)| v * self.vecs[(k, j)].conj()).sum();
                rows[(m, k)] = acc * C64::from_polar(1.0, theta * (m as f64 - k as f64));
            }
        }
        // (D†ρD)_kk = Σ_{m,l} conj(D_mk) ρ_ml D_lk
        let rd = rho * &rows;
        let mut w = 0.0;
        for k in 0..np {
            let mut acc = C64::new(0.0, 0.0);
            for m in 0..n {
                acc += rows[(m, k)].conj() * rd[(m, k)];
            }
            w += if k % 2 == 0 { acc.re } else { -acc.re };
        }
        2.0 / PI * w
    }
}

fn single_mode_matrix(rho: &DensityMatrix) -> Result<CMatrix> {
    if !rho.dims().is_single() {
        return Err(Error::InvalidDimension("Wigner function needs a single-mode density matrix".into()));
    }
    let m = rho.matrix();
    let n = m.nrows();
    let edge: f64 = (n.saturating_sub(2)..n).map(|k| m[(k, k)].re).sum();
    if edge > 1e-6 {
        log::warn!("population {edge:.2e} in the top two Fock levels; Wigner map may be truncated");
    }
    Ok(m.clone())
}

/// Wigner function at arbitrary points.
pub fn wigner_at(rho_cav: &DensityMatrix, points: &[C64]) -> Result<Vec<f64>> {
    let m = single_mode_matrix(rho_cav)?;
    let max_alpha = points.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let engine = WignerEngine::new(m.nrows(), max_alpha)?;
    Ok(points.par_iter().map(|&a| engine.value(&m, a)).collect())
}

pub fn wigner(rho_cav: &DensityMatrix, grid: &WignerGrid) -> Result<WignerMap> {
    grid.validate()?;
    let m = single_mode_matrix(rho_cav)?;
    let re_axis = grid.re_axis();
    let im_axis = grid.im_axis();
    let engine = WignerEngine::new(m.nrows(), (grid.re_max.powi(2) + grid.im_max.powi(2)).sqrt())?;
    let values: Vec<Vec<f64>> =
        im_axis.par_iter().map(|&y| re_axis.iter().map(|&x| engine.value(&m, C64::new(x, y))).collect()).collect();
    Ok(WignerMap { re_axis, im_axis, values, cell_area: grid.cell_area() })
}

/// `|⟨i'|ρ_after|j'⟩| / |⟨i|ρ_before|j⟩|` on the cavity.
pub fn coherence_factor(
    rho_before: &DensityMatrix,
    rho_after: &DensityMatrix,
    pair_before: (usize, usize),
    pair_after: (usize, usize),
) -> Result<f64> {
    let b = cavity_state(rho_before)?;
    let a = cavity_state(rho_after)?;
    for (name, (i, j), d) in [("before", pair_before, b.dim()), ("after", pair_after, a.dim())] {
        if i >= d || j >= d {
            return Err(Error::OutOfRange(format!("{name} pair ({i}, {j}) outside dimension {d}")));
        }
    }
    let den = b.element(pair_before.0, pair_before.1).norm();
    if den < 1e-9 {
        return Err(Error::Undefined(format!("initial coherence {den:.2e} below 1e-9")));
    }
    Ok(a.element(pair_after.0, pair_after.1).norm() / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{fock, fock_state, StateVector};
    use approx::assert_abs_diff_eq;

    fn laguerre(n: usize, x: f64) -> f64 {
        let (mut l0, mut l1) = (1.0, 1.0 - x);
        if n == 0 {
            return l0;
        }
        for k in 1..n {
            let l2 = ((2 * k + 1) as f64 - x) * l1 / (k + 1) as f64 - k as f64 * l0 / (k + 1) as f64;
            l0 = l1;
            l1 = l2;
        }
        l1
    }

    #[test]
    fn fock_states_match_laguerre_form() {
        for n in 0..4 {
            let rho = DensityMatrix::pure(&fock(n, 8).unwrap());
            let pts = [C64::new(0.0, 0.0), C64::new(0.4, -0.3), C64::new(-1.1, 0.7), C64::new(1.6, 1.2)];
            let w = wigner_at(&rho, &pts).unwrap();
            for (p, v) in pts.iter().zip(w) {
                let x = p.norm_sqr();
                let expect = 2.0 / PI * if n % 2 == 0 { 1.0 } else { -1.0 } * (-2.0 * x).exp() * laguerre(n, 4.0 * x);
                assert_abs_diff_eq!(v, expect, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn origin_values() {
        let vac = DensityMatrix::pure(&fock(0, 6).unwrap());
        let one = DensityMatrix::pure(&fock(1, 6).unwrap());
        let o = [C64::new(0.0, 0.0)];
        assert_abs_diff_eq!(wigner_at(&vac, &o).unwrap()[0], 2.0 / PI, epsilon = 1e-12);
        assert_abs_diff_eq!(wigner_at(&one, &o).unwrap()[0], -2.0 / PI, epsilon = 1e-12);
    }

    #[test]
    fn grid_normalization() {
        let rho = DensityMatrix::pure(&fock(2, 8).unwrap());
        let map = wigner(&rho, &WignerGrid::square(3.2, 41)).unwrap();
        assert_abs_diff_eq!(map.integral(), 1.0, epsilon = 0.02);
        assert!(map.max_abs() <= 2.0 / PI + 1e-6);
    }

    #[test]
    fn partial_trace_of_product_and_bell_states() {
        let dims = ModeDims::new(2, 2, 2).unwrap();
        let psi = fock_state([1, 0, 1], dims).unwrap();
        let red = partial_trace(&DensityMatrix::pure(&psi), Mode::Cavity).unwrap();
        assert_abs_diff_eq!(red.matrix()[(1, 1)].re, 1.0);
        let s = 0.5f64.sqrt();
        let mut v = crate::hilbert::CVector::zeros(8);
        v[dims.index([0, 0, 0]).unwrap()] = C64::new(s, 0.0);
        v[dims.index([1, 1, 0]).unwrap()] = C64::new(s, 0.0);
        let bell = DensityMatrix::pure(&StateVector::new(dims, v).unwrap());
        for mode in [Mode::Cavity, Mode::Transmon] {
            let r = partial_trace(&bell, mode).unwrap();
            assert_abs_diff_eq!(r.matrix()[(0, 0)].re, 0.5, epsilon = 1e-15);
            assert_abs_diff_eq!(r.matrix()[(0, 1)].norm(), 0.0, epsilon = 1e-15);
        }
        let r = partial_trace(&bell, Mode::Reservoir).unwrap();
        assert_abs_diff_eq!(r.matrix()[(0, 0)].re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn coherence_factor_cases() {
        let s = 0.5f64.sqrt();
        let before = DensityMatrix::pure(
            &StateVector::from_fock_amplitudes(6, &[(0, C64::new(s, 0.0)), (2, C64::new(s, 0.0))]).unwrap(),
        );
        let after = DensityMatrix::pure(
            &StateVector::from_fock_amplitudes(6, &[(1, C64::new(s, 0.0)), (3, C64::new(s, 0.0))]).unwrap(),
        );
        assert_abs_diff_eq!(coherence_factor(&before, &before, (0, 2), (0, 2)).unwrap(), 1.0);
        assert_abs_diff_eq!(coherence_factor(&before, &after, (0, 2), (1, 3)).unwrap(), 1.0, epsilon = 1e-15);
        let dephased = DensityMatrix::mixture(&[
            (0.5, &DensityMatrix::pure(&fock(1, 6).unwrap())),
            (0.5, &DensityMatrix::pure(&fock(3, 6).unwrap())),
        ])
        .unwrap();
        assert_eq!(coherence_factor(&before, &dephased, (0, 2), (1, 3)).unwrap(), 0.0);
        let fockonly = DensityMatrix::pure(&fock(0, 6).unwrap());
        assert!(matches!(coherence_factor(&fockonly, &after, (0, 2), (1, 3)), Err(Error::Undefined(_))));
    }

    #[test]
    fn pgm_header_and_size() {
        let rho = DensityMatrix::pure(&fock(0, 4).unwrap());
        let map = wigner(&rho, &WignerGrid::square(2.0, 5)).unwrap();
        let mut out = Vec::new();
        map.write_pgm(&mut out).unwrap();
        assert!(out.starts_with(b"P5\n5 5\n255\n"));
        assert_eq!(out.len(), b"P5\n5 5\n255\n".len() + 25);
    }
}
