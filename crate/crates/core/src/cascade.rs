//! Three-level non-Hermitian reduction of one PReSPA conversion path
//! `|n−1,g,0⟩ → |n,f,0⟩ → |n,g,1⟩`.

use std::io::Write;

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{expm, CMatrix, C64};
use crate::io::{format_float, write_comment_header};
use crate::model::TWO_PI;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct CascadeMatrix {
    pub omega1: C64,
    pub omega2: C64,
    pub kappa: f64,
    pub chi_detune: f64,
    pub matrix: Matrix3<C64>,
}

impl CascadeMatrix {
    /// Resonant path; all arguments angular (rad/µs).
    pub fn new(omega1: f64, omega2: f64, kappa: f64) -> Self {
        Self::general(C64::new(omega1, 0.0), C64::new(omega2, 0.0), kappa, 0.0)
    }

    /// Intermediate level detuned by `chi` (rad/µs).
    pub fn detuned(omega1: f64, omega2: f64, kappa: f64, chi: f64) -> Self {
        Self::general(C64::new(omega1, 0.0), C64::new(omega2, 0.0), kappa, chi)
    }

    pub fn general(omega1: C64, omega2: C64, kappa: f64, chi: f64) -> Self {
        let matrix = Matrix3::new(
            ZERO,
            omega1,
            ZERO,
            omega1.conj(),
            C64::new(chi, 0.0),
            omega2,
            ZERO,
            omega2.conj(),
            C64::new(0.0, -kappa / 2.0),
        );
        CascadeMatrix { omega1, omega2, kappa, chi_detune: chi, matrix }
    }

    /// From cyclic Rabi rates in kHz and a cyclic reservoir linewidth in MHz.
    pub fn from_cyclic(omega1_khz: f64, omega2_khz: f64, kappa_mhz: f64) -> Self {
        Self::new(TWO_PI * omega1_khz * 1e-3, TWO_PI * omega2_khz * 1e-3, TWO_PI * kappa_mhz)
    }

    fn scale(&self) -> f64 {
        self.kappa.max(self.omega1.norm()).max(self.omega2.norm()).max(self.chi_detune.abs()).max(1e-300)
    }

    /// Coefficients `(a2, a1, a0)` of `λ³ + a2 λ² + a1 λ + a0`.
    pub fn characteristic(&self) -> (C64, C64, C64) {
        let s = self.omega1.norm_sqr() + self.omega2.norm_sqr();
        let half_k = C64::new(0.0, -self.kappa / 2.0);
        let chi = C64::new(self.chi_detune, 0.0);
        (-(chi + half_k), chi * half_k - s, half_k * self.omega1.norm_sqr())
    }

    /// Discriminant of the resonant real cubic `y³ − (κ/2)y² + S y − κ|Ω₁|²/2`
    /// obtained with `λ = −iy`. Negative means a complex pair, i.e. two
    /// eigenvalues with distinct real parts.
    pub fn resonant_discriminant(&self) -> Option<f64> {
        if self.chi_detune != 0.0 {
            return None;
        }
        let b = -self.kappa / 2.0;
        let c = self.omega1.norm_sqr() + self.omega2.norm_sqr();
        let d = -self.kappa * self.omega1.norm_sqr() / 2.0;
        Some(18.0 * b * c * d - 4.0 * b.powi(3) * d + b * b * c * c - 4.0 * c.powi(3) - 27.0 * d * d)
    }

    pub fn eigen(&self) -> CascadeEigen {
        let scale = self.scale();
        let (values, exact_real) = match self.resonant_discriminant() {
            Some(_) => {
                let roots = real_cubic_roots(
                    -self.kappa / 2.0,
                    self.omega1.norm_sqr() + self.omega2.norm_sqr(),
                    -self.kappa * self.omega1.norm_sqr() / 2.0,
                );
                match roots {
                    CubicRoots::Real(y) => (y.map(|y| C64::new(0.0, -y)), true),
                    CubicRoots::Complex(y, z) => {
                        ([C64::new(0.0, -y), C64::new(z.im, -z.re), C64::new(-z.im, -z.re)], false)
                    }
                }
            }
            None => {
                let (a2, a1, a0) = self.characteristic();
                (complex_cubic_roots(a2, a1, a0), false)
            }
        };
        let oscillatory = !exact_real && values.iter().any(|l| l.re.abs() > 1e-9 * scale);
        let vectors = values.map(|l| null_vector(&self.matrix, l));
        let mut min_gap = f64::INFINITY;
        for i in 0..3 {
            for j in i + 1..3 {
                min_gap = min_gap.min((values[i] - values[j]).norm());
            }
        }
        let vmat = Matrix3::from_columns(&vectors);
        let independence = vmat.determinant().norm();
        let near_exceptional = min_gap < 1e-6 * scale || independence < 1e-6;
        CascadeEigen { values, vectors, oscillatory, near_exceptional, independence }
    }
}

#[derive(Clone, Debug)]
pub struct CascadeEigen {
    pub values: [C64; 3],
    /// Unit-norm right eigenvectors.
    pub vectors: [Vector3<C64>; 3],
    /// Some pair of eigenvalues has distinct real parts.
    pub oscillatory: bool,
    /// Close to a coalescence of eigenvalues and eigenvectors.
    pub near_exceptional: bool,
    /// `|det V|` of the normalized eigenvector matrix.
    pub independence: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EffectiveRate {
    /// Population decay rate `2|Im λ|`, 1/µs.
    pub rate: f64,
    pub eigenvalue_re: f64,
    pub eigenvalue_im: f64,
    pub overlap: f64,
    /// `2 min |Im λ|` over all three modes.
    pub slowest_rate: f64,
    pub oscillatory: bool,
    pub near_exceptional: bool,
}

/// Rate of the eigenmode with the largest overlap with the error state `e₁`.
pub fn effective_rate_details(m: &CascadeMatrix) -> Result<EffectiveRate> {
    if !(m.kappa > 0.0) {
        return Err(Error::InvalidParameter(format!("kappa must be > 0, got {}", m.kappa)));
    }
    let eig = m.eigen();
    let (k, overlap) = eig.vectors.iter().map(|v| v[0].norm()).enumerate().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    let lambda = eig.values[k];
    if eig.near_exceptional {
        log::debug!("cascade matrix near an exceptional point (|det V| = {:.2e})", eig.independence);
    }
    Ok(EffectiveRate {
        rate: 2.0 * lambda.im.abs(),
        eigenvalue_re: lambda.re,
        eigenvalue_im: lambda.im,
        overlap,
        slowest_rate: eig.values.iter().map(|l| 2.0 * l.im.abs()).fold(f64::INFINITY, f64::min),
        oscillatory: eig.oscillatory,
        near_exceptional: eig.near_exceptional,
    })
}

pub fn effective_rate(m: &CascadeMatrix) -> Result<f64> {
    Ok(effective_rate_details(m)?.rate)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CriticalDamping {
    pub analytic: f64,
    pub numeric: f64,
}

/// Ω₂ at which the Λ-subsystem eigenvalues coalesce (Ω₁ = 0).
pub fn lambda_critical(kappa: f64) -> Result<CriticalDamping> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidParameter(format!("kappa must be > 0, got {kappa}")));
    }
    let disc = |w2: f64| CascadeMatrix::new(0.0, w2, kappa).resonant_discriminant().unwrap();
    // Overdamped (disc ≥ 0) below the critical point, underdamped above.
    let (mut lo, mut hi) = (1e-6 * kappa, kappa);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if disc(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * kappa {
            break;
        }
    }
    Ok(CriticalDamping { analytic: kappa / 4.0, numeric: 0.5 * (lo + hi) })
}

#[derive(Clone, Debug, Serialize)]
pub struct RateLandscape {
    pub kappa: f64,
    pub omega1_axis: Vec<f64>,
    pub omega2_axis: Vec<f64>,
    /// `rates[i][j]` at `(omega1_axis[i], omega2_axis[j])`, 1/µs.
    pub rates: Vec<Vec<f64>>,
    pub bifurcation_mask: Vec<Vec<bool>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LandscapePoint {
    pub omega1: f64,
    pub omega2: f64,
    pub rate: f64,
}

impl RateLandscape {
    /// Fastest point with no oscillating eigenmode.
    pub fn argmax_non_oscillatory(&self) -> Option<LandscapePoint> {
        let mut best: Option<LandscapePoint> = None;
        for (i, row) in self.rates.iter().enumerate() {
            for (j, &rate) in row.iter().enumerate() {
                if self.bifurcation_mask[i][j] {
                    continue;
                }
                if best.is_none_or(|b| rate > b.rate) {
                    best = Some(LandscapePoint { omega1: self.omega1_axis[i], omega2: self.omega2_axis[j], rate });
                }
            }
        }
        best
    }

    /// Columns `omega1, omega2, rate, oscillatory`.
    pub fn write_csv<W: Write>(&self, mut w: W, header: &[String]) -> Result<()> {
        write_comment_header(&mut w, header)?;
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["omega1", "omega2", "rate", "oscillatory"])?;
        for (i, row) in self.rates.iter().enumerate() {
            for (j, &rate) in row.iter().enumerate() {
                csv.write_record([
                    format_float(self.omega1_axis[i]),
                    format_float(self.omega2_axis[j]),
                    format_float(rate),
                    (self.bifurcation_mask[i][j] as u8).to_string(),
                ])?;
            }
        }
        csv.flush()?;
        Ok(())
    }
}

/// Inclusive grid from `lo` to `hi`; a single point sits at `lo`.
pub fn axis(range: (f64, f64), n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![range.0],
        _ => (0..n).map(|k| range.0 + (range.1 - range.0) * k as f64 / (n - 1) as f64).collect(),
    }
}

/// Default plotting window: `Ω₁ ∈ (0, κ/4]`, `Ω₂ ∈ (0, κ/2]` excluding the zero edge.
pub fn default_ranges(kappa: f64, n_grid: usize) -> ((f64, f64), (f64, f64)) {
    let n = n_grid.max(1) as f64;
    ((kappa / 4.0 / n, kappa / 4.0), (kappa / 2.0 / n, kappa / 2.0))
}

/// Effective rate over a rectangular `(Ω₁, Ω₂)` grid, computed in parallel.
pub fn sweep_landscape(
    omega1_range: (f64, f64),
    omega2_range: (f64, f64),
    kappa: f64,
    n_grid: usize,
) -> Result<RateLandscape> {
    for (name, r) in [("omega1", omega1_range), ("omega2", omega2_range)] {
        if !(r.0 >= 0.0) || !(r.1 >= r.0) || !r.1.is_finite() {
            return Err(Error::InvalidParameter(format!("{name} range {r:?} must satisfy 0 <= lo <= hi")));
        }
    }
    if n_grid == 0 {
        return Err(Error::InvalidParameter("n_grid must be >= 1".into()));
    }
    if !(kappa > 0.0) {
        return Err(Error::InvalidParameter(format!("kappa must be > 0, got {kappa}")));
    }
    let a1 = axis(omega1_range, n_grid);
    let a2 = axis(omega2_range, n_grid);
    let rows: Vec<(Vec<f64>, Vec<bool>)> = a1
        .par_iter()
        .map(|&w1| {
            a2.iter()
                .map(|&w2| {
                    let r = effective_rate_details(&CascadeMatrix::new(w1, w2, kappa)).expect("kappa checked");
                    (r.rate, r.oscillatory)
                })
                .unzip()
        })
        .collect();
    let (rates, bifurcation_mask) = rows.into_iter().unzip();
    Ok(RateLandscape { kappa, omega1_axis: a1, omega2_axis: a2, rates, bifurcation_mask })
}

/// Rate through a path whose intermediate level is detuned by `chi`.
pub fn detuned_rate(omega1: f64, omega2: f64, kappa: f64, chi: f64) -> Result<f64> {
    if chi.abs() < 10.0 * omega1.abs() {
        log::warn!("detuning {chi:.3} is not large compared with omega1 {omega1:.3}");
    }
    effective_rate(&CascadeMatrix::detuned(omega1, omega2, kappa, chi))
}

/// Large-detuning limit `4 Ω₁² Ω₂² / (χ² κ)`.
pub fn detuned_rate_limit(omega1: f64, omega2: f64, kappa: f64, chi: f64) -> f64 {
    4.0 * omega1.powi(2) * omega2.powi(2) / (chi * chi * kappa)
}

/// `‖e^{−iMt} e₁‖²` at each time.
pub fn error_state_population(m: &CascadeMatrix, times: &[f64]) -> Vec<f64> {
    let dense = CMatrix::from_fn(3, 3, |r, c| m.matrix[(r, c)]);
    times
        .iter()
        .map(|&t| {
            let u = expm(&(&dense * C64::new(0.0, -t)));
            u.column(0).norm_squared()
        })
        .collect()
}

/// Time at which half the norm has leaked out through the reservoir.
pub fn conversion_halftime(m: &CascadeMatrix) -> Option<f64> {
    let dense = CMatrix::from_fn(3, 3, |r, c| m.matrix[(r, c)]);
    let norm_at = |t: f64| expm(&(&dense * C64::new(0.0, -t))).column(0).norm_squared();
    let rate = effective_rate(m).ok()?;
    if rate <= 0.0 {
        return None;
    }
    let dt = 0.05 / rate;
    let mut t0 = 0.0;
    for _ in 0..20_000 {
        let t1 = t0 + dt;
        if norm_at(t1) <= 0.5 {
            let (mut lo, mut hi) = (t0, t1);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if norm_at(mid) > 0.5 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Some(0.5 * (lo + hi));
        }
        t0 = t1;
    }
    None
}

/// Slope of `ln P` over the samples, returned as a positive decay rate.
pub fn log_linear_rate(times: &[f64], pops: &[f64]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = times.iter().zip(pops).filter(|(_, &p)| p > 0.0).map(|(&t, &p)| (t, p.ln())).collect();
    if pts.len() < 2 {
        return Err(Error::FitFailure { residual: f64::NAN, reason: "need two positive samples".into() });
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    Ok(-sxy / sxx)
}

enum CubicRoots {
    Real([f64; 3]),
    /// One real root and one member `z` of the conjugate pair.
    Complex(f64, C64),
}

/// Roots of `y³ + b y² + c y + d` with real coefficients.
fn real_cubic_roots(b: f64, c: f64, d: f64) -> CubicRoots {
    let disc = 18.0 * b * c * d - 4.0 * b.powi(3) * d + b * b * c * c - 4.0 * c.powi(3) - 27.0 * d * d;
    let p = c - b * b / 3.0;
    let q = 2.0 * b.powi(3) / 27.0 - b * c / 3.0 + d;
    let shift = -b / 3.0;
    let polish = |mut y: f64| {
        for _ in 0..3 {
            let f = ((y + b) * y + c) * y + d;
            let df = (3.0 * y + 2.0 * b) * y + c;
            if df == 0.0 {
                break;
            }
            let step = f / df;
            if !step.is_finite() {
                break;
            }
            y -= step;
        }
        y
    };
    if disc >= 0.0 {
        if p.abs() < 1e-300 {
            let y = shift - q.cbrt();
            return CubicRoots::Real([y, y, y]);
        }
        let m = 2.0 * (-p / 3.0).max(0.0).sqrt();
        let arg = if m == 0.0 { 0.0 } else { (3.0 * q / (p * m)).clamp(-1.0, 1.0) };
        let theta = arg.acos() / 3.0;
        let mut roots = [0.0; 3];
        for (k, r) in roots.iter_mut().enumerate() {
            *r = shift + m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos();
        }
        roots.sort_by(f64::total_cmp);
        CubicRoots::Real(roots)
    } else {
        let s = (q * q / 4.0 + p.powi(3) / 27.0).sqrt();
        let u = (-q / 2.0 + s).cbrt();
        let v = (-q / 2.0 - s).cbrt();
        let y = polish(shift + u + v);
        // Deflate: y² + (b + y) y' + ... gives the remaining quadratic.
        let bb = b + y;
        let cc = c + bb * y;
        let disc2 = C64::new(bb * bb - 4.0 * cc, 0.0).sqrt();
        let z = (C64::new(-bb, 0.0) + disc2) / 2.0;
        CubicRoots::Complex(y, if z.im >= 0.0 { z } else { z.conj() })
    }
}

/// Roots of `λ³ + a2 λ² + a1 λ + a0` by Cardano with Newton polishing.
fn complex_cubic_roots(a2: C64, a1: C64, a0: C64) -> [C64; 3] {
    let shift = -a2 / 3.0;
    let p = a1 - a2 * a2 / 3.0;
    let q = a2 * a2 * a2 * (2.0 / 27.0) - a2 * a1 / 3.0 + a0;
    let s = (q * q / 4.0 + p * p * p / 27.0).sqrt();
    let mut u3 = -q / 2.0 + s;
    if u3.norm() < (-q / 2.0 - s).norm() {
        u3 = -q / 2.0 - s;
    }
    let u = u3.powf(1.0 / 3.0);
    let omega = C64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
    let mut roots = [ZERO; 3];
    let mut uk = u;
    for r in roots.iter_mut() {
        let t = if uk.norm() == 0.0 { ZERO } else { uk - p / (uk * 3.0) };
        *r = t + shift;
        uk *= omega;
    }
    for r in roots.iter_mut() {
        for _ in 0..4 {
            let f = ((*r + a2) * *r + a1) * *r + a0;
            let df = (*r * 3.0 + a2 * 2.0) * *r + a1;
            if df.norm() == 0.0 {
                break;
            }
            let step = f / df;
            if !step.re.is_finite() || !step.im.is_finite() {
                break;
            }
            *r -= step;
        }
    }
    roots
}

/// Unit vector spanning the null space of `M − λI`, from the largest cross
/// product of two rows (bilinear, no conjugation).
fn null_vector(m: &Matrix3<C64>, lambda: C64) -> Vector3<C64> {
    let a = m - Matrix3::from_diagonal_element(lambda);
    let rows: Vec<Vector3<C64>> = (0..3).map(|i| a.row(i).transpose()).collect();
    let cross = |x: &Vector3<C64>, y: &Vector3<C64>| {
        Vector3::new(x[1] * y[2] - x[2] * y[1], x[2] * y[0] - x[0] * y[2], x[0] * y[1] - x[1] * y[0])
    };
    let mut best = Vector3::zeros();
    let mut best_norm = -1.0;
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let v = cross(&rows[i], &rows[j]);
        let n = v.norm();
        if n > best_norm {
            best = v;
            best_norm = n;
        }
    }
    if best_norm <= 0.0 {
        // M − λI vanishes: every vector is an eigenvector.
        return Vector3::new(C64::new(1.0, 0.0), ZERO, ZERO);
    }
    best / C64::new(best_norm, 0.0)
}
