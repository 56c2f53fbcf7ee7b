//! Readout population extraction and the single-ratio transmon heating model.

use std::io::Read;

use nalgebra::{DMatrix, DVector, Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Raw readout levels for the transmon prepared in `|g⟩`, `|e⟩`, `|f⟩`.
///
/// `higher` is the level read for population above `|f⟩`; it defaults to `c`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutCalib {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub higher: Option<f64>,
}

impl ReadoutCalib {
    pub const fn new(a: f64, b: f64, c: f64) -> Self {
        ReadoutCalib { a, b, c, higher: None }
    }

    pub fn higher_level(&self) -> f64 {
        self.higher.unwrap_or(self.c)
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b, c) = (self.a, self.b, self.c);
        if ![a, b, c, self.higher_level()].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("readout levels must be finite".into()));
        }
        if (a - b).abs() <= 1e-9 || (a - c).abs() <= 1e-9 || (b - c).abs() <= 1e-9 {
            return Err(Error::Singular(format!("readout levels not distinct: {a}, {b}, {c}")));
        }
        let mean = (a + b + c) / 3.0;
        if (self.higher_level() - mean).abs() <= 1e-9 * (a - b).abs().max((b - c).abs()) {
            return Err(Error::Singular(format!(
                "higher-level readout {} equals the mean of A, B, C; populations not identifiable",
                self.higher_level()
            )));
        }
        Ok(())
    }

    /// Rows give `D1..D4` as combinations of `(g, e, f, R)`.
    fn system(&self) -> Matrix4<f64> {
        let (a, b, c) = (self.a, self.b, self.c);
        Matrix4::new(a, b, c, 1.0, b, c, a, 1.0, c, b, a, 1.0, b, a, c, 1.0)
    }

    /// Readouts `D1..D4` of the four pulse sequences for given populations.
    pub fn forward(&self, p: &Populations) -> [f64; 4] {
        let d = self.system() * Vector4::new(p.g, p.e, p.f, p.residual);
        [d[0], d[1], d[2], d[3]]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Populations {
    pub g: f64,
    pub e: f64,
    pub f: f64,
    /// Residual signal `R` from states above `|f⟩`.
    pub residual: f64,
    /// `1 − g − e − f`.
    pub higher: f64,
    /// RMS mismatch of the four readout equations after the solve.
    pub misfit: f64,
}

impl Populations {
    pub fn new(g: f64, e: f64, f: f64, residual: f64) -> Self {
        Populations { g, e, f, residual, higher: 1.0 - g - e - f, misfit: 0.0 }
    }

    /// Populations whose residual signal comes from `1 − g − e − f` read at `calib.higher_level()`.
    pub fn closed(g: f64, e: f64, f: f64, calib: &ReadoutCalib) -> Self {
        Self::new(g, e, f, (1.0 - g - e - f) * calib.higher_level())
    }
}

/// Solves the four readout equations for `g, e, f`.
///
/// The `g, e, f` columns of the raw system add up to `(A+B+C)` times the `R`
/// column, so `R` is tied to the missing population: `R = (1 − g − e − f)·h`
/// with `h = calib.higher_level()`. The remaining 4×3 system is solved in the
/// least-squares sense.
pub fn solve_populations(d: [f64; 4], calib: &ReadoutCalib) -> Result<Populations> {
    calib.validate()?;
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("readout values must be finite".into()));
    }
    let h = calib.higher_level();
    let full = calib.system();
    let m = full.fixed_view::<4, 3>(0, 0).map(|x| x - h);
    let rhs = Vector4::from(d).map(|x| x - h);
    let mtm = m.transpose() * m;
    let x = mtm
        .cholesky()
        .ok_or_else(|| Error::Singular("readout system has no unique solution".into()))?
        .solve(&(m.transpose() * rhs));
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("readout solve produced non-finite populations".into()));
    }
    let misfit = ((m * x - rhs).norm_squared() / 4.0).sqrt();
    let mut p = Populations::closed(x[0], x[1], x[2], calib);
    p.misfit = misfit;
    Ok(p)
}

/// `P_{n,g} − P_{n,e} = (background − data)/(A − B)`.
pub fn scale_population_difference(background: f64, data: f64, calib: &ReadoutCalib) -> Result<f64> {
    if (calib.a - calib.b).abs() <= 1e-9 {
        return Err(Error::Singular("A and B coincide".into()));
    }
    Ok((background - data) / (calib.a - calib.b))
}

/// Birth–death chain over `g, e, f` (and optionally one higher level) with
/// relaxation `1/T1` and excitation `r/T1` on each rung.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateModel {
    pub t1ge: f64,
    pub t1ef: f64,
    pub r: f64,
    /// Relaxation time of the `h → f` rung; adds a fourth level when set.
    #[serde(default)]
    pub t1_higher: Option<f64>,
}

impl RateModel {
    pub fn new(t1ge: f64, t1ef: f64, r: f64) -> Result<Self> {
        let m = RateModel { t1ge, t1ef, r, t1_higher: None };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let t_ok = self.t1ge > 0.0 && self.t1ef > 0.0 && self.t1_higher.is_none_or(|t| t > 0.0);
        if !t_ok || !(self.r >= 0.0) || !self.r.is_finite() {
            return Err(Error::InvalidParameter(format!("invalid rate model {self:?}")));
        }
        Ok(())
    }

    pub fn levels(&self) -> usize {
        if self.t1_higher.is_some() {
            4
        } else {
            3
        }
    }

    fn rung_times(&self) -> Vec<f64> {
        let mut v = vec![self.t1ge, self.t1ef];
        v.extend(self.t1_higher);
        v
    }

    /// Generator `Q` with `dp/dt = Q p`; columns sum to zero.
    pub fn generator(&self) -> DMatrix<f64> {
        let n = self.levels();
        let mut q = DMatrix::zeros(n, n);
        for (k, t1) in self.rung_times().into_iter().enumerate() {
            let (down, up) = (1.0 / t1, self.r / t1);
            q[(k + 1, k)] += up;
            q[(k, k)] -= up;
            q[(k, k + 1)] += down;
            q[(k + 1, k + 1)] -= down;
        }
        q
    }

    /// Detailed-balance fixed point, `p_{k+1}/p_k = r`.
    pub fn steady_state(&self) -> Vec<f64> {
        let n = self.levels();
        let mut p: Vec<f64> = (0..n).map(|k| self.r.powi(k as i32)).collect();
        let s: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= s);
        p
    }

    /// Excitation rate `γ↑ = r/T1ge` in 1/µs.
    pub fn gamma_up(&self) -> f64 {
        self.r / self.t1ge
    }
}

/// Populations at each time, starting from `p0`.
pub fn evolve_rate_matrix(model: &RateModel, p0: &[f64], times: &[f64]) -> Result<Vec<Vec<f64>>> {
    model.validate()?;
    let n = model.levels();
    if p0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: p0.len() });
    }
    if p0.iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::InvalidState("initial populations must be non-negative".into()));
    }
    let q = model.generator();
    let p0 = DVector::from_column_slice(p0);
    Ok(times
        .iter()
        .map(|&t| {
            let p = (&q * t).exp() * &p0;
            p.iter().map(|x| x.max(0.0)).collect()
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationSample {
    #[serde(rename = "pump_time_us")]
    pub t: f64,
    pub g: f64,
    pub e: f64,
    pub f: f64,
}

/// Reads `pump_time_us, g, e, f` rows; `#` lines are comments.
pub fn read_population_csv<R: Read>(reader: R) -> Result<Vec<PopulationSample>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
    let rows: Vec<PopulationSample> = rdr.deserialize().collect::<std::result::Result<_, _>>()?;
    if rows.is_empty() {
        return Err(Error::InvalidParameter("population file has no rows".into()));
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct HeatingFit {
    pub r: f64,
    /// 1/µs.
    pub gamma_up: f64,
    /// 1/ms.
    pub gamma_up_per_ms: f64,
    pub rms_residual: f64,
    pub t1ge: f64,
    pub t1ef: f64,
}

fn sum_sq(samples: &[PopulationSample], t1ge: f64, t1ef: f64, r: f64, p0: &[f64]) -> f64 {
    let model = RateModel { t1ge, t1ef, r, t1_higher: None };
    let q = model.generator();
    let p0 = DVector::from_column_slice(p0);
    let t0 = samples[0].t;
    samples
        .iter()
        .map(|s| {
            let p = (&q * (s.t - t0)).exp() * &p0;
            (p[0] - s.g).powi(2) + (p[1] - s.e).powi(2) + (p[2] - s.f).powi(2)
        })
        .sum()
}

/// Least-squares `r ∈ [0, 1]` for the three-level model, started from the
/// earliest sample (renormalized over `g, e, f`).
pub fn fit_heating_rate(samples: &[PopulationSample], t1ge: f64, t1ef: f64) -> Result<HeatingFit> {
    if samples.len() < 2 {
        return Err(Error::InvalidParameter("heating fit needs at least two time points".into()));
    }
    RateModel::new(t1ge, t1ef, 0.0)?;
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.t.total_cmp(&b.t));
    if s.iter().any(|x| !(x.t.is_finite() && x.g.is_finite() && x.e.is_finite() && x.f.is_finite())) {
        return Err(Error::InvalidParameter("non-finite population sample".into()));
    }
    let first = s[0];
    let tot = first.g + first.e + first.f;
    if !(tot > 0.0) || first.g < 0.0 || first.e < 0.0 || first.f < 0.0 {
        return Err(Error::InvalidState("first sample is not a valid population".into()));
    }
    let p0 = [first.g / tot, first.e / tot, first.f / tot];
    let cost = |r: f64| sum_sq(&s, t1ge, t1ef, r, &p0);

    let n = 401;
    let grid: Vec<f64> = (0..n).map(|k| k as f64 / (n - 1) as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&r| cost(r)).collect();
    let k = (0..n).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    let (mut a, mut b) = (grid[k.saturating_sub(1)], grid[(k + 1).min(n - 1)]);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut x1, mut x2) = (b - g * (b - a), a + g * (b - a));
    let (mut f1, mut f2) = (cost(x1), cost(x2));
    while b - a > 1e-13 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = cost(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = cost(x2);
        }
    }
    let mut r = 0.5 * (a + b);
    let mut best = cost(r);
    if vals[k] < best {
        r = grid[k];
        best = vals[k];
    }
    let rms = (best / (3 * s.len()) as f64).sqrt();
    if !rms.is_finite() || r >= 1.0 - 1e-9 {
        return Err(Error::FitFailure { residual: rms, reason: format!("ratio pinned at upper bound (r = {r})") });
    }
    let gamma = r / t1ge;
    Ok(HeatingFit { r, gamma_up: gamma, gamma_up_per_ms: gamma * 1e3, rms_residual: rms, t1ge, t1ef })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const CAL: ReadoutCalib = ReadoutCalib::new(1.0, -0.6, 0.3);

    #[test]
    fn ground_state_readouts() {
        let d = CAL.forward(&Populations::new(1.0, 0.0, 0.0, 0.0));
        assert_eq!(d, [CAL.a, CAL.b, CAL.c, CAL.b]);
        let p = solve_populations(d, &CAL).unwrap();
        assert_abs_diff_eq!(p.g, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p.residual, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p.higher, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn degenerate_calibration() {
        let bad = ReadoutCalib::new(1.0, 1.0, 0.0);
        assert!(matches!(solve_populations([1.0; 4], &bad), Err(Error::Singular(_))));
    }

    #[test]
    fn raw_system_is_rank_deficient() {
        // g + e + f columns equal (A+B+C) times the R column.
        let m = CAL.system();
        let sum = m.column(0) + m.column(1) + m.column(2);
        assert!((sum - m.column(3) * (CAL.a + CAL.b + CAL.c)).norm() < 1e-15);
        let inconsistent = [0.9, 0.1, -0.3, 0.5];
        assert!(solve_populations(inconsistent, &CAL).unwrap().misfit > 1e-3);
    }

    #[test]
    fn population_difference_scaling() {
        assert_eq!(scale_population_difference(0.3, 0.3, &CAL).unwrap(), 0.0);
        // Full contrast: background reads |g⟩, data reads |e⟩.
        assert_abs_diff_eq!(scale_population_difference(CAL.a, CAL.b, &CAL).unwrap(), 1.0, epsilon = 1e-15);
        let (g, e) = (0.75, 0.25);
        let bg = g * CAL.a + e * CAL.b;
        let data = e * CAL.a + g * CAL.b;
        assert_abs_diff_eq!(scale_population_difference(bg, data, &CAL).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn pure_relaxation() {
        let m = RateModel::new(50.0, 31.0, 0.0).unwrap();
        let ts = [0.0, 10.0, 50.0, 120.0];
        let p = evolve_rate_matrix(&m, &[0.0, 1.0, 0.0], &ts).unwrap();
        for (t, row) in ts.iter().zip(&p) {
            assert_abs_diff_eq!(row[1], (-t / 50.0).exp(), epsilon = 1e-12);
        }
    }

    #[test]
    fn generator_and_fixed_point() {
        for m in [
            RateModel::new(50.0, 31.0, 0.03).unwrap(),
            RateModel { t1ge: 170.0, t1ef: 75.0, r: 0.05, t1_higher: Some(40.0) },
        ] {
            let q = m.generator();
            for j in 0..m.levels() {
                assert_abs_diff_eq!(q.column(j).sum(), 0.0, epsilon = 1e-16);
            }
            let ss = m.steady_state();
            let res = &q * DVector::from_column_slice(&ss);
            assert!(res.norm() < 1e-15);
            for k in 1..ss.len() {
                assert_abs_diff_eq!(ss[k] / ss[k - 1], m.r, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn recovers_forward_ratio() {
        let m = RateModel::new(50.0, 31.0, 0.02).unwrap();
        let ts = [0.0, 75.0, 175.0, 275.0];
        let p = evolve_rate_matrix(&m, &[0.97, 0.01, 0.02], &ts).unwrap();
        let samples: Vec<PopulationSample> =
            ts.iter().zip(&p).map(|(&t, p)| PopulationSample { t, g: p[0], e: p[1], f: p[2] }).collect();
        let fit = fit_heating_rate(&samples, 50.0, 31.0).unwrap();
        assert_abs_diff_eq!(fit.r, 0.02, epsilon = 1e-8);
        assert_abs_diff_eq!(fit.gamma_up, 0.02 / 50.0, epsilon = 1e-9);
        assert!(fit_heating_rate(&samples[..1], 50.0, 31.0).is_err());
    }

    #[test]
    fn csv_ingestion() {
        let text = "# pumped\npump_time_us,g,e,f\n0,0.98,0.02,0\n75, 0.96, 0.03, 0.01\n";
        let rows = read_population_csv(text.as_bytes()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].t, 75.0);
        assert!(read_population_csv("pump_time_us,g,e\n0,1,0\n".as_bytes()).is_err());
    }
}
