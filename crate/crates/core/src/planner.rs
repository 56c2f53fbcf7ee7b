//! Four-wave-mixing comb planning. Inputs and outputs are cyclic: MHz for
//! carrier frequencies and dispersive shifts, kHz for Stark shifts and Rabi rates.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{DriveConfig, SystemParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Stage {
    #[serde(rename = "1")]
    PhotonAddition,
    #[serde(rename = "2")]
    Reset,
}

impl Stage {
    pub fn number(self) -> u8 {
        match self {
            Stage::PhotonAddition => 1,
            Stage::Reset => 2,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Tone {
    pub stage: Stage,
    /// Odd photon number reached by this conversion.
    pub target: usize,
    /// Comb index, `target = 2n + 1`.
    pub n: usize,
    pub frequency_mhz: f64,
    pub relative_amplitude: f64,
    pub beta: f64,
    pub stark_shift_khz: f64,
    pub rabi_khz: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DrivePlan {
    pub tones: Vec<Tone>,
    pub stark_shift_total_khz: f64,
    /// `ω_d1 + ω_d2`, identical for every matched pair.
    pub frequency_sum_mhz: f64,
}

fn comb_index(target: usize) -> Result<usize> {
    if target.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("photon target {target} is not odd")));
    }
    Ok((target - 1) / 2)
}

/// Carrier frequencies before the `mχ_gf` offsets: `(ω_a + 2ω_q − α, ω_r − 2ω_q + α)`.
pub fn comb_base_frequencies(params: &SystemParams) -> (f64, f64) {
    let two_photon = 2.0 * params.omega_q - params.alpha_q;
    (params.omega_a + two_photon, params.omega_r - two_photon)
}

/// Per-target `(ω_d1, ω_d2)` in MHz.
pub fn comb_frequencies(params: &SystemParams, targets: &[usize]) -> Result<Vec<(usize, f64, f64)>> {
    params.validate()?;
    let (b1, b2) = comb_base_frequencies(params);
    targets
        .iter()
        .map(|&m| {
            comb_index(m)?;
            let shift = m as f64 * params.chi_gf;
            Ok((m, b1 - shift, b2 + shift))
        })
        .collect()
}

/// `Δ_ss = 2α_q Σ|β|²`, α in MHz, result in kHz.
pub fn stark_shift(betas: &[f64], alpha_q: f64) -> Result<f64> {
    if !(alpha_q > 0.0) {
        return Err(Error::InvalidParameter(format!("anharmonicity must be positive, got {alpha_q}")));
    }
    Ok(2.0 * alpha_q * 1e3 * betas.iter().map(|b| b * b).sum::<f64>())
}

/// `Ω = √((2n+1) χ Δ_ss)`, χ in MHz, Stark shift and result in kHz.
pub fn rabi_from_stark(stark_khz: f64, chi_mhz: f64, n: usize) -> Result<f64> {
    if !(stark_khz >= 0.0) || !(chi_mhz > 0.0) {
        return Err(Error::InvalidParameter(format!("need stark >= 0 and chi > 0, got {stark_khz}, {chi_mhz}")));
    }
    Ok(((2 * n + 1) as f64 * chi_mhz * 1e3 * stark_khz).sqrt())
}

/// Inverse of `rabi_from_stark` followed by `stark_shift` for one tone.
pub fn beta_for_rabi(rabi_khz: f64, chi_mhz: f64, n: usize, alpha_q: f64) -> Result<f64> {
    if !(rabi_khz >= 0.0) || !(chi_mhz > 0.0) || !(alpha_q > 0.0) {
        return Err(Error::InvalidParameter("need rabi >= 0, chi > 0 and alpha > 0".into()));
    }
    let stark = rabi_khz * rabi_khz / ((2 * n + 1) as f64 * chi_mhz * 1e3);
    Ok((stark / (2.0 * alpha_q * 1e3)).sqrt())
}

/// Full comb for the configured Rabi targets.
///
/// Stage-1 tones carry `1/√(2n+1)` of the `n = 0` amplitude so every
/// conversion sees the same `Ω₁`. Stage-2 tones share one amplitude, and
/// since `|n,f,0⟩ → |n,g,1⟩` leaves the cavity untouched their Rabi rate is
/// quoted with the `n = 0` factor.
pub fn plan_drives(params: &SystemParams, cfg: &DriveConfig) -> Result<DrivePlan> {
    let freqs = comb_frequencies(params, &cfg.photon_targets)?;
    if cfg.omega1 < 0.0 || cfg.omega2 < 0.0 {
        return Err(Error::InvalidParameter("Rabi targets must be non-negative".into()));
    }
    let a = params.alpha_q;
    let beta1 = beta_for_rabi(cfg.omega1, params.chi_ge, 0, a)?;
    let beta2 = beta_for_rabi(cfg.omega2, params.chi_qr, 0, a)?;
    let mut tones = Vec::with_capacity(2 * freqs.len());
    for &(m, f1, _) in &freqs {
        let n = comb_index(m)?;
        let amp = 1.0 / ((2 * n + 1) as f64).sqrt();
        let beta = beta1 * amp;
        let stark = stark_shift(&[beta], a)?;
        tones.push(Tone {
            stage: Stage::PhotonAddition,
            target: m,
            n,
            frequency_mhz: f1,
            relative_amplitude: amp,
            beta,
            stark_shift_khz: stark,
            rabi_khz: rabi_from_stark(stark, params.chi_ge, n)?,
        });
    }
    for &(m, _, f2) in &freqs {
        let stark = stark_shift(&[beta2], a)?;
        tones.push(Tone {
            stage: Stage::Reset,
            target: m,
            n: comb_index(m)?,
            frequency_mhz: f2,
            relative_amplitude: 1.0,
            beta: beta2,
            stark_shift_khz: stark,
            rabi_khz: rabi_from_stark(stark, params.chi_qr, 0)?,
        });
    }
    let betas: Vec<f64> = tones.iter().map(|t| t.beta).collect();
    let (b1, b2) = comb_base_frequencies(params);
    Ok(DrivePlan { stark_shift_total_khz: stark_shift(&betas, a)?, frequency_sum_mhz: b1 + b2, tones })
}

impl DrivePlan {
    /// Largest deviation of `ω_d1 + ω_d2` from the common sum over matched pairs.
    pub fn frequency_sum_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for t1 in self.tones.iter().filter(|t| t.stage == Stage::PhotonAddition) {
            for t2 in self.tones.iter().filter(|t| t.stage == Stage::Reset && t.target == t1.target) {
                worst = worst.max((t1.frequency_mhz + t2.frequency_mhz - self.frequency_sum_mhz).abs());
            }
        }
        worst
    }

    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:>5} {:>6} {:>14} {:>9} {:>9} {:>10} {:>9}",
            "stage", "target", "freq (MHz)", "rel amp", "beta", "Stark kHz", "Rabi kHz"
        );
        for t in &self.tones {
            let _ = writeln!(
                s,
                "{:>5} {:>6} {:>14.3} {:>9.4} {:>9.5} {:>10.4} {:>9.2}",
                t.stage.number(),
                t.target,
                t.frequency_mhz,
                t.relative_amplitude,
                t.beta,
                t.stark_shift_khz,
                t.rabi_khz
            );
        }
        let _ = writeln!(s, "total Stark shift {:.4} kHz", self.stark_shift_total_khz);
        let _ = writeln!(s, "w_d1 + w_d2 = {:.3} MHz", self.frequency_sum_mhz);
        s
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Collision {
    pub stage: u8,
    pub target: usize,
    pub frequency_mhz: f64,
    pub reference: String,
    pub reference_mhz: f64,
    pub separation_mhz: f64,
}

/// Tones closer than `guard_mhz` to a mode, a two-photon subharmonic of a
/// transition, or a tone of the other comb.
pub fn collision_check(plan: &DrivePlan, params: &SystemParams, guard_mhz: f64) -> Vec<Collision> {
    let ef = params.omega_q - params.alpha_q;
    let mut refs: Vec<(String, f64)> = vec![
        ("omega_a".into(), params.omega_a),
        ("omega_q".into(), params.omega_q),
        ("omega_r".into(), params.omega_r),
        ("omega_q - alpha".into(), ef),
    ];
    for (name, f) in refs.clone() {
        refs.push((format!("({name})/2"), f / 2.0));
    }
    refs.push(("(2 omega_q - alpha)/2".into(), (params.omega_q + ef) / 2.0));
    let mut out = Vec::new();
    for t in &plan.tones {
        let mut check = |name: String, f: f64| {
            let sep = (t.frequency_mhz - f).abs();
            if sep < guard_mhz {
                out.push(Collision {
                    stage: t.stage.number(),
                    target: t.target,
                    frequency_mhz: t.frequency_mhz,
                    reference: name,
                    reference_mhz: f,
                    separation_mhz: sep,
                });
            }
        };
        for (name, f) in &refs {
            check(name.clone(), *f);
        }
        for o in plan.tones.iter().filter(|o| o.stage != t.stage) {
            check(format!("stage {} tone for |{}>", o.stage.number(), o.target), o.frequency_mhz);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn base_frequencies_from_table_values() {
        let p = SystemParams::default();
        let (b1, b2) = comb_base_frequencies(&p);
        assert_abs_diff_eq!(b1, 4657.9 + 2.0 * 3482.9 - 134.28, epsilon = 1e-9);
        assert_abs_diff_eq!(b1 + b2, p.omega_a + p.omega_r, epsilon = 1e-9);
    }

    #[test]
    fn comb_spacing_is_two_chi_gf() {
        let p = SystemParams::default();
        let f = comb_frequencies(&p, &[1, 3, 5]).unwrap();
        for w in f.windows(2) {
            assert_abs_diff_eq!(w[0].1 - w[1].1, 2.0 * p.chi_gf, epsilon = 1e-9);
            assert_abs_diff_eq!(w[1].2 - w[0].2, 2.0 * p.chi_gf, epsilon = 1e-9);
        }
        assert!(comb_frequencies(&p, &[2]).is_err());
    }

    #[test]
    fn stark_and_rabi_relations() {
        assert_abs_diff_eq!(
            stark_shift(&[0.0033], 134.28).unwrap(),
            2.0 * 134.28e3 * 0.0033f64.powi(2),
            epsilon = 1e-12
        );
        assert_eq!(stark_shift(&[0.0, 0.0], 134.28).unwrap(), 0.0);
        let one = stark_shift(&[0.002, 0.001], 100.0).unwrap();
        let two = stark_shift(&[0.004, 0.001], 100.0).unwrap();
        assert_abs_diff_eq!(two - one, 3.0 * stark_shift(&[0.002], 100.0).unwrap(), epsilon = 1e-12);
        assert!(stark_shift(&[0.1], 0.0).is_err());
        assert_abs_diff_eq!(rabi_from_stark(3.0, 1.12, 0).unwrap(), 3360f64.sqrt(), epsilon = 1e-12);
        assert_eq!(rabi_from_stark(0.0, 1.12, 2).unwrap(), 0.0);
        let b = beta_for_rabi(57.0, 1.12, 1, 134.28).unwrap();
        let back = rabi_from_stark(stark_shift(&[b], 134.28).unwrap(), 1.12, 1).unwrap();
        assert_abs_diff_eq!(back, 57.0, epsilon = 1e-10);
    }

    #[test]
    fn plan_invariants() {
        let p = SystemParams::default();
        let plan = plan_drives(&p, &DriveConfig::default()).unwrap();
        assert_eq!(plan.tones.len(), 6);
        assert!(plan.frequency_sum_defect() < 1e-9);
        for t in plan.tones.iter().filter(|t| t.stage == Stage::PhotonAddition) {
            assert_abs_diff_eq!(t.relative_amplitude * ((2 * t.n + 1) as f64).sqrt(), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(t.rabi_khz, 55.0, epsilon = 1e-9);
        }
        for t in plan.tones.iter().filter(|t| t.stage == Stage::Reset) {
            assert_eq!(t.relative_amplitude, 1.0);
            assert_abs_diff_eq!(t.rabi_khz, 160.0, epsilon = 1e-9);
        }
        assert!(plan.table().contains("total Stark shift"));
    }

    #[test]
    fn collisions() {
        let mut p = SystemParams::default();
        let plan = plan_drives(&p, &DriveConfig::default()).unwrap();
        assert!(collision_check(&plan, &p, 10.0).is_empty());
        assert!(collision_check(&plan, &p, 0.0).is_empty());
        p.omega_r = plan.tones[0].frequency_mhz;
        let hits = collision_check(&plan, &p, 10.0);
        assert!(hits.iter().any(|c| c.reference == "omega_r" && c.separation_mhz == 0.0));
    }
}
