//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::time::{Duration, Instant};

use prespa_core::budget::{active_budget, passive_budget, ActiveQecParams, PassiveInputs};
use prespa_core::cascade::{
    default_ranges, effective_rate_details, error_state_population, lambda_critical, log_linear_rate, sweep_landscape,
    CascadeMatrix,
};
use prespa_core::codes::{
    binomial_code, cardinal_states, fock01_code, generalized_parity, logical_decay, logical_lifetime, one_over_e_time,
    process_fidelity, state_fidelity,
};
use prespa_core::heating::{evolve_rate_matrix, fit_heating_rate, PopulationSample, RateModel};
use prespa_core::hilbert::{annihilation, c, fock, number, DensityMatrix, ModeDims, QuantumOperator, StateVector};
use prespa_core::model::{build_effective_model, CollapseOp, DriveConfig, LindbladModel, SystemParams, TWO_PI};
use prespa_core::planner::{comb_base_frequencies, rabi_from_stark, stark_shift};
use prespa_core::solver::{conversion_curve, evolve, SolverOptions, TimeGrid};
use prespa_core::tomography::{wigner, WignerGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn within_rel(x: f64, target: f64, tol: f64) -> bool {
    ((x - target) / target).abs() <= tol
}

fn run(id: u32, title: &str, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let t0 = Instant::now();
    let out = f();
    let dt = t0.elapsed();
    let pass = out.pass && dt <= limit;
    println!(
        "{} [{id}] {title}: {} ({:.2} s, limit {} s)",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        dt.as_secs_f64(),
        limit.as_secs()
    );
    pass
}

fn conversion(n0: usize) -> prespa_core::solver::ConversionCurve {
    let grid = TimeGrid::new(0.0, 15.0, 151).unwrap();
    conversion_curve(&SystemParams::default(), &DriveConfig::default(), n0, &grid).unwrap()
}

fn c1() -> Outcome {
    let cv = conversion(0);
    let p = cv.final_value();
    let half = cv.halftime.unwrap_or(f64::NAN);
    Outcome {
        pass: (0.87..=0.95).contains(&p) && (3.0..=5.0).contains(&half),
        detail: format!(
            "P(|1,g>) - P(|1,e>) at 15 us = {p:.4} in [0.87, 0.95], halftime = {half:.3} us in [3, 5] (P(|1,g>) = {:.4})",
            cv.p_ng.last().unwrap()
        ),
    }
}

fn c2() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (n0, band) in [(2usize, (0.73, 0.83)), (4, (0.62, 0.72))] {
        let cv = conversion(n0);
        let p = cv.final_value();
        let pe = *cv.transmon_e.last().unwrap();
        let k12 = cv.times.iter().position(|&t| t >= 12.0).unwrap();
        let drift = (pe - cv.transmon_e[k12]).abs();
        let this = (band.0..=band.1).contains(&p) && (0.02..=0.065).contains(&pe) && drift < 0.005;
        ok &= this;
        parts.push(format!(
            "n={}: {p:.4} in [{}, {}], transmon P_e = {pe:.4} in [0.02, 0.065] (change over last 3 us {drift:.1e})",
            n0 + 1,
            band.0,
            band.1
        ));
    }
    Outcome { pass: ok, detail: parts.join("; ") }
}

fn c3() -> Outcome {
    let kappa = TWO_PI * SystemParams::default().kappa_r;
    let crit = lambda_critical(kappa).unwrap();
    let rel = (crit.numeric / (kappa / 4.0) - 1.0).abs();
    let (r1, r2) = default_ranges(kappa, 200);
    let land = sweep_landscape(r1, r2, kappa, 200).unwrap();
    let best = land.argmax_non_oscillatory().unwrap();
    let (x, y) = (best.omega1 / (kappa / 13.0), best.omega2 / (kappa / 4.0));
    Outcome {
        pass: rel <= 1e-4 && (x - 1.0).abs() <= 0.2 && (y - 1.0).abs() <= 0.2,
        detail: format!(
            "coalescence at {:.6} kappa/4 (rel {rel:.1e} <= 1e-4); argmax at ({x:.3} kappa/13, {y:.3} kappa/4), within 20%",
            crit.numeric / (kappa / 4.0)
        ),
    }
}

fn c4() -> Outcome {
    let kappa = TWO_PI * SystemParams::default().kappa_r;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let mut n = 0;
    while n < 10 {
        let w1 = kappa * rng.random_range(0.01..0.125);
        let w2 = kappa * rng.random_range(0.25..0.5);
        let m = CascadeMatrix::new(w1, w2, kappa);
        let d = effective_rate_details(&m).unwrap();
        if !d.oscillatory {
            continue;
        }
        let ts: Vec<f64> = (0..200).map(|k| (2.0 + 6.0 * k as f64 / 199.0) / d.rate).collect();
        let fit = log_linear_rate(&ts, &error_state_population(&m, &ts)).unwrap();
        worst = worst.max((fit / d.rate - 1.0).abs());
        n += 1;
    }
    Outcome {
        pass: worst <= 0.15,
        detail: format!("10 underdamped points, worst relative mismatch {worst:.2e} <= 0.15"),
    }
}

fn c5() -> Outcome {
    let p = SystemParams::default();
    let dims = ModeDims::single(12).unwrap();
    let opts = SolverOptions::default();
    let grid = TimeGrid::new(0.0, 600.0, 121).unwrap();
    let corrected = build_effective_model(0.25, &p, dims).unwrap();
    let uncorrected = build_effective_model(0.0, &p, dims).unwrap();
    let (_, fb) = logical_lifetime(&corrected, &binomial_code(dims).unwrap(), &grid, None, opts).unwrap();
    let (_, ff) = logical_lifetime(&uncorrected, &fock01_code(dims).unwrap(), &grid, None, opts).unwrap();
    let fine = TimeGrid::new(0.0, 400.0, 401).unwrap();
    let du = logical_decay(&uncorrected, &binomial_code(dims).unwrap(), &fine, opts).unwrap();
    let t_unc = one_over_e_time(&du).unwrap_or(f64::NAN);
    let dc = logical_decay(&corrected, &binomial_code(dims).unwrap(), &fine, opts).unwrap();
    let t_cor = one_over_e_time(&dc).unwrap_or(f64::INFINITY);
    let ratio = fb.tau_process / ff.tau_process;
    Outcome {
        pass: within_rel(fb.tau_process, 191.0, 0.25) && within_rel(t_unc, 87.0, 0.25) && ratio > 0.9 && t_cor > t_unc,
        detail: format!(
            "tau_process = {:.1} us (191 +/- 25%), uncorrected 1/e = {t_unc:.1} us (87 +/- 25%), corrected/Fock01 = {ratio:.3} > 0.9 (Fock01 {:.1} us)",
            fb.tau_process, ff.tau_process
        ),
    }
}

fn c6() -> Outcome {
    let p = SystemParams::default();
    let pb = passive_budget(&p, &PassiveInputs::default()).unwrap();
    let ab = active_budget(&p, &ActiveQecParams::default(), 3.0).unwrap();
    let (dl, ar, uc) = (pb.rate("double_photon_loss"), pb.rate("ancilla_relaxation"), pb.rate("unwanted_corrections"));
    let ir = ab.rate("imperfect_recovery");
    let flagged = ab.get("unwanted_corrections").unwrap().flag.is_some()
        && ab.get("storage_nonlinearity").unwrap().flag.is_some()
        && pb.get("storage_nonlinearity").unwrap().flag.is_some();
    Outcome {
        pass: within_rel(dl, 1.8, 0.15)
            && within_rel(ar, 0.6, 0.15)
            && (0.5..=2.0).contains(&(uc / 0.4))
            && within_rel(ir, 2.6, 0.10)
            && flagged,
        detail: format!(
            "passive double loss {dl:.3}, ancilla {ar:.3}, unwanted {uc:.3}; active imperfect recovery {ir:.3} (1/ms); discrepant rows flagged: {flagged}"
        ),
    }
}

fn c7() -> Outcome {
    let p = SystemParams::default();
    let ss = stark_shift(&[0.0033], p.alpha_q).unwrap();
    let o1 = rabi_from_stark(ss, p.chi_ge, 0).unwrap();
    let o2 = rabi_from_stark(32.0, p.chi_qr, 0).unwrap();
    let (f1, f2) = comb_base_frequencies(&p);
    let pass = within_rel(ss, 3.0, 0.10)
        && within_rel(o1, 57.0, 0.05)
        && within_rel(o2, 190.0, 0.05)
        && (f1 - 11490.0).abs() <= 1.0
        && (f2 - 1890.0).abs() <= 1.0;
    Outcome {
        pass,
        detail: format!(
            "Stark {ss:.4} kHz, Omega1 {o1:.2} kHz, Omega2 {o2:.2} kHz, comb carriers {f1:.2} MHz (|d| {:.2}) / {f2:.2} MHz (|d| {:.2}) vs 11490 / 1890 +/- 1",
            (f1 - 11490.0).abs(),
            (f2 - 1890.0).abs()
        ),
    }
}

fn c8() -> Outcome {
    let ts = [0.0, 75.0, 175.0, 275.0];
    let m = RateModel::new(50.0, 31.0, 0.02).unwrap();
    let fwd = evolve_rate_matrix(&m, &[0.97, 0.01, 0.02], &ts).unwrap();
    let samples: Vec<PopulationSample> =
        ts.iter().zip(&fwd).map(|(&t, p)| PopulationSample { t, g: p[0], e: p[1], f: p[2] }).collect();
    let fit = fit_heating_rate(&samples, 50.0, 31.0).unwrap();
    let ss = m.steady_state();
    let db = (ss[1] / ss[0] - m.r).abs();
    let eq = |pe: f64| {
        let s: Vec<PopulationSample> = ts.iter().map(|&t| PopulationSample { t, g: 1.0 - pe, e: pe, f: 0.0 }).collect();
        fit_heating_rate(&s, 50.0, 31.0).unwrap().gamma_up_per_ms
    };
    let (base, driven) = (eq(0.017), eq(0.038));
    Outcome {
        pass: within_rel(fit.r, 0.02, 0.01) && db <= 1e-8 && within_rel(base, 0.3, 0.3) && within_rel(driven, 0.7, 0.3),
        detail: format!(
            "recovered r = {:.6}; |p_e/p_g - r| = {db:.1e}; gamma_up baseline {base:.3} /ms (0.3), driven {driven:.3} /ms (0.7)",
            fit.r
        ),
    }
}

fn random_model(rng: &mut ChaCha8Rng, n: usize) -> LindbladModel {
    let dims = ModeDims::single(n).unwrap();
    let num = number(n).unwrap();
    let a = annihilation(n).unwrap();
    let h = &num.scale_re(rng.random_range(-1.0..1.0)) + &(&a + &a.dagger()).scale_re(rng.random_range(0.0..1.0));
    let ops = vec![
        CollapseOp { label: "loss".into(), op: a.scale_re(rng.random_range(0.1..1.0)) },
        CollapseOp { label: "dephasing".into(), op: num.scale_re(rng.random_range(0.0..0.5)) },
    ];
    LindbladModel::new(h, ops, QuantumOperator::identity(dims)).unwrap()
}

fn c9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut ok = true;
    let mut notes = Vec::new();

    let mut worst_trace: f64 = 0.0;
    let mut worst_herm: f64 = 0.0;
    let mut worst_eig: f64 = 0.0;
    for _ in 0..5 {
        let m = random_model(&mut rng, 6);
        let psi = StateVector::from_fock_amplitudes(6, &[(0, c(0.6, 0.0)), (2, c(0.0, 0.8))]).unwrap();
        let traj = evolve(&m, &DensityMatrix::pure(&psi), &TimeGrid::new(0.0, 3.0, 7).unwrap()).unwrap();
        for rho in &traj.states {
            worst_trace = worst_trace.max((rho.trace() - 1.0).abs());
            worst_herm = worst_herm.max(rho.hermiticity_defect());
            worst_eig = worst_eig.min(rho.min_eigenvalue());
        }
    }
    let solver_ok = worst_trace < 1e-8 && worst_herm < 1e-10 && worst_eig > -1e-8;
    ok &= solver_ok;
    notes.push(format!("solver trace {worst_trace:.1e}, hermiticity {worst_herm:.1e}, min eig {worst_eig:.1e}"));

    let code = binomial_code(ModeDims::single(10).unwrap()).unwrap();
    let rho = DensityMatrix::pure(&code.zero_l);
    let map = wigner(&rho, &WignerGrid::default()).unwrap();
    let norm_err = (map.integral() - 1.0).abs();
    ok &= norm_err <= 0.02;
    notes.push(format!("Wigner normalization error {norm_err:.1e}"));

    let lin_ok = [0.0, 0.25, 0.5, 0.75, 1.0].iter().all(|&f| process_fidelity(f).unwrap() == 0.25 + 1.5 * (f - 0.5));
    ok &= lin_ok;

    let dims = ModeDims::single(10).unwrap();
    let p2 = generalized_parity(2, dims).unwrap();
    let parity_ok = (0..10).all(|n| {
        let v = p2.apply(&fock(n, 10).unwrap()).unwrap();
        v[n] == c(if n % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
    });
    let states = cardinal_states(&code).unwrap();
    let cw_ok = code.zero_l.inner(&code.one_l).norm() == 0.0
        && code.has_equal_nbar()
        && states.iter().all(|s| (state_fidelity(&DensityMatrix::pure(s), s).unwrap() - 1.0).abs() < 1e-15);
    ok &= parity_ok && cw_ok;
    notes.push(format!("process map exact {lin_ok}, parity exact {parity_ok}, codewords {cw_ok}"));
    Outcome { pass: ok, detail: notes.join("; ") }
}

fn main() {
    let secs = Duration::from_secs;
    let results = [
        run(1, "conversion from |0,g,0>", secs(30), c1),
        run(2, "conversion from |2,g,0> and |4,g,0>", secs(120), c2),
        run(3, "critical damping and rate landscape", secs(60), c3),
        run(4, "cascade rate vs direct evolution", secs(30), c4),
        run(5, "logical lifetime and breakeven", secs(300), c5),
        run(6, "error budget", secs(1), c6),
        run(7, "drive planning", secs(1), c7),
        run(8, "heating model", secs(5), c8),
        run(9, "property suite", secs(180), c9),
    ];
    let failed = results.iter().filter(|&&p| !p).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
