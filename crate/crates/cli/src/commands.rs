use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use prespa_core::budget::{active_budget, compare, passive_budget, simulated_recovery_loss};
use prespa_core::cascade::{lambda_critical, sweep_landscape};
use prespa_core::codes::{
    binomial_code, cardinal_coefficients, fock01_code, logical_decay, logical_lifetime, one_over_e_time, LogicalCode,
    CARDINAL_LABELS,
};
use prespa_core::heating::{fit_heating_rate, read_population_csv, solve_populations, PopulationSample};
use prespa_core::hilbert::{DensityMatrix, ModeDims};
use prespa_core::io::json_float;
use prespa_core::model::{build_effective_model_with, EffectiveOptions, TWO_PI};
use prespa_core::planner::{collision_check, plan_drives};
use prespa_core::solver::{conversion_curve_with, evolve_with, ConversionSetup, TimeGrid};
use prespa_core::tomography::wigner as wigner_map;

use crate::config::{CodeChoice, RunConfig, SimulateMode};

const UNITS: &str = "time us; frequencies cyclic MHz (Rabi rates, Kerr, Stark shifts kHz); \
                     sweep rates angular rad/us; budget and heating rates 1/ms unless a field says otherwise";

/// Output directory plus the metadata every file carries.
pub struct Output {
    dir: PathBuf,
    command: String,
    config_sha256: String,
}

impl Output {
    pub fn new(dir: &Path, command: &str, cfg: &RunConfig) -> anyhow::Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Output { dir: dir.to_path_buf(), command: command.into(), config_sha256: cfg.sha256() })
    }

    fn header(&self) -> Vec<String> {
        vec![
            format!("prespa {}", env!("CARGO_PKG_VERSION")),
            format!("command {}", self.command),
            format!("config_sha256 {}", self.config_sha256),
            format!("units {UNITS}"),
        ]
    }

    fn metadata(&self) -> Value {
        json!({
            "tool": "prespa",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "config_sha256": self.config_sha256,
            "units": UNITS,
        })
    }

    fn create(&self, name: &str) -> anyhow::Result<BufWriter<File>> {
        let path = self.dir.join(name);
        let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok(BufWriter::new(f))
    }

    fn json<T: Serialize>(&self, name: &str, result: &T) -> anyhow::Result<()> {
        let doc = json!({ "metadata": self.metadata(), "result": serde_json::to_value(result)? });
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, &doc)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    fn csv(
        &self,
        name: &str,
        write: impl FnOnce(&mut BufWriter<File>, &[String]) -> prespa_core::Result<()>,
    ) -> anyhow::Result<()> {
        let mut w = self.create(name)?;
        write(&mut w, &self.header())?;
        w.flush()?;
        Ok(())
    }

    fn text(&self, name: &str, body: &str) -> anyhow::Result<()> {
        let mut w = self.create(name)?;
        for line in self.header() {
            writeln!(w, "# {line}")?;
        }
        w.write_all(body.as_bytes())?;
        w.flush()?;
        Ok(())
    }
}

fn opt(v: Option<f64>) -> Value {
    v.map_or(Value::Null, json_float)
}

fn code_for(choice: CodeChoice, dims: ModeDims) -> prespa_core::Result<LogicalCode> {
    match choice {
        CodeChoice::Binomial => binomial_code(dims),
        CodeChoice::Fock01 => fock01_code(dims),
    }
}

pub fn simulate(cfg: &RunConfig, out: &Output) -> anyhow::Result<()> {
    match cfg.simulate.mode {
        SimulateMode::Conversion => simulate_conversion(cfg, out),
        SimulateMode::Logical => simulate_logical(cfg, out),
    }
}

fn simulate_conversion(cfg: &RunConfig, out: &Output) -> anyhow::Result<()> {
    let setup = ConversionSetup { dims: cfg.dims, options: cfg.simulate.options.clone(), solver: cfg.solver };
    let curves = cfg
        .simulate
        .initial_fock
        .par_iter()
        .map(|&n| conversion_curve_with(&cfg.system, &cfg.drives, n, &cfg.simulate.grid, &setup))
        .collect::<prespa_core::Result<Vec<_>>>()?;
    let mut summary = Vec::new();
    for c in &curves {
        let n = c.initial_fock;
        out.csv(&format!("conversion_fock{n}.csv"), |w, h| c.table().write_csv(w, h))?;
        let t_end = *c.times.last().unwrap_or(&f64::NAN);
        println!(
            "|{n},g> -> |{},g>: converted({t_end} us) = {:.4}, halftime = {}, transmon P_e = {:.4}",
            n + 1,
            c.final_value(),
            c.halftime.map_or("none".to_string(), |t| format!("{t:.3} us")),
            c.transmon_e.last().copied().unwrap_or(f64::NAN),
        );
        summary.push(json!({
            "initial_fock": n,
            "final_time_us": json_float(t_end),
            "final_converted": json_float(c.final_value()),
            "halftime_us": opt(c.halftime),
            "final_transmon_e": json_float(c.transmon_e.last().copied().unwrap_or(f64::NAN)),
            "final_transmon_f": json_float(c.transmon_f.last().copied().unwrap_or(f64::NAN)),
            "max_trace_drift": json_float(c.max_trace_drift),
        }));
    }
    out.json("simulate.json", &json!({ "mode": "conversion", "curves": summary }))
}

fn simulate_logical(cfg: &RunConfig, out: &Output) -> anyhow::Result<()> {
    let l = &cfg.lifetime;
    let dims = ModeDims::single(l.n_cav)?;
    let model = build_effective_model_with(l.kappa_cor, &cfg.system, dims, &l.options)?;
    let code = code_for(l.code, dims)?;
    let decay = logical_decay(&model, &code, &cfg.simulate.logical_grid, cfg.solver)?;
    out.csv("logical_decay.csv", |w, h| decay.table().write_csv(w, h))?;
    let t_e = one_over_e_time(&decay);
    println!(
        "{} code, kappa_cor = {} /us: process fidelity 1/e time = {}",
        code.name,
        l.kappa_cor,
        t_e.map_or("beyond grid".to_string(), |t| format!("{t:.1} us"))
    );
    out.json(
        "simulate.json",
        &json!({
            "mode": "logical",
            "code": code.name,
            "kappa_cor": l.kappa_cor,
            "frame_detuning": json_float(decay.frame_detuning),
            "logical_frequency": json_float(decay.logical_frequency),
            "one_over_e_us": opt(t_e),
            "final_process_fidelity": json_float(decay.process().last().copied().unwrap_or(f64::NAN)),
        }),
    )
}

pub fn sweep(cfg: &RunConfig, out: &Output) -> anyhow::Result<()> {
    let s = &cfg.sweep;
    let kappa = TWO_PI * cfg.system.kappa_r;
    let r1 = (s.omega1_range[0] * kappa, s.omega1_range[1] * kappa);
    let r2 = (s.omega2_range[0] * kappa, s.omega2_range[1] * kappa);
    let land = sweep_landscape(r1, r2, kappa, s.n_grid)?;
    out.csv("landscape.csv", |w, h| land.write_csv(w, h))?;
    let best = land.argmax_non_oscillatory();
    let crit = lambda_critical(kappa)?;
    match best {
        Some(b) => println!(
            "argmax (non-oscillatory): omega1 = kappa/{:.2}, omega2 = kappa/{:.2}, rate = {:.6} /us",
            kappa / b.omega1,
            kappa / b.omega2,
            b.rate
        ),
        None => println!("no non-oscillatory point on the grid"),
    }
    println!("critical damping (omega1 = 0): omega2 = {:.6} (kappa/4 = {:.6})", crit.numeric, crit.analytic);
    let argmax = best.map(|b| {
        json!({
            "omega1": json_float(b.omega1),
            "omega2": json_float(b.omega2),
            "omega1_over_kappa": json_float(b.omega1 / kappa),
            "omega2_over_kappa": json_float(b.omega2 / kappa),
            "rate": json_float(b.rate),
        })
    });
    let oscillatory = land.bifurcation_mask.iter().flatten().filter(|&&m| m).count();
    out.json(
        "sweep.json",
        &json!({
            "kappa": json_float(kappa),
            "n_grid": s.n_grid,
            "points": s.n_grid * s.n_grid,
            "oscillatory_points": oscillatory,
            "argmax_non_oscillatory": argmax,
            "critical_damping": crit,
        }),
    )
}

pub fn lifetime(cfg: &RunConfig, out: &Output) -> anyhow::Result<()> {
    let l = &cfg.lifetime;
    let dims = ModeDims::single(l.n_cav)?;
    let model = build_effective_model_with(l.kappa_cor, &cfg.system, dims, &l.options)?;
    let code = code_for(l.code, dims)?;
    let window = l.window.map(|[a, b]| (a, b));
    let (decay, fit) = logical_lifetime(&model, &code, &l.grid, window, cfg.solver)?;
    out.csv("lifetime_decay.csv", |w, h| decay.table().write_csv(w, h))?;
    println!(
        "{} code: T_p = {:.1} us, T_eq = {:.1} us, tau_process = {:.1} us",
        code.name, fit.t_p, fit.t_eq, fit.tau_process
    );
    out.json(
        "lifetime.json",
        &json!({
            "code": code.name,
            "kappa_cor": l.kappa_cor,
            "fit": fit,
            "fit_residuals": { "pole": json_float(fit.pole.rms_residual), "equator": json_float(fit.equator.rms_residual) },
            "one_over_e_us": opt(one_over_e_time(&decay)),
            "frame_detuning": json_float(decay.frame_detuning),
        }),
    )
}

pub fn budget(cfg: &RunConfig, out: &Output) -> anyhow::Result<()> {
    let b = &cfg.budget;
    let passive = passive_budget(&cfg.system, &b.passive)?;
    let active = active_budget(&cfg.system, &b.active, b.active_nbar)?;
    let cmp = compare(&passive, &active);
    let simulated = if b.simulate_recovery {
        Some(simulated_recovery_loss(&cfg.system, b.passive.kappa_cor, b.recovery_n_cav)?)
    } else {
        None
    };
    let mut table = cmp.table();
    if let Some(s) = simulated {
        table.push_str(&format!("simulated passive recovery loss: {s:.4} 1/ms\n"));
    }
    print!("{table}");
    out.text("budget.txt", &table)?;
    out.json("budget.json", &json!({ "comparison": cmp, "simulated_recovery_loss": opt(simulated) }))
}

pub fn wigner(cfg: &RunConfig, out: &Output) -> anyhow::Result<()> {
    let w = &cfg.wigner;
    let dims = ModeDims::single(w.n_cav)?;
    let code = binomial_code(dims)?;
    let k = CARDINAL_LABELS.iter().position(|l| *l == w.state).expect("validated label");
    let (c0, c1) = cardinal_coefficients()[k];
    let mut rho = DensityMatrix::pure(&code.logical_state(c0, c1)?);
    if w.time_us > 0.0 {
        let model = build_effective_model_with(w.kappa_cor, &cfg.system, dims, &EffectiveOptions::default())?;
        let traj = evolve_with(&model, &rho, &TimeGrid::new(0.0, w.time_us, 2)?, cfg.solver)?;
        rho = traj.final_state().cloned().expect("two recorded states");
    }
    let map = wigner_map(&rho, &w.grid)?;
    out.csv("wigner.csv", |f, h| map.write_csv(f, h))?;
    let mut pgm = out.create("wigner.pgm")?;
    map.write_pgm(&mut pgm)?;
    pgm.flush()?;
    let (lo, hi) =
        map.values.iter().flatten().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    println!("W[{} at {} us]: integral = {:.5}, min = {lo:.4}, max = {hi:.4}", w.state, w.time_us, map.integral());
    out.json(
        "wigner.json",
        &json!({
            "state": w.state,
            "time_us": w.time_us,
            "kappa_cor": w.kappa_cor,
            "grid": w.grid,
            "integral": json_float(map.integral()),
            "min": json_float(lo),
            "max": json_float(hi),
            "purity": json_float(rho.purity()),
        }),
    )
}

pub fn plan(cfg: &RunConfig, out: &Output) -> anyhow::Result<()> {
    let plan = plan_drives(&cfg.system, &cfg.drives)?;
    let hits = collision_check(&plan, &cfg.system, cfg.plan.guard_mhz);
    let mut text = plan.table();
    if hits.is_empty() {
        text.push_str(&format!("no collisions within {} MHz\n", cfg.plan.guard_mhz));
    }
    for c in &hits {
        text.push_str(&format!(
            "collision: stage {} tone for |{}> at {:.3} MHz is {:.3} MHz from {} ({:.3} MHz)\n",
            c.stage, c.target, c.frequency_mhz, c.separation_mhz, c.reference, c.reference_mhz
        ));
    }
    print!("{text}");
    out.text("plan.txt", &text)?;
    out.json(
        "plan.json",
        &json!({
            "plan": plan,
            "frequency_sum_defect_mhz": json_float(plan.frequency_sum_defect()),
            "guard_mhz": cfg.plan.guard_mhz,
            "collisions": hits,
        }),
    )
}

#[derive(serde::Deserialize)]
struct RawReadout {
    pump_time_us: f64,
    d1: f64,
    d2: f64,
    d3: f64,
    d4: f64,
}

fn read_samples(cfg: &RunConfig, path: &Path) -> anyhow::Result<Vec<PopulationSample>> {
    let file =
        File::open(path).map_err(prespa_core::Error::from).with_context(|| format!("opening {}", path.display()))?;
    let Some(calib) = &cfg.heating.calib else {
        return Ok(read_population_csv(file)?);
    };
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(file);
    let mut out = Vec::new();
    for row in rdr.deserialize::<RawReadout>() {
        let r = row.map_err(prespa_core::Error::from)?;
        let p = solve_populations([r.d1, r.d2, r.d3, r.d4], calib)?;
        out.push(PopulationSample { t: r.pump_time_us, g: p.g, e: p.e, f: p.f });
    }
    if out.is_empty() {
        return Err(prespa_core::Error::InvalidParameter("readout file has no rows".into()).into());
    }
    Ok(out)
}

pub fn heating_fit(cfg: &RunConfig, out: &Output) -> anyhow::Result<()> {
    let h = &cfg.heating;
    let path = h.data.as_deref().expect("validated");
    let samples = read_samples(cfg, path)?;
    let fit = fit_heating_rate(&samples, h.t1ge, h.t1ef)?;
    println!("r = {:.6}, gamma_up = {:.4} 1/ms (rms residual {:.2e})", fit.r, fit.gamma_up_per_ms, fit.rms_residual);
    out.json("heating.json", &json!({ "samples": samples.len(), "fit": fit }))
}
