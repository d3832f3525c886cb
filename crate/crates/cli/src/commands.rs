//! Subcommand implementations. Each validates its inputs before touching the
//! output directory, so a rejected config leaves no artifacts behind.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use vvlab::background::{box_samples, time_samples, BackgroundFlow, Vec3};
use vvlab::constants::{check_conditions, derive_constants_with};
use vvlab::grid::BoundaryMode;
use vvlab::harness::{self, InitialDifference, SweepConfig};
use vvlab::ode;
use vvlab::scenarios::make_initial_data;
use vvlab::solver::{reconstruct_physical, DtPolicy, Model, RunSettings};

use crate::config::RunConfig;
use crate::output::{csv_row, Output};
use crate::{CliError, Command};

pub fn execute(command: Command, config: &RunConfig, dir: &Path) -> Result<(), CliError> {
    match command {
        Command::Constants => constants(config, dir),
        Command::Background => background(config, dir),
        Command::Simulate => simulate(config, dir, false),
        Command::Euler => simulate(config, dir, true),
        Command::Sweep => sweep(config, dir),
        Command::Ode => ode_command(config, dir),
        Command::Report => report(config, dir),
    }
}

fn constants(config: &RunConfig, dir: &Path) -> Result<(), CliError> {
    let p = config.model.params();
    let dc = derive_constants_with(&p, config.model.constants)?;
    let conditions = check_conditions(&p)?;
    let mut out = Output::create(dir, "constants", config.hash()?)?;
    let rows = [
        ("M1", dc.m1),
        ("M2", dc.m2),
        ("M3", dc.m3),
        ("M4", dc.m4),
        ("eps_star", dc.eps_star),
        ("eta_star", dc.eta_star),
        ("b_star", dc.b_star),
        ("iota", dc.iota),
        ("r", dc.r),
        ("d_star", dc.d_star),
    ];
    let mut csv = String::from("name,value\n");
    for (name, v) in rows {
        csv.push_str(&format!("{name},{v:.16e}\n"));
    }
    out.write("constants.csv", &csv)?;
    out.finish(config.run.seed, None, "ok", json!({ "parameters": p, "constants": dc, "conditions": conditions }))?;
    Ok(())
}

fn background(config: &RunConfig, dir: &Path) -> Result<(), CliError> {
    let v = &config.velocity;
    let dim = config.grid.dim;
    let u0 = v.initial(dim)?;
    let probe = box_samples(dim, 5, v.half_width);
    u0.check_spectral_condition(config.model.kappa, &probe)?;
    let flow = BackgroundFlow::new(u0.clone());
    let times = time_samples(v.t_max, v.time_samples);
    let k_bound = flow.k_matrix_bound(&times, &probe)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.run.seed);
    let mut header: Vec<String> = vec!["t".into()];
    header.extend((1..=dim).map(|i| format!("x{i}")));
    header.extend((1..=dim).map(|i| format!("u{i}")));
    let mut csv = header.join(",") + "\n";
    for &t in &times {
        for _ in 0..v.points {
            let mut x = Vec3::zeros();
            for i in 0..dim {
                x[i] = rng.gen_range(-v.half_width..=v.half_width);
            }
            let u = flow.eval(t, &x)?;
            let mut row = vec![t];
            row.extend((0..dim).map(|i| x[i]));
            row.extend((0..dim).map(|i| u[i]));
            csv.push_str(&csv_row(&row));
            csv.push('\n');
        }
    }
    let mut out = Output::create(dir, "background", config.hash()?)?;
    out.write("background.csv", &csv)?;
    out.finish(config.run.seed, Some(dim < 3), "ok", json!({ "k_bound": k_bound, "affine": u0.is_affine() }))?;
    Ok(())
}

fn build_model(config: &RunConfig) -> Result<Model, CliError> {
    let grid = config.grid.grid()?;
    let flow = match grid.boundary {
        BoundaryMode::PeriodicTest => None,
        BoundaryMode::TruncatedSupport => {
            let u0 = config.velocity.initial(grid.dim)?;
            u0.check_spectral_condition(config.model.kappa, &box_samples(grid.dim, 5, config.grid.half_width))?;
            Some(BackgroundFlow::new(u0))
        }
    };
    Ok(Model::new(grid, config.model.params(), flow, config.solver.options())?)
}

fn simulate(config: &RunConfig, dir: &Path, euler: bool) -> Result<(), CliError> {
    let s = &config.solver;
    if !(s.t_end > 0.0) {
        return Err(CliError::Config(format!("solver t_end must be positive, got {}", s.t_end)));
    }
    let mut model = build_model(config)?;
    if euler {
        model = model.euler();
    }
    let data = make_initial_data(&model.grid, &config.density.profile(), &model.params)?;
    let settings = RunSettings {
        t_end: s.t_end,
        sample_times: vec![s.t_end],
        energy_times: s.energy_times(),
        dt: s.dt.map_or(DtPolicy::Adaptive, DtPolicy::Fixed),
        track_dissipation: !euler,
    };
    let command = if euler { "euler" } else { "simulate" };
    let qualitative = Some(model.grid.qualitative_mode());
    let run = model.run(&data.state, &settings);
    let mut out = Output::create(dir, command, config.hash()?)?;
    let mut run = match run {
        Ok(r) => r,
        Err(vvlab::Error::BlowUp { t }) => {
            out.finish(config.run.seed, qualitative, "blow-up", json!({ "blow_up": t }))?;
            return Err(CliError::BlowUp { t });
        }
        Err(e) => return Err(e.into()),
    };
    let fit = run.energy.fit_envelope(s.iota);
    out.write("energy.csv", &run.energy.to_csv())?;
    out.write("final_state.csv", &state_csv(&model, &run.final_state)?)?;
    let result = json!({
        "epsilon": model.effective_epsilon(),
        "steps": run.stats.steps,
        "clip_events": run.stats.clip_events,
        "mass_initial": run.stats.mass_initial,
        "mass_final": run.stats.mass_final,
        "initial_norms": data.norms,
        "final_z": run.energy.samples.last().map(|e| e.z),
        "dissipation": run.energy.dissipation.last(),
        "decay_fit": fit.as_ref().ok(),
    });
    match fit {
        Ok(_) => {
            out.finish(config.run.seed, qualitative, "ok", result)?;
            Ok(())
        }
        Err(e) => {
            out.finish(config.run.seed, qualitative, "fit-failed", result)?;
            Err(e.into())
        }
    }
}

/// Cell positions, density and physical velocity.
fn state_csv(model: &Model, state: &vvlab::solver::State) -> Result<String, CliError> {
    let d = model.grid.dim;
    let phys = reconstruct_physical(model, state)?;
    let mut header: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    header.push("rho".into());
    header.extend((1..=d).map(|i| format!("u{i}")));
    let mut csv = header.join(",") + "\n";
    for c in 0..model.grid.len() {
        let x = model.grid.position(c);
        let mut row: Vec<f64> = x[..d].to_vec();
        row.push(phys.density[c]);
        row.extend(phys.velocity.iter().map(|u| u[c]));
        csv.push_str(&csv_row(&row));
        csv.push('\n');
    }
    Ok(csv)
}

fn sweep(config: &RunConfig, dir: &Path) -> Result<(), CliError> {
    let sw = &config.sweep;
    if sw.ladder.len() < 3 {
        return Err(CliError::Config(format!("sweep ladder needs at least 3 entries, got {}", sw.ladder.len())));
    }
    if !(sw.t_end > 0.0) {
        return Err(CliError::Config(format!("sweep t_end must be positive, got {}", sw.t_end)));
    }
    let model = build_model(config)?;
    let initial = make_initial_data(&model.grid, &config.density.profile(), &model.params)?.state;
    let qualitative = Some(model.grid.qualitative_mode());
    let cfg = SweepConfig {
        model,
        initial,
        ladder: sw.ladder.clone(),
        t_end: sw.t_end,
        sample_times: sw.sample_times.clone().unwrap_or_else(|| SweepConfig::default_samples(sw.t_end)),
        dt: sw.dt,
    };
    let result = harness::run_sweep(&cfg)?;
    let envelope = harness::fit_envelope(&result, &InitialDifference::default(), sw.iota);
    let mut out = Output::create(dir, "sweep", config.hash()?)?;
    out.write("sweep.csv", &result.to_csv())?;
    let entries: Vec<_> = result
        .entries
        .iter()
        .map(|e| json!({ "epsilon": e.epsilon, "status": e.status, "clip_events": e.clip_events }))
        .collect();
    let failure = result.fit_error.clone().or_else(|| envelope.as_ref().err().map(|e| e.to_string()));
    let body = json!({
        "ladder": result.ladder,
        "times": result.times,
        "dt": result.dt,
        "entries": entries,
        "rates": result.rates,
        "envelope": envelope.as_ref().ok(),
        "fit_error": failure,
    });
    match failure {
        None => {
            out.finish(config.run.seed, qualitative, "ok", body)?;
            Ok(())
        }
        Some(msg) => {
            out.finish(config.run.seed, qualitative, "fit-failed", body)?;
            Err(CliError::Fit(msg))
        }
    }
}

fn ode_command(config: &RunConfig, dir: &Path) -> Result<(), CliError> {
    let o = &config.ode;
    let p = o.params();
    let closed = ode::solve_closed_form(&p)?;
    let numeric = ode::solve_numeric(&p, o.t_end, o.dt)?;
    let mut csv = String::from("t,z_closed,z_numeric\n");
    for (&t, &z) in numeric.times.iter().zip(&numeric.values) {
        let exact = closed.eval(t).unwrap_or(f64::INFINITY);
        csv.push_str(&csv_row(&[t, exact, z]));
        csv.push('\n');
    }
    let finite = |v: f64| if v.is_finite() { json!(v) } else { json!(v.to_string()) };
    let mut out = Output::create(dir, "ode", config.hash()?)?;
    out.write("ode.csv", &csv)?;
    out.finish(
        config.run.seed,
        None,
        "ok",
        json!({
            "params": p,
            "lambda": finite(closed.lambda),
            "global": closed.global,
            "blow_up": closed.blow_up,
            "tail_integrable": closed.tail_integrable,
            "numeric_blow_up": numeric.blow_up,
        }),
    )?;
    Ok(())
}

fn report(config: &RunConfig, dir: &Path) -> Result<(), CliError> {
    let own = Output::manifest_name("report");
    let mut names: Vec<String> = if config.report.inputs.is_empty() {
        match std::fs::read_dir(dir) {
            Ok(rd) => rd
                .filter_map(|e| e.ok())
                .map(|e| e.file_name().to_string_lossy().into_owned())
                .filter(|n| n.ends_with("_manifest.json") && *n != own)
                .collect(),
            Err(_) => vec![],
        }
    } else {
        config.report.inputs.clone()
    };
    names.sort();
    if names.is_empty() {
        return Err(CliError::Precondition(format!("no manifests to merge in {}", dir.display())));
    }
    let mut merged = serde_json::Map::new();
    for n in &names {
        let path = dir.join(n);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Precondition(format!("cannot read {}: {e}", path.display())))?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Precondition(format!("{} is not a manifest: {e}", path.display())))?;
        merged.insert(n.clone(), value);
    }
    let mut out = Output::create(dir, "report", config.hash()?)?;
    let summary = serde_json::to_string_pretty(&json!({ "manifests": merged })).expect("json values serialize");
    out.write("report.json", &(summary + "\n"))?;
    out.finish(config.run.seed, None, "ok", json!({ "merged": names }))?;
    Ok(())
}
