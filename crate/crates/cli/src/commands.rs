use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use cusplab::blowup::{blow_down, chart_field, matching_map, ChartId, ChartPoint};
use cusplab::cusp::StatePoint;
use cusplab::odeflow::{integrate_to_section_recorded, Direction};
use cusplab::sdi::{endpoints_for_sections, sdi_closed, sdi_quadrature, transition_sdi};
use cusplab::transition::{
    fold_exponent_fit, fold_point, layer_study, sweep_eps, SweepReport, CSV_HEADER,
};
use cusplab::verify::{run_all, run_criterion, VerifyConfig, VerifyReport, SUITE_BUDGET};
use cusplab::Error;

use crate::config::RunConfig;
use crate::CliError;

const GIT_DESCRIBE: &str = env!("CUSPLAB_GIT_DESCRIBE");
const QUAD_TOL: f64 = 1e-12;
const SDI_CHECK: f64 = 1e-6;
const FOLD_SLOPE: (f64, f64) = (0.60, 0.73);

fn meta(cfg: &RunConfig) -> Value {
    json!({
        "tool": "cusplab",
        "version": env!("CARGO_PKG_VERSION"),
        "git_describe": GIT_DESCRIBE,
        "rtol": cfg.rtol,
        "atol": cfg.atol,
        "a_minus": cfg.a_minus,
        "a_plus": cfg.a_plus,
        "config": cfg,
    })
}

fn out_dir(cfg: &RunConfig) -> Result<&Path, CliError> {
    std::fs::create_dir_all(&cfg.out).map_err(|e| {
        CliError::Usage(format!(
            "cannot create output directory {}: {e}",
            cfg.out.display()
        ))
    })?;
    Ok(&cfg.out)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    std::fs::write(&path, contents)
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

fn write_json(dir: &Path, name: &str, v: &Value) -> Result<PathBuf, CliError> {
    let mut text = serde_json::to_string_pretty(v).expect("json values serialize");
    text.push('\n');
    write(dir, name, &text)
}

/// Prints `-0` as `0`.
fn tidy(x: f64) -> f64 {
    x + 0.0
}

fn tuple(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| tidy(*x).to_string()).collect();
    format!("({})", parts.join(", "))
}

pub fn simulate(cfg: &RunConfig) -> Result<(), CliError> {
    let p = &cfg.simulate;
    if !(p.eps > 0.0 && p.eps.is_finite()) {
        return Err(Error::Domain(format!("eps must satisfy ε > 0, got {}", p.eps)).into());
    }
    if p.z0.is_nan() || p.z0 <= 0.0 {
        return Err(
            Error::Domain(format!("the entry section Σ⁻ needs z0 > 0, got {}", p.z0)).into(),
        );
    }
    let start = StatePoint::new(-cfg.a_minus, p.b, p.z0, p.eps)?;
    let system = cfg.system()?;
    let setup = cfg.setup()?;
    let dir = out_dir(cfg)?;
    let sec = setup.exit_section();
    let t_max = 10.0 * (cfg.a_minus + cfg.a_plus) / p.eps + 1e3;
    let (hit, traj) = integrate_to_section_recorded(
        &system.fast_field(),
        start.to_array(),
        &sec,
        Direction::Increasing,
        &setup.opts,
        t_max,
    )?;
    let csv = write(dir, "trajectory.csv", &traj.to_csv())?;
    let summary = json!({
        "meta": meta(cfg),
        "system": system.label(),
        "start": start.to_array(),
        "hit": { "t": hit.t, "state": hit.state, "residual": hit.residual(&sec) },
        "samples": traj.samples().len(),
    });
    write_json(dir, "simulate.json", &summary)?;
    println!(
        "hit Σ⁺ at τ = {} : (a, b, z, eps) = {}",
        hit.t,
        tuple(&hit.state)
    );
    println!(
        "{} samples written to {}",
        traj.samples().len(),
        csv.display()
    );
    Ok(())
}

pub fn sweep(cfg: &RunConfig) -> Result<(), CliError> {
    let p = &cfg.sweep;
    let system = cfg.system()?;
    let setup = cfg.setup()?;
    let dir = out_dir(cfg)?;
    let mut reports: Vec<SweepReport> = Vec::new();
    for &b in &p.b {
        let mut r = sweep_eps(&system, b, p.z0, &p.eps, &setup)?;
        if p.target_offset != 0.0 {
            r.retarget(r.target_i + p.target_offset);
        }
        reports.push(r);
    }
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for r in &reports {
        for line in r.to_csv().lines().skip(1) {
            let _ = writeln!(csv, "{line}");
        }
    }
    write(dir, "sweep.csv", &csv)?;
    let doc = json!({
        "meta": meta(cfg),
        "sweeps": reports.iter().map(|r| r.to_json(Value::Null)).collect::<Vec<_>>(),
    });
    write_json(dir, "sweep.json", &doc)?;
    let mut bad = Vec::new();
    for r in &reports {
        let devs: Vec<String> = r
            .deviations()
            .iter()
            .map(|d| d.map_or("failed".into(), |d| format!("{d:.4e}")))
            .collect();
        println!(
            "b = {}: target I = {:.6}, deviations [{}], monotone = {}",
            r.b,
            r.target_i,
            devs.join(", "),
            r.is_monotone()
        );
        if r.failed_rows() > 0 {
            println!(
                "  {} row(s) failed and are flagged in the report",
                r.failed_rows()
            );
        }
        if !r.is_monotone() {
            bad.push(r.b);
        }
    }
    if bad.is_empty() {
        Ok(())
    } else {
        Err(CliError::Check(format!(
            "deviations are not strictly decreasing at b = {bad:?}"
        )))
    }
}

pub fn layers(cfg: &RunConfig) -> Result<(), CliError> {
    let p = &cfg.layers;
    let system = cfg.system()?;
    let setup = cfg.setup()?;
    let dir = out_dir(cfg)?;
    let mut rows = Vec::new();
    for &eps in &p.eps {
        rows.extend(layer_study(
            &system,
            eps,
            &p.mu,
            cfg.layer_l,
            cfg.layer_m,
            &setup,
        )?);
    }
    let mut csv = String::from(
        "eps,mu,b0,inner,plus_lateral,minus_lateral,b1_exit,escaped,rate_num,failed\n",
    );
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{}",
            r.eps,
            r.mu,
            r.b0,
            r.label.inner,
            r.label.plus_lateral,
            r.label.minus_lateral,
            r.b1_exit.map_or(String::new(), |x| x.to_string()),
            r.escaped,
            r.estimate
                .as_ref()
                .map_or(String::new(), |e| e.rate_num.to_string()),
            r.error.is_some()
        );
    }
    write(dir, "layers.csv", &csv)?;
    write_json(
        dir,
        "layers.json",
        &json!({ "meta": meta(cfg), "rows": rows }),
    )?;
    let max_b1 = rows
        .iter()
        .filter(|r| r.label.inner)
        .filter_map(|r| r.b1_exit)
        .fold(0.0, |m: f64, x| m.max(x.abs()));
    let escaped = rows.iter().filter(|r| r.label.inner && r.escaped).count();
    println!(
        "{} runs, max |b1| over inner-layer runs = {max_b1:.4} (bound 2M = {})",
        rows.len(),
        2.0 * cfg.layer_m
    );
    if escaped > 0 {
        return Err(CliError::Check(format!(
            "{escaped} inner-layer run(s) left |b1| ≤ 2M"
        )));
    }
    Ok(())
}

pub fn fold(cfg: &RunConfig) -> Result<(), CliError> {
    let opts = cfg.options()?;
    let dir = out_dir(cfg)?;
    let fit = fold_exponent_fit(&cfg.fold.eps, &opts)?;
    let mut csv = String::from("eps,a_hit,z_hit,offset\n");
    for p in &fit.passages {
        let _ = writeln!(csv, "{},{},{},{}", p.eps, p.a_hit, p.z_hit, p.offset);
    }
    write(dir, "fold.csv", &csv)?;
    let (a_fold, z_fold) = fold_point();
    let far = fit
        .passages
        .iter()
        .filter(|p| (p.a_hit - a_fold).abs() >= 0.1 || (p.z_hit - z_fold).abs() >= 0.1)
        .count();
    let slope_ok = FOLD_SLOPE.0 <= fit.slope && fit.slope <= FOLD_SLOPE.1;
    write_json(
        dir,
        "fold.json",
        &json!({
            "meta": meta(cfg),
            "fold_point": [a_fold, z_fold],
            "slope": fit.slope,
            "slope_range": [FOLD_SLOPE.0, FOLD_SLOPE.1],
            "passages": fit.passages,
        }),
    )?;
    println!(
        "fitted exponent {:.4} over {} runs",
        fit.slope,
        fit.passages.len()
    );
    if !slope_ok {
        return Err(CliError::Check(format!(
            "exponent {} outside [{}, {}]",
            fit.slope, FOLD_SLOPE.0, FOLD_SLOPE.1
        )));
    }
    if far > 0 {
        return Err(CliError::Check(format!(
            "{far} jump(s) farther than 0.1 from the fold point"
        )));
    }
    Ok(())
}

fn parse_point(s: &str) -> Result<[f64; 4], CliError> {
    let vals: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Usage(format!("bad --point '{s}': {e}")))?;
    vals.try_into()
        .map_err(|_| CliError::Usage(format!("--point needs 4 values r,c1,c2,c3, got '{s}'")))
}

pub fn chart(cfg: &RunConfig, chart: &str, point: &str, to: Option<&str>) -> Result<(), CliError> {
    let id: ChartId = chart.parse()?;
    let target: Option<ChartId> = to.map(str::parse).transpose()?;
    let p = ChartPoint::from_array(id, &parse_point(point)?)?;
    let system = cfg.system()?;
    let field = chart_field(id, &system).eval_point(&p)?;
    println!("point: {p}");
    println!("field: {}", tuple(&field));
    println!("blow-down: {}", tuple(&blow_down(&p).to_array()));
    if let Some(t) = target {
        let q = matching_map(id, t, &p)?;
        let back = matching_map(t, id, &q)?;
        println!("matched: {q}");
        println!("round trip: {back}");
    }
    Ok(())
}

pub fn sdi(cfg: &RunConfig) -> Result<(), CliError> {
    let p = &cfg.sdi;
    let b = p.b;
    let (closed, quad, z_en, z_ex) = match (p.z_en, p.z_ex) {
        (Some(z_en), Some(z_ex)) => {
            let quad = sdi_quadrature(b, z_en, z_ex, QUAD_TOL)?;
            (sdi_closed(b, z_en, z_ex)?, quad, z_en, z_ex)
        }
        (None, None) => {
            let (z_en, z_ex) = endpoints_for_sections(cfg.a_minus, cfg.a_plus, b)?;
            let closed = transition_sdi(cfg.a_minus, cfg.a_plus, b)?;
            let quad = if b >= 0.0 {
                sdi_quadrature(b, z_en, z_ex, QUAD_TOL)?
            } else {
                let zf = (-b / 3.0).sqrt();
                sdi_quadrature(b, z_en, zf * (1.0 + 1e-9), QUAD_TOL)?
                    + sdi_quadrature(b, -2.0 * zf, z_ex, QUAD_TOL)?
            };
            (closed, quad, z_en, z_ex)
        }
        _ => {
            return Err(CliError::Usage(
                "give both --z-en and --z-ex, or neither".into(),
            ))
        }
    };
    let quad = quad + p.check_offset;
    let diff = (closed - quad).abs();
    println!("b = {b}, z_en = {z_en}, z_ex = {z_ex}");
    println!("closed form  I = {closed:.12}");
    println!("quadrature   I = {quad:.12}");
    println!("difference     = {diff:.3e}");
    if diff > SDI_CHECK {
        return Err(CliError::Check(format!(
            "closed form and quadrature differ by {diff:e}"
        )));
    }
    Ok(())
}

pub fn verify(cfg: &RunConfig) -> Result<(), CliError> {
    let vc = VerifyConfig {
        seed: cfg.seed,
        target_offset: cfg.verify.target_offset,
        setup: cfg.setup()?,
        layer_l: cfg.layer_l,
        layer_m: cfg.layer_m,
    };
    let dir = out_dir(cfg)?;
    let report = if cfg.verify.only.is_empty() {
        run_all(&vc, |c| println!("{c}"))
    } else {
        let started = std::time::Instant::now();
        let mut criteria = Vec::new();
        for &id in &cfg.verify.only {
            let c = run_criterion(id, &vc)
                .ok_or_else(|| CliError::Usage(format!("no criterion {id}; expected 1 to 9")))?;
            println!("{c}");
            criteria.push(c);
        }
        let total_time = started.elapsed().as_secs_f64();
        VerifyReport {
            passed: criteria.iter().all(|c| c.passed) && total_time < SUITE_BUDGET,
            criteria,
            total_time,
        }
    };
    write_json(
        dir,
        "verify.json",
        &json!({ "meta": meta(cfg), "report": report }),
    )?;
    let failed = report.criteria.iter().filter(|c| !c.passed).count();
    if report.passed {
        println!("all criteria passed in {:.1}s", report.total_time);
        Ok(())
    } else {
        Err(CliError::Check(format!(
            "{failed} criterion/criteria failed"
        )))
    }
}
