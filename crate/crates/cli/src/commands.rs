//! The five experiment drivers. Every run writes its artifacts under the
//! output directory plus exactly one JSON summary.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::Result;
use serde::Serialize;
use serde_json::json;

use crate::config::{FileConfig, ModeKind};
use crate::setup::{
    build_engine, station_rows, EngineTag, Manifest, TruthRow, MANIFEST_FILE, TRACES_FILE,
};
use hypoloc::align::estimate_shift;
use hypoloc::basin::{map_convergence, ConvergenceMap};
use hypoloc::exec::ExecMode;
use hypoloc::locator::{locate, Mode, Status};
use hypoloc::model::Point;
use hypoloc::wave::{io as seis_io, Propagator, SeismogramSet};

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn status_word(s: Status) -> &'static str {
    match s {
        Status::Converged => "converged",
        Status::Diverged => "diverged",
        Status::MaxIters => "max_iters",
    }
}

fn engine_word(tag: EngineTag) -> &'static str {
    match tag {
        EngineTag::Analytic => "analytic",
        EngineTag::Grid => "grid",
    }
}

pub fn cmd_synth(cfg: &FileConfig, out: &Path, exec: ExecMode) -> Result<()> {
    let (engine, tag) = build_engine(cfg, exec)?;
    let truth = cfg.truth();
    let data = engine.synthesize(&truth)?;
    std::fs::create_dir_all(out)?;
    let csv_paths = seis_io::export_csv(&data, out, "synth")?;
    seis_io::write_binary(&data, &out.join(TRACES_FILE))?;
    let manifest = Manifest {
        run: "synth".to_string(),
        engine: engine_word(tag).to_string(),
        dt_s: data.dt,
        nt: data.nt(),
        record_s: cfg.time.record_s,
        stations: station_rows(cfg),
        truth: TruthRow {
            x_km: truth.xi.x,
            z_km: truth.xi.z,
            tau_s: truth.tau,
            f0_hz: truth.f0,
            amplitude: truth.a,
        },
        binary: TRACES_FILE.to_string(),
        csv: csv_paths
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect(),
    };
    write_json(&out.join(MANIFEST_FILE), &manifest)?;
    println!(
        "synth: {} traces, {} samples at dt = {} s, engine {}",
        data.len(),
        data.nt(),
        data.dt,
        engine_word(tag)
    );
    Ok(())
}

/// Resolves the starting hypocenter from the flag or the config; both
/// absent is a configuration error.
pub fn resolve_start(cfg: &FileConfig, xi0: Option<Point>) -> Result<Point> {
    match (xi0, cfg.locate.x0_km, cfg.locate.z0_km) {
        (Some(p), _, _) => Ok(p),
        (None, Some(x), Some(z)) => Ok(Point::new(x, z)),
        _ => anyhow::bail!(
            "no starting hypocenter: pass --xi0 x,z or set locate.x0_km and locate.z0_km"
        ),
    }
}

fn write_trajectory_csv(path: &Path, res: &hypoloc::locator::LocationResult) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "k,x_km,z_km,tau_s,step_km,chi_total")?;
    for s in &res.trajectory {
        writeln!(
            w,
            "{},{:.9},{:.9},{:.9},{:.6e},{:.6e}",
            s.iter, s.xi.x, s.xi.z, s.tau, s.step_norm, s.chi_total
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Runs one location. Returns the process exit code: 0 when converged,
/// 3 otherwise; artifacts are written either way. `observed` carries
/// traces loaded from a data directory; None synthesizes them in memory
/// from the config truth.
pub fn cmd_locate(
    cfg: &FileConfig,
    out: &Path,
    observed: Option<SeismogramSet>,
    start: Point,
    mode: Option<ModeKind>,
    exec: ExecMode,
) -> Result<u8> {
    let (engine, tag) = build_engine(cfg, exec)?;
    let observed = match observed {
        Some(set) => set,
        None => engine.synthesize(&cfg.truth())?,
    };
    let mut opts = cfg.locate_options();
    opts.exec = exec;
    if let Some(m) = mode {
        opts.mode = m.into();
    }
    let res = locate(engine.as_ref(), &observed, &cfg.truth(), start, &opts)?;
    std::fs::create_dir_all(out)?;
    write_trajectory_csv(&out.join("trajectory.csv"), &res)?;
    let exit = if res.status == Status::Converged { 0u8 } else { 3u8 };
    let summary = json!({
        "run": "locate",
        "engine": engine_word(tag),
        "mode": if opts.mode == Mode::New { "new" } else { "conventional" },
        "start": {"x_km": start.x, "z_km": start.z, "tau0_s": opts.tau0},
        "status": status_word(res.status),
        "iterations": res.iterations,
        "final": {"x_km": res.final_xi.x, "z_km": res.final_xi.z, "tau_s": res.final_tau},
        "epsilon_km": opts.epsilon,
        "trajectory": "trajectory.csv",
        "exit_code": exit,
    });
    write_json(&out.join("summary.json"), &summary)?;
    println!(
        "locate: {} after {} iterations, final ({:.4}, {:.4}) km, tau {:.4} s",
        status_word(res.status),
        res.iterations,
        res.final_xi.x,
        res.final_xi.z,
        res.final_tau
    );
    Ok(exit)
}

fn write_map_csv(path: &Path, map: &ConvergenceMap) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "ix,iz,x_km,z_km,status,iterations,final_x_km,final_z_km,final_tau_s,reached")?;
    for (idx, n) in map.nodes.iter().enumerate() {
        let (ix, iz) = (idx % map.nx, idx / map.nx);
        writeln!(
            w,
            "{},{},{:.6},{:.6},{},{},{:.6},{:.6},{:.6},{}",
            ix,
            iz,
            n.start.x,
            n.start.z,
            status_word(n.status),
            n.iterations,
            n.final_xi.x,
            n.final_xi.z,
            n.final_tau,
            n.reached_source as u8
        )?;
    }
    w.flush()?;
    Ok(())
}

fn map_summary(map: &ConvergenceMap, csv: &str) -> serde_json::Value {
    let rect = map.largest_rectangle().map(|b| {
        json!({"x0_km": b.x0, "x1_km": b.x1, "z0_km": b.z0, "z1_km": b.z1, "nodes": b.nodes})
    });
    json!({
        "scan": {
            "x0_km": map.scan.x0, "x1_km": map.scan.x1,
            "z0_km": map.scan.z0, "z1_km": map.scan.z1,
            "nx": map.nx, "nz": map.nz,
        },
        "converged": map.converged(),
        "total": map.total(),
        "area_km2": map.area_estimate(),
        "tolerance_km": map.tolerance,
        "largest_rectangle": rect,
        "csv": csv,
    })
}

fn run_map(
    cfg: &FileConfig,
    engine: &dyn Propagator,
    observed: &SeismogramSet,
    mode: Mode,
    exec: ExecMode,
) -> Result<ConvergenceMap> {
    let (rect, nx, nz) = cfg.scan_spec()?;
    let mut opts = cfg.locate_options();
    opts.mode = mode;
    Ok(map_convergence(engine, observed, &cfg.truth(), cfg.truth().xi, rect, nx, nz, &opts, exec)?)
}

pub fn cmd_map(
    cfg: &FileConfig,
    out: &Path,
    mode: Option<ModeKind>,
    exec: ExecMode,
) -> Result<()> {
    let (engine, tag) = build_engine(cfg, exec)?;
    let observed = engine.synthesize(&cfg.truth())?;
    let mode = mode.map(Mode::from).unwrap_or(cfg.locate_options().mode);
    let map = run_map(cfg, engine.as_ref(), &observed, mode, exec)?;
    std::fs::create_dir_all(out)?;
    write_map_csv(&out.join("map.csv"), &map)?;
    let mut summary = map_summary(&map, "map.csv");
    summary["run"] = json!("map");
    summary["engine"] = json!(engine_word(tag));
    summary["mode"] = json!(if mode == Mode::New { "new" } else { "conventional" });
    write_json(&out.join("summary.json"), &summary)?;
    println!(
        "map: {}/{} nodes reached the source, area {:.2} km2",
        map.converged(),
        map.total(),
        map.area_estimate()
    );
    Ok(())
}

pub fn cmd_compare(cfg: &FileConfig, out: &Path, exec: ExecMode) -> Result<()> {
    let (engine, tag) = build_engine(cfg, exec)?;
    let observed = engine.synthesize(&cfg.truth())?;
    let new_map = run_map(cfg, engine.as_ref(), &observed, Mode::New, exec)?;
    let conv_map = run_map(cfg, engine.as_ref(), &observed, Mode::Conventional, exec)?;
    std::fs::create_dir_all(out)?;
    write_map_csv(&out.join("map_new.csv"), &new_map)?;
    write_map_csv(&out.join("map_conventional.csv"), &conv_map)?;
    let ratio = if conv_map.area_estimate() > 0.0 {
        Some(new_map.area_estimate() / conv_map.area_estimate())
    } else {
        None
    };
    let summary = json!({
        "run": "compare",
        "engine": engine_word(tag),
        "new": map_summary(&new_map, "map_new.csv"),
        "conventional": map_summary(&conv_map, "map_conventional.csv"),
        "area_ratio": ratio,
    });
    write_json(&out.join("summary.json"), &summary)?;
    match ratio {
        Some(r) => println!(
            "compare: new {:.1} km2 vs conventional {:.2} km2, ratio {:.1}",
            new_map.area_estimate(),
            conv_map.area_estimate(),
            r
        ),
        None => println!(
            "compare: new {:.1} km2, conventional map has no converged node",
            new_map.area_estimate()
        ),
    }
    Ok(())
}

/// Walks the alignment stage in the open: per-station misfit-vs-shift
/// curves for a trial source, the per-station best shifts, and the
/// subset agreement pick.
pub fn cmd_shift_demo(cfg: &FileConfig, out: &Path, start: Point, exec: ExecMode) -> Result<()> {
    let (engine, tag) = build_engine(cfg, exec)?;
    let observed = engine.synthesize(&cfg.truth())?;
    let opts = cfg.locate_options();
    let trial = cfg.truth().with_xi_tau(start, opts.tau0);
    let synth = engine.synthesize(&trial)?;
    let est = estimate_shift(&observed, &synth, opts.subset_size, opts.scan_half_width, exec)?;

    std::fs::create_dir_all(out)?;
    let mut curve_files = Vec::new();
    let mut rows = Vec::new();
    println!("station  tau*_s    e(0)     e(tau*)");
    for r in 1..=observed.len() {
        let curve = hypoloc::align::relative_error_curve(
            observed.trace(r),
            synth.trace(r),
            opts.scan_half_width,
        )?;
        let name = format!("shift_r{r:02}.csv");
        let mut w = BufWriter::new(File::create(out.join(&name))?);
        writeln!(w, "tau_shift_s,relative_error")?;
        for (i, e) in curve.errors.iter().enumerate() {
            writeln!(w, "{:.9},{:.9e}", curve.shift_at(i), e)?;
        }
        w.flush()?;
        let tau_star = est.tau_star_r[r - 1];
        let e0 = curve.errors[curve.max_shift];
        let e_star = curve
            .errors
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        println!("{r:>7}  {tau_star:>+8.4}  {e0:>7.4}  {e_star:>7.4}");
        rows.push(json!({
            "index": r,
            "tau_star_s": tau_star,
            "e_at_zero": e0,
            "e_at_best": e_star,
            "curve": name,
        }));
        curve_files.push(name);
    }
    let summary = json!({
        "run": "shift_demo",
        "engine": engine_word(tag),
        "trial": {"x_km": start.x, "z_km": start.z, "tau0_s": opts.tau0},
        "stations": rows,
        "selected": est.selected,
        "tau_bar_s": est.tau_bar,
        "tau_star_s": est.tau_star,
    });
    write_json(&out.join("summary.json"), &summary)?;
    println!(
        "selected {:?}, mean {:.4} s, refined shift {:.4} s",
        est.selected, est.tau_bar, est.tau_star
    );
    Ok(())
}
