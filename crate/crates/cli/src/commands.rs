use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;
use wingleg_core::config::{parse_config, Config, DEFAULT_SCENARIO};
use wingleg_core::gaits::{gait_generators, gait_to_joint_commands, gen_trajectory, JointReference};
use wingleg_core::io::{self, LogKind};
use wingleg_core::metrics::{self, fixtures, AllometryFit};
use wingleg_core::sim::{run_flight, run_takeoff, summarize, SweepGrid, TrajectoryLog};
use wingleg_core::Error;

use crate::plot::{Plot, Series};
use crate::{CliError, Global};

type Result<T> = std::result::Result<T, CliError>;

fn load_config(g: &Global) -> Result<Config> {
    let (path, text) = match &g.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
            (p.display().to_string(), text)
        }
        None => ("<bundled scenario>".to_owned(), DEFAULT_SCENARIO.to_owned()),
    };
    parse_config(&text).map_err(|source| CliError::Config { path, source })
}

fn out_file(g: &Global, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(&g.out).map_err(|e| CliError::Usage(format!("{}: {e}", g.out.display())))?;
    let path = g.out.join(name);
    let f = File::create(&path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok(BufWriter::new(f))
}

fn write_text(g: &Global, name: &str, text: &str) -> Result<()> {
    let mut w = out_file(g, name)?;
    w.write_all(text.as_bytes()).and_then(|_| w.flush()).map_err(Error::from)?;
    Ok(())
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn dry_run_ok() -> Result<()> {
    println!("config ok");
    Ok(())
}

pub fn simulate(g: &Global) -> Result<()> {
    let cfg = load_config(g)?;
    if g.dry_run {
        return dry_run_ok();
    }
    let sc = &cfg.scenario;
    let takeoff = run_takeoff(sc)?;
    let summary = summarize(&takeoff, sc)?;
    let log = run_flight(&takeoff, sc)?;

    let mut w = out_file(g, "trajectory.csv")?;
    io::write_trajectory(&mut w, &log)?;
    w.flush().map_err(Error::from)?;
    let mut w = out_file(g, "events.csv")?;
    io::write_events(&mut w, &log)?;
    w.flush().map_err(Error::from)?;
    write_text(g, "summary.json", &io::to_json(&summary)?)?;
    if g.plots {
        simulation_plots(g, &log)?;
    }
    println!(
        "take-off at {:.4} s: speed {:.4} m/s, pitch rate {:.4} rad/s, peak joint speed {:.1} deg/s, E_mech {:.3} J, E_out {:.3} J, efficiency {:.3}",
        summary.takeoff_time,
        summary.takeoff_speed,
        summary.takeoff_pitch_rate,
        summary.peak_joint_speed.to_degrees(),
        summary.energy_mech,
        summary.energy_out,
        summary.efficiency
    );
    Ok(())
}

fn simulation_plots(g: &Global, log: &TrajectoryLog) -> Result<()> {
    let s = &log.samples;
    let t = || s.iter().map(|x| x.t);
    let plots = [
        (
            "com.svg",
            Plot::new("CoM trajectory", "x (m)", "y (m)")
                .with(Series::new("CoM", s.iter().map(|x| x.com.x), s.iter().map(|x| x.com.y))),
        ),
        (
            "speed.svg",
            Plot::new("CoM speed", "t (s)", "speed (m/s)")
                .with(Series::new("|v|", t(), s.iter().map(|x| x.com_velocity.norm())))
                .with(Series::new("v_x", t(), s.iter().map(|x| x.com_velocity.x)))
                .with(Series::new("v_y", t(), s.iter().map(|x| x.com_velocity.y))),
        ),
        (
            "pitch.svg",
            Plot::new("Body pitch", "t (s)", "pitch (deg)").with(Series::new(
                "pitch",
                t(),
                s.iter().map(|x| x.q[2].to_degrees()),
            )),
        ),
        (
            "joints.svg",
            Plot::new("Joint angles", "t (s)", "angle (deg)")
                .with(Series::new("hip", t(), s.iter().map(|x| x.q[3].to_degrees())))
                .with(Series::new("ankle", t(), s.iter().map(|x| x.q[4].to_degrees())))
                .with(Series::new("toe", t(), s.iter().map(|x| x.q[5].to_degrees()))),
        ),
    ];
    for (name, plot) in plots {
        write_text(g, name, &plot.to_svg())?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct GaitReport {
    mode: &'static str,
    phases: Vec<(String, f64)>,
    cycle_time: f64,
    samples: usize,
    peak_joint_speed: f64,
    gear_ratio_bound: f64,
    hip_displacement: f64,
    ankle_displacement: f64,
}

pub fn gait(g: &Global, mode: Option<&str>) -> Result<()> {
    let cfg = load_config(g)?;
    let mode = match mode {
        Some(name) => gait_generators().create(name)?.mode(),
        None => cfg.gait.mode,
    };
    let p = &cfg.scenario.params;
    let traj = gen_trajectory(mode, &cfg.gait, p)?;
    if g.dry_run {
        return dry_run_ok();
    }
    let cycle = cfg.gait.cycle_time.unwrap_or_else(|| traj.duration());
    let reference =
        gait_to_joint_commands(&traj, p, cycle, cfg.gait.control_rate, cfg.gait.n_steps, cfg.gait.hip_delay)?;
    let mut w = out_file(g, "joint_reference.csv")?;
    io::write_joint_reference(&mut w, &reference)?;
    w.flush().map_err(Error::from)?;
    let peak = reference.peak_speed();
    let report = GaitReport {
        mode: mode.as_str(),
        phases: traj.phases.iter().map(|ph| (ph.name.clone(), ph.duration * cycle / traj.duration())).collect(),
        cycle_time: cycle,
        samples: reference.len(),
        peak_joint_speed: peak,
        gear_ratio_bound: metrics::gear_ratio_bound(p.motor_max_speed, peak),
        hip_displacement: reference.displacement(0),
        ankle_displacement: reference.displacement(1),
    };
    write_text(g, "gait.json", &io::to_json(&report)?)?;
    if g.plots {
        gait_plots(g, &reference)?;
    }
    println!(
        "{}: {} samples over {:.4} s, peak joint speed {:.1} deg/s",
        report.mode,
        report.samples,
        cycle,
        peak.to_degrees()
    );
    Ok(())
}

fn gait_plots(g: &Global, r: &JointReference) -> Result<()> {
    let t = || r.t.iter().copied();
    let q = Plot::new("Joint position references", "t (s)", "angle (deg)")
        .with(Series::new("hip", t(), r.q.iter().map(|q| q[0].to_degrees())))
        .with(Series::new("ankle", t(), r.q.iter().map(|q| q[1].to_degrees())));
    let qd = Plot::new("Joint velocity references", "t (s)", "rate (deg/s)")
        .with(Series::new("hip", t(), r.qd.iter().map(|q| q[0].to_degrees())))
        .with(Series::new("ankle", t(), r.qd.iter().map(|q| q[1].to_degrees())));
    write_text(g, "joint_positions.svg", &q.to_svg())?;
    write_text(g, "joint_velocities.svg", &qd.to_svg())
}

#[derive(Debug, Serialize)]
struct PowerReport {
    kind: &'static str,
    samples: usize,
    duration: f64,
    peak_power: f64,
    energy_input: f64,
}

pub fn metrics(g: &Global, file: &Path, events: Option<&Path>) -> Result<()> {
    let cfg = load_config(g)?;
    let mut header = String::new();
    std::io::BufRead::read_line(&mut std::io::BufReader::new(open(file)?), &mut header).map_err(Error::from)?;
    let kind = io::detect_log_kind(&header).ok_or_else(|| {
        CliError::Usage(format!("{}: unrecognized header '{}'", file.display(), header.trim()))
    })?;
    let json = match kind {
        LogKind::Trajectory => {
            let rows = io::read_trajectory(open(file)?)?;
            let takeoff = match events {
                Some(path) => io::read_events(open(path)?)?
                    .into_iter()
                    .find(|(_, k)| *k == wingleg_core::sim::EventKind::TakeOff)
                    .map(|(t, _)| t),
                None => None,
            };
            let p = &cfg.scenario.params;
            let m = cfg.metrics.body_mass.unwrap_or_else(|| p.total_mass());
            let leg = cfg.metrics.leg_length.unwrap_or(p.l1 + p.l2);
            if g.dry_run {
                return dry_run_ok();
            }
            let report = io::trajectory_report(&rows, takeoff, m, leg)?;
            println!(
                "take-off at {:.4} s: speed {:.4} m/s, E_mech {:.3} J, E_out {:.3} J, efficiency {:.3}, Froude {:.3}",
                report.takeoff_time,
                report.takeoff_speed,
                report.energy_mech,
                report.energy_out,
                report.efficiency,
                report.froude_at_takeoff
            );
            io::to_json(&report)?
        }
        LogKind::Electrical | LogKind::CurrentOnly => {
            let samples = io::read_power_log(open(file)?, cfg.metrics.battery_voltage)?;
            if g.dry_run {
                return dry_run_ok();
            }
            let report = PowerReport {
                kind: if kind == LogKind::Electrical { "electrical" } else { "current_only" },
                samples: samples.len(),
                duration: samples.last().map_or(0.0, |s| s.t) - samples.first().map_or(0.0, |s| s.t),
                peak_power: samples.iter().fold(0.0, |m, s| m.max(s.power)),
                energy_input: metrics::energy_input(&samples)?,
            };
            println!("E_elec {:.3} J over {:.4} s", report.energy_input, report.duration);
            io::to_json(&report)?
        }
    };
    write_text(g, "metrics.json", &json)
}

/// Multiplies each leg mass by `1 + noise·N(0, 1)`.
pub fn noisy_pairs(pairs: &[(f64, f64)], noise: f64, seed: u64) -> Result<Vec<(f64, f64)>> {
    let normal = Normal::new(0.0, noise).map_err(|e| CliError::Usage(format!("--noise: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(pairs.iter().map(|&(m, l)| (m, l * (1.0 + normal.sample(&mut rng)))).collect())
}

pub fn fit(g: &Global, file: Option<&Path>, noise: f64) -> Result<()> {
    let pairs = match file {
        Some(path) => io::read_allometry(open(path)?)?,
        None => {
            let base = fixtures::allometry_pairs();
            match g.seed {
                Some(seed) => noisy_pairs(&base, noise, seed)?,
                None => base,
            }
        }
    };
    if g.dry_run {
        return dry_run_ok();
    }
    if file.is_none() {
        let mut w = out_file(g, "allometry.csv")?;
        io::write_allometry(&mut w, &pairs)?;
        w.flush().map_err(Error::from)?;
    }
    let fit: AllometryFit = metrics::fit_allometry(&pairs)?;
    write_text(g, "fit.json", &io::to_json(&fit)?)?;
    if g.plots {
        let mut sorted = pairs.clone();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let plot = Plot::new("Leg mass allometry", "body mass (kg)", "leg mass (kg)")
            .with(Series::new("data", sorted.iter().map(|p| p.0), sorted.iter().map(|p| p.1)))
            .with(Series::new(
                "fit",
                sorted.iter().map(|p| p.0),
                sorted.iter().map(|p| fit.a * p.0.powf(fit.b)),
            ));
        write_text(g, "allometry.svg", &plot.to_svg())?;
    }
    println!("a = {:.5}, b = {:.5}, R^2 = {:.5}", fit.a, fit.b, fit.r_squared);
    Ok(())
}

/// Gear-ratio sweep used when the config has no sweep section.
pub fn default_grid() -> SweepGrid {
    SweepGrid::new(vec![("gear_ratio".into(), vec![15.0, 19.13, 25.0])])
}

pub fn sweep(g: &Global) -> Result<()> {
    let cfg = load_config(g)?;
    let (grid, parallel) = match cfg.sweep {
        Some(s) => (s.grid, s.parallel),
        None => (default_grid(), true),
    };
    for (key, _) in &grid.axes {
        cfg.scenario.clone().set(key, 0.0)?;
    }
    if g.dry_run {
        return dry_run_ok();
    }
    let table = wingleg_core::sim::sweep(&cfg.scenario, &grid, parallel)?;
    let mut w = out_file(g, "sweep.csv")?;
    io::write_sweep(&mut w, &table)?;
    w.flush().map_err(Error::from)?;
    let failed = table.rows.iter().filter(|r| r.error.is_some()).count();
    println!("{} cells, {} failed", table.rows.len(), failed);
    Ok(())
}
