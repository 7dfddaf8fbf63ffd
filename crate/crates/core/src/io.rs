//! CSV import and export.
//!
//! Floats are written in their shortest round-trip form, so every file read
//! back through the matching parser reproduces the written values exactly.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaits::JointReference;
use crate::metrics::{efficiency, energy_output, froude, PowerSample};
use crate::model::ContactMode;
use crate::sim::{EventKind, SweepTable, TrajectoryLog};

pub const TRAJECTORY_HEADER: &str =
    "t,q1,q2,q3,q4,q5,q6,qd1,qd2,qd3,qd4,qd5,qd6,tau_hip,tau_ankle,fc_x,fc_y,mode,com_x,com_y,vcom_x,vcom_y,P_mech,E_mech";
pub const EVENTS_HEADER: &str = "t,kind";
pub const JOINT_REFERENCE_HEADER: &str = "t,q4_ref,q5_ref,qd4_ref,qd5_ref";
pub const ALLOMETRY_HEADER: &str = "body_mass_kg,leg_mass_kg";

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

/// One line of the trajectory CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub q4: f64,
    pub q5: f64,
    pub q6: f64,
    pub qd1: f64,
    pub qd2: f64,
    pub qd3: f64,
    pub qd4: f64,
    pub qd5: f64,
    pub qd6: f64,
    pub tau_hip: f64,
    pub tau_ankle: f64,
    pub fc_x: f64,
    pub fc_y: f64,
    pub mode: String,
    pub com_x: f64,
    pub com_y: f64,
    pub vcom_x: f64,
    pub vcom_y: f64,
    #[serde(rename = "P_mech")]
    pub p_mech: f64,
    #[serde(rename = "E_mech")]
    pub e_mech: f64,
}

impl TrajectoryRow {
    pub fn contact_mode(&self) -> Option<ContactMode> {
        ContactMode::parse(&self.mode)
    }

    pub fn speed(&self) -> f64 {
        self.vcom_x.hypot(self.vcom_y)
    }
}

pub fn trajectory_rows(log: &TrajectoryLog) -> Vec<TrajectoryRow> {
    log.samples
        .iter()
        .map(|s| TrajectoryRow {
            t: s.t,
            q1: s.q[0],
            q2: s.q[1],
            q3: s.q[2],
            q4: s.q[3],
            q5: s.q[4],
            q6: s.q[5],
            qd1: s.qdot[0],
            qd2: s.qdot[1],
            qd3: s.qdot[2],
            qd4: s.qdot[3],
            qd5: s.qdot[4],
            qd6: s.qdot[5],
            tau_hip: s.tau[0],
            tau_ankle: s.tau[1],
            fc_x: s.contact_force[0],
            fc_y: s.contact_force[1],
            mode: s.mode.as_str().to_string(),
            com_x: s.com[0],
            com_y: s.com[1],
            vcom_x: s.com_velocity[0],
            vcom_y: s.com_velocity[1],
            p_mech: s.power,
            e_mech: s.energy,
        })
        .collect()
}

fn write_rows<W: Write, T: Serialize>(w: W, rows: &[T]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

fn read_rows<R: Read, T: for<'de> Deserialize<'de>>(r: R, header: &str) -> Result<Vec<T>> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let got = rd.headers()?.iter().collect::<Vec<_>>().join(",");
    if got != header {
        return Err(Error::Csv(format!("unexpected header '{got}' (expected '{header}')")));
    }
    rd.deserialize().map(|row| row.map_err(Error::from)).collect()
}

fn check_increasing(t: impl Iterator<Item = f64>) -> Result<()> {
    let mut prev = f64::NEG_INFINITY;
    for (i, x) in t.enumerate() {
        if !(x > prev) {
            return Err(Error::NonMonotoneTime { index: i });
        }
        prev = x;
    }
    Ok(())
}

pub fn write_trajectory<W: Write>(w: W, log: &TrajectoryLog) -> Result<()> {
    write_rows(w, &trajectory_rows(log))
}

pub fn read_trajectory<R: Read>(r: R) -> Result<Vec<TrajectoryRow>> {
    let rows: Vec<TrajectoryRow> = read_rows(r, TRAJECTORY_HEADER)?;
    if let Some(bad) = rows.iter().find(|row| row.contact_mode().is_none()) {
        return Err(Error::Csv(format!("unknown contact mode '{}' at t = {}", bad.mode, bad.t)));
    }
    check_increasing(rows.iter().map(|row| row.t))?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRow {
    pub t: f64,
    pub kind: String,
}

pub fn write_events<W: Write>(w: W, log: &TrajectoryLog) -> Result<()> {
    let rows: Vec<EventRow> = log
        .events
        .iter()
        .map(|e| EventRow { t: e.t, kind: e.kind.as_str().to_string() })
        .collect();
    write_rows(w, &rows)
}

pub fn read_events<R: Read>(r: R) -> Result<Vec<(f64, EventKind)>> {
    let rows: Vec<EventRow> = read_rows(r, EVENTS_HEADER)?;
    rows.into_iter()
        .map(|row| {
            EventKind::parse(&row.kind)
                .map(|k| (row.t, k))
                .ok_or_else(|| Error::Csv(format!("unknown event kind '{}'", row.kind)))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct JointReferenceRow {
    t: f64,
    q4_ref: f64,
    q5_ref: f64,
    qd4_ref: f64,
    qd5_ref: f64,
}

pub fn write_joint_reference<W: Write>(w: W, reference: &JointReference) -> Result<()> {
    let rows: Vec<JointReferenceRow> = (0..reference.len())
        .map(|k| JointReferenceRow {
            t: reference.t[k],
            q4_ref: reference.q[k][0],
            q5_ref: reference.q[k][1],
            qd4_ref: reference.qd[k][0],
            qd5_ref: reference.qd[k][1],
        })
        .collect();
    write_rows(w, &rows)
}

/// Reads a joint reference; step count and delay are not stored in the file.
pub fn read_joint_reference<R: Read>(r: R) -> Result<JointReference> {
    let rows: Vec<JointReferenceRow> = read_rows(r, JOINT_REFERENCE_HEADER)?;
    check_increasing(rows.iter().map(|row| row.t))?;
    Ok(JointReference {
        t: rows.iter().map(|row| row.t).collect(),
        q: rows.iter().map(|row| [row.q4_ref, row.q5_ref]).collect(),
        qd: rows.iter().map(|row| [row.qd4_ref, row.qd5_ref]).collect(),
        n_steps: None,
        hip_delay: 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct AllometryRow {
    body_mass_kg: f64,
    leg_mass_kg: f64,
}

pub fn write_allometry<W: Write>(w: W, pairs: &[(f64, f64)]) -> Result<()> {
    let rows: Vec<AllometryRow> =
        pairs.iter().map(|&(m, l)| AllometryRow { body_mass_kg: m, leg_mass_kg: l }).collect();
    write_rows(w, &rows)
}

pub fn read_allometry<R: Read>(r: R) -> Result<Vec<(f64, f64)>> {
    let rows: Vec<AllometryRow> = read_rows(r, ALLOMETRY_HEADER)?;
    Ok(rows.into_iter().map(|row| (row.body_mass_kg, row.leg_mass_kg)).collect())
}

/// What a metrics input file contains, judged by its header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogKind {
    /// `t,V,I`
    Electrical,
    /// `t,I`, paired with an average battery voltage.
    CurrentOnly,
    /// A simulator trajectory.
    Trajectory,
}

pub fn detect_log_kind(header: &str) -> Option<LogKind> {
    let cols: Vec<&str> = header.trim().split(',').map(str::trim).collect();
    match cols.as_slice() {
        ["t", "V", "I"] => Some(LogKind::Electrical),
        ["t", "I"] => Some(LogKind::CurrentOnly),
        _ if cols.join(",") == TRAJECTORY_HEADER => Some(LogKind::Trajectory),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
struct ElectricalRow {
    t: f64,
    #[serde(rename = "V")]
    volts: f64,
    #[serde(rename = "I")]
    amps: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
struct CurrentRow {
    t: f64,
    #[serde(rename = "I")]
    amps: f64,
}

/// Power samples from a `t,V,I` log, or a `t,I` log at `battery_voltage`.
pub fn read_power_log<R: Read>(r: R, battery_voltage: Option<f64>) -> Result<Vec<PowerSample>> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let header = rd.headers()?.iter().collect::<Vec<_>>().join(",");
    let samples: Vec<PowerSample> = match detect_log_kind(&header) {
        Some(LogKind::Electrical) => rd
            .deserialize::<ElectricalRow>()
            .map(|row| row.map(|x| PowerSample::electrical(x.t, x.volts, x.amps)).map_err(Error::from))
            .collect::<Result<_>>()?,
        Some(LogKind::CurrentOnly) => {
            let v = battery_voltage
                .ok_or_else(|| Error::InvalidInput("a current-only log needs an average battery voltage".into()))?;
            rd.deserialize::<CurrentRow>()
                .map(|row| row.map(|x| PowerSample::electrical(x.t, v, x.amps)).map_err(Error::from))
                .collect::<Result<_>>()?
        }
        _ => return Err(Error::Csv(format!("'{header}' is not a power log header (expected t,V,I or t,I)"))),
    };
    check_increasing(samples.iter().map(|s| s.t))?;
    Ok(samples)
}

/// Take-off energetics recovered from a trajectory CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryReport {
    pub takeoff_time: f64,
    pub takeoff_speed: f64,
    /// CoM rise from the first sample to take-off (m).
    pub takeoff_rise: f64,
    pub energy_mech: f64,
    pub energy_out: f64,
    pub efficiency: f64,
    pub froude_at_takeoff: f64,
}

fn lerp(t0: f64, a: f64, t1: f64, b: f64, t: f64) -> f64 {
    if t1 == t0 {
        a
    } else {
        a + (b - a) * (t - t0) / (t1 - t0)
    }
}

/// Take-off metrics of a logged run. Without an explicit take-off time the
/// first airborne sample marks it. Values are interpolated linearly between
/// the samples bracketing take-off.
pub fn trajectory_report(
    rows: &[TrajectoryRow],
    takeoff_time: Option<f64>,
    body_mass: f64,
    leg_length: f64,
) -> Result<TrajectoryReport> {
    let first = rows.first().ok_or_else(|| Error::InvalidInput("empty trajectory".into()))?;
    let t_to = match takeoff_time {
        Some(t) => t,
        None => rows
            .iter()
            .find(|r| r.contact_mode() == Some(ContactMode::Airborne))
            .map(|r| r.t)
            .ok_or_else(|| Error::InvalidInput("trajectory has no airborne sample".into()))?,
    };
    let i = rows.iter().position(|r| r.t >= t_to).unwrap_or(rows.len() - 1);
    let (a, b) = (&rows[i.saturating_sub(1)], &rows[i]);
    let at = |f: fn(&TrajectoryRow) -> f64| lerp(a.t, f(a), b.t, f(b), t_to);
    let vx = at(|r| r.vcom_x);
    let vy = at(|r| r.vcom_y);
    let speed = vx.hypot(vy);
    let rise = at(|r| r.com_y) - first.com_y;
    let energy_mech = at(|r| r.e_mech) - first.e_mech;
    let energy_out = energy_output(body_mass, speed, rise);
    Ok(TrajectoryReport {
        takeoff_time: t_to,
        takeoff_speed: speed,
        takeoff_rise: rise,
        energy_mech,
        energy_out,
        efficiency: efficiency(energy_out, energy_mech).unwrap_or(f64::NAN),
        froude_at_takeoff: froude(speed, leg_length),
    })
}

/// Sweep results, one row per cell: axis values, then the summary columns.
pub fn write_sweep<W: Write>(w: W, table: &SweepTable) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let axes: Vec<String> = table
        .rows
        .first()
        .map(|r| r.values.iter().map(|(k, _)| k.clone()).collect())
        .unwrap_or_default();
    let mut header = axes.clone();
    header.extend(
        [
            "takeoff_speed",
            "takeoff_time",
            "takeoff_pitch_rate",
            "peak_joint_speed",
            "peak_torque",
            "energy_mech",
            "energy_out",
            "efficiency",
            "gear_ratio_bound",
            "feasible",
            "error",
        ]
        .map(String::from),
    );
    out.write_record(&header)?;
    for row in &table.rows {
        let mut rec: Vec<String> = row.values.iter().map(|(_, v)| v.to_string()).collect();
        match &row.summary {
            Some(s) => {
                rec.extend(
                    [
                        s.takeoff_speed,
                        s.takeoff_time,
                        s.takeoff_pitch_rate,
                        s.peak_joint_speed,
                        s.peak_torque,
                        s.energy_mech,
                        s.energy_out,
                        s.efficiency,
                        s.gear_ratio_bound,
                    ]
                    .map(|v| v.to_string()),
                );
                rec.push(s.gear_feasible.to_string());
                rec.push(String::new());
            }
            None => {
                rec.extend(std::iter::repeat_n(String::new(), 9));
                rec.push("false".into());
                rec.push(row.error.clone().unwrap_or_default());
            }
        }
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// Any serializable report as pretty JSON.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::InvalidInput(e.to_string()))
}
