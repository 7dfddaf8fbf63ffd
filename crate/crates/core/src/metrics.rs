//! Energetics and locomotion metrics.

use nalgebra::{Matrix2, Vector2};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::GRAVITY;

/// Mechanical power needed to lift `m_b` at take-off speed `v` (W).
pub fn takeoff_power(m_b: f64, v: f64) -> f64 {
    m_b * GRAVITY * v
}

/// Reference bird data points (body mass kg, take-off speed m/s).
pub const BIRD_SPEED_POINTS: [(f64, f64); 2] = [(0.491, 1.85), (0.783, 3.21)];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TakeoffSpeedEstimate {
    /// Value on the interpolating line.
    pub exact: f64,
    /// Rounded to the nearest 0.5 m/s (the design target).
    pub rounded: f64,
}

/// Linear interpolation/extrapolation of take-off speed over body mass.
pub fn interpolate_takeoff_speed(m_b: f64) -> TakeoffSpeedEstimate {
    let [(m0, v0), (m1, v1)] = BIRD_SPEED_POINTS;
    let exact = v0 + (v1 - v0) * (m_b - m0) / (m1 - m0);
    TakeoffSpeedEstimate { exact, rounded: (exact * 2.0).round() / 2.0 }
}

/// A time-stamped power reading (W).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerSample {
    pub t: f64,
    pub power: f64,
}

impl PowerSample {
    pub fn electrical(t: f64, volts: f64, amps: f64) -> Self {
        Self { t, power: volts * amps }
    }

    /// `Σ |τ_j ω_j|`: actuators cannot regenerate.
    pub fn mechanical(t: f64, torques: &[f64], rates: &[f64]) -> Self {
        let power = torques.iter().zip(rates).map(|(tau, w)| (tau * w).abs()).sum();
        Self { t, power }
    }
}

fn check_series(series: &[PowerSample]) -> Result<()> {
    if series.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "energy integration needs at least 2 samples, got {}",
            series.len()
        )));
    }
    for (i, w) in series.windows(2).enumerate() {
        if !(w[1].t > w[0].t) {
            return Err(Error::NonMonotoneTime { index: i + 1 });
        }
    }
    Ok(())
}

/// Trapezoidal `∫ P dt` over the whole series (J).
pub fn energy_input(series: &[PowerSample]) -> Result<f64> {
    check_series(series)?;
    Ok(series
        .windows(2)
        .map(|w| 0.5 * (w[0].power + w[1].power) * (w[1].t - w[0].t))
        .sum())
}

/// Trapezoidal energy from the first sample up to `t_end`, interpolating the last interval.
pub fn energy_input_until(series: &[PowerSample], t_end: f64) -> Result<f64> {
    check_series(series)?;
    let mut e = 0.0;
    for w in series.windows(2) {
        let (a, b) = (w[0], w[1]);
        if t_end <= a.t {
            break;
        }
        if t_end >= b.t {
            e += 0.5 * (a.power + b.power) * (b.t - a.t);
        } else {
            let pe = a.power + (b.power - a.power) * (t_end - a.t) / (b.t - a.t);
            e += 0.5 * (a.power + pe) * (t_end - a.t);
        }
    }
    Ok(e)
}

/// Kinetic plus potential energy at take-off (J).
pub fn energy_output(m_b: f64, v: f64, h: f64) -> f64 {
    0.5 * m_b * v * v + m_b * GRAVITY * h
}

pub fn efficiency(e_out: f64, e_in: f64) -> Result<f64> {
    if !(e_in > 0.0) {
        return Err(Error::InvalidInput(format!("input energy must be positive, got {e_in}")));
    }
    Ok(e_out / e_in)
}

fn interp(t: &[f64], v: &[f64], at: f64) -> f64 {
    match t.iter().position(|&x| x >= at) {
        Some(0) => v[0],
        Some(i) => v[i - 1] + (v[i] - v[i - 1]) * (at - t[i - 1]) / (t[i] - t[i - 1]),
        None => v[v.len() - 1],
    }
}

/// Mean of the speed derivative over `[t_0, takeoff_time]` (m/s²).
pub fn average_acceleration(t: &[f64], speed: &[f64], takeoff_time: f64) -> Result<f64> {
    if t.len() != speed.len() || t.len() < 2 {
        return Err(Error::InvalidInput("speed series needs matching t and v, length >= 2".into()));
    }
    let t0 = t[0];
    if takeoff_time <= t0 || takeoff_time > t[t.len() - 1] {
        return Err(Error::InvalidInput(format!(
            "take-off time {takeoff_time} outside the series [{t0}, {}]",
            t[t.len() - 1]
        )));
    }
    Ok((interp(t, speed, takeoff_time) - speed[0]) / (takeoff_time - t0))
}

/// `v² / (g l)` with `l` the hip height.
pub fn froude(v: f64, leg_length: f64) -> f64 {
    v * v / (GRAVITY * leg_length)
}

pub fn cost_of_transport(energy: f64, m_b: f64, distance: f64) -> Result<f64> {
    if !(distance > 0.0) {
        return Err(Error::InvalidInput(format!("distance must be positive, got {distance}")));
    }
    if !(m_b > 0.0) {
        return Err(Error::InvalidInput(format!("mass must be positive, got {m_b}")));
    }
    Ok(energy / (m_b * GRAVITY * distance))
}

/// Largest gear ratio that still reaches `required_joint_speed`.
pub fn gear_ratio_bound(motor_max_speed: f64, required_joint_speed: f64) -> f64 {
    motor_max_speed / required_joint_speed
}

/// Fraction of the take-off speed produced by the legs alone.
pub fn leg_speed_contribution(legs_only_speed: f64, total_speed: f64) -> f64 {
    legs_only_speed / total_speed
}

/// Mean horizontal speed between the first and last sample.
pub fn mean_speed(t: &[f64], x: &[f64]) -> Result<f64> {
    if t.len() != x.len() || t.len() < 2 || !(t[t.len() - 1] > t[0]) {
        return Err(Error::InvalidInput("position series needs >= 2 increasing samples".into()));
    }
    Ok((x[x.len() - 1] - x[0]) / (t[t.len() - 1] - t[0]))
}

/// Peak rise of a height series above its first sample.
pub fn peak_rise(y: &[f64]) -> f64 {
    let y0 = y.first().copied().unwrap_or(0.0);
    y.iter().fold(0.0f64, |m, v| m.max(v - y0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub label: String,
    pub energy_in: f64,
    pub energy_out: f64,
    pub efficiency: f64,
    pub average_acceleration: f64,
    pub takeoff_time: f64,
    pub takeoff_speed: f64,
}

/// Builds a take-off energy report from a power log and a speed log.
#[allow(clippy::too_many_arguments)]
pub fn energy_report(
    label: &str,
    power: &[PowerSample],
    t: &[f64],
    speed: &[f64],
    takeoff_time: f64,
    m_b: f64,
    height: f64,
) -> Result<EnergyReport> {
    let energy_in = energy_input_until(power, takeoff_time)?;
    let takeoff_speed = interp(t, speed, takeoff_time);
    let energy_out = energy_output(m_b, takeoff_speed, height);
    Ok(EnergyReport {
        label: label.to_string(),
        energy_in,
        energy_out,
        efficiency: efficiency(energy_out, energy_in)?,
        average_acceleration: average_acceleration(t, speed, takeoff_time)?,
        takeoff_time,
        takeoff_speed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AllometryFit {
    pub a: f64,
    pub b: f64,
    pub r_squared: f64,
    pub iterations: usize,
}

/// Reference leg-mass allometry coefficients for birds.
pub const ALLOMETRY_A: f64 = 0.1289;
pub const ALLOMETRY_B: f64 = 1.2;

/// Least-squares fit of `m_l = a m_b^b` in linear space.
///
/// A log-log regression seeds Gauss–Newton on the linear residuals.
pub fn fit_allometry(pairs: &[(f64, f64)]) -> Result<AllometryFit> {
    fit_allometry_with(pairs, 200, 1e-14)
}

pub fn fit_allometry_with(pairs: &[(f64, f64)], max_iter: usize, tol: f64) -> Result<AllometryFit> {
    if pairs.len() < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 pairs, got {}", pairs.len())));
    }
    if pairs.iter().any(|(m, l)| !(*m > 0.0 && *l > 0.0 && m.is_finite() && l.is_finite())) {
        return Err(Error::InvalidInput("masses must be positive and finite".into()));
    }
    let n = pairs.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = pairs.iter().map(|(m, l)| (m.ln(), l.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("body masses must not all be equal".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let mut b = sxy / sxx;
    let mut ln_a = my - b * mx;

    let sse = |ln_a: f64, b: f64| -> f64 {
        pairs.iter().map(|(m, l)| (l - (ln_a + b * m.ln()).exp()).powi(2)).sum()
    };
    let mut cost = sse(ln_a, b);
    let mut iterations = 0;
    let mut converged = false;
    // Parameterized by ln a so that a stays positive.
    while iterations < max_iter {
        iterations += 1;
        let mut jtj = Matrix2::zeros();
        let mut jtr = Vector2::zeros();
        for (m, l) in pairs {
            let f = (ln_a + b * m.ln()).exp();
            let row = Vector2::new(f, f * m.ln());
            jtj += row * row.transpose();
            jtr += row * (l - f);
        }
        let Some(delta) = jtj.lu().solve(&jtr) else {
            break;
        };
        let mut step = 1.0;
        let mut improved = false;
        while step > 1e-10 {
            let (na, nb) = (ln_a + step * delta.x, b + step * delta.y);
            let c = sse(na, nb);
            if c <= cost {
                ln_a = na;
                b = nb;
                let rel = (cost - c) / cost.max(f64::MIN_POSITIVE);
                cost = c;
                improved = true;
                if delta.norm() * step < tol || rel < tol {
                    converged = true;
                }
                break;
            }
            step *= 0.5;
        }
        if !improved || cost == 0.0 {
            converged = true;
        }
        if converged {
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence { iterations });
    }
    let mean_l = pairs.iter().map(|(_, l)| l).sum::<f64>() / n;
    let sst: f64 = pairs.iter().map(|(_, l)| (l - mean_l).powi(2)).sum();
    let r_squared = if sst == 0.0 { 1.0 } else { (1.0 - cost / sst).clamp(0.0, 1.0) };
    Ok(AllometryFit { a: ln_a.exp(), b, r_squared, iterations })
}

/// Synthetic logs that encode measured robot numbers.
///
/// None of these can be regenerated by the simulator; they exist so the
/// metric formulas can be checked against those numbers.
pub mod fixtures {
    use super::*;

    pub const ROBOT_MASS: f64 = 0.62;
    pub const BATTERY_VOLTAGE: f64 = 11.1;

    /// One take-off strategy: power log, speed log and take-off point.
    #[derive(Debug, Clone, PartialEq)]
    pub struct StrategyLog {
        pub label: &'static str,
        pub t: Vec<f64>,
        pub volts: Vec<f64>,
        pub amps: Vec<f64>,
        pub speed: Vec<f64>,
        pub takeoff_time: f64,
        pub takeoff_height: f64,
    }

    impl StrategyLog {
        pub fn power(&self) -> Vec<PowerSample> {
            self.t
                .iter()
                .zip(self.volts.iter().zip(&self.amps))
                .map(|(t, (v, i))| PowerSample::electrical(*t, *v, *i))
                .collect()
        }

        pub fn report(&self) -> Result<EnergyReport> {
            energy_report(
                self.label,
                &self.power(),
                &self.t,
                &self.speed,
                self.takeoff_time,
                ROBOT_MASS,
                self.takeoff_height,
            )
        }
    }

    /// Linear power ramp (exact under the trapezoid rule) and a linear speed
    /// ramp that holds after take-off.
    fn strategy(
        label: &'static str,
        energy_at_takeoff: f64,
        takeoff_time: f64,
        takeoff_speed: f64,
        takeoff_height: f64,
    ) -> StrategyLog {
        let n = 1000;
        let duration = 1.0;
        // P(t) = p0 (1 + t/T) up to take-off, integrating to E at T.
        let p0 = energy_at_takeoff / (1.5 * takeoff_time);
        let mut s = StrategyLog {
            label,
            t: Vec::with_capacity(n + 1),
            volts: Vec::with_capacity(n + 1),
            amps: Vec::with_capacity(n + 1),
            speed: Vec::with_capacity(n + 1),
            takeoff_time,
            takeoff_height,
        };
        let mut grid: Vec<f64> = (0..=n).map(|k| duration * k as f64 / n as f64).collect();
        // The take-off instant is a sample so the speed kink is resolved exactly.
        if let Err(i) = grid.binary_search_by(|x| x.total_cmp(&takeoff_time)) {
            grid.insert(i, takeoff_time);
        }
        for t in grid {
            let p = p0 * (1.0 + t / takeoff_time);
            s.t.push(t);
            s.volts.push(BATTERY_VOLTAGE);
            s.amps.push(p / BATTERY_VOLTAGE);
            s.speed.push(takeoff_speed * (t / takeoff_time).min(1.0));
        }
        s
    }

    pub const JUMP_ENERGY: f64 = 60.1;
    pub const STANDING_ENERGY: f64 = 55.7;
    pub const FALLING_ENERGY: f64 = 56.2;
    pub const JUMP_TAKEOFF_TIME: f64 = 0.17;
    pub const JUMP_SPEED: f64 = 2.4;
    pub const JUMP_HEIGHT: f64 = 0.4;
    pub const JUMP_ONLY_SPEED: f64 = 2.2;
    pub const STANDING_SPEED: f64 = 0.4;
    pub const FALLING_SPEED: f64 = 1.1;
    pub const EFFICIENCY_RATIO_STANDING: f64 = 9.7;
    pub const EFFICIENCY_RATIO_FALLING: f64 = 4.9;
    pub const ACCEL_RATIO_STANDING: f64 = 15.1;
    pub const ACCEL_RATIO_FALLING: f64 = 4.3;

    /// Jumping, standing and falling take-off logs.
    pub fn takeoff_strategies() -> [StrategyLog; 3] {
        let jump_out = energy_output(ROBOT_MASS, JUMP_SPEED, JUMP_HEIGHT);
        let jump_eta = jump_out / JUMP_ENERGY;
        let jump_acc = JUMP_SPEED / JUMP_TAKEOFF_TIME;
        let other = |label, energy, speed, eta_ratio: f64, acc_ratio: f64| {
            let e_out = jump_eta / eta_ratio * energy;
            let height = (e_out - 0.5 * ROBOT_MASS * speed * speed) / (ROBOT_MASS * GRAVITY);
            let t_to = speed / (jump_acc / acc_ratio);
            strategy(label, energy, t_to, speed, height)
        };
        [
            strategy("jumping", JUMP_ENERGY, JUMP_TAKEOFF_TIME, JUMP_SPEED, JUMP_HEIGHT),
            other(
                "standing",
                STANDING_ENERGY,
                STANDING_SPEED,
                EFFICIENCY_RATIO_STANDING,
                ACCEL_RATIO_STANDING,
            ),
            other(
                "falling",
                FALLING_ENERGY,
                FALLING_SPEED,
                EFFICIENCY_RATIO_FALLING,
                ACCEL_RATIO_FALLING,
            ),
        ]
    }

    /// Speed log of a jump with the propeller off.
    pub fn jumping_only_speed() -> (Vec<f64>, Vec<f64>) {
        let t: Vec<f64> = (0..=620).map(|k| k as f64 * 1e-3).collect();
        let v = t.iter().map(|t| JUMP_ONLY_SPEED * (t / JUMP_TAKEOFF_TIME).min(1.0)).collect();
        (t, v)
    }

    pub const WALK_SPEED: f64 = 0.23;
    pub const HOP_DISTANCE: f64 = 0.266;
    pub const JUMP_RISE: f64 = 0.370;

    /// CoM x over a walking bout at constant mean speed with a stride ripple.
    pub fn walk_com() -> (Vec<f64>, Vec<f64>) {
        let t: Vec<f64> = (0..=4000).map(|k| k as f64 * 1e-3).collect();
        let x = t
            .iter()
            .map(|t| WALK_SPEED * t + 0.004 * (2.0 * std::f64::consts::PI * t).sin())
            .collect();
        (t, x)
    }

    /// CoM (x, y) of a forward hop: ballistic arc landing `HOP_DISTANCE` ahead.
    pub fn hop_com() -> (Vec<f64>, Vec<f64>) {
        let flight = 0.3;
        let vy = 0.5 * GRAVITY * flight;
        let vx = HOP_DISTANCE / flight;
        (0..=300)
            .map(|k| {
                let t = k as f64 * 1e-3;
                (vx * t, vy * t - 0.5 * GRAVITY * t * t)
            })
            .unzip()
    }

    /// CoM height of a vertical jump peaking `JUMP_RISE` above the start.
    pub fn height_jump_com() -> (Vec<f64>, Vec<f64>) {
        let vy = (2.0 * GRAVITY * JUMP_RISE).sqrt();
        let apex = vy / GRAVITY;
        // Sampled so that the apex lands on a sample.
        let n = 1000;
        (0..=n)
            .map(|k| {
                let t = 2.0 * apex * k as f64 / n as f64;
                (t, vy * t - 0.5 * GRAVITY * t * t)
            })
            .unzip()
    }

    /// Noiseless `(m_b, m_l)` pairs on the reference power law.
    pub fn allometry_pairs() -> Vec<(f64, f64)> {
        (0..24)
            .map(|k| {
                let m = 0.02 * (10f64).powf(k as f64 * 3.0 / 23.0);
                (m, ALLOMETRY_A * m.powf(ALLOMETRY_B))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_sizing() {
        assert!((takeoff_power(0.6, 2.5) - 14.715).abs() < 1e-12);
        assert_eq!(takeoff_power(0.6, 0.0), 0.0);
        assert!((takeoff_power(1.0, 1.0) - 9.81).abs() < 1e-15);
    }

    #[test]
    fn speed_interpolation() {
        let e = interpolate_takeoff_speed(0.6);
        assert!((e.exact - (1.85 + 1.36 * 0.109 / 0.292)).abs() < 1e-12);
        assert_eq!(e.rounded, 2.5);
        assert!((interpolate_takeoff_speed(0.491).exact - 1.85).abs() < 1e-12);
        assert!((interpolate_takeoff_speed(0.783).exact - 3.21).abs() < 1e-12);
    }

    #[test]
    fn trapezoid() {
        let rect = [PowerSample { t: 0.0, power: 10.0 }, PowerSample { t: 2.0, power: 10.0 }];
        assert!((energy_input(&rect).unwrap() - 20.0).abs() < 1e-12);
        let ramp: Vec<_> =
            (0..=20).map(|k| PowerSample { t: k as f64 * 0.1, power: k as f64 * 0.5 }).collect();
        assert!((energy_input(&ramp).unwrap() - 10.0).abs() < 1e-12);
        let bad = [PowerSample { t: 1.0, power: 0.0 }, PowerSample { t: 1.0, power: 1.0 }];
        assert_eq!(energy_input(&bad), Err(Error::NonMonotoneTime { index: 1 }));
        assert!(energy_input(&rect[..1]).is_err());
        assert!((energy_input_until(&ramp, 1.0).unwrap() - 2.5).abs() < 1e-12);
        assert!((energy_input_until(&ramp, 1.05).unwrap() - 0.5 * 5.25 * 1.05).abs() < 1e-12);
    }

    #[test]
    fn mechanical_power_has_no_regeneration() {
        let s = PowerSample::mechanical(0.0, &[1.0, -2.0], &[3.0, 1.0]);
        assert_eq!(s.power, 5.0);
    }

    #[test]
    fn output_and_efficiency() {
        assert_eq!(energy_output(0.62, 0.0, 0.0), 0.0);
        assert!((energy_output(0.62, 2.4, 0.4) - 4.218_48).abs() < 1e-9);
        let k1 = energy_output(1.0, 1.0, 0.0);
        assert!((energy_output(1.0, 2.0, 0.0) - 4.0 * k1).abs() < 1e-15);
        assert_eq!(efficiency(3.0, 3.0).unwrap(), 1.0);
        assert!((efficiency(4.218_48, 60.1).unwrap() - 0.0702).abs() < 1e-4);
        assert!(efficiency(1.0, 0.0).is_err());
    }

    #[test]
    fn acceleration_examples() {
        let t = [0.0, 0.17];
        assert!((average_acceleration(&t, &[0.0, 2.4], 0.17).unwrap() - 14.1176).abs() < 1e-3);
        assert_eq!(average_acceleration(&t, &[1.0, 1.0], 0.17).unwrap(), 0.0);
        let t: Vec<f64> = (0..=10).map(|k| k as f64 * 0.1).collect();
        let v: Vec<f64> = t.iter().map(|t| 3.0 * t).collect();
        assert!((average_acceleration(&t, &v, 0.55).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn froude_and_cot() {
        assert_eq!(froude(0.0, 0.24), 0.0);
        assert!((froude(0.23, 0.24) - 0.022_468).abs() < 1e-6);
        assert!((froude(0.46, 0.24) / froude(0.23, 0.24) - 4.0).abs() < 1e-12);
        assert!((cost_of_transport(0.623 * GRAVITY * 2.0, 0.623, 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cost_of_transport(0.0, 0.623, 1.0).unwrap(), 0.0);
        assert!((cost_of_transport(5.0, 0.623, 1.0).unwrap() - 0.818).abs() < 1e-3);
        assert!(cost_of_transport(5.0, 0.623, 0.0).is_err());
    }

    #[test]
    fn gear_bound() {
        let b = gear_ratio_bound(99_900.0, 4384.0);
        assert!((b - 22.787).abs() < 1e-3);
        assert_eq!((b * 10.0).round() / 10.0, 22.8);
        assert!(19.13 < b);
        assert_eq!(gear_ratio_bound(5.0, 5.0), 1.0);
    }

    #[test]
    fn allometry_noiseless_and_two_point() {
        let f = fit_allometry(&fixtures::allometry_pairs()).unwrap();
        assert!((f.a - ALLOMETRY_A).abs() < 1e-8);
        assert!((f.b - ALLOMETRY_B).abs() < 1e-8);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        let two = [(0.5, 0.2), (2.0, 1.1)];
        let f = fit_allometry(&two).unwrap();
        for (m, l) in two {
            assert!((f.a * f64::powf(m, f.b) - l).abs() < 1e-10);
        }
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert!(fit_allometry(&[(1.0, 1.0)]).is_err());
        assert!(fit_allometry(&[(1.0, 1.0), (-1.0, 2.0)]).is_err());
    }

    #[test]
    fn fixture_strategies_reproduce_measured_numbers() {
        let [jump, stand, fall] = fixtures::takeoff_strategies().map(|s| s.report().unwrap());
        assert!((jump.energy_in - 60.1).abs() < 1e-9);
        assert!((stand.energy_in - 55.7).abs() < 1e-9);
        assert!((fall.energy_in - 56.2).abs() < 1e-9);
        assert!((jump.efficiency / stand.efficiency - 9.7).abs() < 1e-9);
        assert!((jump.efficiency / fall.efficiency - 4.9).abs() < 1e-9);
        assert!((jump.average_acceleration / stand.average_acceleration - 15.1).abs() < 1e-6);
        assert!((jump.average_acceleration / fall.average_acceleration - 4.3).abs() < 1e-6);
    }
}
