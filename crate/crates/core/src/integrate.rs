//! One-interval ODE integrators used by the hybrid simulator.

use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::registry::Registry;

/// Right-hand side `ẏ = f(t, y)`; may fail (e.g. a singular contact solve).
pub type Rhs<'a> = dyn FnMut(f64, &DVector<f64>) -> Result<DVector<f64>> + 'a;

pub trait Integrator: Send + Sync {
    fn name(&self) -> &'static str;

    /// Advances `y` from `t` to `t + h`.
    fn advance(&self, f: &mut Rhs<'_>, t: f64, y: &DVector<f64>, h: f64) -> Result<DVector<f64>>;
}

/// Classical fourth-order Runge–Kutta, one step per call.
#[derive(Debug, Clone, Copy, Default)]
pub struct Rk4;

impl Integrator for Rk4 {
    fn name(&self) -> &'static str {
        "rk4"
    }

    fn advance(&self, f: &mut Rhs<'_>, t: f64, y: &DVector<f64>, h: f64) -> Result<DVector<f64>> {
        let k1 = f(t, y)?;
        let k2 = f(t + 0.5 * h, &(y + &k1 * (0.5 * h)))?;
        let k3 = f(t + 0.5 * h, &(y + &k2 * (0.5 * h)))?;
        let k4 = f(t + h, &(y + &k3 * h))?;
        Ok(y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
    }
}

/// Dormand–Prince 5(4) with local error control, substepping inside the interval.
#[derive(Debug, Clone, Copy)]
pub struct Rk45 {
    pub rtol: f64,
    pub atol: f64,
    pub max_substeps: usize,
}

impl Default for Rk45 {
    fn default() -> Self {
        Self { rtol: 1e-9, atol: 1e-12, max_substeps: 10_000 }
    }
}

const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

impl Rk45 {
    fn trial(
        &self,
        f: &mut Rhs<'_>,
        t: f64,
        y: &DVector<f64>,
        h: f64,
    ) -> Result<(DVector<f64>, f64)> {
        let mut k: Vec<DVector<f64>> = Vec::with_capacity(7);
        k.push(f(t, y)?);
        for s in 1..7 {
            let mut yi = y.clone();
            for (j, kj) in k.iter().enumerate() {
                let a = A[s - 1][j];
                if a != 0.0 {
                    yi += kj * (h * a);
                }
            }
            k.push(f(t + C[s] * h, &yi)?);
        }
        let mut y5 = y.clone();
        let mut err = DVector::zeros(y.len());
        for (i, ki) in k.iter().enumerate() {
            y5 += ki * (h * B5[i]);
            err += ki * (h * (B5[i] - B4[i]));
        }
        let norm = err
            .iter()
            .zip(y.iter().zip(y5.iter()))
            .map(|(e, (a, b))| {
                let sc = self.atol + self.rtol * a.abs().max(b.abs());
                (e / sc).powi(2)
            })
            .sum::<f64>()
            / y.len() as f64;
        Ok((y5, norm.sqrt()))
    }
}

impl Integrator for Rk45 {
    fn name(&self) -> &'static str {
        "rk45"
    }

    fn advance(&self, f: &mut Rhs<'_>, t: f64, y: &DVector<f64>, h: f64) -> Result<DVector<f64>> {
        let end = t + h;
        let mut t = t;
        let mut y = y.clone();
        let mut dt = h;
        for _ in 0..self.max_substeps {
            let remaining = end - t;
            if remaining <= 1e-15 * end.abs().max(1.0) {
                return Ok(y);
            }
            dt = dt.min(remaining);
            let (y_new, err) = self.trial(f, t, &y, dt)?;
            if err <= 1.0 || dt < 1e-12 {
                t += dt;
                y = y_new;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            dt *= factor;
        }
        Err(Error::NonConvergence { iterations: self.max_substeps })
    }
}

pub fn integrators() -> Registry<dyn Integrator> {
    let mut r: Registry<dyn Integrator> = Registry::new("integrator");
    r.register("rk4", || Arc::new(Rk4));
    r.register("rk45", || Arc::new(Rk45::default()));
    r
}

/// Bisects on `[lo, hi]` for the first sign change of `g` from `≤ 0` to `> 0`.
///
/// Returns the upper end of the final bracket, within `tol` of the crossing.
pub fn bisect<G>(mut g: G, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64>
where
    G: FnMut(f64) -> Result<f64>,
{
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if g(mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay(_t: f64, y: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(-y)
    }

    #[test]
    fn rk4_order() {
        let y0 = DVector::from_element(1, 1.0);
        let err = |n: usize| {
            let h = 1.0 / n as f64;
            let mut y = y0.clone();
            for i in 0..n {
                y = Rk4.advance(&mut decay, i as f64 * h, &y, h).unwrap();
            }
            (y[0] - (-1f64).exp()).abs()
        };
        let ratio = err(10) / err(20);
        assert!((ratio - 16.0).abs() < 1.5, "{ratio}");
    }

    #[test]
    fn rk45_accurate_over_long_interval() {
        let y0 = DVector::from_element(1, 1.0);
        let y = Rk45::default().advance(&mut decay, 0.0, &y0, 2.0).unwrap();
        assert!((y[0] - (-2f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn bisect_linear_event() {
        let t_star = 0.123_456_7;
        let t = bisect(|t| Ok(t - t_star), 0.0, 1.0, 1e-6).unwrap();
        assert!(t >= t_star && t - t_star < 1e-6);
    }

    #[test]
    fn registry_names() {
        let r = integrators();
        assert_eq!(r.names(), vec!["rk4", "rk45"]);
        assert!(r.create("euler").is_err());
    }
}
