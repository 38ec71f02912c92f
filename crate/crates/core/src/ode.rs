//! Fixed-step classical Runge-Kutta integration.

use crate::error::{FlmError, Result};

/// Integrates `y' = f(t, y)` from `t0` to `t1` in `steps` equal steps and
/// returns all `steps + 1` states.
pub fn rk4<const D: usize, F>(
    mut f: F,
    y0: [f64; D],
    t0: f64,
    t1: f64,
    steps: usize,
) -> Result<Vec<[f64; D]>>
where
    F: FnMut(f64, &[f64; D]) -> [f64; D],
{
    if steps == 0 {
        return Err(FlmError::Config("rk4 needs at least one step".into()));
    }
    let h = (t1 - t0) / steps as f64;
    let mut path = Vec::with_capacity(steps + 1);
    path.push(y0);
    let mut y = y0;
    let axpy = |y: &[f64; D], k: &[f64; D], a: f64| -> [f64; D] {
        std::array::from_fn(|i| y[i] + a * k[i])
    };
    for n in 0..steps {
        let t = t0 + n as f64 * h;
        let k1 = f(t, &y);
        let k2 = f(t + 0.5 * h, &axpy(&y, &k1, 0.5 * h));
        let k3 = f(t + 0.5 * h, &axpy(&y, &k2, 0.5 * h));
        let k4 = f(t + h, &axpy(&y, &k3, h));
        for i in 0..D {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(FlmError::Integration { time: t + h });
        }
        path.push(y);
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_path() {
        let path = rk4(|_, _| [0.0, 0.0], [1.5, -2.0], 0.0, 3.0, 10).unwrap();
        assert_eq!(path.len(), 11);
        assert!(path.iter().all(|y| *y == [1.5, -2.0]));
    }

    #[test]
    fn exponential_growth() {
        let path = rk4(|_, y| [y[0]], [1.0], 0.0, 1.0, 1000).unwrap();
        assert!((path[1000][0] - std::f64::consts::E).abs() <= 1e-10);
    }

    #[test]
    fn time_dependent_rhs() {
        // y' = 3t², y(0) = 0 → y(2) = 8, exact for RK4
        let path = rk4(|t, _| [3.0 * t * t], [0.0], 0.0, 2.0, 7).unwrap();
        assert!((path[7][0] - 8.0).abs() < 1e-12);
    }

    #[test]
    fn blow_up_reports_time() {
        // y' = y², y(0) = 1 blows up at t = 1
        let err = rk4(|_, y| [y[0] * y[0]], [1.0], 0.0, 2.0, 200).unwrap_err();
        match err {
            FlmError::Integration { time } => assert!(time > 0.9 && time <= 1.2, "{time}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_steps_rejected() {
        assert!(rk4(|_, y| *y, [1.0], 0.0, 1.0, 0).is_err());
    }
}
