//! Dormand–Prince 5(4) stepper for the two-component linear system used by
//! the shooting solver.
//!
//! The state is rescaled whenever it grows past [`RENORM_THRESHOLD`]; the
//! accumulated natural-log scale is reported alongside every output.

use num_complex::Complex64;

use crate::error::{Error, Result};

type C = Complex64;
pub type State = [C; 2];

pub const RENORM_THRESHOLD: f64 = 1e50;
const MAX_STEPS: usize = 2_000_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Stepping {
    /// Error-controlled steps with relative tolerance `rtol`.
    Adaptive { rtol: f64 },
    /// Constant steps of (at most) this size, without error control.
    Fixed(f64),
}

impl Default for Stepping {
    fn default() -> Self {
        Stepping::Adaptive { rtol: 1e-10 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Output {
    pub s: f64,
    pub y: State,
    /// `y_true = y · exp(log_scale)`
    pub log_scale: f64,
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// difference between the 5th and embedded 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

fn axpy(y: &State, terms: &[(f64, &State)], h: f64) -> State {
    let mut out = *y;
    for (c, k) in terms {
        out[0] += k[0] * (h * c);
        out[1] += k[1] * (h * c);
    }
    out
}

fn norm(y: &State) -> f64 {
    (y[0].norm_sqr() + y[1].norm_sqr()).sqrt()
}

/// Integrates `y' = f(s, y)` from `s0` through every point of `targets`
/// (monotone, all on the same side of `s0`) and returns the state at each.
pub fn integrate<F>(f: F, s0: f64, y0: State, targets: &[f64], stepping: Stepping) -> Result<Vec<Output>>
where
    F: Fn(f64, &State) -> Result<State>,
{
    let Some(&last) = targets.last() else { return Ok(Vec::new()) };
    let dir = if last >= s0 { 1.0 } else { -1.0 };
    let span = (last - s0).abs();
    let mut out = Vec::with_capacity(targets.len());
    let mut s = s0;
    let mut y = y0;
    let mut log_scale = 0.0;
    let mut k1 = f(s, &y)?;
    let mut h = match stepping {
        Stepping::Adaptive { .. } => (span / 100.0).max(1e-6),
        Stepping::Fixed(h) => h,
    };
    let mut steps = 0usize;

    for &target in targets {
        if (target - s) * dir < 0.0 {
            return Err(Error::InvalidInput("integration targets must be monotone".into()));
        }
        while (target - s) * dir > 0.0 {
            steps += 1;
            if steps > MAX_STEPS {
                return Err(Error::Integration { s, reason: "step limit exceeded".into() });
            }
            let remaining = (target - s).abs();
            let (hh, lands) = if h >= remaining * (1.0 - 1e-12) { (remaining, true) } else { (h, false) };
            let hs = hh * dir;

            let k2 = f(s + C2 * hs, &axpy(&y, &[(A21, &k1)], hs))?;
            let k3 = f(s + C3 * hs, &axpy(&y, &[(A31, &k1), (A32, &k2)], hs))?;
            let k4 = f(s + C4 * hs, &axpy(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], hs))?;
            let k5 = f(s + C5 * hs, &axpy(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], hs))?;
            let k6 = f(s + hs, &axpy(&y, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], hs))?;
            let y_new = axpy(&y, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], hs);
            let s_new = if lands { target } else { s + hs };
            let k7 = f(s_new, &y_new)?;

            if !(y_new[0].is_finite() && y_new[1].is_finite()) {
                if let Stepping::Fixed(_) = stepping {
                    return Err(Error::Integration { s, reason: "non-finite state".into() });
                }
                h *= 0.2;
                if h < 1e-14 * (1.0 + s.abs()) {
                    return Err(Error::Integration { s, reason: "non-finite state".into() });
                }
                continue;
            }

            let accept = match stepping {
                Stepping::Fixed(_) => true,
                Stepping::Adaptive { rtol } => {
                    let err = axpy(
                        &[C::new(0.0, 0.0); 2],
                        &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)],
                        hs,
                    );
                    let sc = 1e-300 + rtol * norm(&y).max(norm(&y_new));
                    let e = norm(&err) / sc;
                    let fac = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 5.0) };
                    if e <= 1.0 {
                        // keep the unclipped step when the last one was shortened to land
                        h = if lands { h.max(hh * fac) } else { hh * fac };
                        true
                    } else {
                        h = hh * fac.min(1.0);
                        if h < 1e-14 * (1.0 + s.abs()) {
                            return Err(Error::Integration { s, reason: "step size underflow".into() });
                        }
                        false
                    }
                }
            };
            if accept {
                s = s_new;
                y = y_new;
                k1 = k7;
                let n = norm(&y);
                if n > RENORM_THRESHOLD {
                    let inv = 1.0 / n;
                    y = [y[0] * inv, y[1] * inv];
                    k1 = [k1[0] * inv, k1[1] * inv];
                    log_scale += n.ln();
                }
            }
        }
        out.push(Output { s, y, log_scale });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    // y'' = -y as a first-order system, y = (cos, -sin)
    fn oscillator(_s: f64, y: &State) -> Result<State> {
        Ok([y[1], -y[0]])
    }

    #[test]
    fn adaptive_hits_targets_exactly() {
        let targets: Vec<f64> = (1..=10).map(|k| k as f64 * 0.7).collect();
        let out =
            integrate(oscillator, 0.0, [C::new(1.0, 0.0), C::new(0.0, 0.0)], &targets, Stepping::default()).unwrap();
        for (o, &t) in out.iter().zip(&targets) {
            assert_eq!(o.s, t);
            assert!((o.y[0] - t.cos()).norm() < 1e-9);
        }
    }

    #[test]
    fn backward_integration() {
        let out = integrate(
            oscillator,
            1.0,
            [C::new(1.0f64.cos(), 0.0), C::new(-1.0f64.sin(), 0.0)],
            &[0.0],
            Stepping::default(),
        )
        .unwrap();
        assert!((out[0].y[0] - 1.0).norm() < 1e-9);
    }

    #[test]
    fn fifth_order_convergence() {
        let run = |h: f64| {
            let out =
                integrate(oscillator, 0.0, [C::new(1.0, 0.0), C::new(0.0, 0.0)], &[2.0], Stepping::Fixed(h)).unwrap();
            (out[0].y[0] - 2.0f64.cos()).norm()
        };
        let (e1, e2) = (run(0.1), run(0.05));
        let order = (e1 / e2).log2();
        assert!(order > 4.5, "observed order {order}");
    }

    #[test]
    fn renormalizes_growing_solutions() {
        // y' = 3y grows by e^600 over [0, 200]
        let out = integrate(
            |_s, y: &State| Ok([3.0 * y[0], C::new(0.0, 0.0)]),
            0.0,
            [C::new(1.0, 0.0), C::new(0.0, 0.0)],
            &[200.0],
            Stepping::default(),
        )
        .unwrap();
        let o = out[0];
        let log_true = o.y[0].norm().ln() + o.log_scale;
        assert!((log_true - 600.0).abs() < 1e-6, "{log_true}");
        assert!(o.y[0].norm() <= RENORM_THRESHOLD * 1e10);
    }

    #[test]
    fn rejects_non_monotone_targets() {
        let r = integrate(oscillator, 0.0, [C::new(1.0, 0.0), C::new(0.0, 0.0)], &[1.0, 0.5], Stepping::default());
        assert!(r.is_err());
    }
}
