//! Dormand–Prince 5(4) integrator with continuous output.

use serde::Serialize;

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
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
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl OdeOptions {
    pub fn tight(tol: f64) -> Self {
        OdeOptions {
            rtol: tol,
            atol: tol,
            max_steps: 200_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct OdeStats {
    pub steps: usize,
    pub rejected: usize,
    pub evaluations: usize,
    /// Largest accepted normalized local error estimate.
    pub max_error: f64,
}

/// Result of a dense integration: states at the requested outputs and the
/// final state reached (which is the end point unless integration stopped).
#[derive(Debug, Clone)]
pub struct DenseSolution {
    pub outputs: Vec<Vec<f64>>,
    pub stats: OdeStats,
}

fn axpy(out: &mut [f64], y: &[f64], h: f64, terms: &[(f64, &[f64])]) {
    for i in 0..y.len() {
        let mut s = 0.0;
        for (c, k) in terms {
            s += c * k[i];
        }
        out[i] = y[i] + h * s;
    }
}

/// Integrates `y' = f(s, y)` from `s0` to `s_end` and returns the states at
/// `outputs` (which must be monotone in the direction of integration and
/// lie within the interval). `check` is called at every accepted step and
/// may abort the integration with an error.
pub fn integrate<F, C>(
    mut f: F,
    s0: f64,
    y0: &[f64],
    s_end: f64,
    outputs: &[f64],
    opts: &OdeOptions,
    mut check: C,
) -> Result<DenseSolution>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    C: FnMut(f64, &[f64]) -> Result<()>,
{
    let n = y0.len();
    let dir = if s_end >= s0 { 1.0 } else { -1.0 };
    let span = (s_end - s0).abs();
    let mut stats = OdeStats::default();
    let mut out = Vec::with_capacity(outputs.len());
    let mut next_out = 0;
    let mut y = y0.to_vec();
    let mut s = s0;
    while next_out < outputs.len() && (outputs[next_out] - s0) * dir <= 0.0 {
        out.push(y.clone());
        next_out += 1;
    }
    if span == 0.0 {
        while out.len() < outputs.len() {
            out.push(y.clone());
        }
        return Ok(DenseSolution {
            outputs: out,
            stats,
        });
    }
    let mut k1 = vec![0.0; n];
    let (mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) = (
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
    );
    let mut tmp = vec![0.0; n];
    let mut y1 = vec![0.0; n];
    f(s, &y, &mut k1)?;
    stats.evaluations += 1;

    let sk0: f64 = (0..n)
        .map(|i| {
            let sc = opts.atol + opts.rtol * y[i].abs();
            (k1[i] / sc).powi(2)
        })
        .sum::<f64>();
    let d1 = (sk0 / n as f64).sqrt();
    let mut h = if d1 > 1e-10 {
        0.01 / d1
    } else {
        1e-3 * span.max(1e-3)
    };
    h = h.min(span).max(1e-12 * span) * dir;
    let mut last_reject = false;

    loop {
        if stats.steps + stats.rejected > opts.max_steps {
            return Err(Error::StepFailure { s });
        }
        if (s + h - s_end) * dir > 0.0 {
            h = s_end - s;
        }
        axpy(&mut tmp, &y, h, &[(A21, &k1)]);
        f(s + C2 * h, &tmp, &mut k2)?;
        axpy(&mut tmp, &y, h, &[(A31, &k1), (A32, &k2)]);
        f(s + C3 * h, &tmp, &mut k3)?;
        axpy(&mut tmp, &y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        f(s + C4 * h, &tmp, &mut k4)?;
        axpy(
            &mut tmp,
            &y,
            h,
            &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)],
        );
        f(s + C5 * h, &tmp, &mut k5)?;
        axpy(
            &mut tmp,
            &y,
            h,
            &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        );
        f(s + h, &tmp, &mut k6)?;
        axpy(
            &mut y1,
            &y,
            h,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        f(s + h, &y1, &mut k7)?;
        stats.evaluations += 6;

        let mut err = 0.0;
        for i in 0..n {
            let e =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(y1[i].abs());
            err += (e / sc).powi(2);
        }
        let err = (err / n as f64).sqrt();
        if !err.is_finite() {
            h *= 0.25;
            stats.rejected += 1;
            if h.abs() < 1e-14 * span {
                return Err(Error::StepFailure { s });
            }
            continue;
        }
        let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
        if err <= 1.0 {
            stats.steps += 1;
            stats.max_error = stats.max_error.max(err);
            let s_new = s + h;
            while next_out < outputs.len() && (outputs[next_out] - s_new) * dir <= 0.0 {
                let theta = (outputs[next_out] - s) / h;
                let th1 = 1.0 - theta;
                let mut yo = vec![0.0; n];
                for i in 0..n {
                    let ydiff = y1[i] - y[i];
                    let bspl = h * k1[i] - ydiff;
                    let r4 = ydiff - h * k7[i] - bspl;
                    let r5 = h
                        * (D1 * k1[i]
                            + D3 * k3[i]
                            + D4 * k4[i]
                            + D5 * k5[i]
                            + D6 * k6[i]
                            + D7 * k7[i]);
                    yo[i] = y[i] + theta * (ydiff + th1 * (bspl + theta * (r4 + th1 * r5)));
                }
                out.push(yo);
                next_out += 1;
            }
            check(s_new, &y1)?;
            y.copy_from_slice(&y1);
            k1.copy_from_slice(&k7);
            s = s_new;
            if (s - s_end) * dir >= 0.0 {
                break;
            }
            h *= if last_reject { fac.min(1.0) } else { fac };
            last_reject = false;
        } else {
            stats.rejected += 1;
            last_reject = true;
            h *= fac.min(1.0);
            if h.abs() < 1e-14 * span {
                return Err(Error::StepFailure { s });
            }
        }
    }
    while out.len() < outputs.len() {
        out.push(y.clone());
    }
    Ok(DenseSolution {
        outputs: out,
        stats,
    })
}

/// Final state only.
pub fn integrate_to<F>(f: F, s0: f64, y0: &[f64], s_end: f64, opts: &OdeOptions) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let sol = integrate(f, s0, y0, s_end, &[s_end], opts, |_, _| Ok(()))?;
    Ok(sol.outputs.into_iter().next().unwrap())
}
