use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Ascending series gamma + ln|x| + sum x^k / (k k!).
pub fn ei_series(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    let mut comp = 0.0;
    for k in 1..500 {
        let kf = k as f64;
        term *= x / kf;
        let t = term / kf;
        let y = t - comp;
        let s = sum + y;
        comp = (s - sum) - y;
        sum = s;
        if t.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    EULER_GAMMA + x.abs().ln() + sum
}

/// e^x E1(x) for x > 0 by the modified Lentz continued fraction
/// E1(x) = e^{-x} / (x + 1 - 1/(x + 3 - 4/(x + 5 - ...))).
pub fn exp_e1_cf(x: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..100_000 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() <= 1e-16 {
            break;
        }
    }
    h
}

/// e^{-x} x Ei(x) for large positive x, divergent asymptotic series
/// truncated at its smallest term.
fn ei_asymptotic_scaled(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        let next = term * k as f64 / x;
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term <= 1e-17 * sum {
            break;
        }
    }
    sum
}

/// Exponential integral Ei(x), principal value for x > 0.
pub fn exp_integral_ei(x: f64) -> Result<f64> {
    if x == 0.0 || !x.is_finite() {
        return Err(Error::Domain(format!("Ei undefined at {x}")));
    }
    if x < 0.0 {
        if x >= -1.0 {
            return Ok(ei_series(x));
        }
        return Ok(-exp_e1_cf(-x) * x.exp());
    }
    if x <= 40.0 {
        return Ok(ei_series(x));
    }
    Ok(x.exp() / x * ei_asymptotic_scaled(x))
}

/// e^x E1(x) = -e^x Ei(-x) for x > 0, without overflow or underflow.
pub fn exp_e1(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("E1 needs x > 0, got {x}")));
    }
    if x <= 1.0 {
        return Ok(-x.exp() * ei_series(-x));
    }
    Ok(exp_e1_cf(x))
}
