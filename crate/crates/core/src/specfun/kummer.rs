use num_complex::Complex64;

use super::gamma::log_gamma_complex;
use super::scaled::Scaled;
use crate::error::{Error, Result};

/// Crossover argument between the ascending series and the large-z expansion.
pub const KUMMER_ASYM_Z: f64 = 40.0;

const MAX_TERMS: usize = 200_000;
const RESCALE: f64 = 1e150;

fn is_nonpositive_integer(b: Complex64) -> bool {
    b.im.abs() <= 1e-12 && b.re <= 1e-12 && (b.re - b.re.round()).abs() <= 1e-12
}

/// Ascending series for M(a, b, z) with compensated summation and periodic
/// rescaling, so arguments far beyond the f64 range of the sum are fine.
pub fn kummer_series_scaled(a: Complex64, b: Complex64, z: f64) -> Result<Scaled> {
    if is_nonpositive_integer(b) {
        return Err(Error::Pole(b.re));
    }
    let mut log_scale = 0.0;
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(1.0, 0.0);
    let mut comp = Complex64::new(0.0, 0.0);
    let mut small = 0;
    for k in 0..MAX_TERMS {
        let kf = k as f64;
        let num = a + kf;
        if num == Complex64::new(0.0, 0.0) {
            return Ok(Scaled::new(sum, log_scale));
        }
        term *= num / (b + kf) * (z / (kf + 1.0));
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if sum.norm() > RESCALE {
            sum /= RESCALE;
            term /= RESCALE;
            comp /= RESCALE;
            log_scale += RESCALE.ln();
        }
        // Terms are decreasing once k passes |z| and |a|; require a few
        // negligible terms in a row so an accidental near-zero is not taken
        // for convergence.
        if term.norm() <= 1e-17 * sum.norm() && kf + 1.0 > z {
            small += 1;
            if small >= 3 {
                return Ok(Scaled::new(sum, log_scale));
            }
        } else {
            small = 0;
        }
    }
    Err(Error::Convergence(format!("Kummer series at z = {z}")))
}

/// Sum of `sum_k (p)_k (q)_k / k! * x^k` while its terms keep shrinking.
/// `None` when terms start growing before reaching the tolerance or when an
/// early term dwarfs the sum (too much cancellation).
fn asymptotic_sum(p: Complex64, q: Complex64, x: f64) -> Option<Complex64> {
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(1.0, 0.0);
    let mut biggest: f64 = 1.0;
    let mut prev = 1.0;
    for k in 0..400 {
        let kf = k as f64;
        term *= (p + kf) * (q + kf) * (x / (kf + 1.0));
        let m = term.norm();
        if m == 0.0 {
            return Some(sum);
        }
        if m > prev && k > 0 {
            // Divergent tail: accept if the smallest term was already small.
            return if prev <= 1e-15 * sum.norm() && biggest <= 10.0 * sum.norm() { Some(sum) } else { None };
        }
        prev = m;
        biggest = biggest.max(m);
        sum += term;
        if m <= 1e-17 * sum.norm() {
            return if biggest <= 10.0 * sum.norm() { Some(sum) } else { None };
        }
    }
    None
}

/// Large-argument expansion of M(a, b, z), valid for z much larger than the
/// parameters. The two exponentially separated pieces are combined using the
/// average of the two branch factors, which is exact up to terms that are
/// exponentially small against the dominant one.
pub fn kummer_asymptotic_scaled(a: Complex64, b: Complex64, z: f64) -> Option<Scaled> {
    let lgb = log_gamma_complex(b).ok()?;
    let lz = z.ln();
    let s1 = asymptotic_sum(b - a, 1.0 - a, 1.0 / z)?;
    let s2 = asymptotic_sum(a, a - b + 1.0, -1.0 / z)?;
    let first = match log_gamma_complex(a) {
        Ok(lga) => Scaled::exp(lgb - lga + z + (a - b) * lz).scale_by(s1),
        Err(_) => Scaled::ZERO,
    };
    let second = match log_gamma_complex(b - a) {
        Ok(lgba) => Scaled::exp(lgb - lgba - a * lz).scale_by((std::f64::consts::PI * a).cos() * s2),
        Err(_) => Scaled::ZERO,
    };
    Some(first.add(&second))
}

/// Kummer's confluent hypergeometric function M(a, b, z) = 1F1(a; b; z) for
/// real z > 0, in scaled form.
pub fn kummer_m_scaled(a: Complex64, b: Complex64, z: f64) -> Result<Scaled> {
    if is_nonpositive_integer(b) {
        return Err(Error::Pole(b.re));
    }
    if !(z >= 0.0) || !z.is_finite() {
        return Err(Error::Domain(format!("Kummer M needs z >= 0, got {z}")));
    }
    if z > KUMMER_ASYM_Z {
        if let Some(v) = kummer_asymptotic_scaled(a, b, z) {
            return Ok(v);
        }
    }
    kummer_series_scaled(a, b, z)
}

pub fn kummer_m(a: Complex64, b: Complex64, z: f64) -> Result<Complex64> {
    let s = kummer_m_scaled(a, b, z)?;
    let v = s.to_complex();
    if !(v.re.is_finite() && v.im.is_finite()) {
        return Err(Error::Convergence(format!("Kummer M overflows binary64 at z = {z}")));
    }
    Ok(v)
}

/// Tricomi's U(a, b, z) for real z > 0.
///
/// Large z uses the asymptotic series in 1/z. Otherwise the two-M
/// connection formula; when b sits on an integer the Gamma poles are avoided
/// by averaging evaluations at b +- h along its axis, with one Richardson
/// step over h = 1e-3, 5e-4.
pub fn tricomi_u(a: Complex64, b: Complex64, z: f64) -> Result<Complex64> {
    tricomi_u_scaled(a, b, z).map(|s| s.to_complex())
}

pub fn tricomi_u_scaled(a: Complex64, b: Complex64, z: f64) -> Result<Scaled> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::Domain(format!("Tricomi U needs z > 0, got {z}")));
    }
    if a.im == 0.0 && b.im == 0.0 {
        // U(a,b,z) = e^{z/2} z^{-b/2} W_{b/2-a,(b-1)/2}(z); the W evaluator
        // avoids the cancelling connection formula where it can.
        let w = super::whittaker::whittaker_w_scaled(b.re / 2.0 - a.re, Complex64::new((b.re - 1.0) / 2.0, 0.0), z)?;
        return Ok(Scaled::exp(Complex64::new(z / 2.0 - b.re / 2.0 * z.ln(), 0.0)).mul(&w));
    }
    if z > KUMMER_ASYM_Z * 0.5 {
        if let Some(s) = asymptotic_sum(a, a - b + 1.0, -1.0 / z) {
            return Ok(Scaled::exp(-a * z.ln()).scale_by(s));
        }
    }
    if near_integer(b, 1e-9) {
        let avg = |h: f64| -> Result<Scaled> {
            let step = perturbation(b, h);
            let hi = tricomi_u_connection(a, b + step, z)?;
            let lo = tricomi_u_connection(a, b - step, z)?;
            Ok(hi.add(&lo).scale_by(Complex64::new(0.5, 0.0)))
        };
        let u1 = avg(1e-3)?;
        let u2 = avg(5e-4)?;
        return Ok(u2.scale_by(Complex64::new(4.0 / 3.0, 0.0)).sub(&u1.scale_by(Complex64::new(1.0 / 3.0, 0.0))));
    }
    tricomi_u_connection(a, b, z)
}

fn near_integer(b: Complex64, tol: f64) -> bool {
    b.im.abs() <= tol && (b.re - b.re.round()).abs() <= tol
}

fn perturbation(b: Complex64, h: f64) -> Complex64 {
    if b.im != 0.0 && b.re == 0.0 {
        Complex64::new(0.0, h)
    } else {
        Complex64::new(h, 0.0)
    }
}

/// U = Gamma(1-b)/Gamma(a-b+1) M(a,b,z) + Gamma(b-1)/Gamma(a) z^(1-b) M(a-b+1,2-b,z).
/// Fails with `DegenerateIndex` when b is within 1e-9 of an integer.
pub fn tricomi_u_connection(a: Complex64, b: Complex64, z: f64) -> Result<Scaled> {
    if near_integer(b, 1e-9) {
        return Err(Error::DegenerateIndex(format!("U connection at integer b = {b}")));
    }
    let one = Complex64::new(1.0, 0.0);
    let m1 = kummer_m_scaled(a, b, z)?;
    let m2 = kummer_m_scaled(a - b + 1.0, 2.0 - b, z)?;
    let t1 = match log_gamma_complex(a - b + 1.0) {
        Ok(l) => Scaled::exp(log_gamma_complex(one - b)? - l).mul(&m1),
        Err(_) => Scaled::ZERO,
    };
    let t2 = match log_gamma_complex(a) {
        Ok(l) => Scaled::exp(log_gamma_complex(b - 1.0)? - l + (one - b) * z.ln()).mul(&m2),
        Err(_) => Scaled::ZERO,
    };
    Ok(t1.add(&t2))
}
