use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

// B_{2k} / (2k (2k-1)) for the Stirling tail.
const STIRLING: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
    43867.0 / 244188.0,
    -174611.0 / 125400.0,
];

fn check_pole(z: Complex64) -> Result<()> {
    if z.re <= 0.5 && z.im.abs() <= 1e-12 {
        let n = z.re.round();
        if n <= 0.0 && (z.re - n).abs() <= 1e-12 {
            return Err(Error::Pole(z.re));
        }
    }
    Ok(())
}

fn lanczos(z: Complex64) -> Complex64 {
    let z = z - 1.0;
    let mut x = Complex64::new(LANCZOS[0], 0.0);
    for (i, &p) in LANCZOS.iter().enumerate().skip(1) {
        x += p / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powc(z + 0.5) * (-t).exp() * x
}

/// Complex Gamma function.
pub fn gamma_complex(z: Complex64) -> Result<Complex64> {
    check_pole(z)?;
    if z.re < 0.5 {
        // Reflection.
        let s = (PI * z).sin();
        return Ok(PI / (s * lanczos(1.0 - z)));
    }
    Ok(lanczos(z))
}

/// Reciprocal Gamma, entire; zero at the poles of Gamma.
pub fn rgamma_complex(z: Complex64) -> Complex64 {
    match log_gamma_complex(z) {
        Ok(l) => (-l).exp(),
        Err(_) => Complex64::new(0.0, 0.0),
    }
}

fn stirling(w: Complex64) -> Complex64 {
    let inv = 1.0 / w;
    let inv2 = inv * inv;
    let mut tail = Complex64::new(0.0, 0.0);
    let mut p = inv;
    for c in STIRLING {
        tail += c * p;
        p *= inv2;
    }
    (w - 0.5) * w.ln() - w + 0.5 * (2.0 * PI).ln() + tail
}

/// Principal branch of log Gamma: analytic off the negative real axis and
/// real on the positive one.
pub fn log_gamma_complex(z: Complex64) -> Result<Complex64> {
    check_pole(z)?;
    let approx = log_gamma_shifted(z);
    if z.norm() < 15.0 {
        // The shifted Stirling route loses a digit or two to the recurrence;
        // the Lanczos value is more accurate here, and the Stirling value only
        // supplies the branch.
        let g = gamma_complex(z)?;
        if g.norm() > 0.0 && g.norm().is_finite() {
            let l = g.ln();
            let k = ((approx.im - l.im) / (2.0 * PI)).round();
            return Ok(Complex64::new(l.re, l.im + 2.0 * PI * k));
        }
    }
    Ok(approx)
}

fn log_gamma_shifted(z: Complex64) -> Complex64 {
    let mut w = z;
    let mut shift = Complex64::new(0.0, 0.0);
    while w.re < 0.0 || w.norm() < 15.0 {
        shift += w.ln();
        w += 1.0;
    }
    stirling(w) - shift
}

/// Real log Gamma for positive arguments.
pub fn ln_gamma(x: f64) -> f64 {
    log_gamma_complex(Complex64::new(x, 0.0)).map(|c| c.re).unwrap_or(f64::INFINITY)
}
