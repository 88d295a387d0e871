use num_complex::Complex64;

use super::gamma::log_gamma_complex;
use super::kummer::kummer_m_scaled;
use super::scaled::Scaled;
use crate::error::{Error, Result};

/// Index pair (a, b) of the Whittaker functions. `b` is purely real or purely
/// imaginary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WhittakerIndices {
    pub first: f64,
    pub second: Complex64,
}

impl WhittakerIndices {
    pub fn new(first: f64, second: Complex64) -> Result<Self> {
        if second.re != 0.0 && second.im != 0.0 {
            return Err(Error::Domain(format!("second index must be real or imaginary, got {second}")));
        }
        Ok(WhittakerIndices { first, second })
    }

    pub fn real(first: f64, b: f64) -> Self {
        WhittakerIndices { first, second: Complex64::new(b, 0.0) }
    }

    pub fn imag(first: f64, beta_half: f64) -> Self {
        WhittakerIndices { first, second: Complex64::new(0.0, beta_half) }
    }
}

/// Second index folded onto the nonnegative half of its axis. W is even in
/// b, so this changes nothing mathematically and makes the symmetry exact.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Second {
    Real(f64),
    Imag(f64),
}

impl Second {
    fn from(b: Complex64) -> Result<Self> {
        if b.re != 0.0 && b.im != 0.0 {
            return Err(Error::Domain(format!("second index must be real or imaginary, got {b}")));
        }
        if b.im != 0.0 {
            Ok(Second::Imag(b.im.abs()))
        } else {
            Ok(Second::Real(b.re.abs()))
        }
    }

    fn complex(self) -> Complex64 {
        match self {
            Second::Real(x) => Complex64::new(x, 0.0),
            Second::Imag(y) => Complex64::new(0.0, y),
        }
    }

    fn square(self) -> f64 {
        match self {
            Second::Real(x) => x * x,
            Second::Imag(y) => -y * y,
        }
    }
}

fn check_z(z: f64) -> Result<()> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::Domain(format!("Whittaker functions need z > 0, got {z}")));
    }
    Ok(())
}

/// M_{a,b}(z) = exp(-z/2) z^(b+1/2) M(1/2+b-a, 1+2b, z).
pub fn whittaker_m_scaled(a: f64, b: Complex64, z: f64) -> Result<Scaled> {
    check_z(z)?;
    let km = kummer_m_scaled(0.5 + b - a, 1.0 + 2.0 * b, z)?;
    Ok(Scaled::exp(-z / 2.0 + (b + 0.5) * z.ln()).mul(&km))
}

pub fn whittaker_m(idx: WhittakerIndices, z: f64) -> Result<Complex64> {
    whittaker_m_scaled(idx.first, idx.second, z).map(|s| s.to_complex())
}

/// Gamma(-2b)/Gamma(1/2-b-a) M_{a,b}(z): one half of the connection formula.
fn connection_term(a: f64, b: Complex64, z: f64) -> Result<Scaled> {
    let m = whittaker_m_scaled(a, b, z)?;
    let g = match log_gamma_complex(0.5 - b - a) {
        Ok(l) => Scaled::exp(log_gamma_complex(-2.0 * b)? - l),
        Err(_) => return Ok(Scaled::ZERO),
    };
    Ok(g.mul(&m))
}

/// W_{a,b}(z) from the two M functions. Fails with `DegenerateIndex` when 2b
/// is within 1e-9 of an integer, where the Gamma factors have poles.
pub fn whittaker_w_connection(a: f64, b: Complex64, z: f64) -> Result<Scaled> {
    check_z(z)?;
    let s = Second::from(b)?;
    connection(a, s, z).map(|(w, _)| w)
}

/// Returns W and the modulus of the larger connection term, the latter
/// measuring the cancellation suffered.
fn connection(a: f64, s: Second, z: f64) -> Result<(Scaled, f64)> {
    let b = s.complex();
    let two_b = 2.0 * b.norm();
    let degenerate = match s {
        Second::Real(_) => (two_b - two_b.round()).abs() <= 1e-9,
        Second::Imag(_) => two_b <= 1e-9,
    };
    if degenerate {
        return Err(Error::DegenerateIndex(format!("2b = {two_b} is an integer")));
    }
    match s {
        Second::Imag(_) => {
            // The two terms are complex conjugates.
            let t = connection_term(a, b, z)?;
            let w = Scaled::new(Complex64::new(2.0 * t.mant.re, 0.0), t.log_scale);
            Ok((w, t.ln_abs() + 2f64.ln()))
        }
        Second::Real(_) => {
            let t1 = connection_term(a, b, z)?;
            let t2 = connection_term(a, -b, z)?;
            let big = t1.ln_abs().max(t2.ln_abs());
            let w = t1.add(&t2);
            Ok((w.re(), big))
        }
    }
}

/// Connection formula at degenerate indices. W is even about b = 0 and the
/// average of W(b0 + h) and W(b0 - h) is even in h about a half-integer b0,
/// so one Richardson step on h = 1e-3, 5e-4 removes the h^2 term. Closer
/// offsets lose more to the cancelling Gamma poles than they gain.
fn connection_limit(a: f64, s: Second, z: f64) -> Result<(Scaled, f64)> {
    let mag = match s {
        Second::Real(x) | Second::Imag(x) => x,
    };
    let n = match s {
        Second::Real(_) => (2.0 * mag).round(),
        Second::Imag(_) => 0.0,
    };
    if (2.0 * mag - n).abs() > 2e-7 {
        return connection(a, s, z);
    }
    let with = |m: f64| match s {
        Second::Real(_) => Second::Real(m),
        Second::Imag(_) => Second::Imag(m),
    };
    let b0 = n / 2.0;
    let avg = |h: f64| -> Result<(Scaled, f64)> {
        if n == 0.0 {
            return connection(a, with(h), z);
        }
        let (hi, bh) = connection(a, with(b0 + h), z)?;
        let (lo, bl) = connection(a, with(b0 - h), z)?;
        Ok((hi.add(&lo).scale_by(Complex64::new(0.5, 0.0)), bh.max(bl)))
    };
    let (w1, b1) = avg(LIMIT_STEP)?;
    let (w2, b2) = avg(LIMIT_STEP / 2.0)?;
    let w = w2.scale_by(Complex64::new(4.0 / 3.0, 0.0)).sub(&w1.scale_by(Complex64::new(1.0 / 3.0, 0.0)));
    Ok((w, b1.max(b2)))
}

const LIMIT_STEP: f64 = 1e-3;

/// Largest zero of z^2/4 - a z - (1/4 - b^2): beyond it the Whittaker
/// equation has no oscillation and W decays monotonically.
fn turning_point(a: f64, s: Second) -> f64 {
    let c = 0.25 - s.square();
    let disc = a * a + c;
    if disc <= 0.0 {
        return 0.0;
    }
    (2.0 * (a + disc.sqrt())).max(0.0)
}

/// e^{-z/2} z^a sum_k (1/2-a+b)_k (1/2-a-b)_k / (k! (-z)^k), the large-z
/// expansion. Returns (ln W, W'/W) when the series converges cleanly.
/// Large-z expansion: (a ln z, series sum, W'/W), so that
/// W = e^{-z/2} z^a sum.
fn asymptotic(a: f64, s: Second, z: f64) -> Option<(f64, f64, f64)> {
    let c0 = 0.5 - a;
    let b2 = s.square();
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    let mut dsum = 0.0f64;
    let mut biggest = 1.0f64;
    let mut prev = 1.0f64;
    for k in 0..2000 {
        let kf = k as f64;
        let num = (c0 + kf) * (c0 + kf) - b2;
        term *= -num / ((kf + 1.0) * z);
        let m = term.abs();
        if m == 0.0 {
            break;
        }
        if m > prev && k > 0 {
            if prev <= 1e-15 * sum.abs() {
                break;
            }
            return None;
        }
        prev = m;
        biggest = biggest.max(m);
        sum += term;
        dsum += -(kf + 1.0) * term / z;
        if m <= 1e-17 * sum.abs() {
            break;
        }
        if k == 1999 {
            return None;
        }
    }
    if sum <= 0.0 || biggest > 10.0 * sum {
        return None;
    }
    Some((a * z.ln(), sum, -0.5 + a / z + dsum / sum))
}

/// Integrates the Riccati form y' = q - y^2 of the Whittaker equation,
/// y = W'/W, together with (ln W)' = y, from z0 down to z1 < z0. W has no
/// zeros beyond the turning point and the decaying solution dominates in the
/// inward direction, so this is stable.
fn riccati(a: f64, s: Second, z0: f64, l0: f64, y0: f64, z1: f64) -> Result<(f64, f64)> {
    let c = 0.25 - s.square();
    let q = |z: f64| 0.25 - a / z - c / (z * z);
    let f = |z: f64, y: f64| q(z) - y * y;

    // Dormand-Prince 5(4).
    const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] = [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

    let mut z = z0;
    let mut y = y0;
    let mut l = l0;
    let mut h = -(0.05 * z0).clamp(1e-6, 1.0).min(z0 - z1);
    let tol = 1e-13;
    let mut steps = 0usize;
    while z > z1 {
        steps += 1;
        if steps > 5_000_000 {
            return Err(Error::Convergence("Riccati integration of W".into()));
        }
        if z + h < z1 {
            h = z1 - z;
        }
        let mut k = [0.0f64; 7];
        for i in 0..7 {
            let mut yi = y;
            for j in 0..i {
                yi += h * A[i][j] * k[j];
            }
            k[i] = f(z + C[i] * h, yi);
        }
        // The L increments are h * (stage values of y); stage y values are
        // reconstructed from the same tableau.
        let mut ys = [0.0f64; 7];
        for i in 0..7 {
            let mut yi = y;
            for j in 0..i {
                yi += h * A[i][j] * k[j];
            }
            ys[i] = yi;
        }
        let mut dy5 = 0.0;
        let mut dy4 = 0.0;
        let mut dl5 = 0.0;
        let mut dl4 = 0.0;
        for i in 0..7 {
            dy5 += B5[i] * k[i];
            dy4 += B4[i] * k[i];
            dl5 += B5[i] * ys[i];
            dl4 += B4[i] * ys[i];
        }
        let ey = (h * (dy5 - dy4)).abs() / (1e-15 + tol * y.abs());
        let el = (h * (dl5 - dl4)).abs() / tol;
        let err = ey.max(el);
        if err <= 1.0 {
            z += h;
            y += h * dy5;
            l += h * dl5;
            if (z - z1).abs() <= 1e-14 * z1.abs() {
                break;
            }
        }
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= fac;
        // Keep clear of the explicit stability limit on the decaying mode.
        let hmax = 2.5 / (2.0 * y.abs()).max(1e-3);
        if h.abs() > hmax {
            h = -hmax;
        }
    }
    Ok((l, y))
}

/// Whittaker W_{a,b}(z) for real a, b real or imaginary and z > 0, scaled.
///
/// Below the turning point of the equation (where W oscillates) the
/// connection formula is used. Beyond it, the large-z expansion when it
/// converges, then the connection formula if the cancellation it suffers
/// stays below four digits, and otherwise the Riccati equation integrated
/// inward from a point where the expansion does converge.
pub fn whittaker_w_scaled(a: f64, b: Complex64, z: f64) -> Result<Scaled> {
    Ok(whittaker_w_exp_scaled(a, b, z)?.scale_by_exp(-z / 2.0))
}

/// e^{z/2} W_{a,b}(z). At large z the exponential cancels exactly instead of
/// through the rounding of a log scale of size z/2.
pub fn whittaker_w_exp_scaled(a: f64, b: Complex64, z: f64) -> Result<Scaled> {
    check_z(z)?;
    let s = Second::from(b)?;
    let zt = turning_point(a, s);
    if z <= zt.max(2.0) {
        return connection_limit(a, s, z).map(|(w, _)| w.scale_by_exp(z / 2.0));
    }
    if let Some((base, sum, _)) = asymptotic(a, s, z) {
        return Ok(Scaled::new(Complex64::new(sum, 0.0), base));
    }
    if let Ok((w, big)) = connection_limit(a, s, z) {
        if !w.is_zero() && big - w.ln_abs() <= 4.0 * std::f64::consts::LN_10 && w.mant.re > 0.0 {
            return Ok(w.scale_by_exp(z / 2.0));
        }
    }
    let (za, la, ya) = asymptotic_start(a, s, z)?;
    let (l, _) = riccati(a, s, za, la, ya, z)?;
    Ok(Scaled::new(Complex64::new(1.0, 0.0), l + z / 2.0))
}

fn asymptotic_start(a: f64, s: Second, z: f64) -> Result<(f64, f64, f64)> {
    let mut za = (1.5 * z).max(40.0).max(0.3 * s.square().abs());
    for _ in 0..80 {
        if let Some((base, sum, y)) = asymptotic(a, s, za) {
            return Ok((za, -za / 2.0 + base + sum.ln(), y));
        }
        za *= 1.5;
    }
    Err(Error::Convergence(format!("no asymptotic start for W at z = {z}")))
}

pub fn whittaker_w(idx: WhittakerIndices, z: f64) -> Result<Complex64> {
    whittaker_w_scaled(idx.first, idx.second, z).map(|s| s.to_complex())
}

/// dW_{a,b}(z)/db by central differences along the axis of b with step
/// 1e-5 max(1, |b|) and one Richardson level.
pub fn whittaker_w_db_scaled(a: f64, b: Complex64, z: f64) -> Result<Scaled> {
    check_z(z)?;
    Second::from(b)?;
    let imag = b.im != 0.0;
    // Two Richardson levels allow a step large enough that roundoff in W
    // stays near 1e-13 relative; real indices keep clear of b = 1/2.
    let h = if imag { 1e-2 } else { 1e-3 };
    let dir = if imag { Complex64::new(0.0, 1.0) } else { Complex64::new(1.0, 0.0) };
    let diff = |h: f64| -> Result<Scaled> {
        let up = whittaker_w_scaled(a, b + dir * h, z)?;
        let dn = whittaker_w_scaled(a, b - dir * h, z)?;
        Ok(up.sub(&dn).scale_by(1.0 / (2.0 * h * dir)))
    };
    let d1 = diff(h)?;
    let d2 = diff(h / 2.0)?;
    let d3 = diff(h / 4.0)?;
    let third = |fine: &Scaled, coarse: &Scaled| {
        fine.scale_by(Complex64::new(4.0 / 3.0, 0.0)).sub(&coarse.scale_by(Complex64::new(1.0 / 3.0, 0.0)))
    };
    let r1 = third(&d2, &d1);
    let r2 = third(&d3, &d2);
    Ok(r2.scale_by(Complex64::new(16.0 / 15.0, 0.0)).sub(&r1.scale_by(Complex64::new(1.0 / 15.0, 0.0))))
}

pub fn whittaker_w_db(idx: WhittakerIndices, z: f64) -> Result<Complex64> {
    whittaker_w_db_scaled(idx.first, idx.second, z).map(|s| s.to_complex())
}

/// dW_{a,b}(z)/dz from the contiguous relation
/// z W' = ((1/2-a)^2 - b^2) W_{a-1,b} - (z/2 - a) W_{a,b}.
pub fn whittaker_w_dz_scaled(a: f64, b: Complex64, z: f64) -> Result<Scaled> {
    let s = Second::from(b)?;
    let w = whittaker_w_scaled(a, b, z)?;
    let wm = whittaker_w_scaled(a - 1.0, b, z)?;
    let coef = (0.5 - a) * (0.5 - a) - s.square();
    let lhs = wm.scale_by(Complex64::new(coef / z, 0.0));
    let rhs = w.scale_by(Complex64::new((z / 2.0 - a) / z, 0.0));
    Ok(lhs.sub(&rhs))
}

pub fn whittaker_w_dz(idx: WhittakerIndices, z: f64) -> Result<Complex64> {
    whittaker_w_dz_scaled(idx.first, idx.second, z).map(|s| s.to_complex())
}

/// Principal phase of Gamma(-i beta)/Gamma(1/2-a-i beta/2) M_{a,i beta/2}(z),
/// plus ln of its modulus. For imaginary second index
/// W = 2 |T| cos(phase), so the roots of W are the crossings of the phase
/// through pi/2 + k pi.
pub fn imaginary_phase(a: f64, beta_half: f64, z: f64) -> Result<(f64, f64)> {
    check_z(z)?;
    let b = Complex64::new(0.0, beta_half.abs().max(5e-7));
    let t = connection_term(a, b, z)?;
    Ok((t.mant.arg(), t.ln_abs()))
}
