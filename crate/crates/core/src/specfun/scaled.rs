use num_complex::Complex64;

/// A complex number stored as a unit-modulus mantissa times `exp(log_scale)`.
///
/// Whittaker values at large index or argument leave the binary64 range long
/// before the products that use them do, so they travel in this form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scaled {
    pub mant: Complex64,
    pub log_scale: f64,
}

impl Scaled {
    pub const ZERO: Scaled = Scaled { mant: Complex64::new(0.0, 0.0), log_scale: f64::NEG_INFINITY };

    pub fn new(mant: Complex64, log_scale: f64) -> Self {
        let r = mant.norm();
        if r == 0.0 || !r.is_finite() {
            if r == 0.0 {
                return Self::ZERO;
            }
            // Rescale through the components so inf/inf is avoided.
            let k = mant.re.abs().max(mant.im.abs());
            let m = mant / k;
            let rr = m.norm();
            return Scaled { mant: m / rr, log_scale: log_scale + k.ln() + rr.ln() };
        }
        Scaled { mant: mant / r, log_scale: log_scale + r.ln() }
    }

    pub fn from_complex(c: Complex64) -> Self {
        Self::new(c, 0.0)
    }

    pub fn from_real(x: f64) -> Self {
        Self::new(Complex64::new(x, 0.0), 0.0)
    }

    /// `exp(w)` without leaving the representation.
    pub fn exp(w: Complex64) -> Self {
        Scaled { mant: Complex64::from_polar(1.0, w.im), log_scale: w.re }
    }

    pub fn is_zero(&self) -> bool {
        self.log_scale == f64::NEG_INFINITY
    }

    /// Natural log of the modulus.
    pub fn ln_abs(&self) -> f64 {
        self.log_scale
    }

    pub fn to_complex(&self) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        self.mant * self.log_scale.exp()
    }

    /// Value rescaled by `exp(-shift)`, useful for combining terms against a
    /// common reference scale.
    pub fn to_complex_shifted(&self, shift: f64) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        self.mant * (self.log_scale - shift).exp()
    }

    pub fn mul(&self, o: &Scaled) -> Scaled {
        if self.is_zero() || o.is_zero() {
            return Self::ZERO;
        }
        Scaled::new(self.mant * o.mant, self.log_scale + o.log_scale)
    }

    pub fn div(&self, o: &Scaled) -> Scaled {
        Scaled::new(self.mant / o.mant, self.log_scale - o.log_scale)
    }

    pub fn scale_by(&self, c: Complex64) -> Scaled {
        if self.is_zero() {
            return Self::ZERO;
        }
        Scaled::new(self.mant * c, self.log_scale)
    }

    /// Multiplies by `exp(x)`.
    pub fn scale_by_exp(&self, x: f64) -> Scaled {
        if self.is_zero() {
            return Self::ZERO;
        }
        Scaled { mant: self.mant, log_scale: self.log_scale + x }
    }

    pub fn add(&self, o: &Scaled) -> Scaled {
        if self.is_zero() {
            return *o;
        }
        if o.is_zero() {
            return *self;
        }
        let e = self.log_scale.max(o.log_scale);
        let m = self.mant * (self.log_scale - e).exp() + o.mant * (o.log_scale - e).exp();
        Scaled::new(m, e)
    }

    pub fn sub(&self, o: &Scaled) -> Scaled {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Scaled {
        Scaled { mant: -self.mant, log_scale: self.log_scale }
    }

    pub fn conj(&self) -> Scaled {
        Scaled { mant: self.mant.conj(), log_scale: self.log_scale }
    }

    /// Real part as a real-valued `Scaled`.
    pub fn re(&self) -> Scaled {
        Scaled::new(Complex64::new(self.mant.re, 0.0), self.log_scale)
    }
}
