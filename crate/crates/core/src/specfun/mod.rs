//! Special functions needed by the spectral formulas: complex Gamma, the
//! confluent hypergeometric functions, Whittaker M and W with their
//! derivatives, and the exponential integral.

mod ei;
mod gamma;
mod kummer;
mod scaled;
mod whittaker;

pub use num_complex::Complex64 as ComplexValue;

pub use ei::{ei_series, exp_e1, exp_e1_cf, exp_integral_ei};
pub use gamma::{gamma_complex, ln_gamma, log_gamma_complex, rgamma_complex};
pub use kummer::{
    kummer_asymptotic_scaled, kummer_m, kummer_m_scaled, kummer_series_scaled, tricomi_u, tricomi_u_connection, tricomi_u_scaled,
    KUMMER_ASYM_Z,
};
pub use scaled::Scaled;
pub use whittaker::{
    imaginary_phase, whittaker_m, whittaker_m_scaled, whittaker_w, whittaker_w_connection, whittaker_w_db, whittaker_w_db_scaled,
    whittaker_w_dz, whittaker_w_dz_scaled, whittaker_w_exp_scaled, whittaker_w_scaled, WhittakerIndices,
};
