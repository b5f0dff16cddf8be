//! Numerics for the superdiffusive limit `w`: moments, characteristic
//! function, density.

pub mod charfun;
pub mod density;
pub mod moments;
pub mod ode;
pub mod series;

pub use charfun::{
    charfun_series_grid, integrate_charfun_ode, symmetric_grid, tail_exponent_check, CharFunGrid, CharFunMethod,
    CharFunOdeOptions, TailCheck,
};
pub use density::{density_fourier_inversion, inversion_cutoff, tail_bound, DensityEstimate, DensityOptions};
pub use moments::{
    moment_recursion, moment_table, verify_moment_bound, y5_closed_form, BoundReport, BoundRow, MomentTable, DEFAULT_ORDER,
};
pub use ode::{dopri5, OdeOptions, OdeStats};
pub use series::{
    charfun_series, eval_series, general_d_coefficients_f64, series_coefficients_general_d, SeriesTarget, SeriesValue,
};
