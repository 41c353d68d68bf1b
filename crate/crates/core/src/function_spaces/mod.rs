//! Uniformly local norms, windowed energies, commutators and the real-space
//! Gagliardo quadrature.

mod gagliardo;
mod norms;
mod windows;

pub use gagliardo::{gagliardo_constant, gagliardo_seminorm};
pub use norms::{
    a_phi_from_parts, commutator_apply, energy_a, energy_functional_aphi, homogeneous_hs_squared,
    hs_norm_squared, hs_uloc_norm, lambda_field, lp_uloc_norm, spacetime_uloc_accumulate,
    windowed_time_integral, HsUlocVariant, NormId, NormReport,
};
pub use windows::{build_windows, radial_cutoff, smooth_step, WindowFamily, WindowProfile};
