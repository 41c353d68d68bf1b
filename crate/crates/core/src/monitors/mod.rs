//! Run-time diagnostics and verification checks.

pub mod checks;
pub mod ledger;
pub mod lemmas;
pub mod pointwise;
pub mod suite;
pub mod verdict;

pub use checks::{
    check_cordoba, check_energy_inequality, check_gronwall_envelope, check_l2_balance,
    check_l2_hhalf_budget, check_lp_dissipation, check_max_principle, check_riesz_uloc,
    check_stability, check_weak_form_residual, max_principle_margins, quantile, riesz_uloc_ratio,
    snapshot_witness, weak_form_samples, EnergyCheck, EnergySeries, Trajectory, WeakFormSample,
};
pub use ledger::{read_ledger_csv, w_from_theta, write_ledger_csv, LedgerRow};
pub use lemmas::{
    check_commutator_bound, check_kernel_decay, check_norm_equivalence, check_young_uloc,
    norm_equivalence_ratio, random_bump_mixture, random_spectral_field, CommutatorStudy,
    KernelDecay,
};
pub use pointwise::{
    cordoba_residual, lp_dissipation, lp_norm, lp_power, padded_samples, refined_linf,
    under_resolved, ConvexFn, CordobaResidual,
};
pub use suite::{check_cordoba_ledger, run_checks, FittedConstants, MonitorSettings, RunChecks};
pub use verdict::{summary_text, write_verdicts_csv, Outcome, Verdict, Witness};
