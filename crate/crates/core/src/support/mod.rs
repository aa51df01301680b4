//! Support-space construction: Orlicz norms of the modulus of continuity,
//! the `δ(n)` schedule, the enhanced norm, the bound chain and the
//! factorization `|g(t) - g(s)| <= ζ(g) r(t, s)`.

mod bound;
mod curve;
mod enhanced;
mod factor;
mod schedule;

pub use bound::{verify_support_bound, SupportBoundReport, SupportVerification};
pub use curve::{
    ensemble_moduli, modulus_norm_curve, EnsembleOracle, MCurve, MaxOracle, ModulusNormOracle,
};
pub use enhanced::{
    enhanced_norm, membership_diagnostic, weighted_moduli, Membership, MembershipReport,
};
pub use factor::{factorization, ScheduleDistance};
pub use schedule::{
    build_schedule, build_schedule_family, build_schedule_with, family_fingerprint, level_target,
    level_weight, Schedule, SCHEDULE_BASE,
};
