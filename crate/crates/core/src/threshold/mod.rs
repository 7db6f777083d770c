//! Almost-sure stability certificates and static baselines.

pub mod certify;
pub mod params;
pub mod report;
pub mod search;

pub use certify::{
    certify, certify_amai_ct, certify_amei_ct, certify_amei_dt, certify_homogeneous, certify_mean,
    delta1, delta2, delta3, prepare, requirements, static_ct_condition, static_dt_condition,
    t1_report, t2_report, t3_report, t4_report, xi_h, StaticVerdict, XiH,
};
pub use params::EpidemicParams;
pub use report::{Certificate, ThresholdReport};
pub use search::{threshold_in_beta, threshold_in_beta_mean, BetaSearch};
