//! Illuminant evaluation: white balancing, mask-aggregated illuminant
//! estimates, SSIM, batch reports and Thurstone scaling of user studies.

mod report;
mod ssim;
mod thurstone;
mod wb;

pub use report::{
    evaluate_entry, evaluate_manifest, read_eval_manifest, Aggregates, EvalEntry, EvalOptions, MetricValues,
    MetricsRecord, MetricsReport, PresetSummary, Provenance, RecordFailure, Summary,
};
pub use ssim::{ssim, ssim_map, SsimMode, SSIM_WINDOW};
pub use thurstone::{
    analyze_study, inverse_normal_cdf, normal_cdf, thurstone_case_v, MethodScale, PreferenceMatrix, StudyReport,
};
pub use wb::{divide_by, estimate_illuminant, white_balance, Aggregation, WbMethod, RATIO_EPSILON};
