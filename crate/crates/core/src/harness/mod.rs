//! Monte-Carlo link experiments, sweeps and report emission.

mod link;
mod parallel;
mod report;
mod scenario;
mod studies;

pub use link::{
    run_estimation_trial, run_link_trial, run_link_trial_with, run_uncoded_trial, trial_rng, LinkSetup,
    TrainedReceiver, TrialResult, UncodedResult,
};
pub use parallel::run_indexed;
pub use report::{
    rerun, run_experiment, write_csv, CodeSearchConfig, CoexistenceConfig, Experiment, Manifest, PsdExperiment,
    PulseDesignConfig, MANIFEST_FILE,
};
pub use scenario::{
    default_interferer_code, default_link_code, AcquisitionSettings, CombinerMode, DataRate, InterfererSettings,
    LinkScenario, DEFAULT_SNR_REF_DB,
};
pub use studies::{
    acquisition_study, ber_study, coexistence_table, crossing_distance, mask_limited_psd, nmse_study, sweep_interferer,
    sweep_link_success, AcquisitionReport, AcquisitionStudy, BerPoint, BerStudy, CoexistenceRow, EstimationStudy,
    InterfererPoint, InterfererStudy, LinkCurve, LinkPoint, NmsePoint, COVERAGE_SUCCESS,
};
