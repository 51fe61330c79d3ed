//! Connectivity formulas, their simulated counterparts, and node capture.

mod attack;
mod connectivity;

pub use attack::{
    capture_and_measure, head_capture_initialization, AnalyticalStub, AttackPhase, AttackSpec, CaptureModel,
    CaptureTarget, ResilienceReport, Tally, LEKM_SENSORS_PER_HEAD,
};
pub use connectivity::{
    connectivity_closed_form, connectivity_simulate, ring_residency, ClosedForm, ConnectivityReport,
    DeploymentConnectivity, Estimate, GroupConnectivity, PairTally, SimulatedConnectivity,
};
