//! The scheme's lifecycle as message events over an adjacency graph:
//! setup-server pre-distribution, inter-group (polynomial) and intra-group
//! (PRF) key establishment, base-station mediated keys for misdeployed
//! sensors, and dynamic sensor / group-head addition.

mod case3;
mod dynamic;
mod establish;
mod seal;
mod state;

pub use case3::{establish_case3, establish_case3_with_fault, Case3Exchange, Case3Fault, Case3Outcome, Hop};
pub use dynamic::{add_sensor, remove_head, replace_head};
pub use establish::{establish_all, establish_inter_group, establish_intra_group, EstablishmentSummary};
pub use seal::Sealed;
pub use state::{
    predistribute, EstablishedLink, Event, KeyMethod, KeyOrigin, NetworkState, NodeCounters, SchemeParams,
};
