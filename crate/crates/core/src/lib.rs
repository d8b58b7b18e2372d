//! Stochastic N-1 security-constrained unit commitment with optional
//! corrective line switching, formulated as a MILP and solved with HiGHS.

pub mod formulation;
pub mod milp;
pub mod scenario;
pub mod system;
pub mod topology;
pub mod solver;
pub mod solution;
pub mod metrics;
pub mod verify;
pub mod oracle;
pub mod pipeline;
pub mod rts;
