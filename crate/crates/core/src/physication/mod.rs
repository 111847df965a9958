//! Collapse-free observation. At each scheduled event the state is
//! classified against the candidate macrostates. When it is not already in
//! one, an outcome is drawn by the Born rule and a unitary acting only on the
//! unassigned sector rotates the state into the chosen macrostate. Every
//! assignment is appended to a ledger that can be replayed and audited.

mod assignment;
mod ledger;
mod world;

pub use assignment::{construct_assignment_unitary, fresh_observable, AssignmentUnitary, PROTECTED_TOL, STRICT_TOL};
pub use ledger::{verify_ledger, AssignmentLedger, LedgerEvent, LedgerReport, LedgerViolation};
pub use world::{
    enumerate_branches, Branch, BornSampler, ForcedSampler, Mode, OutcomeSampler, PhysicationOutcome, ScheduledEvent,
    World, SUPPORT_THRESHOLD,
};
