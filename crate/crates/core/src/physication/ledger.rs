use std::sync::Arc;

use crate::error::{PhysimError, Result};
use crate::hilbert::StateVector;
use crate::macrostate::{classify, Classification, MacroLabel, MacrostateDecomposition, DEFAULT_DEFINITE_TOL};

use super::assignment::AssignmentUnitary;

const LEDGER_TOL: f64 = 1e-9;
const WEIGHT_SUM_TOL: f64 = 1e-10;

/// One assignment. `assignment` is the identity when the pre-state was
/// already definite.
#[derive(Clone, Debug)]
pub struct LedgerEvent {
    pub time: f64,
    pub event: String,
    pub candidates: Arc<MacrostateDecomposition>,
    pub born_weights: Vec<f64>,
    pub chosen: usize,
    pub outcome: String,
    pub assignment: AssignmentUnitary,
    pub pre_state: StateVector,
    pub post_state: StateVector,
}

impl LedgerEvent {
    pub fn chosen_label(&self) -> &MacroLabel {
        self.candidates.label(self.chosen)
    }

    pub fn chosen_weight(&self) -> f64 {
        self.born_weights[self.chosen]
    }

    pub fn was_trivial(&self) -> bool {
        self.assignment.is_identity()
    }
}

/// Append-only record of assignments. Events can be added only through
/// [`crate::physication::World::step`]; there is no way to edit or remove one.
#[derive(Clone, Debug, Default)]
pub struct AssignmentLedger {
    events: Vec<LedgerEvent>,
}

impl AssignmentLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuilds a ledger from recorded events, e.g. for replay. Nothing is
    /// checked here; run [`verify_ledger`] on the result.
    pub fn from_events(events: Vec<LedgerEvent>) -> Self {
        AssignmentLedger { events }
    }

    pub(crate) fn append(&mut self, event: LedgerEvent) -> Result<()> {
        if let Some(last) = self.events.last() {
            if !(event.time > last.time) {
                return Err(PhysimError::EventOrder { current: last.time, next: event.time });
            }
        }
        self.events.push(event);
        Ok(())
    }

    pub fn events(&self) -> &[LedgerEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn outcomes(&self) -> Vec<String> {
        self.events.iter().map(|e| e.outcome.clone()).collect()
    }

    pub fn into_events(self) -> Vec<LedgerEvent> {
        self.events
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LedgerViolation {
    pub event: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LedgerReport {
    pub events_checked: usize,
    pub violation: Option<LedgerViolation>,
}

impl LedgerReport {
    pub fn ok(&self) -> bool {
        self.violation.is_none()
    }
}

/// Re-checks every event of a ledger:
///
/// * times strictly increase and the recorded weights sum to one;
/// * the pre-state reclassifies against the recorded candidates with the
///   recorded weights, and the post-state is definite in the chosen macrostate;
/// * the recorded unitary maps the pre-state onto the post-state;
/// * no assignment disturbs a macrostate chosen at an earlier event.
pub fn verify_ledger(ledger: &AssignmentLedger) -> LedgerReport {
    let events = ledger.events();
    let fail = |event: usize, reason: String| LedgerReport {
        events_checked: event,
        violation: Some(LedgerViolation { event, reason }),
    };
    for (i, e) in events.iter().enumerate() {
        if i > 0 && !(e.time > events[i - 1].time) {
            return fail(i, format!("time {} does not follow {}", e.time, events[i - 1].time));
        }
        let n = e.candidates.len();
        if e.born_weights.len() != n || e.chosen >= n {
            return fail(i, "chosen outcome is not among the candidates".into());
        }
        let total: f64 = e.born_weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return fail(i, format!("weights sum to {total}"));
        }
        if e.pre_state.dim() != e.candidates.dim() || e.post_state.dim() != e.candidates.dim() {
            return fail(i, "state dimension does not match candidates".into());
        }

        let recomputed = e.candidates.weights(&e.pre_state);
        let drift = recomputed.iter().zip(&e.born_weights).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if drift > LEDGER_TOL {
            return fail(i, format!("pre-state weights differ from the record by {drift:.3e}"));
        }
        let pre = classify(&e.pre_state, &e.candidates, DEFAULT_DEFINITE_TOL);
        if let Classification::Definite { index, .. } = pre {
            if index != e.chosen {
                return fail(i, "pre-state was definite in a different macrostate".into());
            }
        }
        if pre.is_definite() && !e.assignment.is_identity() {
            return fail(i, "non-trivial assignment on a definite pre-state".into());
        }
        match classify(&e.post_state, &e.candidates, DEFAULT_DEFINITE_TOL) {
            Classification::Definite { index, .. } if index == e.chosen => {}
            _ => return fail(i, "post-state is not definite in the chosen macrostate".into()),
        }

        if e.assignment.dim() != e.pre_state.dim() {
            return fail(i, "assignment dimension does not match".into());
        }
        let image = e.assignment.apply(e.pre_state.amplitudes());
        let gap = (image - e.post_state.amplitudes()).norm();
        if gap > LEDGER_TOL {
            return fail(i, format!("assignment does not map pre-state to post-state ({gap:.3e})"));
        }

        for (j, earlier) in events[..i].iter().enumerate() {
            let p = earlier.candidates.projector(earlier.chosen);
            let norm = e.assignment.commutator_norm(p.matrix());
            if norm > LEDGER_TOL {
                return fail(i, format!("assignment disturbs the macrostate chosen at event {j} ({norm:.3e})"));
            }
        }
    }
    LedgerReport { events_checked: events.len(), violation: None }
}
