use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::Dynamics;
use crate::error::{PhysimError, Result};
use crate::hilbert::{CMatrix, HermitianOperator, StateVector};
use crate::macrostate::{classify, Classification, MacroLabel, MacrostateDecomposition, DEFAULT_DEFINITE_TOL};

use super::assignment::{construct_assignment_unitary, AssignmentUnitary};
use super::ledger::{AssignmentLedger, LedgerEvent};

/// Weights below this are dropped from the sampling support.
pub const SUPPORT_THRESHOLD: f64 = 1e-15;
const WEIGHT_SUM_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// any unitary on the unassigned sector
    #[default]
    Free,
    /// the assignment unitary must also commute with the Hamiltonian
    Strict,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Free => "free",
            Mode::Strict => "strict",
        })
    }
}

impl FromStr for Mode {
    type Err = PhysimError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "free" => Ok(Mode::Free),
            "strict" => Ok(Mode::Strict),
            other => Err(PhysimError::Config(format!("unknown mode {other:?} (expected free or strict)"))),
        }
    }
}

/// An observation at a declared time with its candidate macrostates.
#[derive(Clone, Debug)]
pub struct ScheduledEvent {
    pub time: f64,
    pub name: String,
    pub candidates: Arc<MacrostateDecomposition>,
    /// one name per candidate, in label order
    pub outcome_names: Vec<String>,
}

impl ScheduledEvent {
    /// Outcomes are named after their labels.
    pub fn new(time: f64, name: impl Into<String>, candidates: MacrostateDecomposition) -> Self {
        let outcome_names = candidates.labels().map(|l| l.to_string()).collect();
        ScheduledEvent { time, name: name.into(), candidates: Arc::new(candidates), outcome_names }
    }

    pub fn with_outcome_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.candidates.len() {
            return Err(PhysimError::Config(format!(
                "event {} has {} candidates but {} outcome names",
                self.name,
                self.candidates.len(),
                names.len()
            )));
        }
        self.outcome_names = names;
        Ok(self)
    }
}

/// Picks one candidate from the renormalized Born support.
pub trait OutcomeSampler {
    /// `support` holds `(candidate index, probability)` pairs in label order.
    fn choose(&mut self, candidates: &MacrostateDecomposition, support: &[(usize, f64)]) -> Result<usize>;
}

/// Inverse-CDF sampling from a random source.
pub struct BornSampler<R> {
    rng: R,
}

impl<R: Rng> BornSampler<R> {
    pub fn new(rng: R) -> Self {
        BornSampler { rng }
    }

    pub fn into_inner(self) -> R {
        self.rng
    }
}

impl<R: Rng> OutcomeSampler for BornSampler<R> {
    fn choose(&mut self, _candidates: &MacrostateDecomposition, support: &[(usize, f64)]) -> Result<usize> {
        let u: f64 = self.rng.random();
        let mut acc = 0.0;
        for &(i, p) in support {
            acc += p;
            if u < acc {
                return Ok(i);
            }
        }
        support.last().map(|&(i, _)| i).ok_or_else(|| PhysimError::Numerical("empty sampling support".into()))
    }
}

/// Replays a fixed list of candidate indices, one per superposed event.
#[derive(Clone, Debug)]
pub struct ForcedSampler {
    choices: VecDeque<usize>,
}

impl ForcedSampler {
    pub fn new(choices: impl IntoIterator<Item = usize>) -> Self {
        ForcedSampler { choices: choices.into_iter().collect() }
    }
}

impl OutcomeSampler for ForcedSampler {
    fn choose(&mut self, candidates: &MacrostateDecomposition, support: &[(usize, f64)]) -> Result<usize> {
        let i = self.choices.pop_front().ok_or_else(|| PhysimError::Config("no forced outcome left".into()))?;
        if i >= candidates.len() {
            return Err(PhysimError::Index { index: i, len: candidates.len() });
        }
        if !support.iter().any(|&(j, _)| j == i) {
            return Err(PhysimError::ZeroWeightOutcome { label: candidates.label(i).to_string() });
        }
        Ok(i)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhysicationOutcome {
    pub label: MacroLabel,
    pub index: usize,
    pub name: String,
    pub weight: f64,
    pub event_index: usize,
}

#[derive(Clone, Debug)]
struct Assigned {
    decomposition: Arc<MacrostateDecomposition>,
    index: usize,
}

/// One history: the state, the macrostates assigned so far and the ledger.
#[derive(Clone, Debug)]
pub struct World {
    state: StateVector,
    time: f64,
    dynamics: Arc<Dynamics>,
    mode: Mode,
    assigned: Vec<Assigned>,
    ledger: AssignmentLedger,
    unassigned: Vec<(String, HermitianOperator)>,
    history: Option<CMatrix>,
    max_norm_deviation: f64,
    definite_tol: f64,
}

impl World {
    pub fn new(state: StateVector, time: f64, dynamics: Arc<Dynamics>, mode: Mode) -> Result<Self> {
        if state.dim() != dynamics.dim() {
            return Err(PhysimError::dim(format!(
                "state has dimension {}, hamiltonian {}",
                state.dim(),
                dynamics.dim()
            )));
        }
        let max_norm_deviation = (state.norm() - 1.0).abs();
        Ok(World {
            state,
            time,
            dynamics,
            mode,
            assigned: Vec::new(),
            ledger: AssignmentLedger::new(),
            unassigned: Vec::new(),
            history: None,
            max_norm_deviation,
            definite_tol: DEFAULT_DEFINITE_TOL,
        })
    }

    /// Accumulates the product of every unitary applied from now on.
    pub fn track_history(mut self) -> Self {
        let d = self.state.dim();
        self.history = Some(CMatrix::identity(d, d));
        self
    }

    /// Registers an operator that has not been assigned a value yet. It is
    /// conjugated by every subsequent assignment unitary.
    pub fn register_unassigned(&mut self, name: impl Into<String>, op: HermitianOperator) -> Result<()> {
        if op.dim() != self.state.dim() {
            return Err(PhysimError::dim("unassigned operator dimension"));
        }
        self.unassigned.push((name.into(), op));
        Ok(())
    }

    pub fn unassigned(&self, name: &str) -> Option<&HermitianOperator> {
        self.unassigned.iter().find(|(n, _)| n == name).map(|(_, o)| o)
    }

    pub fn state(&self) -> &StateVector {
        &self.state
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn hamiltonian(&self) -> &HermitianOperator {
        self.dynamics.hamiltonian()
    }

    pub fn dynamics(&self) -> &Arc<Dynamics> {
        &self.dynamics
    }

    pub fn ledger(&self) -> &AssignmentLedger {
        &self.ledger
    }

    pub fn into_ledger(self) -> AssignmentLedger {
        self.ledger
    }

    /// Projectors of every macrostate assigned so far.
    pub fn assigned_projectors(&self) -> Vec<&HermitianOperator> {
        self.assigned.iter().map(|a| a.decomposition.projector(a.index)).collect()
    }

    /// Product of all unitaries applied since [`World::track_history`].
    pub fn history(&self) -> Option<&CMatrix> {
        self.history.as_ref()
    }

    /// Largest `|‖ψ‖ − 1|` seen so far.
    pub fn max_norm_deviation(&self) -> f64 {
        self.max_norm_deviation
    }

    /// Schrödinger evolution up to `t`.
    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        if t < self.time {
            return Err(PhysimError::EventOrder { current: self.time, next: t });
        }
        if t == self.time {
            return Ok(());
        }
        let u = self.dynamics.propagator(self.time, t)?;
        self.state = self.state.apply_unitary(&u)?;
        if let Some(h) = self.history.as_mut() {
            *h = u.matrix() * &*h;
        }
        self.time = t;
        self.note_norm();
        Ok(())
    }

    /// Born support of `event` at the current state, renormalized.
    pub fn support(&self, event: &ScheduledEvent) -> Result<Vec<(usize, f64)>> {
        let weights = self.checked_weights(event)?;
        Ok(renormalized_support(&weights))
    }

    fn checked_weights(&self, event: &ScheduledEvent) -> Result<Vec<f64>> {
        if event.candidates.dim() != self.state.dim() {
            return Err(PhysimError::dim(format!("event {} candidates have dimension {}", event.name, event.candidates.dim())));
        }
        let weights = event.candidates.weights(&self.state);
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(PhysimError::Decomposition(format!(
                "weights of event {} sum to {total} on the reachable sector",
                event.name
            )));
        }
        Ok(weights)
    }

    /// Evolves to the event time and assigns an outcome.
    pub fn step(&mut self, event: &ScheduledEvent, sampler: &mut dyn OutcomeSampler) -> Result<PhysicationOutcome> {
        if !(event.time > self.time) {
            return Err(PhysimError::EventOrder { current: self.time, next: event.time });
        }
        self.advance_to(event.time)?;
        self.observe(event, sampler)
    }

    /// Assigns an outcome for `event` at the current time without evolving.
    pub fn observe(&mut self, event: &ScheduledEvent, sampler: &mut dyn OutcomeSampler) -> Result<PhysicationOutcome> {
        if (event.time - self.time).abs() > 0.0 {
            return Err(PhysimError::EventOrder { current: self.time, next: event.time });
        }
        let weights = self.checked_weights(event)?;
        let pre_state = self.state.clone();
        let dim = self.state.dim();

        let (chosen, assignment) = match classify(&self.state, &event.candidates, self.definite_tol) {
            Classification::Definite { index, .. } => (index, AssignmentUnitary::identity(dim)),
            Classification::Superposed { .. } => {
                let support = renormalized_support(&weights);
                let chosen = sampler.choose(&event.candidates, &support)?;
                let phi = StateVector::new(event.candidates.project(chosen, &self.state))?;
                let protected = self.assigned_projectors();
                let strict = match self.mode {
                    Mode::Free => None,
                    Mode::Strict => Some(self.dynamics.hamiltonian()),
                };
                let v = construct_assignment_unitary(&self.state, &phi, &protected, strict)?;
                (chosen, v)
            }
        };

        if !assignment.is_identity() {
            self.state = StateVector::from_unitary_image(assignment.apply(self.state.amplitudes()))?;
            if let Some(h) = self.history.as_mut() {
                *h = assignment.to_matrix() * &*h;
            }
            if !self.unassigned.is_empty() {
                let v = assignment.to_matrix();
                for (_, op) in self.unassigned.iter_mut() {
                    *op = HermitianOperator::hermitized(&v * op.matrix() * v.adjoint());
                }
            }
            self.note_norm();
        }

        let event_index = self.ledger.len();
        let outcome = PhysicationOutcome {
            label: event.candidates.label(chosen).clone(),
            index: chosen,
            name: event.outcome_names[chosen].clone(),
            weight: weights[chosen],
            event_index,
        };
        self.ledger.append(LedgerEvent {
            time: event.time,
            event: event.name.clone(),
            candidates: Arc::clone(&event.candidates),
            born_weights: weights,
            chosen,
            outcome: outcome.name.clone(),
            assignment,
            pre_state,
            post_state: self.state.clone(),
        })?;
        self.assigned.push(Assigned { decomposition: Arc::clone(&event.candidates), index: chosen });
        Ok(outcome)
    }

    fn note_norm(&mut self) {
        self.max_norm_deviation = self.max_norm_deviation.max((self.state.norm() - 1.0).abs());
    }
}

pub(crate) fn renormalized_support(weights: &[f64]) -> Vec<(usize, f64)> {
    let kept: Vec<(usize, f64)> =
        weights.iter().copied().enumerate().filter(|&(_, w)| w >= SUPPORT_THRESHOLD).collect();
    let total: f64 = kept.iter().map(|&(_, w)| w).sum();
    kept.into_iter().map(|(i, w)| (i, w / total)).collect()
}

/// A complete history reached by forcing every outcome.
#[derive(Clone, Debug)]
pub struct Branch {
    /// chosen candidate index per event
    pub choices: Vec<usize>,
    pub names: Vec<String>,
    /// product of the Born weights along the branch
    pub probability: f64,
    pub world: World,
}

/// Enumerates every outcome sequence of `events` with nonzero weight,
/// chaining Born weights. Fails with `EnumerationCap` once more than `cap`
/// partial branches are alive.
pub fn enumerate_branches(world: &World, events: &[ScheduledEvent], cap: usize) -> Result<Vec<Branch>> {
    let mut branches =
        vec![Branch { choices: Vec::new(), names: Vec::new(), probability: 1.0, world: world.clone() }];
    for event in events {
        let mut next = Vec::new();
        for mut b in branches {
            if !(event.time > b.world.time) {
                return Err(PhysimError::EventOrder { current: b.world.time, next: event.time });
            }
            b.world.advance_to(event.time)?;
            let support = b.world.support(event)?;
            if next.len() + support.len() > cap {
                return Err(PhysimError::EnumerationCap { cap });
            }
            for (i, _) in support {
                let mut w = b.world.clone();
                let out = w.observe(event, &mut ForcedSampler::new([i]))?;
                let mut choices = b.choices.clone();
                choices.push(i);
                let mut names = b.names.clone();
                names.push(out.name);
                next.push(Branch { choices, names, probability: b.probability * out.weight, world: w });
            }
        }
        branches = next;
    }
    Ok(branches)
}
