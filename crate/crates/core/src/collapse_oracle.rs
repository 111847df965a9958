//! Textbook projection-postulate simulator, kept as the statistical
//! reference for [`crate::physication`].

use crate::dynamics::Dynamics;
use crate::error::{PhysimError, Result};
use crate::hilbert::{CVector, StateVector};
use crate::macrostate::{MacroLabel, MacrostateDecomposition};
use crate::physication::{OutcomeSampler, ScheduledEvent, SUPPORT_THRESHOLD};

pub const DEFAULT_ENUMERATION_CAP: usize = 1_000_000;

/// `‖P_a ψ‖²` for every label, in label order.
pub fn outcome_distribution(state: &StateVector, decomp: &MacrostateDecomposition) -> Result<Vec<(MacroLabel, f64)>> {
    if state.dim() != decomp.dim() {
        return Err(PhysimError::dim(format!("state {} vs decomposition {}", state.dim(), decomp.dim())));
    }
    let weights = decomp.weights(state);
    Ok(decomp.labels().cloned().zip(weights).collect())
}

/// Samples a label and returns the renormalized projection `P_a ψ / ‖P_a ψ‖`.
pub fn measure_collapse(
    state: &StateVector,
    decomp: &MacrostateDecomposition,
    sampler: &mut dyn OutcomeSampler,
) -> Result<(usize, StateVector)> {
    let dist = outcome_distribution(state, decomp)?;
    let kept: Vec<(usize, f64)> =
        dist.iter().enumerate().filter(|(_, (_, w))| *w >= SUPPORT_THRESHOLD).map(|(i, (_, w))| (i, *w)).collect();
    let total: f64 = kept.iter().map(|&(_, w)| w).sum();
    let support: Vec<(usize, f64)> = kept.into_iter().map(|(i, w)| (i, w / total)).collect();
    let chosen = sampler.choose(decomp, &support)?;
    let collapsed = StateVector::new(decomp.project(chosen, state))?;
    Ok((chosen, collapsed))
}

/// One outcome sequence with its exact probability.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainEntry {
    pub choices: Vec<usize>,
    pub names: Vec<String>,
    pub probability: f64,
}

/// Exact joint distribution of outcome sequences under repeated collapse,
/// by breadth-first enumeration of unnormalized branches interleaved with
/// the unitary segments between events.
pub fn chain_distribution(
    initial: &StateVector,
    start_time: f64,
    dynamics: &Dynamics,
    events: &[ScheduledEvent],
    cap: usize,
) -> Result<Vec<ChainEntry>> {
    if initial.dim() != dynamics.dim() {
        return Err(PhysimError::dim("initial state vs dynamics"));
    }
    // branches carry unnormalized vectors, so ‖v‖² is the sequence probability
    let mut branches: Vec<(Vec<usize>, Vec<String>, CVector)> =
        vec![(Vec::new(), Vec::new(), initial.amplitudes().clone())];
    let mut time = start_time;
    for event in events {
        if !(event.time > time) {
            return Err(PhysimError::EventOrder { current: time, next: event.time });
        }
        let u = dynamics.propagator(time, event.time)?;
        time = event.time;
        let basis_dim = event.candidates.dim();
        if basis_dim != initial.dim() {
            return Err(PhysimError::dim(format!("event {} candidates have dimension {basis_dim}", event.name)));
        }
        let mut next = Vec::new();
        for (choices, names, v) in branches {
            let v = u.matrix() * v;
            let p_branch = v.norm_squared();
            for i in 0..event.candidates.len() {
                let projected = project_unnormalized(&event.candidates, i, &v);
                let p = projected.norm_squared();
                if p < SUPPORT_THRESHOLD * p_branch.max(f64::MIN_POSITIVE) {
                    continue;
                }
                if next.len() >= cap {
                    return Err(PhysimError::EnumerationCap { cap });
                }
                let mut c = choices.clone();
                c.push(i);
                let mut n = names.clone();
                n.push(event.outcome_names[i].clone());
                next.push((c, n, projected));
            }
        }
        branches = next;
    }
    let out: Vec<ChainEntry> = branches
        .into_iter()
        .map(|(choices, names, v)| ChainEntry { choices, names, probability: v.norm_squared() })
        .collect();
    let total: f64 = out.iter().map(|e| e.probability).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(PhysimError::Decomposition(format!("chain probabilities sum to {total}")));
    }
    Ok(out)
}

fn project_unnormalized(decomp: &MacrostateDecomposition, index: usize, v: &CVector) -> CVector {
    decomp.projector(index).matrix() * v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{spin_axis_projectors, tensor, HermitianOperator};
    use crate::physication::ForcedSampler;

    fn z_decomp() -> MacrostateDecomposition {
        let [up, down] = spin_axis_projectors(0.0);
        MacrostateDecomposition::from_parts(vec![MacroLabel(vec![0.0]), MacroLabel(vec![1.0])], vec![up, down]).unwrap()
    }

    fn named(time: f64, d: MacrostateDecomposition, names: [&str; 2]) -> ScheduledEvent {
        ScheduledEvent::new(time, "e", d).with_outcome_names(names.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    #[test]
    fn born_weights() {
        let psi = StateVector::from_real(&[0.6, 0.8]).unwrap();
        let d = outcome_distribution(&psi, &z_decomp()).unwrap();
        assert!((d[0].1 - 0.36).abs() < 1e-12 && (d[1].1 - 0.64).abs() < 1e-12);
    }

    #[test]
    fn singlet_zz_is_anticorrelated() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let singlet = StateVector::from_real(&[0.0, h, -h, 0.0]).unwrap();
        let [u, d] = spin_axis_projectors(0.0);
        let mut labels = Vec::new();
        let mut projs = Vec::new();
        for (a, pa) in [(0.0, &u), (1.0, &d)] {
            for (b, pb) in [(0.0, &u), (1.0, &d)] {
                labels.push(MacroLabel(vec![a, b]));
                projs.push(tensor(&[pa.clone(), pb.clone()]).unwrap());
            }
        }
        let dec = MacrostateDecomposition::from_parts(labels, projs).unwrap();
        let w: Vec<f64> = outcome_distribution(&singlet, &dec).unwrap().into_iter().map(|x| x.1).collect();
        for (got, want) in w.iter().zip([0.0, 0.5, 0.5, 0.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn collapse_projects_and_is_idempotent() {
        let psi = StateVector::from_real(&[0.6, 0.8]).unwrap();
        let (i, post) = measure_collapse(&psi, &z_decomp(), &mut ForcedSampler::new([1])).unwrap();
        assert_eq!(i, 1);
        assert!((post.amplitudes()[1].re - 1.0).abs() < 1e-12);
        let again = outcome_distribution(&post, &z_decomp()).unwrap();
        assert!((again[1].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chain_prepare_then_measure_x() {
        let psi = StateVector::from_real(&[1.0, 0.0]).unwrap();
        let dynamics = Dynamics::free(HermitianOperator::zeros(2));
        let [p, m] = spin_axis_projectors(std::f64::consts::FRAC_PI_2);
        let x = MacrostateDecomposition::from_parts(vec![MacroLabel(vec![0.0]), MacroLabel(vec![1.0])], vec![p, m]).unwrap();
        let events = [named(1.0, z_decomp(), ["up", "down"]), named(2.0, x, ["+x", "-x"])];
        let chain = chain_distribution(&psi, 0.0, &dynamics, &events, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(chain.len(), 2);
        for e in &chain {
            assert_eq!(e.names[0], "up");
            assert!((e.probability - 0.5).abs() < 1e-12);
        }
        assert!(matches!(
            chain_distribution(&psi, 0.0, &dynamics, &events, 1),
            Err(PhysimError::EnumerationCap { cap: 1 })
        ));
    }
}
