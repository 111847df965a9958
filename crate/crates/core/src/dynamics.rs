//! Time evolution under a fixed Hamiltonian plus interactions that are
//! switched on during declared windows.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use crate::error::{PhysimError, Result};
use crate::hilbert::{HermitianOperator, Propagator, UnitaryOperator};

/// An interaction term active on `window.0 ≤ t < window.1`.
#[derive(Clone, Debug)]
pub struct Coupling {
    pub window: (f64, f64),
    pub interaction: HermitianOperator,
}

impl Coupling {
    fn active_at(&self, t: f64) -> bool {
        self.window.0 <= t && t < self.window.1
    }
}

/// Piecewise-constant generator `H + Σ_{active} K_c`. Propagators between
/// pairs of times are cached, so one `Dynamics` can be shared by every trial
/// of a run.
#[derive(Debug)]
pub struct Dynamics {
    hamiltonian: HermitianOperator,
    couplings: Vec<Coupling>,
    cache: RwLock<HashMap<(u64, u64), Arc<UnitaryOperator>>>,
}

impl Dynamics {
    pub fn new(hamiltonian: HermitianOperator, couplings: Vec<Coupling>) -> Result<Self> {
        for (i, c) in couplings.iter().enumerate() {
            if c.interaction.dim() != hamiltonian.dim() {
                return Err(PhysimError::dim(format!("coupling {i} has dimension {}", c.interaction.dim())));
            }
            let (a, b) = c.window;
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(PhysimError::Config(format!("coupling {i} has an empty or invalid window [{a}, {b}]")));
            }
        }
        Ok(Dynamics { hamiltonian, couplings, cache: RwLock::new(HashMap::new()) })
    }

    pub fn free(hamiltonian: HermitianOperator) -> Self {
        Dynamics { hamiltonian, couplings: Vec::new(), cache: RwLock::new(HashMap::new()) }
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn hamiltonian(&self) -> &HermitianOperator {
        &self.hamiltonian
    }

    pub fn couplings(&self) -> &[Coupling] {
        &self.couplings
    }

    /// Generator in force at time `t`.
    pub fn generator_at(&self, t: f64) -> HermitianOperator {
        self.couplings
            .iter()
            .filter(|c| c.active_at(t))
            .fold(self.hamiltonian.clone(), |acc, c| acc.add(&c.interaction).expect("dimensions checked"))
    }

    /// `U(t1, t0)`, composed over the segments where the generator is constant.
    pub fn propagator(&self, t0: f64, t1: f64) -> Result<Arc<UnitaryOperator>> {
        if !(t1 >= t0) {
            return Err(PhysimError::EventOrder { current: t0, next: t1 });
        }
        let key = (t0.to_bits(), t1.to_bits());
        if let Some(u) = self.cache.read().expect("cache lock").get(&key) {
            return Ok(Arc::clone(u));
        }

        let mut cuts = vec![t0, t1];
        for c in &self.couplings {
            for t in [c.window.0, c.window.1] {
                if t > t0 && t < t1 {
                    cuts.push(t);
                }
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();

        let mut total = UnitaryOperator::identity(self.dim());
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let gen = self.generator_at(0.5 * (a + b));
            let seg = Propagator::new(&gen).unitary(b - a);
            total = seg.then_after(&total)?;
        }
        let total = Arc::new(total);
        self.cache.write().expect("cache lock").insert(key, Arc::clone(&total));
        Ok(total)
    }
}
