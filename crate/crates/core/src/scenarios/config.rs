use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dynamics::{Coupling, Dynamics};
use crate::error::{PhysimError, Result};
use crate::hilbert::{c, embed_factors, spin_axis_projectors, CMatrix, HermitianOperator, StateVector, C64, MAX_DIM, ZERO};
use crate::macrostate::{joint_eigenspace_decomposition, MacroLabel, MacrostateDecomposition};
use crate::physication::{Mode, ScheduledEvent};

/// Which built-in runner a configuration belongs to.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    #[default]
    Generic,
    FreshSpin,
    PrepareMeasure,
    Epr,
    EprChsh,
    SequentialChain,
    Conservation,
}

/// A complex matrix as `[re, im]` pairs, either as rows or flat row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Rows(Vec<Vec<[f64; 2]>>),
    Flat(Vec<[f64; 2]>),
}

impl MatrixSpec {
    pub fn from_matrix(m: &CMatrix) -> Self {
        MatrixSpec::Rows(
            (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect(),
        )
    }

    pub fn to_matrix(&self, dim: usize) -> Result<CMatrix> {
        let entries: Vec<[f64; 2]> = match self {
            MatrixSpec::Rows(rows) => {
                if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                    return Err(PhysimError::Config(format!("matrix must be {dim}x{dim}")));
                }
                rows.iter().flatten().copied().collect()
            }
            MatrixSpec::Flat(v) => {
                if v.len() != dim * dim {
                    return Err(PhysimError::Config(format!("matrix needs {} entries, got {}", dim * dim, v.len())));
                }
                v.clone()
            }
        };
        if entries.iter().flatten().any(|x| !x.is_finite()) {
            return Err(PhysimError::Config("matrix has a non-finite entry".into()));
        }
        Ok(CMatrix::from_row_iterator(dim, dim, entries.iter().map(|&[re, im]| c(re, im))))
    }

    pub fn to_hermitian(&self, dim: usize) -> Result<HermitianOperator> {
        HermitianOperator::new(self.to_matrix(dim)?)
    }
}

/// Copies the eigenvalue of a qubit spin component along `axis_deg` into a
/// pointer register: outcome `k` (0 for +, 1 for −) shifts the pointer by `k + 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointerCopySpec {
    pub system: usize,
    pub pointer: usize,
    pub axis_deg: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSpec {
    pub window: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interaction: Option<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pointer_copy: Option<PointerCopySpec>,
}

/// Candidate macrostates of an event.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateSpec {
    /// Joint readings of the listed pointer factors; outcomes are named after
    /// the reading of `reads` (reading 0 is the ready state).
    Pointers { factors: Vec<usize>, reads: usize },
    /// Direct spin component of a qubit factor.
    Observable { factor: usize, axis_deg: f64 },
    /// Joint eigenspaces of commuting macroscopic operators.
    MacroOperators(Vec<MatrixSpec>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventSpec {
    pub time: f64,
    pub name: String,
    pub candidates: CandidateSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome_names: Option<Vec<String>>,
    /// numeric outcome values used for correlation estimates
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome_values: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleConvention {
    /// the angle is the spin axis itself
    #[default]
    Spin,
    /// analyzer angle; the spin axis is at twice the angle
    Polarization,
}

/// The four analyzer settings of a CHSH test. The settings override the
/// `axis_deg` of the first two pointer-copy couplings (Alice's, then Bob's).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChshSpec {
    pub a: f64,
    pub a_prime: f64,
    pub b: f64,
    pub b_prime: f64,
    #[serde(default)]
    pub convention: AngleConvention,
}

impl ChshSpec {
    /// `(label, alice, bob, sign)` for `S = E(a,b) − E(a,b′) + E(a′,b) + E(a′,b′)`.
    pub fn settings(&self) -> [(String, f64, f64, f64); 4] {
        let f = |x: f64| format!("{x}");
        let s = |a: f64, b: f64| format!("E({},{})", f(a), f(b));
        [
            (s(self.a, self.b), self.a, self.b, 1.0),
            (s(self.a, self.b_prime), self.a, self.b_prime, -1.0),
            (s(self.a_prime, self.b), self.a_prime, self.b, 1.0),
            (s(self.a_prime, self.b_prime), self.a_prime, self.b_prime, 1.0),
        ]
    }

    fn axis(&self, angle_deg: f64) -> f64 {
        match self.convention {
            AngleConvention::Spin => angle_deg,
            AngleConvention::Polarization => 2.0 * angle_deg,
        }
    }
}

/// Declarative description of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub kind: ScenarioKind,
    pub factor_dims: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub factor_names: Vec<String>,
    pub initial_state: Vec<[f64; 2]>,
    #[serde(default)]
    pub start_time: f64,
    /// zero when omitted
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<MatrixSpec>,
    #[serde(default)]
    pub couplings: Vec<CouplingSpec>,
    pub events: Vec<EventSpec>,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default, alias = "master_seed")]
    pub seed: u64,
    /// a quantity whose expectation is tracked along every history
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conserved: Option<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chsh: Option<ChshSpec>,
}

fn default_trials() -> usize {
    1000
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| PhysimError::Config(format!("invalid scenario config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PhysimError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn total_dim(&self) -> usize {
        self.factor_dims.iter().product()
    }

    /// The same experiment with the order of two events reversed: their
    /// times are swapped, and so are the windows of the pointer couplings
    /// that feed them.
    pub fn with_events_swapped(&self, i: usize, j: usize) -> Result<Self> {
        let n = self.events.len();
        if i >= n || j >= n {
            return Err(PhysimError::Index { index: i.max(j), len: n });
        }
        let mut out = self.clone();
        let (ti, tj) = (self.events[i].time, self.events[j].time);
        out.events[i].time = tj;
        out.events[j].time = ti;
        let feeding = |e: &EventSpec| match &e.candidates {
            CandidateSpec::Pointers { reads, .. } => {
                self.couplings.iter().position(|c| c.pointer_copy.as_ref().is_some_and(|p| p.pointer == *reads))
            }
            _ => None,
        };
        if let (Some(ci), Some(cj)) = (feeding(&self.events[i]), feeding(&self.events[j])) {
            out.couplings[ci].window = self.couplings[cj].window;
            out.couplings[cj].window = self.couplings[ci].window;
        }
        out.events.sort_by(|a, b| a.time.total_cmp(&b.time));
        Ok(out)
    }
}

/// One experimental setting: its own dynamics and schedule.
#[derive(Clone, Debug)]
pub struct Variant {
    /// `None` for single-setting scenarios
    pub label: Option<String>,
    /// sign in the CHSH combination
    pub sign: f64,
    pub dynamics: Arc<Dynamics>,
    pub events: Vec<ScheduledEvent>,
}

/// Extra information kept per event.
#[derive(Clone, Debug)]
pub struct EventMeta {
    /// candidates in which the read pointer is still ready
    pub ready: Vec<usize>,
    pub values: Option<Vec<f64>>,
}

/// A validated configuration with every operator built.
#[derive(Clone, Debug)]
pub struct CompiledScenario {
    pub config: ScenarioConfig,
    pub initial: StateVector,
    pub variants: Vec<Variant>,
    pub meta: Vec<EventMeta>,
    pub conserved: Option<HermitianOperator>,
}

impl CompiledScenario {
    pub fn dims(&self) -> &[usize] {
        &self.config.factor_dims
    }

    pub fn dim(&self) -> usize {
        self.initial.dim()
    }
}

/// Validates a configuration and builds its operators.
pub fn compile(config: &ScenarioConfig) -> Result<CompiledScenario> {
    let dims = &config.factor_dims;
    if dims.is_empty() || dims.contains(&0) {
        return Err(PhysimError::Config("factor_dims must be nonempty and positive".into()));
    }
    let dim = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d)).unwrap_or(usize::MAX);
    if dim > MAX_DIM {
        return Err(PhysimError::Config(format!("total dimension {dim} exceeds {MAX_DIM}")));
    }
    if !config.factor_names.is_empty() && config.factor_names.len() != dims.len() {
        return Err(PhysimError::Config("factor_names must match factor_dims".into()));
    }
    if config.trials == 0 {
        return Err(PhysimError::Config("trials must be positive".into()));
    }
    if config.initial_state.len() != dim {
        return Err(PhysimError::Config(format!(
            "initial_state has {} amplitudes, factor_dims give {dim}",
            config.initial_state.len()
        )));
    }
    let amps: Vec<C64> = config.initial_state.iter().map(|&[re, im]| c(re, im)).collect();
    let initial = StateVector::from_slice(&amps).map_err(|e| PhysimError::Config(format!("initial_state: {e}")))?;
    if !config.start_time.is_finite() {
        return Err(PhysimError::Config("start_time must be finite".into()));
    }

    let hamiltonian = match &config.hamiltonian {
        Some(m) => m.to_hermitian(dim).map_err(config_err("hamiltonian"))?,
        None => HermitianOperator::zeros(dim),
    };
    let conserved = match &config.conserved {
        Some(m) => Some(m.to_hermitian(dim).map_err(config_err("conserved"))?),
        None => None,
    };

    if config.events.is_empty() {
        return Err(PhysimError::Config("at least one event is required".into()));
    }
    let mut last = config.start_time;
    for e in &config.events {
        if !(e.time > last) {
            return Err(PhysimError::Config(format!(
                "event {} at t = {} does not follow t = {last}",
                e.name, e.time
            )));
        }
        last = e.time;
    }

    let mut events = Vec::new();
    let mut meta = Vec::new();
    for e in &config.events {
        let (ev, m) = compile_event(e, dims)?;
        events.push(ev);
        meta.push(m);
    }
    check_pointers_ready(config, &initial)?;

    let variants = match &config.chsh {
        None => {
            let couplings = compile_couplings(&config.couplings, dims, None)?;
            vec![Variant {
                label: None,
                sign: 1.0,
                dynamics: Arc::new(Dynamics::new(hamiltonian, couplings).map_err(to_config)?),
                events,
            }]
        }
        Some(chsh) => {
            check_singlet(config, &initial)?;
            chsh.settings()
                .into_iter()
                .map(|(label, a, b, sign)| {
                    let couplings = compile_couplings(&config.couplings, dims, Some([chsh.axis(a), chsh.axis(b)]))?;
                    Ok(Variant {
                        label: Some(label),
                        sign,
                        dynamics: Arc::new(Dynamics::new(hamiltonian.clone(), couplings).map_err(to_config)?),
                        events: events.clone(),
                    })
                })
                .collect::<Result<Vec<_>>>()?
        }
    };

    Ok(CompiledScenario { config: config.clone(), initial, variants, meta, conserved })
}

fn config_err(what: &'static str) -> impl Fn(PhysimError) -> PhysimError {
    move |e| match e {
        PhysimError::Config(_) => e,
        other => PhysimError::Config(format!("{what}: {other}")),
    }
}

fn to_config(e: PhysimError) -> PhysimError {
    match e {
        PhysimError::Config(_) => e,
        other => PhysimError::Config(other.to_string()),
    }
}

fn check_factor(f: usize, dims: &[usize]) -> Result<()> {
    if f >= dims.len() {
        return Err(PhysimError::Config(format!("factor {f} does not exist ({} factors)", dims.len())));
    }
    Ok(())
}

/// `G_s = Σ_j (2π ((j·s) mod n) / n) f_j f_j†` with Fourier vectors `f_j`,
/// so that `exp(−i G_s)` is the cyclic shift by `s`.
pub fn shift_generator(n: usize, s: usize) -> CMatrix {
    let mut g = CMatrix::zeros(n, n);
    let norm = 1.0 / (n as f64).sqrt();
    for j in 0..n {
        let phase = 2.0 * PI * ((j * s) % n) as f64 / n as f64;
        if phase == 0.0 {
            continue;
        }
        let f = crate::hilbert::CVector::from_fn(n, |m, _| C64::from_polar(norm, 2.0 * PI * (j * m) as f64 / n as f64));
        g += &f * f.adjoint() * C64::from(phase);
    }
    g
}

/// Interaction whose evolution over `duration` is `Σ_k Π_k ⊗ X^{k+1}` on
/// (system, pointer).
pub fn pointer_copy_interaction(spec: &PointerCopySpec, duration: f64, dims: &[usize]) -> Result<HermitianOperator> {
    check_factor(spec.system, dims)?;
    check_factor(spec.pointer, dims)?;
    if spec.system == spec.pointer {
        return Err(PhysimError::Config("pointer copy needs two distinct factors".into()));
    }
    if dims[spec.system] != 2 {
        return Err(PhysimError::Config(format!("pointer copy system factor {} is not a qubit", spec.system)));
    }
    let n = dims[spec.pointer];
    if n < 3 {
        return Err(PhysimError::Config(format!(
            "pointer factor {} has {n} levels; a ready state plus two readings need 3",
            spec.pointer
        )));
    }
    if !spec.axis_deg.is_finite() {
        return Err(PhysimError::Config("axis_deg must be finite".into()));
    }
    let projectors = spin_axis_projectors(spec.axis_deg.to_radians());
    let mut g = CMatrix::zeros(2 * n, 2 * n);
    for (k, p) in projectors.iter().enumerate() {
        g += p.matrix().kronecker(&shift_generator(n, k + 1));
    }
    let g = embed_factors(&g, &[spec.system, spec.pointer], dims)?;
    HermitianOperator::new(g * C64::from(1.0 / duration))
}

fn compile_couplings(specs: &[CouplingSpec], dims: &[usize], axes: Option<[f64; 2]>) -> Result<Vec<Coupling>> {
    let dim: usize = dims.iter().product();
    let mut copies = 0;
    specs
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let [a, b] = s.window;
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(PhysimError::Config(format!("coupling {i} window [{a}, {b}] is empty")));
            }
            let interaction = match (&s.interaction, &s.pointer_copy) {
                (Some(m), None) => m.to_hermitian(dim).map_err(config_err("coupling interaction"))?,
                (None, Some(p)) => {
                    let mut p = p.clone();
                    if let Some(ax) = axes {
                        if copies < 2 {
                            p.axis_deg = ax[copies];
                        }
                    }
                    copies += 1;
                    pointer_copy_interaction(&p, b - a, dims)?
                }
                _ => {
                    return Err(PhysimError::Config(format!(
                        "coupling {i} needs exactly one of interaction or pointer_copy"
                    )))
                }
            };
            Ok(Coupling { window: (a, b), interaction })
        })
        .collect()
}

/// `diag(0, 1, …, n−1)` on a pointer factor.
fn reading_operator(factor: usize, dims: &[usize]) -> Result<HermitianOperator> {
    let diag: Vec<f64> = (0..dims[factor]).map(|k| k as f64).collect();
    let local = HermitianOperator::from_real_diagonal(&diag)?;
    HermitianOperator::new(embed_factors(local.matrix(), &[factor], dims)?)
}

fn compile_event(spec: &EventSpec, dims: &[usize]) -> Result<(ScheduledEvent, EventMeta)> {
    let dim: usize = dims.iter().product();
    let (decomp, default_names, ready, names_from_reading) = match &spec.candidates {
        CandidateSpec::Pointers { factors, reads } => {
            if factors.is_empty() {
                return Err(PhysimError::Config(format!("event {} lists no pointers", spec.name)));
            }
            for &f in factors {
                check_factor(f, dims)?;
            }
            let pos = factors.iter().position(|f| f == reads).ok_or_else(|| {
                PhysimError::Config(format!("event {}: pointer {reads} is not among its factors", spec.name))
            })?;
            let ops = factors.iter().map(|&f| reading_operator(f, dims)).collect::<Result<Vec<_>>>()?;
            let d = joint_eigenspace_decomposition(&ops)?;
            let readings: Vec<usize> = d.labels().map(|l| l.0[pos].round() as usize).collect();
            let ready = readings.iter().enumerate().filter(|(_, &r)| r == 0).map(|(i, _)| i).collect();
            let defaults = readings.iter().map(|&r| if r == 0 { "ready".to_string() } else { format!("{r}") }).collect();
            (d, defaults, ready, Some(readings))
        }
        CandidateSpec::Observable { factor, axis_deg } => {
            check_factor(*factor, dims)?;
            if dims[*factor] != 2 {
                return Err(PhysimError::Config(format!("event {}: factor {factor} is not a qubit", spec.name)));
            }
            let [p, m] = spin_axis_projectors(axis_deg.to_radians());
            let lift = |x: &HermitianOperator| -> Result<HermitianOperator> {
                HermitianOperator::new(embed_factors(x.matrix(), &[*factor], dims)?)
            };
            let d = MacrostateDecomposition::from_parts(
                vec![MacroLabel(vec![0.0]), MacroLabel(vec![1.0])],
                vec![lift(&p)?, lift(&m)?],
            )?;
            (d, vec!["up".to_string(), "down".to_string()], Vec::new(), None)
        }
        CandidateSpec::MacroOperators(ops) => {
            let ops = ops.iter().map(|m| m.to_hermitian(dim)).collect::<Result<Vec<_>>>()?;
            let d = joint_eigenspace_decomposition(&ops)?;
            let names = d.labels().map(|l| l.to_string()).collect();
            (d, names, Vec::new(), None)
        }
    };

    let n = decomp.len();
    let (names, values) = match &names_from_reading {
        Some(readings) => {
            let pick_name = |r: usize| -> Result<String> {
                match (&spec.outcome_names, r) {
                    (_, 0) => Ok("ready".into()),
                    (Some(names), r) => names.get(r - 1).cloned().ok_or_else(|| {
                        PhysimError::Config(format!("event {}: no outcome name for reading {r}", spec.name))
                    }),
                    (None, r) => Ok(format!("{r}")),
                }
            };
            let names = readings.iter().map(|&r| pick_name(r)).collect::<Result<Vec<_>>>()?;
            let values = spec.outcome_values.as_ref().map(|v| {
                readings.iter().map(|&r| if r == 0 { f64::NAN } else { v.get(r - 1).copied().unwrap_or(f64::NAN) }).collect()
            });
            (names, values)
        }
        None => {
            let names = match &spec.outcome_names {
                Some(names) if names.len() == n => names.clone(),
                Some(names) => {
                    return Err(PhysimError::Config(format!(
                        "event {} has {n} candidates but {} outcome names",
                        spec.name,
                        names.len()
                    )))
                }
                None => default_names,
            };
            let values = match &spec.outcome_values {
                Some(v) if v.len() == n => Some(v.clone()),
                Some(_) => return Err(PhysimError::Config(format!("event {}: outcome_values length", spec.name))),
                None => None,
            };
            (names, values)
        }
    };

    let event = ScheduledEvent::new(spec.time, spec.name.clone(), decomp).with_outcome_names(names)?;
    Ok((event, EventMeta { ready, values }))
}

/// Every pointer read by an event must start in its ready state.
fn check_pointers_ready(config: &ScenarioConfig, initial: &StateVector) -> Result<()> {
    let dims = &config.factor_dims;
    let mut pointers: Vec<usize> = Vec::new();
    for e in &config.events {
        if let CandidateSpec::Pointers { factors, .. } = &e.candidates {
            pointers.extend(factors);
        }
    }
    pointers.sort_unstable();
    pointers.dedup();
    if pointers.is_empty() {
        return Ok(());
    }
    let mut ready_local = CMatrix::zeros(1, 1);
    ready_local[(0, 0)] = C64::from(1.0);
    for &p in &pointers {
        let mut r = CMatrix::from_element(dims[p], dims[p], ZERO);
        r[(0, 0)] = C64::from(1.0);
        ready_local = ready_local.kronecker(&r);
    }
    let proj = embed_factors(&ready_local, &pointers, dims)?;
    let w = (proj * initial.amplitudes()).norm_squared();
    if w < 1.0 - 1e-9 {
        return Err(PhysimError::Config(format!(
            "pointers {pointers:?} do not start in their ready state (weight {w:.6})"
        )));
    }
    Ok(())
}

/// The CHSH preset needs the first two factors in the singlet state.
fn check_singlet(config: &ScenarioConfig, initial: &StateVector) -> Result<()> {
    let dims = &config.factor_dims;
    if dims.len() < 2 || dims[0] != 2 || dims[1] != 2 {
        return Err(PhysimError::Config("CHSH preset needs two qubit factors first".into()));
    }
    let rest = initial.dim() / 4;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    // ⟨singlet| ⊗ I on the remaining factors; the overlap vector must have unit norm
    let mut overlap = crate::hilbert::CVector::zeros(rest);
    for r in 0..rest {
        let a01 = initial.amplitudes()[rest + r];
        let a10 = initial.amplitudes()[2 * rest + r];
        overlap[r] = (a01 - a10) * C64::from(h);
    }
    let f = overlap.norm_squared();
    if f < 1.0 - 1e-9 {
        return Err(PhysimError::Config(format!("CHSH preset needs a singlet initial state (fidelity {f:.6})")));
    }
    Ok(())
}
