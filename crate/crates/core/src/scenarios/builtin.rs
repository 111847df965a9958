use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

use crate::physication::Mode;

use super::config::{
    AngleConvention, CandidateSpec, ChshSpec, CouplingSpec, EventSpec, MatrixSpec, PointerCopySpec, ScenarioConfig,
    ScenarioKind,
};

/// Built-in scenario names with a one-line description.
pub const BUILTINS: &[(&str, &str)] = &[
    ("fresh_spin", "single qubit (0.6, 0.8) observed along z"),
    ("prepare_measure", "prepare z-up with one pointer, measure along x with another"),
    ("prepare_measure_0", "prepare z-up, measure along z"),
    ("prepare_measure_45", "prepare z-up, measure at 45° from z"),
    ("prepare_measure_60", "prepare z-up, measure at 60° from z"),
    ("prepare_measure_90", "prepare z-up, measure along x"),
    ("epr", "singlet, Alice at 0°, Bob at 45°"),
    ("epr_same_axis", "singlet, both along z"),
    ("epr_chsh", "singlet, CHSH analyzer angles 0°, 45°, 22.5°, 67.5°"),
    ("sequential_chain", "qubit observed along z, x, z with one pointer per observation"),
    ("sequential_chain_no_env", "z, x, z chain with no pointers left to record into"),
    ("conservation", "spin plus partner with conserved total z; measuring the spin keeps the total"),
    ("conservation_textbook", "the same spin described alone, as a textbook collapse treats it"),
];

pub fn builtin(name: &str) -> Option<ScenarioConfig> {
    let cfg = match name {
        "fresh_spin" => fresh_spin([0.6, 0.8]),
        "prepare_measure" | "prepare_measure_90" => prepare_measure(90.0),
        "prepare_measure_0" => prepare_measure(0.0),
        "prepare_measure_45" => prepare_measure(45.0),
        "prepare_measure_60" => prepare_measure(60.0),
        "epr" => epr(0.0, 45.0),
        "epr_same_axis" => epr(0.0, 0.0),
        "epr_chsh" => epr_chsh(),
        "sequential_chain" => sequential_chain(&[0.0, 90.0, 0.0], 3),
        "sequential_chain_no_env" => sequential_chain(&[0.0, 90.0, 0.0], 0),
        "conservation" => conservation(),
        "conservation_textbook" => conservation_textbook(),
        _ => return None,
    };
    let mut cfg = cfg;
    cfg.name = name.to_string();
    Some(cfg)
}

fn real(v: &[f64]) -> Vec<[f64; 2]> {
    v.iter().map(|&x| [x, 0.0]).collect()
}

fn basis(dim: usize, index: usize) -> Vec<[f64; 2]> {
    let mut v = vec![[0.0, 0.0]; dim];
    v[index] = [1.0, 0.0];
    v
}

fn names(v: &[&str]) -> Option<Vec<String>> {
    Some(v.iter().map(|s| s.to_string()).collect())
}

fn copy(system: usize, pointer: usize, axis_deg: f64, window: [f64; 2]) -> CouplingSpec {
    CouplingSpec { window, interaction: None, pointer_copy: Some(PointerCopySpec { system, pointer, axis_deg }) }
}

fn base(name: &str, kind: ScenarioKind, factor_dims: Vec<usize>, initial_state: Vec<[f64; 2]>) -> ScenarioConfig {
    ScenarioConfig {
        name: name.into(),
        kind,
        factor_dims,
        factor_names: Vec::new(),
        initial_state,
        start_time: 0.0,
        hamiltonian: None,
        couplings: Vec::new(),
        events: Vec::new(),
        mode: Mode::Free,
        trials: 1000,
        seed: 42,
        conserved: None,
        chsh: None,
    }
}

/// A qubit observed once along z.
pub fn fresh_spin(amplitudes: [f64; 2]) -> ScenarioConfig {
    let mut cfg = base("fresh_spin", ScenarioKind::FreshSpin, vec![2], real(&amplitudes));
    cfg.factor_names = vec!["S".into()];
    cfg.events.push(EventSpec {
        time: 1.0,
        name: "z".into(),
        candidates: CandidateSpec::Observable { factor: 0, axis_deg: 0.0 },
        outcome_names: names(&["up", "down"]),
        outcome_values: Some(vec![1.0, -1.0]),
    });
    cfg
}

/// Spin prepared up along z by one pointer, then measured along the axis
/// at `theta_deg` from z by a second pointer.
pub fn prepare_measure(theta_deg: f64) -> ScenarioConfig {
    let mut cfg = base("prepare_measure", ScenarioKind::PrepareMeasure, vec![2, 3, 3], basis(18, 0));
    cfg.factor_names = vec!["S".into(), "preparer".into(), "meter".into()];
    cfg.couplings = vec![copy(0, 1, 0.0, [0.25, 0.75]), copy(0, 2, theta_deg, [1.25, 1.75])];
    let pointers = |reads| CandidateSpec::Pointers { factors: vec![1, 2], reads };
    cfg.events = vec![
        EventSpec {
            time: 1.0,
            name: "prepare".into(),
            candidates: pointers(1),
            outcome_names: names(&["up", "down"]),
            outcome_values: Some(vec![1.0, -1.0]),
        },
        EventSpec {
            time: 2.0,
            name: "measure".into(),
            candidates: pointers(2),
            outcome_names: names(&["+", "-"]),
            outcome_values: Some(vec![1.0, -1.0]),
        },
    ];
    cfg
}

/// Singlet pair with Alice measuring at `alpha_deg` and Bob at `beta_deg`.
pub fn epr(alpha_deg: f64, beta_deg: f64) -> ScenarioConfig {
    // index = a·18 + b·9 + pa·3 + pb; the singlet is (|01⟩ − |10⟩)/√2
    let mut init = vec![[0.0, 0.0]; 36];
    init[9] = [FRAC_1_SQRT_2, 0.0];
    init[18] = [-FRAC_1_SQRT_2, 0.0];
    let mut cfg = base("epr", ScenarioKind::Epr, vec![2, 2, 3, 3], init);
    cfg.factor_names = vec!["A".into(), "B".into(), "alice_pointer".into(), "bob_pointer".into()];
    cfg.couplings = vec![copy(0, 2, alpha_deg, [0.25, 0.75]), copy(1, 3, beta_deg, [1.25, 1.75])];
    let pointers = |reads| CandidateSpec::Pointers { factors: vec![2, 3], reads };
    cfg.events = vec![
        EventSpec {
            time: 1.0,
            name: "alice".into(),
            candidates: pointers(2),
            outcome_names: names(&["A+", "A-"]),
            outcome_values: Some(vec![1.0, -1.0]),
        },
        EventSpec {
            time: 2.0,
            name: "bob".into(),
            candidates: pointers(3),
            outcome_names: names(&["B+", "B-"]),
            outcome_values: Some(vec![1.0, -1.0]),
        },
    ];
    cfg
}

/// CHSH test on the singlet. Analyzer angles follow the polarization
/// convention, so each spin axis sits at twice the listed angle.
pub fn epr_chsh() -> ScenarioConfig {
    let mut cfg = epr(0.0, 0.0);
    cfg.name = "epr_chsh".into();
    cfg.kind = ScenarioKind::EprChsh;
    cfg.trials = 100_000;
    cfg.chsh = Some(ChshSpec { a: 0.0, a_prime: 45.0, b: 22.5, b_prime: 67.5, convention: AngleConvention::Polarization });
    cfg
}

/// A qubit observed successively along `axes_deg`. The first `pointers`
/// observations are recorded into fresh pointers; any further ones are
/// posed directly on the qubit.
pub fn sequential_chain(axes_deg: &[f64], pointers: usize) -> ScenarioConfig {
    let mut dims = vec![2];
    dims.extend(std::iter::repeat_n(3, pointers));
    let dim: usize = dims.iter().product();
    // (0.6, 0.8) on the qubit, every pointer ready
    let mut init = vec![[0.0, 0.0]; dim];
    init[0] = [0.6, 0.0];
    init[dim / 2] = [0.8, 0.0];
    let mut cfg = base("sequential_chain", ScenarioKind::SequentialChain, dims, init);
    let all: Vec<usize> = (1..=pointers).collect();
    for (i, &axis) in axes_deg.iter().enumerate() {
        let t = (i + 1) as f64;
        let candidates = if i < pointers {
            cfg.couplings.push(copy(0, i + 1, axis, [t - 0.75, t - 0.25]));
            CandidateSpec::Pointers { factors: all.clone(), reads: i + 1 }
        } else {
            CandidateSpec::Observable { factor: 0, axis_deg: axis }
        };
        cfg.events.push(EventSpec {
            time: t,
            name: format!("axis_{axis}"),
            candidates,
            outcome_names: names(&["+", "-"]),
            outcome_values: Some(vec![1.0, -1.0]),
        });
    }
    cfg
}

/// `Q = σz ⊗ I + I ⊗ σz`, diagonal in the computational basis.
fn total_z() -> MatrixSpec {
    let q = [2.0, 0.0, 0.0, -2.0];
    MatrixSpec::Flat((0..16).map(|k| if k % 5 == 0 { [q[k / 5], 0.0] } else { [0.0, 0.0] }).collect())
}

/// Spin S and partner E with `H = ω Q`. A flip-flop exchange turns |↑↓⟩
/// into (|↑↓⟩ − i|↓↑⟩)/√2 before the spin is observed along z.
pub fn conservation() -> ScenarioConfig {
    let mut cfg = base("conservation", ScenarioKind::Conservation, vec![2, 2], basis(4, 1));
    cfg.factor_names = vec!["S".into(), "E".into()];
    cfg.hamiltonian = Some(total_z());
    cfg.conserved = Some(total_z());
    // J τ = π/4 over a unit window
    let mut exchange = vec![[0.0, 0.0]; 16];
    exchange[4 + 2] = [FRAC_PI_4, 0.0];
    exchange[2 * 4 + 1] = [FRAC_PI_4, 0.0];
    cfg.couplings = vec![CouplingSpec { window: [0.0, 1.0], interaction: Some(MatrixSpec::Flat(exchange)), pointer_copy: None }];
    cfg.events = vec![EventSpec {
        time: 1.5,
        name: "spin_z".into(),
        candidates: CandidateSpec::Observable { factor: 0, axis_deg: 0.0 },
        outcome_names: names(&["up", "down"]),
        outcome_values: Some(vec![1.0, -1.0]),
    }];
    cfg
}

/// The spin of [`conservation`] on its own, in the pure state (1, −i)/√2,
/// with `H = σz` and `Q = σz`.
pub fn conservation_textbook() -> ScenarioConfig {
    let h = FRAC_1_SQRT_2;
    let mut cfg = base("conservation_textbook", ScenarioKind::Generic, vec![2], vec![[h, 0.0], [0.0, -h]]);
    cfg.factor_names = vec!["S".into()];
    let sz = MatrixSpec::Flat(vec![[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [-1.0, 0.0]]);
    cfg.hamiltonian = Some(sz.clone());
    cfg.conserved = Some(sz);
    cfg.events = vec![EventSpec {
        time: 1.5,
        name: "spin_z".into(),
        candidates: CandidateSpec::Observable { factor: 0, axis_deg: 0.0 },
        outcome_names: names(&["up", "down"]),
        outcome_values: Some(vec![1.0, -1.0]),
    }];
    cfg
}
