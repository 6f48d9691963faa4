//! Generalized amplitude amplification `Q(A, chi, phi, varphi) = -A S_0 A^-1 S_chi`.
//!
//! `A` is a [`ReversibleProgram`]: a list of primitive steps, each with an
//! exact inverse. `A^-1` is always the reversed list of step inverses.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::Result;
use crate::qstate::{ClassicalOracle, RegisterLayout, SparseState, NORM_TOLERANCE};

/// Boxed predicate over full basis tuples.
pub type PredicateFn = Arc<dyn Fn(&[u64]) -> bool + Send + Sync>;

/// One primitive, invertible state transformation.
#[derive(Clone)]
pub enum Step {
    /// Uniform superposition on a register that holds 0. Inside a program the
    /// step is the full unitary DFT, since `A` is also applied to states
    /// produced by `S_0 A^-1`; the zero precondition applies only to
    /// [`SparseState::uniform_prep`].
    UniformPrep(String),
    Oracle(ClassicalOracle),
    Dft {
        reg: String,
        inverse: bool,
    },
    ControlledSubtract {
        src: String,
        dst: String,
    },
    ControlledAdd {
        src: String,
        dst: String,
    },
    PhaseFlip {
        predicate: PredicateFn,
        phase: Complex64,
    },
    /// Ownership of `register` moves from one party to another. Identity on the state.
    Handoff {
        register: String,
        from: usize,
        to: usize,
    },
}

impl fmt::Debug for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Step::UniformPrep(r) => write!(f, "UniformPrep({r})"),
            Step::Oracle(o) => write!(f, "Oracle({:?} -> {})", o.inputs(), o.output()),
            Step::Dft { reg, inverse } => write!(f, "Dft({reg}, inverse={inverse})"),
            Step::ControlledSubtract { src, dst } => write!(f, "Subtract({src} -> {dst})"),
            Step::ControlledAdd { src, dst } => write!(f, "Add({src} -> {dst})"),
            Step::PhaseFlip { phase, .. } => write!(f, "PhaseFlip({phase})"),
            Step::Handoff { register, from, to } => {
                write!(f, "Handoff({register}: {from} -> {to})")
            }
        }
    }
}

impl Step {
    fn apply(&self, state: SparseState, inverse: bool) -> Result<SparseState> {
        match self {
            Step::UniformPrep(reg) => state.dft(reg, inverse),
            Step::Oracle(o) if inverse => state.unapply_oracle(o),
            Step::Oracle(o) => state.apply_oracle(o),
            Step::Dft { reg, inverse: inv } => state.dft(reg, *inv != inverse),
            Step::ControlledSubtract { src, dst } if inverse => state.controlled_add(src, dst),
            Step::ControlledSubtract { src, dst } => state.controlled_subtract(src, dst),
            Step::ControlledAdd { src, dst } if inverse => state.controlled_subtract(src, dst),
            Step::ControlledAdd { src, dst } => state.controlled_add(src, dst),
            Step::PhaseFlip { predicate, phase } => {
                let phase = if inverse { phase.conj() } else { *phase };
                state.phase_flip(|v| predicate(v), phase)
            }
            Step::Handoff { .. } => Ok(state),
        }
    }
}

/// Receives every step as it is executed.
pub trait StepObserver {
    fn on_step(&mut self, step: &Step, inverse: bool);

    /// Called once before each full forward or inverse application of a program.
    fn on_program(&mut self, _inverse: bool) {}
}

/// Operation counters accumulated while executing programs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    /// Calls to the Fourier transform or its inverse (`Dft` steps).
    pub fourier_calls: u64,
    pub prep_calls: u64,
    pub oracle_calls: u64,
    /// Full applications of `A`.
    pub forward_runs: u64,
    /// Full applications of `A^-1`.
    pub inverse_runs: u64,
}

impl StepObserver for Counters {
    fn on_step(&mut self, step: &Step, _inverse: bool) {
        match step {
            Step::Dft { .. } => self.fourier_calls += 1,
            Step::UniformPrep(_) => self.prep_calls += 1,
            Step::Oracle(_) => self.oracle_calls += 1,
            _ => {}
        }
    }

    fn on_program(&mut self, inverse: bool) {
        if inverse {
            self.inverse_runs += 1;
        } else {
            self.forward_runs += 1;
        }
    }
}

/// Ignores everything.
pub struct NoObserver;

impl StepObserver for NoObserver {
    fn on_step(&mut self, _: &Step, _: bool) {}
}

/// A measurement-free algorithm `A` over a fixed layout.
#[derive(Clone, Debug)]
pub struct ReversibleProgram {
    layout: Arc<RegisterLayout>,
    steps: Vec<Step>,
}

impl ReversibleProgram {
    pub fn new(layout: Arc<RegisterLayout>) -> Self {
        Self {
            layout,
            steps: Vec::new(),
        }
    }

    pub fn layout(&self) -> &Arc<RegisterLayout> {
        &self.layout
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn push(&mut self, step: Step) -> &mut Self {
        self.steps.push(step);
        self
    }

    pub fn with(mut self, step: Step) -> Self {
        self.steps.push(step);
        self
    }

    /// The same steps over a wider layout (registers are matched by name).
    pub fn relayout(&self, layout: Arc<RegisterLayout>) -> Self {
        Self {
            layout,
            steps: self.steps.clone(),
        }
    }

    pub fn apply(
        &self,
        mut state: SparseState,
        observer: &mut dyn StepObserver,
    ) -> Result<SparseState> {
        observer.on_program(false);
        for step in &self.steps {
            observer.on_step(step, false);
            state = step.apply(state, false)?;
        }
        Ok(state)
    }

    pub fn apply_inverse(
        &self,
        mut state: SparseState,
        observer: &mut dyn StepObserver,
    ) -> Result<SparseState> {
        observer.on_program(true);
        for step in self.steps.iter().rev() {
            observer.on_step(step, true);
            state = step.apply(state, true)?;
        }
        Ok(state)
    }
}

/// The Boolean function `chi` separating good basis states from bad ones.
/// It sees only the values of its designated registers.
#[derive(Clone)]
pub struct GoodPredicate {
    registers: Vec<String>,
    func: Arc<dyn Fn(&[u64]) -> bool + Send + Sync>,
}

impl fmt::Debug for GoodPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GoodPredicate")
            .field("registers", &self.registers)
            .finish_non_exhaustive()
    }
}

impl GoodPredicate {
    pub fn new<S: Into<String>>(
        registers: impl IntoIterator<Item = S>,
        func: impl Fn(&[u64]) -> bool + Send + Sync + 'static,
    ) -> Self {
        Self {
            registers: registers.into_iter().map(Into::into).collect(),
            func: Arc::new(func),
        }
    }

    /// Good iff `register` holds `value`.
    pub fn register_equals(register: &str, value: u64) -> Self {
        Self::new([register], move |v| v[0] == value)
    }

    pub fn registers(&self) -> &[String] {
        &self.registers
    }

    /// Resolves register names against `layout`, giving a predicate on full tuples.
    pub fn bind(&self, layout: &RegisterLayout) -> Result<impl Fn(&[u64]) -> bool + '_> {
        let idx = self
            .registers
            .iter()
            .map(|r| layout.index_of(r))
            .collect::<Result<Vec<_>>>()?;
        Ok(move |tuple: &[u64]| {
            let picked: Vec<u64> = idx.iter().map(|&i| tuple[i]).collect();
            (self.func)(&picked)
        })
    }

    pub fn mass(&self, state: &SparseState) -> Result<f64> {
        let pred = self.bind(state.layout())?;
        Ok(state.good_mass(pred))
    }
}

/// `A|0...0>`.
pub fn run(program: &ReversibleProgram, observer: &mut dyn StepObserver) -> Result<SparseState> {
    program.apply(SparseState::zero(program.layout().clone()), observer)
}

/// One application of `Q(A, chi, zero_phase, good_phase)` to `state`:
/// `S_chi^{good_phase}`, then `A^-1`, then `S_0^{zero_phase}`, then `A`,
/// then the global factor `-1`.
pub fn q_operator(
    program: &ReversibleProgram,
    chi: &GoodPredicate,
    zero_phase: Complex64,
    good_phase: Complex64,
    state: SparseState,
    observer: &mut dyn StepObserver,
) -> Result<SparseState> {
    let state = {
        let pred = chi.bind(program.layout())?;
        state.phase_flip(pred, good_phase)?
    };
    let state = program.apply_inverse(state, observer)?;
    let state = state.phase_flip_zero(zero_phase)?;
    let state = program.apply(state, observer)?;
    Ok(state.scale(Complex64::new(-1.0, 0.0)))
}

/// `Q^iterations A|0>` with the Grover phases `-1, -1`.
pub fn grover_iterate(
    program: &ReversibleProgram,
    chi: &GoodPredicate,
    iterations: usize,
    observer: &mut dyn StepObserver,
) -> Result<SparseState> {
    let minus = Complex64::new(-1.0, 0.0);
    let mut state = run(program, observer)?;
    for _ in 0..iterations {
        state = q_operator(program, chi, minus, minus, state, observer)?;
    }
    Ok(state)
}

/// Result of an exact one-shot boost.
#[derive(Debug, Clone)]
pub struct BoostOutcome {
    pub state: SparseState,
    /// Good mass of `A|0>`.
    pub initial_mass: f64,
    /// Good mass after the single `Q`.
    pub final_mass: f64,
    /// Whether `initial_mass` matched the regime's required value within 1e-9.
    pub precondition_met: bool,
}

fn boost(
    program: &ReversibleProgram,
    chi: &GoodPredicate,
    phase: Complex64,
    required_mass: f64,
    observer: &mut dyn StepObserver,
) -> Result<BoostOutcome> {
    let initial = run(program, observer)?;
    let initial_mass = chi.mass(&initial)?;
    let state = q_operator(program, chi, phase, phase, initial, observer)?;
    let final_mass = chi.mass(&state)?;
    Ok(BoostOutcome {
        state,
        initial_mass,
        final_mass,
        precondition_met: (initial_mass - required_mass).abs() <= NORM_TOLERANCE,
    })
}

/// One `Q` with `phi = varphi = i`: good mass exactly 1/2 becomes 1.
///
/// The precondition is checked, not assumed; on failure the boosted state is
/// still returned with `precondition_met = false`.
pub fn boost_half(
    program: &ReversibleProgram,
    chi: &GoodPredicate,
    observer: &mut dyn StepObserver,
) -> Result<BoostOutcome> {
    boost(program, chi, Complex64::new(0.0, 1.0), 0.5, observer)
}

/// One `Q` with `phi = varphi = -1`: good mass exactly 1/4 becomes 1.
pub fn boost_quarter(
    program: &ReversibleProgram,
    chi: &GoodPredicate,
    observer: &mut dyn StepObserver,
) -> Result<BoostOutcome> {
    boost(program, chi, Complex64::new(-1.0, 0.0), 0.25, observer)
}
