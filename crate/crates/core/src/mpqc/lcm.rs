use std::collections::HashMap;
use std::sync::Arc;

use num_integer::Integer;
use rand::{Rng, RngCore};

use super::{check_secrets, Engine, Label, Log, MessageKind, ProtocolConfig, ProtocolKind};
use super::{ProtocolOutput, ProtocolResult, Recipient, Session};
use crate::amplify::{self, Counters, NoObserver, ReversibleProgram, Step};
use crate::error::{Error, Result};
use crate::periodfind::{
    eqpa_with, BoostSample, BoostSampler, SamplingProgram, Spectrum, StatevectorSampler,
    SubspaceSampler,
};
use crate::qstate::{ClassicalOracle, RegisterLayout};

pub const JOINT_INDEX: &str = "h";
pub const JOINT_TARGET: &str = "t";

fn value_register(i: usize) -> String {
    format!("e{i}")
}

/// The joint state preparation of the LCM protocol, with the acting party of
/// every step.
///
/// Party 0 prepares `h`, copies it into `t` and evaluates `f_0`; `t` then
/// travels `P_0 -> P_1 -> ... -> P_{n-1} -> P_0`, each party writing
/// `f_i(t) = t mod r_i` into its own `e_i`. Party 0 uncomputes `t` and applies
/// the DFT to `h`.
#[derive(Clone, Debug)]
pub struct JointProgram {
    sampling: SamplingProgram,
    actors: Vec<usize>,
    parties: usize,
}

impl JointProgram {
    pub fn new(periods: &[u64], k: u64, m_bits: u32) -> Result<Self> {
        let n = periods.len();
        let registers = [(JOINT_INDEX.to_string(), k), (JOINT_TARGET.to_string(), k)]
            .into_iter()
            .chain((0..n).map(|i| (value_register(i), 1u64 << m_bits)));
        let layout = Arc::new(RegisterLayout::new(registers)?);
        let mut program = ReversibleProgram::new(layout);
        let mut actors = Vec::new();
        let mut step = |actor: usize, s: Step| {
            program.push(s);
            actors.push(actor);
        };
        step(0, Step::UniformPrep(JOINT_INDEX.into()));
        step(
            0,
            Step::ControlledAdd {
                src: JOINT_INDEX.into(),
                dst: JOINT_TARGET.into(),
            },
        );
        for (i, &r) in periods.iter().enumerate() {
            let oracle = ClassicalOracle::new([JOINT_TARGET], value_register(i), move |v| v[0] % r);
            step(i, Step::Oracle(oracle));
            step(
                i,
                Step::Handoff {
                    register: JOINT_TARGET.into(),
                    from: i,
                    to: (i + 1) % n,
                },
            );
        }
        step(
            0,
            Step::ControlledSubtract {
                src: JOINT_INDEX.into(),
                dst: JOINT_TARGET.into(),
            },
        );
        step(
            0,
            Step::Dft {
                reg: JOINT_INDEX.into(),
                inverse: false,
            },
        );
        Ok(Self {
            sampling: SamplingProgram {
                program,
                index: JOINT_INDEX.into(),
            },
            actors,
            parties: n,
        })
    }

    pub fn sampling(&self) -> &SamplingProgram {
        &self.sampling
    }

    /// `(register, from, to)` for every handoff of one forward pass.
    pub fn handoffs(&self) -> Vec<(String, usize, usize)> {
        self.sampling
            .program
            .steps()
            .iter()
            .filter_map(|s| match s {
                Step::Handoff { register, from, to } => Some((register.clone(), *from, *to)),
                _ => None,
            })
            .collect()
    }

    fn initial_holders(&self) -> HashMap<String, usize> {
        let mut holders: HashMap<String, usize> = [JOINT_INDEX, JOINT_TARGET]
            .into_iter()
            .map(|r| (r.to_string(), 0))
            .collect();
        holders.extend((0..self.parties).map(|i| (value_register(i), i)));
        holders
    }

    /// Every step only touches registers its party holds, forward and inverse,
    /// and all registers return to their initial holders.
    pub fn check_choreography(&self) -> Result<()> {
        let initial = self.initial_holders();
        let mut holders = initial.clone();
        let steps = self.sampling.program.steps();
        let forward = steps.iter().zip(&self.actors).map(|(s, &a)| (s, a, false));
        let inverse = steps
            .iter()
            .zip(&self.actors)
            .rev()
            .map(|(s, &a)| (s, a, true));
        for (i, (step, actor, inv)) in forward.chain(inverse).enumerate() {
            let touched: Vec<&str> = match step {
                Step::Handoff { register, from, to } => {
                    let (from, to) = if inv { (*to, *from) } else { (*from, *to) };
                    let holder = holders[register.as_str()];
                    if holder != from {
                        return Err(Error::NotHolder {
                            register: register.clone(),
                            holder,
                            party: from,
                        });
                    }
                    holders.insert(register.clone(), to);
                    Vec::new()
                }
                Step::UniformPrep(r) | Step::Dft { reg: r, .. } => vec![r],
                Step::Oracle(o) => o
                    .inputs()
                    .iter()
                    .map(String::as_str)
                    .chain([o.output()])
                    .collect(),
                Step::ControlledAdd { src, dst } | Step::ControlledSubtract { src, dst } => {
                    vec![src, dst]
                }
                Step::PhaseFlip { .. } => Vec::new(),
            };
            for r in touched {
                let holder = holders[r];
                if holder != actor {
                    return Err(Error::NotHolder {
                        register: r.into(),
                        holder,
                        party: actor,
                    });
                }
            }
            if i + 1 == steps.len() && holders != initial {
                return Err(Error::InvalidInput(
                    "registers not returned after the forward pass".into(),
                ));
            }
        }
        if holders != initial {
            return Err(Error::InvalidInput(
                "registers not returned after the inverse pass".into(),
            ));
        }
        Ok(())
    }

    /// Runs the preparation and measures `t`; 0 in honest runs.
    pub fn measure_target(&self, rng: &mut dyn RngCore) -> Result<u64> {
        let state = amplify::run(&self.sampling.program, &mut NoObserver)?;
        Ok(state.measure(JOINT_TARGET, rng)?.0)
    }
}

/// `x q` with `q` uniform among the values that put it in `[2^m, 2^{m+1})`.
pub(crate) fn mask(x: u64, m_bits: u32, rng: &mut impl Rng) -> u64 {
    let lo = (1u64 << m_bits).div_ceil(x);
    let hi = ((1u64 << (m_bits + 1)) - 1) / x;
    x * rng.gen_range(lo..=hi)
}

/// Charges three passes per boost: `A`, then `A^-1` and `A` inside `Q`.
struct Logged<'a> {
    inner: Box<dyn BoostSampler>,
    log: &'a mut Log,
    handoffs: &'a [(String, usize, usize)],
}

impl BoostSampler for Logged<'_> {
    fn modulus(&self) -> u64 {
        self.inner.modulus()
    }

    fn sample(
        &mut self,
        d: u64,
        j: i32,
        rng: &mut dyn RngCore,
        counters: &mut Counters,
    ) -> Result<(BoostSample, f64)> {
        let before = counters.fourier_calls;
        let out = self.inner.sample(d, j, rng, counters)?;
        self.log.counters.fourier_calls += counters.fourier_calls - before;
        for inverse in [false, true, false] {
            self.log.pass(self.handoffs, inverse);
        }
        Ok(out)
    }
}

pub(crate) fn run_lcm(session: &mut Session, secrets: &[u64], m_bits: u32) -> Result<Option<u64>> {
    check_secrets(secrets, m_bits)?;
    if secrets.len() != session.log.n {
        return Err(Error::ArityMismatch {
            expected: session.log.n,
            got: secrets.len(),
        });
    }
    session.log.enter("lcm");

    // (1) masked multiples to party 0.
    let round = session.log.classical_round();
    let mut k = 1u64;
    for (i, &x) in secrets.iter().enumerate() {
        let y = mask(x, m_bits, &mut session.parties[i]);
        if i != 0 {
            session.log.send(
                round,
                i,
                Recipient::Party(0),
                MessageKind::ClassicalInteger,
                Label::MaskedMultiple,
                y,
            );
        }
        k = k
            .checked_mul(y)
            .ok_or_else(|| Error::Overflow("product of masked multiples".into()))?;
    }

    // (2) party 0 broadcasts k.
    let round = session.log.classical_round();
    session.log.send(
        round,
        0,
        Recipient::Broadcast,
        MessageKind::ClassicalInteger,
        Label::Modulus,
        k,
    );

    // (3)-(6)(2) joint preparation, then the t check.
    let sampler: Box<dyn BoostSampler> = match session.engine {
        Engine::Statevector => {
            let joint = JointProgram::new(secrets, k, m_bits)?;
            joint.check_choreography()?;
            session.log.pass(&joint.handoffs(), false);
            if joint.measure_target(&mut session.sim)? != 0 {
                session.log.leave();
                return Ok(None);
            }
            Box::new(StatevectorSampler::from_sampling(joint.sampling)?)
        }
        Engine::Subspace => {
            session.log.pass(&ring(secrets.len()), false);
            let period = secrets.iter().fold(1, |acc: u64, x| acc.lcm(x));
            Box::new(SubspaceSampler::new(Spectrum::periodic(k, period)?))
        }
    };

    // (6)(3) exact period finding on the joint function.
    let periods = secrets.to_vec();
    let joint_value = move |x: u64| periods.iter().fold(0, |acc, &r| acc * r + x % r);
    let handoffs = ring(secrets.len());
    let mut logged = Logged {
        inner: sampler,
        log: &mut session.log,
        handoffs: &handoffs,
    };
    let period = eqpa_with(&mut logged, &joint_value, &mut session.sim)?.period;

    // (6)(4)
    session.log.announce(period);
    session.log.leave();
    Ok(Some(period))
}

fn ring(n: usize) -> Vec<(String, usize, usize)> {
    (0..n)
        .map(|i| (JOINT_TARGET.to_string(), i, (i + 1) % n))
        .collect()
}

/// LCM of the parties' secrets, each in `[1, 2^m_bits)`.
pub fn lcm_protocol(
    secrets: &[u64],
    m_bits: u32,
    config: &ProtocolConfig,
) -> Result<ProtocolResult> {
    let mut session = Session::new(secrets.len(), config)?;
    let out = run_lcm(&mut session, secrets, m_bits)?;
    Ok(session.finish(ProtocolKind::Lcm, out.map(ProtocolOutput::Integer)))
}
