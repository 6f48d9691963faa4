//! Simulated multiparty protocols built on exact period finding: LCM,
//! divisibility voting, GCD, and private set union and intersection.
//!
//! Parties exchange classical messages and hand quantum registers to each
//! other; every exchange is recorded in a [`Transcript`]. Secrets stay inside
//! the simulator and never appear in messages, except through the masked
//! values the protocols define.

mod audit;
mod gcd;
mod lcm;
mod sets;
mod transcript;
mod vote;

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

pub use audit::{leakage_audit, with_injected, AuditReport, ProtocolSecrets};
pub use gcd::gcd_protocol;
pub use lcm::{lcm_protocol, JointProgram, JOINT_INDEX, JOINT_TARGET};
pub use sets::{psi_protocol, psu_protocol, universe_bits};
pub use transcript::{
    Label, Message, MessageKind, Payload, ProtocolCounters, Recipient, Transcript,
};
pub use vote::{divisibility_vote, share_vote};

/// How the period-finding subroutine is simulated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Engine {
    /// Boost distributions from the closed-form spectrum of the joint function.
    /// Handles the full size of `k`.
    #[default]
    Subspace,
    /// Full statevector of the joint registers `h, t, e_0, ..., e_{n-1}`.
    /// Only feasible for tiny `k`.
    Statevector,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ProtocolConfig {
    pub seed: u64,
    pub engine: Engine,
}

impl ProtocolConfig {
    pub fn seeded(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    Lcm,
    Gcd,
    Psu,
    Psi,
    Vote,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum ProtocolOutput {
    Integer(u64),
    Set(BTreeSet<u64>),
    Bool(bool),
}

/// What one party sent and received.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PartyView {
    pub party: usize,
    pub sent: usize,
    pub received: usize,
    pub handoffs_received: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolResult {
    pub protocol: ProtocolKind,
    pub parties: usize,
    /// `None` when rejected.
    pub output: Option<ProtocolOutput>,
    pub accepted: bool,
    pub transcript: Transcript,
    pub counters: ProtocolCounters,
    /// Reruns of the whole protocol. Always 0.
    pub repetitions: u64,
    pub views: Vec<PartyView>,
}

/// Shared state of one protocol run, including nested subprotocols.
pub(crate) struct Session {
    pub(crate) log: Log,
    /// Randomness of quantum measurements and local decoding.
    pub(crate) sim: ChaCha8Rng,
    pub(crate) parties: Vec<ChaCha8Rng>,
    pub(crate) engine: Engine,
}

pub(crate) struct Log {
    pub(crate) n: usize,
    pub(crate) transcript: Transcript,
    pub(crate) counters: ProtocolCounters,
    phase: Vec<&'static str>,
}

impl Session {
    pub(crate) fn new(n: usize, config: &ProtocolConfig) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput(format!(
                "protocols need at least 2 parties, got {n}"
            )));
        }
        let stream = |s: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(s);
            rng
        };
        Ok(Self {
            log: Log {
                n,
                transcript: Transcript::default(),
                counters: ProtocolCounters::default(),
                phase: Vec::new(),
            },
            sim: stream(0),
            parties: (1..=n as u64).map(stream).collect(),
            engine: config.engine,
        })
    }

    pub(crate) fn finish(
        self,
        protocol: ProtocolKind,
        output: Option<ProtocolOutput>,
    ) -> ProtocolResult {
        let n = self.log.n;
        let mut views: Vec<PartyView> = (0..n)
            .map(|party| PartyView {
                party,
                ..PartyView::default()
            })
            .collect();
        for m in self.log.transcript.messages() {
            views[m.from].sent += 1;
            let receivers: Vec<usize> = match m.to {
                Recipient::Party(p) => vec![p],
                Recipient::Broadcast => (0..n).filter(|&p| p != m.from).collect(),
            };
            for p in receivers {
                views[p].received += 1;
                if m.kind == MessageKind::RegisterHandoff {
                    views[p].handoffs_received += 1;
                }
            }
        }
        ProtocolResult {
            protocol,
            parties: n,
            accepted: output.is_some(),
            output,
            transcript: self.log.transcript,
            counters: self.log.counters,
            repetitions: 0,
            views,
        }
    }
}

impl Log {
    pub(crate) fn enter(&mut self, phase: &'static str) {
        self.phase.push(phase);
    }

    pub(crate) fn leave(&mut self) {
        self.phase.pop();
    }

    pub(crate) fn nested(&self) -> bool {
        self.phase.len() > 1
    }

    /// Opens a classical communication round; all its messages share the number.
    pub(crate) fn classical_round(&mut self) -> u64 {
        self.counters.classical_rounds += 1;
        self.counters.rounds += 1;
        self.counters.rounds
    }

    pub(crate) fn send(
        &mut self,
        round: u64,
        from: usize,
        to: Recipient,
        kind: MessageKind,
        label: Label,
        value: u64,
    ) {
        let payload = Payload {
            label,
            phase: self.phase.join("."),
            value: Some(value),
            register: None,
        };
        self.push(round, from, to, kind, payload);
    }

    /// Logs one pass of handoffs; each handoff is its own round.
    pub(crate) fn pass(&mut self, handoffs: &[(String, usize, usize)], inverse: bool) {
        self.counters.oracle_passes += 1;
        let ordered: Vec<(String, usize, usize)> = if inverse {
            handoffs
                .iter()
                .rev()
                .map(|(r, from, to)| (r.clone(), *to, *from))
                .collect()
        } else {
            handoffs.to_vec()
        };
        for (register, from, to) in ordered {
            self.counters.rounds += 1;
            let payload = Payload {
                label: Label::Handoff,
                phase: self.phase.join("."),
                value: None,
                register: Some(register),
            };
            let round = self.counters.rounds;
            self.push(
                round,
                from,
                Recipient::Party(to),
                MessageKind::RegisterHandoff,
                payload,
            );
        }
    }

    /// Broadcasts a (sub)protocol result from party 0.
    pub(crate) fn announce(&mut self, value: u64) {
        let label = if self.nested() {
            Label::SubOutput
        } else {
            Label::Output
        };
        let round = self.classical_round();
        self.send(
            round,
            0,
            Recipient::Broadcast,
            MessageKind::ClassicalInteger,
            label,
            value,
        );
    }

    fn push(
        &mut self,
        round: u64,
        from: usize,
        to: Recipient,
        kind: MessageKind,
        payload: Payload,
    ) {
        self.transcript.push(Message {
            round,
            from,
            to,
            kind,
            payload,
            counters: self.counters,
        });
    }
}

pub(crate) fn check_secrets(secrets: &[u64], m_bits: u32) -> Result<()> {
    if !(1..=40).contains(&m_bits) {
        return Err(Error::InvalidInput(format!(
            "bit size {m_bits} outside 1..=40"
        )));
    }
    if let Some(x) = secrets.iter().find(|&&x| x == 0 || x >> m_bits != 0) {
        return Err(Error::InvalidInput(format!(
            "secret {x} outside [1, 2^{m_bits})"
        )));
    }
    Ok(())
}
