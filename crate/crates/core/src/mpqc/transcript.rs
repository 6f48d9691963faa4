use std::collections::HashMap;
use std::io::{self, Write};

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Recipient {
    Party(usize),
    Broadcast,
}

impl Serialize for Recipient {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Recipient::Party(i) => s.serialize_u64(*i as u64),
            Recipient::Broadcast => s.serialize_str("all"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    ClassicalInteger,
    ClassicalShare,
    RegisterHandoff,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Label {
    /// `y_i = x_i q` sent to party 0.
    MaskedMultiple,
    /// The product `k` of all masked multiples.
    Modulus,
    /// One additive share of a vote, party to party.
    VoteShare,
    /// A party's sum of the shares it holds.
    VoteSum,
    VoteResult,
    /// Result of a nested subprotocol.
    SubOutput,
    Output,
    Handoff,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Payload {
    pub label: Label,
    /// Dot-separated protocol nesting, e.g. `gcd.psu.lcm`.
    pub phase: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub register: Option<String>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ProtocolCounters {
    pub fourier_calls: u64,
    /// Full applications of the joint state preparation or its inverse.
    pub oracle_passes: u64,
    /// `n * oracle_passes + classical_rounds`.
    pub rounds: u64,
    pub classical_rounds: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Message {
    pub round: u64,
    pub from: usize,
    pub to: Recipient,
    pub kind: MessageKind,
    pub payload: Payload,
    /// Counters at emission.
    pub counters: ProtocolCounters,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Transcript {
    messages: Vec<Message>,
}

impl Transcript {
    pub fn push(&mut self, message: Message) {
        self.messages.push(message);
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    /// One JSON object per line.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> io::Result<()> {
        for m in &self.messages {
            serde_json::to_writer(&mut out, m)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    /// Rounds never decrease, and every register handoff is received by the
    /// party that sends it next; each register ends with its first sender.
    pub fn check_structure(&self) -> Result<()> {
        let mut holders: HashMap<&str, (usize, usize)> = HashMap::new();
        let mut last_round = 0;
        for m in &self.messages {
            if m.round < last_round {
                return Err(Error::InvalidInput(format!(
                    "round {} after round {last_round}",
                    m.round
                )));
            }
            last_round = m.round;
            if m.kind != MessageKind::RegisterHandoff {
                continue;
            }
            let register = m.payload.register.as_deref().unwrap_or("");
            let Recipient::Party(to) = m.to else {
                return Err(Error::InvalidInput(format!(
                    "{register} handed to everyone"
                )));
            };
            let entry = holders.entry(register).or_insert((m.from, m.from));
            if entry.1 != m.from {
                return Err(Error::NotHolder {
                    register: register.into(),
                    holder: entry.1,
                    party: m.from,
                });
            }
            entry.1 = to;
        }
        for (register, (first, current)) in holders {
            if first != current {
                return Err(Error::InvalidInput(format!(
                    "{register} left with party {current}, not {first}"
                )));
            }
        }
        Ok(())
    }
}
