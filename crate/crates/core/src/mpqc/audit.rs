use std::collections::{BTreeSet, HashSet};

use serde::Serialize;

use super::{Label, Message, MessageKind, ProtocolResult, Recipient};
use crate::factorint::{encode_set, prime_divisors};

/// The inputs a protocol was run on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProtocolSecrets {
    Integers(Vec<u64>),
    Sets(Vec<BTreeSet<u64>>),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct AuditReport {
    pub passed: bool,
    pub messages_checked: usize,
    pub violations: Vec<String>,
}

fn radical(x: u64) -> u64 {
    prime_divisors(x).iter().product()
}

/// Per-party values a phase computes on: integers as given, sets as their
/// encodings, and prime-factor radicals inside the union step of a GCD.
fn phase_secrets(base: &[u64], phase: &str) -> Vec<u64> {
    if phase.contains("gcd.psu") {
        base.iter().map(|&x| radical(x)).collect()
    } else {
        base.to_vec()
    }
}

/// Checks every message against the rule for its label and rejects any
/// non-output message carrying a raw secret.
pub fn leakage_audit(result: &ProtocolResult, secrets: &ProtocolSecrets) -> AuditReport {
    let base: Vec<u64> = match secrets {
        ProtocolSecrets::Integers(v) => v.clone(),
        ProtocolSecrets::Sets(s) => s.iter().map(|s| encode_set(s).unwrap_or(0)).collect(),
    };
    let n = result.parties;
    let raw: HashSet<u64> = base.iter().copied().collect();
    let mut violations = Vec::new();
    if let Err(e) = result.transcript.check_structure() {
        violations.push(format!("transcript structure: {e}"));
    }
    if base.len() != n {
        violations.push(format!("{} secrets for {n} parties", base.len()));
    }

    for (i, m) in result.transcript.messages().iter().enumerate() {
        let inner = phase_secrets(&base, &m.payload.phase);
        let mut fail = |why: String| violations.push(format!("message {i}: {why}"));
        if m.from >= n || matches!(m.to, Recipient::Party(p) if p >= n) {
            fail("unknown party".into());
            continue;
        }
        let value = m.payload.value;
        let exposes = |v: u64| raw.contains(&v) || inner.contains(&v);
        match (m.payload.label, value) {
            (Label::Handoff, None) => {
                if m.kind != MessageKind::RegisterHandoff || m.payload.register.is_none() {
                    fail("malformed register handoff".into());
                }
            }
            (Label::MaskedMultiple, Some(y)) => {
                let own = inner.get(m.from).copied().unwrap_or(0);
                if m.kind != MessageKind::ClassicalInteger || m.to != Recipient::Party(0) {
                    fail("masked multiple not sent to party 0".into());
                } else if own == 0 || y % own != 0 || y <= own {
                    fail(format!(
                        "{y} is not a masked multiple of the sender's input"
                    ));
                } else if exposes(y) {
                    fail(format!("masked multiple {y} equals a secret"));
                }
            }
            (Label::Modulus, Some(k)) => {
                if m.from != 0 || m.to != Recipient::Broadcast {
                    fail("modulus not broadcast by party 0".into());
                } else if inner.iter().any(|&x| x == 0 || k % x != 0) {
                    fail(format!("modulus {k} is not a common multiple"));
                } else if exposes(k) {
                    fail(format!("modulus {k} equals a secret"));
                }
            }
            (Label::VoteShare | Label::VoteSum, Some(s)) => {
                let routed = match m.payload.label {
                    Label::VoteShare => matches!(m.to, Recipient::Party(p) if p != m.from),
                    _ => m.to == Recipient::Broadcast,
                };
                if m.kind != MessageKind::ClassicalShare || !routed {
                    fail("vote share sent outside the sharing scheme".into());
                } else if s > n as u64 {
                    fail(format!("share {s} outside Z_{}", n + 1));
                }
            }
            (Label::VoteResult, Some(b)) if b <= 1 && m.from == 0 => {}
            (Label::Output | Label::SubOutput, Some(_)) if m.from == 0 => {}
            (label, _) => fail(format!("{label:?} message not allowed here")),
        }
    }
    AuditReport {
        passed: violations.is_empty(),
        messages_checked: result.transcript.len(),
        violations,
    }
}

/// Appends a message to a copy of `result`; used to exercise the audit.
pub fn with_injected(result: &ProtocolResult, message: Message) -> ProtocolResult {
    let mut out = result.clone();
    out.transcript.push(message);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mpqc::{
        gcd_protocol, lcm_protocol, psi_protocol, psu_protocol, Payload, ProtocolConfig,
    };

    fn raw_secret_message(result: &ProtocolResult, from: usize, value: u64) -> Message {
        let last = result.transcript.messages().last().unwrap();
        Message {
            round: last.round + 1,
            from,
            to: Recipient::Party(0),
            kind: MessageKind::ClassicalInteger,
            payload: Payload {
                label: Label::MaskedMultiple,
                phase: "lcm".into(),
                value: Some(value),
                register: None,
            },
            counters: last.counters,
        }
    }

    #[test]
    fn honest_lcm_passes_and_injection_fails() {
        let secrets = vec![4, 6];
        let r = lcm_protocol(&secrets, 5, &ProtocolConfig::seeded(1)).unwrap();
        let report = leakage_audit(&r, &ProtocolSecrets::Integers(secrets.clone()));
        assert!(report.passed, "{:?}", report.violations);

        let bad = with_injected(&r, raw_secret_message(&r, 1, 6));
        let report = leakage_audit(&bad, &ProtocolSecrets::Integers(secrets));
        assert!(!report.passed);
        assert_eq!(report.violations.len(), 1);
    }

    #[test]
    fn honest_composite_protocols_pass() {
        let secrets = vec![12, 18, 30];
        let r = gcd_protocol(&secrets, 5, &ProtocolConfig::seeded(2)).unwrap();
        assert!(leakage_audit(&r, &ProtocolSecrets::Integers(secrets)).passed);

        let sets: Vec<BTreeSet<u64>> = vec![[1, 2].into(), [2, 3].into()];
        for r in [
            psu_protocol(&sets, 4, &ProtocolConfig::seeded(3)).unwrap(),
            psi_protocol(&sets, 4, &ProtocolConfig::seeded(3)).unwrap(),
        ] {
            let report = leakage_audit(&r, &ProtocolSecrets::Sets(sets.clone()));
            assert!(report.passed, "{:?}", report.violations);
        }
    }

    #[test]
    fn encodings_never_appear_outside_outputs() {
        let sets: Vec<BTreeSet<u64>> = vec![[0, 1].into(), [1, 3].into(), [1].into()];
        let encodings: Vec<u64> = sets.iter().map(|s| encode_set(s).unwrap()).collect();
        let r = psi_protocol(&sets, 4, &ProtocolConfig::seeded(4)).unwrap();
        for m in r.transcript.messages() {
            if matches!(m.payload.label, Label::MaskedMultiple | Label::Modulus) {
                assert!(!encodings.contains(&m.payload.value.unwrap()));
            }
        }
    }

    #[test]
    fn unknown_labels_fail() {
        let secrets = vec![3, 5];
        let r = lcm_protocol(&secrets, 5, &ProtocolConfig::seeded(1)).unwrap();
        let mut m = raw_secret_message(&r, 1, 5);
        m.payload.label = Label::VoteResult;
        m.payload.value = Some(5);
        let report = leakage_audit(&with_injected(&r, m), &ProtocolSecrets::Integers(secrets));
        assert!(!report.passed);
    }
}
