use rand::Rng;

use super::{Label, MessageKind, ProtocolConfig, ProtocolKind, ProtocolOutput, ProtocolResult};
use super::{Recipient, Session};
use crate::error::{Error, Result};

/// Splits `vote` into `masks.len() + 1` additive shares modulo `modulus`:
/// the masks themselves, then the balancing share.
pub fn share_vote(vote: u64, masks: &[u64], modulus: u64) -> Vec<u64> {
    let masked = masks.iter().fold(0, |acc, m| (acc + m) % modulus);
    let last = (vote % modulus + modulus - masked) % modulus;
    masks.iter().copied().chain([last]).collect()
}

/// Whether `candidate` divides every secret. Each party shares its no-vote
/// additively modulo `n + 1`; the sum of all shares is the number of no-votes.
pub(crate) fn run_vote(session: &mut Session, secrets: &[u64], candidate: u64) -> Result<bool> {
    let n = session.log.n;
    if candidate == 0 {
        return Err(Error::InvalidInput("candidate must be positive".into()));
    }
    if secrets.len() != n {
        return Err(Error::ArityMismatch {
            expected: n,
            got: secrets.len(),
        });
    }
    session.log.enter("vote");
    let modulus = n as u64 + 1;

    // Share j of party i goes to party j; parties keep their own share.
    let round = session.log.classical_round();
    let mut held = vec![0u64; n];
    for (i, &x) in secrets.iter().enumerate() {
        let no = (x % candidate != 0) as u64;
        let masks: Vec<u64> = (0..n - 1)
            .map(|_| session.parties[i].gen_range(0..modulus))
            .collect();
        let shares = share_vote(no, &masks, modulus);
        // Rotate so the balancing share stays with its owner.
        for (offset, &share) in shares.iter().rev().enumerate() {
            let j = (i + offset) % n;
            held[j] = (held[j] + share) % modulus;
            if j != i {
                session.log.send(
                    round,
                    i,
                    Recipient::Party(j),
                    MessageKind::ClassicalShare,
                    Label::VoteShare,
                    share,
                );
            }
        }
    }

    let round = session.log.classical_round();
    for (j, &sum) in held.iter().enumerate() {
        session.log.send(
            round,
            j,
            Recipient::Broadcast,
            MessageKind::ClassicalShare,
            Label::VoteSum,
            sum,
        );
    }
    let yes = held.iter().fold(0, |acc, s| (acc + s) % modulus) == 0;

    let round = session.log.classical_round();
    session.log.send(
        round,
        0,
        Recipient::Broadcast,
        MessageKind::ClassicalInteger,
        Label::VoteResult,
        yes as u64,
    );
    session.log.leave();
    Ok(yes)
}

/// Standalone divisibility vote.
pub fn divisibility_vote(
    secrets: &[u64],
    candidate: u64,
    config: &ProtocolConfig,
) -> Result<ProtocolResult> {
    let mut session = Session::new(secrets.len(), config)?;
    let yes = run_vote(&mut session, secrets, candidate)?;
    Ok(session.finish(ProtocolKind::Vote, Some(ProtocolOutput::Bool(yes))))
}
