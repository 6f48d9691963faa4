use std::collections::BTreeSet;

use super::gcd::run_gcd;
use super::lcm::run_lcm;
use super::{ProtocolConfig, ProtocolKind, ProtocolOutput, ProtocolResult, Session};
use crate::error::{Error, Result};
use crate::factorint::{decode_set, encode_set, prime_encode};

/// Bits needed for the encoding of the whole universe `{0, ..., size - 1}`.
pub fn universe_bits(universe_size: u64) -> Result<u32> {
    let full = (0..universe_size).try_fold(1u64, |acc, u| {
        acc.checked_mul(prime_encode(u))
            .ok_or_else(|| Error::Overflow(format!("encoding of a universe of {universe_size}")))
    })?;
    Ok((64 - full.leading_zeros()).max(1))
}

fn encode_all(sets: &[BTreeSet<u64>], universe_size: u64) -> Result<Vec<u64>> {
    if universe_size == 0 {
        return Err(Error::InvalidInput("universe must be nonempty".into()));
    }
    sets.iter()
        .map(|s| match s.iter().find(|&&u| u >= universe_size) {
            Some(u) => Err(Error::InvalidInput(format!(
                "element {u} outside universe of size {universe_size}"
            ))),
            None => encode_set(s),
        })
        .collect()
}

/// Union of encoded sets via the LCM protocol, decoded over the universe.
pub(crate) fn run_psu_encoded(
    session: &mut Session,
    encodings: &[u64],
    m_bits: u32,
    universe_size: u64,
) -> Result<Option<BTreeSet<u64>>> {
    session.log.enter("psu");
    let out = match run_lcm(session, encodings, m_bits)? {
        Some(l) => Some(decode_set(l, universe_size, &mut session.sim)?),
        None => None,
    };
    session.log.leave();
    Ok(out)
}

/// Private set union over `{0, ..., universe_size - 1}`.
pub fn psu_protocol(
    sets: &[BTreeSet<u64>],
    universe_size: u64,
    config: &ProtocolConfig,
) -> Result<ProtocolResult> {
    let encodings = encode_all(sets, universe_size)?;
    let m_bits = universe_bits(universe_size)?;
    let mut session = Session::new(sets.len(), config)?;
    let out = run_psu_encoded(&mut session, &encodings, m_bits, universe_size)?;
    Ok(session.finish(ProtocolKind::Psu, out.map(ProtocolOutput::Set)))
}

/// Private set intersection over `{0, ..., universe_size - 1}`.
pub fn psi_protocol(
    sets: &[BTreeSet<u64>],
    universe_size: u64,
    config: &ProtocolConfig,
) -> Result<ProtocolResult> {
    let encodings = encode_all(sets, universe_size)?;
    let m_bits = universe_bits(universe_size)?;
    let mut session = Session::new(sets.len(), config)?;
    session.log.enter("psi");
    let out = match run_gcd(&mut session, &encodings, m_bits)? {
        Some(g) => Some(decode_set(g, universe_size, &mut session.sim)?),
        None => None,
    };
    session.log.leave();
    Ok(session.finish(ProtocolKind::Psi, out.map(ProtocolOutput::Set)))
}
