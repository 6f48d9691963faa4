use std::collections::BTreeSet;

use super::sets::run_psu_encoded;
use super::vote::run_vote;
use super::{check_secrets, ProtocolConfig, ProtocolKind, ProtocolOutput, ProtocolResult, Session};
use crate::error::Result;
use crate::factorint::{factorize_with, is_prime, prime_encode, prime_index, OrderFinder};

/// Number of primes below `2^m_bits`: the universe of prime-factor sets.
fn prime_universe(m_bits: u32) -> u64 {
    let bound = 1u64 << m_bits;
    let mut p = bound;
    while !is_prime(p) {
        p += 1;
    }
    prime_index(p)
}

pub(crate) fn run_gcd(session: &mut Session, secrets: &[u64], m_bits: u32) -> Result<Option<u64>> {
    check_secrets(secrets, m_bits)?;
    session.log.enter("gcd");

    // (1) each party factors its own secret.
    let mut finder = OrderFinder::default();
    let mut radicals = Vec::with_capacity(secrets.len());
    for (i, &x) in secrets.iter().enumerate() {
        let primes: BTreeSet<u64> = factorize_with(x, &mut finder, &mut session.parties[i])?
            .factors
            .into_iter()
            .collect();
        radicals.push(primes.iter().product());
    }

    // (2) union of the prime sets, encoded by prime index.
    let Some(union) = run_psu_encoded(session, &radicals, m_bits, prime_universe(m_bits))? else {
        session.log.leave();
        return Ok(None);
    };

    // (3) largest common power of each prime, ascending exponents.
    let mut gcd = 1u64;
    for u in union {
        let p = prime_encode(u);
        let mut power = 1u64;
        while let Some(next) = power.checked_mul(p).filter(|&c| c >> m_bits == 0) {
            if !run_vote(session, secrets, next)? {
                break;
            }
            power = next;
        }
        gcd *= power;
    }
    session.log.announce(gcd);
    session.log.leave();
    Ok(Some(gcd))
}

/// GCD of the parties' secrets, each in `[1, 2^m_bits)`.
pub fn gcd_protocol(
    secrets: &[u64],
    m_bits: u32,
    config: &ProtocolConfig,
) -> Result<ProtocolResult> {
    let mut session = Session::new(secrets.len(), config)?;
    let out = run_gcd(&mut session, secrets, m_bits)?;
    Ok(session.finish(ProtocolKind::Gcd, out.map(ProtocolOutput::Integer)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gcd(secrets: &[u64]) -> u64 {
        match gcd_protocol(secrets, 5, &ProtocolConfig::seeded(2))
            .unwrap()
            .output
        {
            Some(ProtocolOutput::Integer(v)) => v,
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn gcd_examples() {
        assert_eq!(gcd(&[12, 18]), 6);
        assert_eq!(gcd(&[7, 11]), 1);
        assert_eq!(gcd(&[8, 8, 8]), 8);
        assert_eq!(gcd(&[1, 16]), 1);
    }

    #[test]
    fn universe_covers_primes_below_the_bound() {
        assert_eq!(prime_universe(5), 11);
        assert_eq!(prime_universe(3), 4);
    }
}
