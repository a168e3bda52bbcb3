//! The banknote arbitration circuit.
//!
//! A banknote contract escrows a note's face value under a serial number.
//! The circuit adjudicates four moves and nothing else:
//!
//! * report the note lost (stake `d0`, opens a claim window),
//! * recover the coins by presenting a certificate for the serial,
//! * challenge an open claim with a certificate, installing a fresh serial,
//! * settle an unchallenged claim after `t_tr` ticks, installing a fresh
//!   serial.
//!
//! Everything here is a pure function of (caller, witness, time, state,
//! deposit). Coin movement is the ledger's job.

use crate::bits::BitString;
use crate::ledger::ContractParams;
use crate::lightning::{Certificate, HashSpec, SerialNumber};
use crate::party::PartyId;
use std::fmt;

/// Serial slot of a banknote contract. Terminated is the tombstone left by
/// coin recovery; no circuit branch matches it, so termination is absorbing.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum SerialSlot {
    Serial(SerialNumber),
    Terminated,
}

impl SerialSlot {
    pub fn serial(&self) -> Option<&SerialNumber> {
        match self {
            SerialSlot::Serial(s) => Some(s),
            SerialSlot::Terminated => None,
        }
    }

    pub fn write_canonical(&self, out: &mut Vec<u8>) {
        match self {
            SerialSlot::Serial(s) => {
                out.push(1);
                s.write_canonical(out);
            }
            SerialSlot::Terminated => out.push(0),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Claim {
    NoActiveClaim,
    ActiveClaim { claimant: PartyId, since: u64 },
}

impl Claim {
    pub fn write_canonical(&self, out: &mut Vec<u8>) {
        match self {
            Claim::NoActiveClaim => out.push(0),
            Claim::ActiveClaim { claimant, since } => {
                out.push(1);
                claimant.write_canonical(out);
                out.extend_from_slice(&since.to_le_bytes());
            }
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BanknoteState {
    pub serial: SerialSlot,
    pub claim: Claim,
}

impl BanknoteState {
    /// Starting state of a freshly minted note.
    pub fn fresh(serial: SerialNumber) -> Self {
        BanknoteState {
            serial: SerialSlot::Serial(serial),
            claim: Claim::NoActiveClaim,
        }
    }

    pub fn terminated() -> Self {
        BanknoteState {
            serial: SerialSlot::Terminated,
            claim: Claim::NoActiveClaim,
        }
    }

    pub fn write_canonical(&self, out: &mut Vec<u8>) {
        self.serial.write_canonical(out);
        self.claim.write_canonical(out);
    }
}

impl fmt::Display for BanknoteState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.serial {
            SerialSlot::Serial(s) => write!(f, "serial={s}")?,
            SerialSlot::Terminated => f.write_str("terminated")?,
        }
        match &self.claim {
            Claim::NoActiveClaim => Ok(()),
            Claim::ActiveClaim { claimant, since } => write!(f, " claim={claimant}@{since}"),
        }
    }
}

/// What a trigger asks the contract to consider.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Witness {
    Lost,
    Recover(Certificate),
    Challenge(Certificate, SerialNumber),
    Unchallenged(SerialNumber),
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum WitnessParseError {
    #[error("unknown witness tag {0:?}")]
    BadTag(String),
    #[error("expected {expected} fields, got {got}")]
    BadArity { expected: usize, got: usize },
    #[error("bad hex in witness field: {0}")]
    BadHex(String),
    #[error("field is {got} bits, expected {expected}")]
    BadLength { expected: usize, got: usize },
}

fn parse_field(tok: &str, expected_bits: usize) -> Result<BitString, WitnessParseError> {
    let bits = hex::decode(tok)
        .map(|bytes| BitString::from_bytes_truncated(&bytes, bytes.len() * 8))
        .map_err(|_| WitnessParseError::BadHex(tok.to_string()))?;
    // Hex carries no bit count, so require byte-exact agreement with the
    // configured hash and reject padding that from_hex would catch.
    let canonical =
        BitString::from_hex(tok, expected_bits).map_err(|_| WitnessParseError::BadLength {
            expected: expected_bits,
            got: bits.len(),
        })?;
    Ok(canonical)
}

impl Witness {
    /// Wire form used in scenario files and trace lines.
    pub fn encode(&self) -> String {
        match self {
            Witness::Lost => "LOST".to_string(),
            Witness::Recover(x) => format!("RECOVER {}", x.to_hex()),
            Witness::Challenge(x, s) => format!("CHALLENGE {} {}", x.to_hex(), s.to_hex()),
            Witness::Unchallenged(s) => format!("UNCHALLENGED {}", s.to_hex()),
        }
    }

    /// Parse the wire form. Field widths come from `spec`; anything that does
    /// not decode to exactly the configured certificate and serial lengths is
    /// a parse error, not a circuit reject.
    pub fn parse(text: &str, spec: &HashSpec) -> Result<Self, WitnessParseError> {
        let toks: Vec<&str> = text.split_whitespace().collect();
        let arity = |expected: usize| {
            if toks.len() == 1 + expected {
                Ok(())
            } else {
                Err(WitnessParseError::BadArity {
                    expected,
                    got: toks.len().saturating_sub(1),
                })
            }
        };
        match toks.first().copied() {
            Some("LOST") => {
                arity(0)?;
                Ok(Witness::Lost)
            }
            Some("RECOVER") => {
                arity(1)?;
                Ok(Witness::Recover(Certificate::from_bits(parse_field(
                    toks[1],
                    spec.cert_len(),
                )?)))
            }
            Some("CHALLENGE") => {
                arity(2)?;
                Ok(Witness::Challenge(
                    Certificate::from_bits(parse_field(toks[1], spec.cert_len())?),
                    SerialNumber::from_bits(parse_field(toks[2], spec.serial_len())?),
                ))
            }
            Some("UNCHALLENGED") => {
                arity(1)?;
                Ok(Witness::Unchallenged(SerialNumber::from_bits(parse_field(
                    toks[1],
                    spec.serial_len(),
                )?)))
            }
            Some(other) => Err(WitnessParseError::BadTag(other.to_string())),
            None => Err(WitnessParseError::BadTag(String::new())),
        }
    }

    pub fn write_canonical(&self, out: &mut Vec<u8>) {
        match self {
            Witness::Lost => out.push(0),
            Witness::Recover(x) => {
                out.push(1);
                x.write_canonical(out);
            }
            Witness::Challenge(x, s) => {
                out.push(2);
                x.write_canonical(out);
                s.write_canonical(out);
            }
            Witness::Unchallenged(s) => {
                out.push(3);
                s.write_canonical(out);
            }
        }
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.encode())
    }
}

/// What an accepted trigger releases to the caller.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Payout {
    Coins(u64),
    AllCoins,
}

/// The banknote circuit with its agreed constants. Identity (for the
/// payee-side parameter check) is the triple (hash, d0, t_tr).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BanknoteCircuit {
    hash: HashSpec,
    d0: u64,
    t_tr: u64,
}

impl BanknoteCircuit {
    /// `d0` is the claim stake, `t_tr` the challenge window in ticks. Both
    /// must be at least 1.
    pub fn new(hash: HashSpec, d0: u64, t_tr: u64) -> Self {
        assert!(d0 >= 1, "claim stake must be positive");
        assert!(t_tr >= 1, "challenge window must be positive");
        BanknoteCircuit { hash, d0, t_tr }
    }

    pub fn d0(&self) -> u64 {
        self.d0
    }

    pub fn t_tr(&self) -> u64 {
        self.t_tr
    }

    pub fn hash(&self) -> &HashSpec {
        &self.hash
    }

    pub fn serial_len(&self) -> usize {
        self.hash.serial_len()
    }

    /// Evaluate the circuit. None is reject: no coins move, state unchanged.
    ///
    /// The four accepting branches, in match order (they are mutually
    /// exclusive by their state and witness guards):
    ///
    /// 1. no claim open, witness Lost, deposit exactly d0: open a claim by
    ///    the caller at the current time, release nothing;
    /// 2. no claim open, witness Recover(x) with hash(x) = serial, no
    ///    deposit: terminate and release the whole balance;
    /// 3. claim open, witness Challenge(x, s2) with hash(x) = serial, no
    ///    deposit: anyone may close the claim, the serial becomes s2, release
    ///    d0;
    /// 4. claim open by the caller for strictly more than t_tr ticks,
    ///    witness Unchallenged(s2), no deposit: close the claim, the serial
    ///    becomes s2, release d0.
    pub fn evaluate(
        &self,
        pid: &PartyId,
        witness: &Witness,
        t: u64,
        st: &BanknoteState,
        d: u64,
    ) -> Option<(BanknoteState, Payout)> {
        let serial = st.serial.serial()?;
        match (&st.claim, witness) {
            (Claim::NoActiveClaim, Witness::Lost) if d == self.d0 => Some((
                BanknoteState {
                    serial: st.serial.clone(),
                    claim: Claim::ActiveClaim {
                        claimant: pid.clone(),
                        since: t,
                    },
                },
                Payout::Coins(0),
            )),
            (Claim::NoActiveClaim, Witness::Recover(x))
                if d == 0 && self.hash.eval(x.bits()).as_ref() == Some(serial) =>
            {
                Some((BanknoteState::terminated(), Payout::AllCoins))
            }
            (Claim::ActiveClaim { .. }, Witness::Challenge(x, s2))
                if d == 0
                    && s2.len() == self.hash.serial_len()
                    && self.hash.eval(x.bits()).as_ref() == Some(serial) =>
            {
                Some((BanknoteState::fresh(s2.clone()), Payout::Coins(self.d0)))
            }
            (Claim::ActiveClaim { claimant, since }, Witness::Unchallenged(s2))
                if d == 0
                    && claimant == pid
                    && s2.len() == self.hash.serial_len()
                    && t > since.saturating_add(self.t_tr) =>
            {
                Some((BanknoteState::fresh(s2.clone()), Payout::Coins(self.d0)))
            }
            _ => None,
        }
    }

    pub fn write_canonical(&self, out: &mut Vec<u8>) {
        self.hash.write_canonical(out);
        out.extend_from_slice(&self.d0.to_le_bytes());
        out.extend_from_slice(&self.t_tr.to_le_bytes());
    }
}

/// Payee-side shape check: would accepting a note under these parameters put
/// us in an ordinary banknote contract? True iff the member set is exactly
/// one party, that party owes a positive face value as its only deposit, the
/// circuit is our circuit (same hash and constants), and the starting state
/// carries a serial with no open claim.
pub fn is_banknote_params(params: &ContractParams, expected: &BanknoteCircuit) -> bool {
    let mut members = params.members.iter();
    let (Some(owner), None) = (members.next(), members.next()) else {
        return false;
    };
    let Some(&face) = params.deposits.get(owner) else {
        return false;
    };
    params.deposits.len() == 1
        && face >= 1
        && params.circuit == *expected
        && matches!(params.initial_state.serial, SerialSlot::Serial(_))
        && params.initial_state.claim == Claim::NoActiveClaim
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lightning::{BackendKind, LightningContext};
    use std::collections::{BTreeMap, BTreeSet};

    const D0: u64 = 10;
    const T_TR: u64 = 100;

    fn ctx() -> LightningContext {
        LightningContext::setup(BackendKind::Ideal, 16, 42).unwrap()
    }

    fn pid(s: &str) -> PartyId {
        PartyId::parse(s).unwrap()
    }

    struct Fixture {
        ctx: LightningContext,
        circuit: BanknoteCircuit,
        serial: SerialNumber,
        cert: Certificate,
    }

    fn fixture() -> Fixture {
        let mut ctx = ctx();
        let holder = crate::lightning::Holder::Party(pid("A#50"));
        let bolt = ctx.gen(holder.clone());
        let serial = ctx.verify(bolt).unwrap();
        let cert = ctx.extract_certificate(bolt, &holder).unwrap();
        let circuit = BanknoteCircuit::new(ctx.hash_spec(), D0, T_TR);
        Fixture {
            ctx,
            circuit,
            serial,
            cert,
        }
    }

    #[test]
    fn lost_with_exact_stake_opens_a_claim() {
        let f = fixture();
        let st = BanknoteState::fresh(f.serial.clone());
        let (st2, payout) = f
            .circuit
            .evaluate(&pid("A#50"), &Witness::Lost, 7, &st, D0)
            .unwrap();
        assert_eq!(payout, Payout::Coins(0));
        assert_eq!(st2.serial, SerialSlot::Serial(f.serial));
        assert_eq!(
            st2.claim,
            Claim::ActiveClaim {
                claimant: pid("A#50"),
                since: 7
            }
        );
    }

    #[test]
    fn lost_rejects_any_other_stake() {
        let f = fixture();
        let st = BanknoteState::fresh(f.serial);
        for d in [0, 1, D0 - 1, D0 + 1, 1000] {
            assert_eq!(
                f.circuit.evaluate(&pid("A#50"), &Witness::Lost, 7, &st, d),
                None
            );
        }
    }

    #[test]
    fn recovery_takes_everything_and_terminates() {
        let f = fixture();
        let st = BanknoteState::fresh(f.serial);
        let w = Witness::Recover(f.cert);
        let (st2, payout) = f.circuit.evaluate(&pid("B#0"), &w, 9, &st, 0).unwrap();
        assert_eq!(payout, Payout::AllCoins);
        assert_eq!(st2, BanknoteState::terminated());
    }

    #[test]
    fn recovery_needs_the_right_preimage() {
        let mut f = fixture();
        let st = BanknoteState::fresh(f.serial);
        let wrong = Certificate::from_bits(f.ctx.random_bits(32));
        assert_eq!(
            f.circuit
                .evaluate(&pid("B#0"), &Witness::Recover(wrong), 9, &st, 0),
            None
        );
        let short = Certificate::from_bits(f.ctx.random_bits(31));
        assert_eq!(
            f.circuit
                .evaluate(&pid("B#0"), &Witness::Recover(short), 9, &st, 0),
            None
        );
    }

    #[test]
    fn recovery_rejects_while_a_claim_is_open() {
        let f = fixture();
        let st = BanknoteState {
            serial: SerialSlot::Serial(f.serial),
            claim: Claim::ActiveClaim {
                claimant: pid("A#50"),
                since: 3,
            },
        };
        assert_eq!(
            f.circuit
                .evaluate(&pid("B#0"), &Witness::Recover(f.cert), 9, &st, 0),
            None
        );
    }

    #[test]
    fn anyone_with_the_certificate_can_challenge() {
        let mut f = fixture();
        let st = BanknoteState {
            serial: SerialSlot::Serial(f.serial),
            claim: Claim::ActiveClaim {
                claimant: pid("A#50"),
                since: 3,
            },
        };
        let fresh = SerialNumber::from_bits(f.ctx.random_bits(16));
        let w = Witness::Challenge(f.cert, fresh.clone());
        let (st2, payout) = f.circuit.evaluate(&pid("Q#1"), &w, 4, &st, 0).unwrap();
        assert_eq!(payout, Payout::Coins(D0));
        assert_eq!(st2, BanknoteState::fresh(fresh));
    }

    #[test]
    fn challenge_needs_an_open_claim_and_a_clean_deposit() {
        let mut f = fixture();
        let fresh = SerialNumber::from_bits(f.ctx.random_bits(16));
        let w = Witness::Challenge(f.cert, fresh);
        let no_claim = BanknoteState::fresh(f.serial.clone());
        assert_eq!(f.circuit.evaluate(&pid("Q#1"), &w, 4, &no_claim, 0), None);
        let open = BanknoteState {
            serial: SerialSlot::Serial(f.serial),
            claim: Claim::ActiveClaim {
                claimant: pid("A#50"),
                since: 3,
            },
        };
        assert_eq!(f.circuit.evaluate(&pid("Q#1"), &w, 4, &open, 1), None);
    }

    #[test]
    fn challenge_rejects_a_malformed_replacement_serial() {
        let mut f = fixture();
        let st = BanknoteState {
            serial: SerialSlot::Serial(f.serial),
            claim: Claim::ActiveClaim {
                claimant: pid("A#50"),
                since: 3,
            },
        };
        let stunted = SerialNumber::from_bits(f.ctx.random_bits(8));
        let w = Witness::Challenge(f.cert, stunted);
        assert_eq!(f.circuit.evaluate(&pid("Q#1"), &w, 4, &st, 0), None);
    }

    #[test]
    fn settlement_waits_out_the_full_window() {
        let mut f = fixture();
        let t0 = 3;
        let st = BanknoteState {
            serial: SerialSlot::Serial(f.serial),
            claim: Claim::ActiveClaim {
                claimant: pid("A#50"),
                since: t0,
            },
        };
        let fresh = SerialNumber::from_bits(f.ctx.random_bits(16));
        let w = Witness::Unchallenged(fresh.clone());
        // The window is strict: t - t0 must exceed t_tr.
        assert_eq!(
            f.circuit.evaluate(&pid("A#50"), &w, t0 + T_TR, &st, 0),
            None
        );
        let (st2, payout) = f
            .circuit
            .evaluate(&pid("A#50"), &w, t0 + T_TR + 1, &st, 0)
            .unwrap();
        assert_eq!(payout, Payout::Coins(D0));
        assert_eq!(st2, BanknoteState::fresh(fresh));
    }

    #[test]
    fn settlement_is_claimant_only() {
        let mut f = fixture();
        let st = BanknoteState {
            serial: SerialSlot::Serial(f.serial),
            claim: Claim::ActiveClaim {
                claimant: pid("A#50"),
                since: 0,
            },
        };
        let w = Witness::Unchallenged(SerialNumber::from_bits(f.ctx.random_bits(16)));
        assert_eq!(f.circuit.evaluate(&pid("B#0"), &w, T_TR + 5, &st, 0), None);
        assert!(f
            .circuit
            .evaluate(&pid("A#50"), &w, T_TR + 5, &st, 0)
            .is_some());
    }

    #[test]
    fn a_terminated_contract_accepts_nothing() {
        let mut f = fixture();
        let st = BanknoteState::terminated();
        let fresh = SerialNumber::from_bits(f.ctx.random_bits(16));
        let witnesses = [
            Witness::Lost,
            Witness::Recover(f.cert.clone()),
            Witness::Challenge(f.cert.clone(), fresh.clone()),
            Witness::Unchallenged(fresh),
        ];
        for w in &witnesses {
            for d in [0, D0] {
                for t in [0, 1000] {
                    assert_eq!(f.circuit.evaluate(&pid("A#50"), w, t, &st, d), None);
                }
            }
        }
    }

    #[test]
    fn claim_cycles_return_to_no_claim_and_pay_the_stake() {
        let mut f = fixture();
        let a = pid("A#50");
        let st0 = BanknoteState::fresh(f.serial.clone());
        let (st1, _) = f.circuit.evaluate(&a, &Witness::Lost, 5, &st0, D0).unwrap();

        let s_chal = SerialNumber::from_bits(f.ctx.random_bits(16));
        let (st2, p2) = f
            .circuit
            .evaluate(
                &pid("Q#1"),
                &Witness::Challenge(f.cert.clone(), s_chal.clone()),
                6,
                &st1,
                0,
            )
            .unwrap();
        assert_eq!((st2.claim, p2), (Claim::NoActiveClaim, Payout::Coins(D0)));
        assert_eq!(st2.serial, SerialSlot::Serial(s_chal));

        let s_settle = SerialNumber::from_bits(f.ctx.random_bits(16));
        let (st3, p3) = f
            .circuit
            .evaluate(
                &a,
                &Witness::Unchallenged(s_settle.clone()),
                5 + T_TR + 1,
                &st1,
                0,
            )
            .unwrap();
        assert_eq!((st3.claim, p3), (Claim::NoActiveClaim, Payout::Coins(D0)));
        assert_eq!(st3.serial, SerialSlot::Serial(s_settle));
    }

    #[test]
    fn at_most_one_branch_matches_anywhere() {
        // Independent per-branch predicates, evaluated over a dense grid of
        // small toy-backend inputs; the circuit must agree with their unique
        // match everywhere.
        let mut ctx = LightningContext::toy_setup(3, 2, 1, 7).unwrap();
        let spec = ctx.hash_spec();
        let circuit = BanknoteCircuit::new(spec.clone(), 2, 4);
        let a = pid("A#9");
        let b = pid("B#9");
        let t0 = 10u64;

        let serial = {
            let bolt = ctx.gen(crate::lightning::Holder::Adversary);
            ctx.verify(bolt).unwrap()
        };
        let states = [
            BanknoteState::fresh(serial.clone()),
            BanknoteState {
                serial: SerialSlot::Serial(serial.clone()),
                claim: Claim::ActiveClaim {
                    claimant: a.clone(),
                    since: t0,
                },
            },
            BanknoteState::terminated(),
        ];

        let mut witnesses = vec![Witness::Lost];
        for x in 0..8u64 {
            let cert = Certificate::from_bits(BitString::from_value(x, 3).unwrap());
            witnesses.push(Witness::Recover(cert.clone()));
            for s2 in 0..4u64 {
                let s2 = SerialNumber::from_bits(BitString::from_value(s2, 2).unwrap());
                witnesses.push(Witness::Challenge(cert.clone(), s2));
            }
        }
        for s2 in 0..4u64 {
            witnesses.push(Witness::Unchallenged(SerialNumber::from_bits(
                BitString::from_value(s2, 2).unwrap(),
            )));
        }

        let mut accepts = 0usize;
        let mut total = 0usize;
        for st in &states {
            for w in &witnesses {
                for pid in [&a, &b] {
                    for d in [0u64, 2, 3] {
                        for t in [t0, t0 + 4, t0 + 5] {
                            total += 1;
                            let live = st.serial.serial();
                            let b1 = live.is_some()
                                && st.claim == Claim::NoActiveClaim
                                && *w == Witness::Lost
                                && d == 2;
                            let b2 = matches!(
                                (live, &st.claim, w),
                                (Some(s), Claim::NoActiveClaim, Witness::Recover(x))
                                    if spec.eval(x.bits()).as_ref() == Some(s)
                            ) && d == 0;
                            let b3 = matches!(
                                (live, &st.claim, w),
                                (Some(s), Claim::ActiveClaim { .. }, Witness::Challenge(x, s2))
                                    if spec.eval(x.bits()).as_ref() == Some(s) && s2.len() == 2
                            ) && d == 0;
                            let b4 = matches!(
                                (live, &st.claim, w),
                                (
                                    Some(_),
                                    Claim::ActiveClaim { claimant, since },
                                    Witness::Unchallenged(s2),
                                ) if claimant == pid && t > since + 4 && s2.len() == 2
                            ) && d == 0;
                            let matches = [b1, b2, b3, b4].iter().filter(|&&x| x).count();
                            assert!(matches <= 1, "overlapping branches at {st:?} {w:?} {d} {t}");
                            let out = circuit.evaluate(pid, w, t, st, d);
                            assert_eq!(out.is_some(), matches == 1);
                            accepts += out.is_some() as usize;
                        }
                    }
                }
            }
        }
        assert!(total > 2000);
        assert!(accepts > 0);
    }

    #[test]
    fn wire_encoding_round_trips() {
        let mut f = fixture();
        let spec = f.ctx.hash_spec();
        let fresh = SerialNumber::from_bits(f.ctx.random_bits(16));
        let cases = [
            Witness::Lost,
            Witness::Recover(f.cert.clone()),
            Witness::Challenge(f.cert.clone(), fresh.clone()),
            Witness::Unchallenged(fresh),
        ];
        for w in &cases {
            assert_eq!(Witness::parse(&w.encode(), &spec).unwrap(), *w);
        }
    }

    #[test]
    fn wire_parsing_rejects_malformed_lines() {
        let f = fixture();
        let spec = f.ctx.hash_spec();
        let cert_hex = f.cert.to_hex();
        assert!(matches!(
            Witness::parse("STEAL", &spec),
            Err(WitnessParseError::BadTag(t)) if t == "STEAL"
        ));
        assert!(matches!(
            Witness::parse("", &spec),
            Err(WitnessParseError::BadTag(_))
        ));
        assert!(matches!(
            Witness::parse("LOST extra", &spec),
            Err(WitnessParseError::BadArity {
                expected: 0,
                got: 1
            })
        ));
        assert!(matches!(
            Witness::parse("RECOVER", &spec),
            Err(WitnessParseError::BadArity {
                expected: 1,
                got: 0
            })
        ));
        assert!(matches!(
            Witness::parse("RECOVER zz", &spec),
            Err(WitnessParseError::BadHex(_))
        ));
        // 16-bit field where 32 bits are required.
        assert!(matches!(
            Witness::parse("RECOVER beef", &spec),
            Err(WitnessParseError::BadLength { expected: 32, .. })
        ));
        assert!(matches!(
            Witness::parse(&format!("CHALLENGE {cert_hex}"), &spec),
            Err(WitnessParseError::BadArity {
                expected: 2,
                got: 1
            })
        ));
    }

    #[test]
    fn banknote_params_shape_check() {
        let f = fixture();
        let a = pid("A#50");
        let good = ContractParams {
            members: BTreeSet::from([a.clone()]),
            deposits: BTreeMap::from([(a.clone(), 30)]),
            circuit: f.circuit.clone(),
            initial_state: BanknoteState::fresh(f.serial.clone()),
        };
        assert!(is_banknote_params(&good, &f.circuit));

        let mut two_members = good.clone();
        two_members.members.insert(pid("B#0"));
        two_members.deposits.insert(pid("B#0"), 30);
        assert!(!is_banknote_params(&two_members, &f.circuit));

        let mut zero_face = good.clone();
        zero_face.deposits.insert(a.clone(), 0);
        assert!(!is_banknote_params(&zero_face, &f.circuit));

        let mut other_depositor = good.clone();
        other_depositor.deposits = BTreeMap::from([(pid("B#0"), 30)]);
        assert!(!is_banknote_params(&other_depositor, &f.circuit));

        let mut swapped_circuit = good.clone();
        swapped_circuit.circuit = BanknoteCircuit::new(f.ctx.hash_spec(), D0 + 1, T_TR);
        assert!(!is_banknote_params(&swapped_circuit, &f.circuit));

        let mut claim_open = good.clone();
        claim_open.initial_state.claim = Claim::ActiveClaim {
            claimant: a.clone(),
            since: 0,
        };
        assert!(!is_banknote_params(&claim_open, &f.circuit));

        let mut dead = good;
        dead.initial_state = BanknoteState::terminated();
        assert!(!is_banknote_params(&dead, &f.circuit));
    }
}
