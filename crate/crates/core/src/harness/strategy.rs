//! Adversary strategy library.
//!
//! Each strategy is a canned attack executed atomically within one scenario
//! event. Strategies act through corrupted parties: ledger calls go through
//! a corrupted front, bolts come from the adversary's pool. A strategy that
//! cannot even start (no corrupted party, missing pool note, dead target
//! contract) fizzles with a note in the trace instead of failing the run.

use super::{PoolNote, RunError, World};
use crate::contract::Witness;
use crate::lightning::{Certificate, Holder};
use crate::party::PartyId;
use crate::wallet::ReceiveOutcome;

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Strategy {
    /// Spend one pooled note to two payees in sequence. The second attempt
    /// must die on custody: the bolt is gone.
    DoubleSpend {
        payee1: PartyId,
        payee2: PartyId,
        note: usize,
    },
    /// Submit a fabricated recovery certificate for a contract the
    /// adversary holds no bolt for.
    ForgeCertificate { via: PartyId, ssid: u64 },
    /// File a lost-note claim against someone else's note, wait out the
    /// challenge window, and try to collect. A monitored holder challenges
    /// in time, so the stake is forfeit.
    MaliciousLostClaim { via: PartyId, ssid: u64 },
    /// File a lost-note claim against a note the adversary itself holds,
    /// collect after the window, spend the re-serialed note, then probe
    /// whether anyone still accepts the stale bolt.
    ClaimOwnNote {
        via: PartyId,
        payee: PartyId,
        note: usize,
    },
    /// Spend a pooled note, then replay the identical payment message at a
    /// second payee.
    ReplayPayment {
        payee1: PartyId,
        payee2: PartyId,
        note: usize,
    },
}

impl Strategy {
    pub fn script_line(&self) -> String {
        match self {
            Strategy::DoubleSpend {
                payee1,
                payee2,
                note,
            } => {
                format!(
                    "ADV DOUBLE_SPEND {} {} {note}",
                    payee1.name(),
                    payee2.name()
                )
            }
            Strategy::ForgeCertificate { via, ssid } => {
                format!("ADV FORGE_CERT {} {ssid}", via.name())
            }
            Strategy::MaliciousLostClaim { via, ssid } => {
                format!("ADV MALICIOUS_CLAIM {} {ssid}", via.name())
            }
            Strategy::ClaimOwnNote { via, payee, note } => {
                format!("ADV CLAIM_OWN {} {} {note}", via.name(), payee.name())
            }
            Strategy::ReplayPayment {
                payee1,
                payee2,
                note,
            } => {
                format!("ADV REPLAY {} {} {note}", payee1.name(), payee2.name())
            }
        }
    }

    fn parties(&self) -> Vec<&PartyId> {
        match self {
            Strategy::DoubleSpend { payee1, payee2, .. }
            | Strategy::ReplayPayment { payee1, payee2, .. } => vec![payee1, payee2],
            Strategy::ForgeCertificate { via, .. } | Strategy::MaliciousLostClaim { via, .. } => {
                vec![via]
            }
            Strategy::ClaimOwnNote { via, payee, .. } => vec![via, payee],
        }
    }
}

pub(crate) fn run(world: &mut World, strategy: &Strategy) -> Result<String, RunError> {
    for pid in strategy.parties() {
        if !world.parties.contains_key(pid) {
            return Err(RunError::UnknownParty(pid.clone()));
        }
    }
    if !world.any_corrupted() {
        return Ok("fizzled: no corrupted party".to_string());
    }
    Ok(match strategy {
        Strategy::DoubleSpend {
            payee1,
            payee2,
            note,
        } => double_spend(world, payee1, payee2, *note),
        Strategy::ForgeCertificate { via, ssid } => forge_certificate(world, via, *ssid),
        Strategy::MaliciousLostClaim { via, ssid } => malicious_lost_claim(world, via, *ssid),
        Strategy::ClaimOwnNote { via, payee, note } => claim_own_note(world, via, payee, *note),
        Strategy::ReplayPayment {
            payee1,
            payee2,
            note,
        } => replay_payment(world, payee1, payee2, *note),
    })
}

fn first_corrupted(world: &World) -> PartyId {
    world
        .parties
        .iter()
        .find(|(_, slot)| slot.corrupted)
        .map(|(pid, _)| pid.clone())
        .expect("caller checked any_corrupted")
}

fn verdict(outcome: &ReceiveOutcome) -> String {
    match outcome {
        ReceiveOutcome::Accepted => "accepted".to_string(),
        ReceiveOutcome::Aborted(reason) => format!("aborted ({reason})"),
    }
}

fn take_pool_note(world: &mut World, index: usize) -> Option<PoolNote> {
    if index < world.pool.len() {
        Some(world.pool.remove(index))
    } else {
        None
    }
}

fn double_spend(world: &mut World, payee1: &PartyId, payee2: &PartyId, note: usize) -> String {
    if world.is_corrupted(payee1) || world.is_corrupted(payee2) {
        return "fizzled: payee is corrupted".to_string();
    }
    let front = first_corrupted(world);
    let Some(note) = take_pool_note(world, note) else {
        return "fizzled: no pooled note at that index".to_string();
    };
    let first = world.offer_note_to_honest(&front, payee1, &note);
    if first == ReceiveOutcome::Accepted {
        world.security.on_spent_to_honest(note.face_value);
    }
    world.sample();
    let second = world.offer_note_to_honest(&front, payee2, &note);
    if second == ReceiveOutcome::Accepted {
        world.security.on_spent_to_honest(note.face_value);
    }
    world.sample();
    format!("first {}, second {}", verdict(&first), verdict(&second))
}

fn forge_certificate(world: &mut World, via: &PartyId, ssid: u64) -> String {
    if !world.is_corrupted(via) {
        return "fizzled: front party is not corrupted".to_string();
    }
    let fake = Certificate::from_bits(world.ctx.random_bits(world.ctx.cert_len()));
    match world.ledger.trigger(ssid, via, &Witness::Recover(fake), 0) {
        Ok(report) => format!("unexpectedly accepted paid={}", report.paid),
        Err(e) => format!("rejected: {e}"),
    }
}

fn malicious_lost_claim(world: &mut World, via: &PartyId, ssid: u64) -> String {
    if !world.is_corrupted(via) {
        return "fizzled: front party is not corrupted".to_string();
    }
    let d0 = world.circuit.d0();
    if let Err(e) = world.ledger.trigger(ssid, via, &Witness::Lost, d0) {
        return format!("claim rejected: {e}");
    }
    world.sample();
    world.tick(world.constants.t_tr + 1);
    let fresh = world.ctx.gen(Holder::Adversary);
    let serial = world.ctx.verify(fresh).expect("fresh bolt verifies");
    match world
        .ledger
        .trigger(ssid, via, &Witness::Unchallenged(serial.clone()), 0)
    {
        Ok(report) => {
            // Nobody challenged: the adversary now holds the live note.
            let face = world
                .ledger
                .retrieve_contract(ssid)
                .map(|view| view.coins)
                .unwrap_or(0);
            world.pool.push(PoolNote {
                bolt: fresh,
                serial,
                ssid,
                face_value: face,
            });
            format!("claim settled unchallenged paid={}", report.paid)
        }
        Err(e) => format!("finalize rejected: {e}"),
    }
}

fn claim_own_note(world: &mut World, via: &PartyId, payee: &PartyId, note: usize) -> String {
    if !world.is_corrupted(via) {
        return "fizzled: front party is not corrupted".to_string();
    }
    if world.is_corrupted(payee) {
        return "fizzled: payee is corrupted".to_string();
    }
    let Some(stale) = world.pool.get(note).cloned() else {
        return "fizzled: no pooled note at that index".to_string();
    };
    let d0 = world.circuit.d0();
    if let Err(e) = world.ledger.trigger(stale.ssid, via, &Witness::Lost, d0) {
        return format!("claim rejected: {e}");
    }
    world.sample();
    world.tick(world.constants.t_tr + 1);
    let fresh = world.ctx.gen(Holder::Adversary);
    let serial = world.ctx.verify(fresh).expect("fresh bolt verifies");
    if let Err(e) = world
        .ledger
        .trigger(stale.ssid, via, &Witness::Unchallenged(serial.clone()), 0)
    {
        return format!("finalize rejected: {e}");
    }
    world.sample();
    let face = world
        .ledger
        .retrieve_contract(stale.ssid)
        .map(|view| view.coins)
        .unwrap_or(0);
    let live = PoolNote {
        bolt: fresh,
        serial,
        ssid: stale.ssid,
        face_value: face,
    };
    world.pool.remove(note);
    let spend = world.offer_note_to_honest(via, payee, &live);
    if spend == ReceiveOutcome::Accepted {
        world.security.on_spent_to_honest(live.face_value);
    }
    world.sample();
    // The original bolt no longer matches the contract serial. Anyone who
    // accepts it has a broken wallet, which the bookkeeping would expose.
    let probe = world.offer_note_to_honest(via, payee, &stale);
    if probe == ReceiveOutcome::Accepted {
        world.security.on_spent_to_honest(stale.face_value);
    }
    world.sample();
    format!(
        "claim settled, spend {}, stale probe {}",
        verdict(&spend),
        verdict(&probe)
    )
}

fn replay_payment(world: &mut World, payee1: &PartyId, payee2: &PartyId, note: usize) -> String {
    if world.is_corrupted(payee1) || world.is_corrupted(payee2) {
        return "fizzled: payee is corrupted".to_string();
    }
    let front = first_corrupted(world);
    let Some(note) = take_pool_note(world, note) else {
        return "fizzled: no pooled note at that index".to_string();
    };
    let first = world.offer_note_to_honest(&front, payee1, &note);
    if first == ReceiveOutcome::Accepted {
        world.security.on_spent_to_honest(note.face_value);
    }
    world.sample();
    let replay = world.offer_note_to_honest(&front, payee2, &note);
    if replay == ReceiveOutcome::Accepted {
        world.security.on_spent_to_honest(note.face_value);
    }
    world.sample();
    format!("first {}, replay {}", verdict(&first), verdict(&replay))
}
