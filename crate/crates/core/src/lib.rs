//! Simulator for a payment system built from unclonable quantum banknotes and
//! a ledger with stateful smart contracts.
//!
//! A banknote is a quantum "bolt" whose serial number is publicly verifiable
//! but which nobody can duplicate, paired with a ledger contract that escrows
//! the note's face value and adjudicates lost-note claims. The crate provides:
//!
//! * [`lightning`] - bolt generation, verification, destructive certificate
//!   extraction, and custody tracking, with two backends: an idealized
//!   registry (exact no-cloning) and a small statevector simulation
//!   ([`lightning::toy`]) where the security games can actually be played.
//! * [`ledger`] - an append-only ledger of parties, payments, and
//!   contracts driven by an arbitration circuit.
//! * [`contract`] - the banknote circuit: lost-note claims, challenges,
//!   claim finalization, and coin recovery.
//! * [`wallet`] - the honest protocols (mint, pay, receive, claim,
//!   finalize, monitor, redeem).
//! * [`harness`] - scripted adversarial scenarios, the security
//!   bookkeeping that tracks adversary net gain, built-in attack
//!   strategies, and a scenario fuzzer with shrinking.

pub mod bits;
pub mod contract;
pub mod harness;
pub mod ledger;
pub mod lightning;
pub mod party;
pub mod wallet;

pub use bits::BitString;
pub use contract::{BanknoteCircuit, BanknoteState, Claim, Payout, SerialSlot, Witness};
pub use harness::{
    run_scenario, run_scenario_summarized, Constants, Event, Scenario, SecurityLedger, Summary,
    Trace,
};
pub use ledger::{ContractParams, Ledger, Phase};
pub use lightning::{
    BackendKind, BoltId, Certificate, HashSpec, Holder, LightningContext, SerialNumber,
};
pub use party::PartyId;
pub use wallet::Wallet;
