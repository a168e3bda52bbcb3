//! Honest wallet protocols.
//!
//! A wallet tracks the banknotes a party believes it owns: for each note the
//! bolt in custody, the serial it last saw, the backing contract, and the
//! face value. `banknote_value` is the running sum of those face values; it
//! moves down on send (whether or not the payee accepts) and up on accepted
//! receive, and the invariant `banknote_value == sum of holdings` is
//! asserted after every operation.
//!
//! The protocols are deliberately defensive. Before anything destructive
//! (certificate extraction) or value-bearing (counting a received note) the
//! wallet re-checks the contract on the ledger, because a note is only worth
//! what its contract will still pay for it.

use crate::contract::{
    is_banknote_params, BanknoteCircuit, BanknoteState, Claim, SerialSlot, Witness,
};
use crate::ledger::{ContractParams, InitOutcome, Ledger, LedgerError, Phase};
use crate::lightning::{BoltId, Holder, LightningContext, LightningError, SerialNumber};
use crate::party::PartyId;
use std::fmt;

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Holding {
    pub bolt: BoltId,
    pub serial: SerialNumber,
    pub ssid: u64,
    pub face_value: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct PendingClaim {
    pub ssid: u64,
    pub filed_at: u64,
}

/// Classical half of a payment: what the payer tells the payee, alongside
/// the bolt transfer itself.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PaymentMsg {
    pub bolt: BoltId,
    pub ssid: u64,
    pub serial: SerialNumber,
    pub face_value: u64,
    pub payer: PartyId,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum WalletError {
    #[error("face value must be positive")]
    ZeroFaceValue,
    #[error("no holding at index {0}")]
    NoSuchHolding(usize),
    #[error("no holding backed by contract {0}")]
    NoHoldingForContract(u64),
    #[error("contract funding failed; the minted note was discarded")]
    MintStalled,
    #[error("contract {0} would not accept this note right now")]
    NotPayable(u64),
    #[error("contract {0} cannot pay out right now")]
    NotRedeemable(u64),
    #[error("no pending claim for contract {0}")]
    NoPendingClaim(u64),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Lightning(#[from] LightningError),
}

/// Why a payee turned a payment down. The bolt stays wherever custody put
/// it; the payee just refuses to count it.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum AbortReason {
    ZeroFace,
    NotInCustody,
    AlreadyHeld,
    UnknownContract,
    ContractNotActive,
    NotABanknote,
    ClaimOpen,
    SerialMismatch,
    WrongEscrow,
    VerifyFailed,
}

impl fmt::Display for AbortReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AbortReason::ZeroFace => "face value is zero",
            AbortReason::NotInCustody => "bolt never arrived",
            AbortReason::AlreadyHeld => "note already counted",
            AbortReason::UnknownContract => "no such contract",
            AbortReason::ContractNotActive => "contract not active",
            AbortReason::NotABanknote => "contract is not a banknote",
            AbortReason::ClaimOpen => "a lost-note claim is open",
            AbortReason::SerialMismatch => "contract serial differs",
            AbortReason::WrongEscrow => "escrow does not match the face value",
            AbortReason::VerifyFailed => "bolt failed verification",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ReceiveOutcome {
    Accepted,
    Aborted(AbortReason),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum FinalizeOutcome {
    /// Claim settled: the stake came back and the wallet holds a
    /// re-serialed note.
    Settled { paid: u64 },
    /// Challenge window still open; try again later.
    NotYet,
    /// Somebody else resolved the claim first; the pending entry is dropped.
    Superseded,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum MonitorReport {
    /// Foreign claim challenged and won: stake collected, note re-serialed.
    Challenged { ssid: u64, paid: u64 },
    /// The holding is no longer worth anything; it was dropped.
    HoldingDead { ssid: u64 },
}

pub struct Wallet {
    pid: PartyId,
    holdings: Vec<Holding>,
    banknote_value: u64,
    pending_claims: Vec<PendingClaim>,
}

impl Wallet {
    pub fn new(pid: PartyId) -> Self {
        Wallet {
            pid,
            holdings: Vec::new(),
            banknote_value: 0,
            pending_claims: Vec::new(),
        }
    }

    pub fn pid(&self) -> &PartyId {
        &self.pid
    }

    fn holder(&self) -> Holder {
        Holder::Party(self.pid.clone())
    }

    pub fn holdings(&self) -> &[Holding] {
        &self.holdings
    }

    pub fn banknote_value(&self) -> u64 {
        self.banknote_value
    }

    pub fn pending_claims(&self) -> &[PendingClaim] {
        &self.pending_claims
    }

    pub fn holding_for_contract(&self, ssid: u64) -> Option<&Holding> {
        self.holdings.iter().find(|h| h.ssid == ssid)
    }

    pub fn value_invariant_holds(&self) -> bool {
        self.banknote_value == self.holdings.iter().map(|h| h.face_value).sum::<u64>()
    }

    fn check_value(&self) {
        debug_assert!(
            self.value_invariant_holds(),
            "banknote_value {} out of sync for {}",
            self.banknote_value,
            self.pid
        );
    }

    /// Mint a new note of face value `face`: issue a bolt, escrow the face
    /// value under the bolt's serial, and count the note. If funding fails
    /// the bolt is destroyed so no orphaned note survives.
    pub fn mint(
        &mut self,
        ctx: &mut LightningContext,
        ledger: &mut Ledger,
        circuit: &BanknoteCircuit,
        face: u64,
    ) -> Result<u64, WalletError> {
        if face == 0 {
            return Err(WalletError::ZeroFaceValue);
        }
        let me = self.holder();
        let bolt = ctx.gen(me.clone());
        let serial = ctx.verify(bolt).expect("fresh bolt must verify");
        let params = ContractParams::banknote(
            self.pid.clone(),
            face,
            circuit.clone(),
            BanknoteState::fresh(serial.clone()),
        );
        let funded = ledger
            .initiate_smart_contract(&self.pid, params)
            .and_then(|ssid| Ok((ssid, ledger.initialize_with_coins(ssid, &self.pid)?)));
        match funded {
            Ok((ssid, InitOutcome::Activated)) => {
                self.holdings.push(Holding {
                    bolt,
                    serial,
                    ssid,
                    face_value: face,
                });
                self.banknote_value += face;
                self.check_value();
                Ok(ssid)
            }
            Ok((_, InitOutcome::Stalled | InitOutcome::Recorded)) => {
                let _ = ctx.extract_certificate(bolt, &me);
                Err(WalletError::MintStalled)
            }
            Err(e) => {
                let _ = ctx.extract_certificate(bolt, &me);
                Err(e.into())
            }
        }
    }

    /// Hand the note at `index` to someone else. The payer checks that the
    /// contract would satisfy an honest payee before letting go, then moves
    /// custody and stops counting the value whether or not the recipient
    /// ever accepts.
    pub fn send_payment(
        &mut self,
        ctx: &mut LightningContext,
        ledger: &Ledger,
        index: usize,
        to: Holder,
    ) -> Result<PaymentMsg, WalletError> {
        let holding = self
            .holdings
            .get(index)
            .ok_or(WalletError::NoSuchHolding(index))?;
        let view = ledger
            .retrieve_contract(holding.ssid)
            .ok_or(WalletError::NotPayable(holding.ssid))?;
        let shape_ok = view.phase == Phase::Active
            && view.state.claim == Claim::NoActiveClaim
            && view.state.serial == SerialSlot::Serial(holding.serial.clone())
            && view.coins == holding.face_value;
        if !shape_ok {
            return Err(WalletError::NotPayable(holding.ssid));
        }
        ctx.transfer(holding.bolt, &self.holder(), to)?;
        let holding = self.holdings.remove(index);
        self.banknote_value -= holding.face_value;
        self.check_value();
        Ok(PaymentMsg {
            bolt: holding.bolt,
            ssid: holding.ssid,
            serial: holding.serial,
            face_value: holding.face_value,
            payer: self.pid.clone(),
        })
    }

    /// Decide whether to accept an incoming payment. Every check failure is
    /// an abort: the payee keeps whatever custody it was given but counts
    /// nothing.
    pub fn receive_payment(
        &mut self,
        ctx: &mut LightningContext,
        ledger: &Ledger,
        circuit: &BanknoteCircuit,
        msg: &PaymentMsg,
    ) -> ReceiveOutcome {
        use AbortReason::*;
        let abort = |r: AbortReason| ReceiveOutcome::Aborted(r);
        if msg.face_value == 0 {
            return abort(ZeroFace);
        }
        if ctx.custodian(msg.bolt) != Some(&self.holder()) {
            return abort(NotInCustody);
        }
        if self
            .holdings
            .iter()
            .any(|h| h.bolt == msg.bolt || h.ssid == msg.ssid)
        {
            return abort(AlreadyHeld);
        }
        let Some(view) = ledger.retrieve_contract(msg.ssid) else {
            return abort(UnknownContract);
        };
        if view.phase != Phase::Active {
            return abort(ContractNotActive);
        }
        if !is_banknote_params(view.params, circuit) {
            return abort(NotABanknote);
        }
        if view.state.claim != Claim::NoActiveClaim {
            return abort(ClaimOpen);
        }
        if view.state.serial != SerialSlot::Serial(msg.serial.clone()) {
            return abort(SerialMismatch);
        }
        if view.coins != msg.face_value {
            return abort(WrongEscrow);
        }
        if ctx.verify(msg.bolt) != Some(msg.serial.clone()) {
            return abort(VerifyFailed);
        }
        self.holdings.push(Holding {
            bolt: msg.bolt,
            serial: msg.serial.clone(),
            ssid: msg.ssid,
            face_value: msg.face_value,
        });
        self.banknote_value += msg.face_value;
        self.check_value();
        ReceiveOutcome::Accepted
    }

    /// File a lost-note claim for a note this wallet owns, staking d0.
    pub fn claim_lost(
        &mut self,
        ledger: &mut Ledger,
        circuit: &BanknoteCircuit,
        ssid: u64,
    ) -> Result<(), WalletError> {
        if self.holding_for_contract(ssid).is_none() {
            return Err(WalletError::NoHoldingForContract(ssid));
        }
        ledger.trigger(ssid, &self.pid, &Witness::Lost, circuit.d0())?;
        self.pending_claims.push(PendingClaim {
            ssid,
            filed_at: ledger.time(),
        });
        self.check_value();
        Ok(())
    }

    /// Try to settle a pending claim. Once the challenge window has fully
    /// passed, mint a replacement bolt, swap its serial into the contract,
    /// and take the stake back.
    pub fn finalize_claim(
        &mut self,
        ctx: &mut LightningContext,
        ledger: &mut Ledger,
        circuit: &BanknoteCircuit,
        ssid: u64,
    ) -> Result<FinalizeOutcome, WalletError> {
        let pos = self
            .pending_claims
            .iter()
            .position(|c| c.ssid == ssid)
            .ok_or(WalletError::NoPendingClaim(ssid))?;
        let ours = ledger
            .retrieve_contract(ssid)
            .and_then(|view| match &view.state.claim {
                Claim::ActiveClaim { claimant, since }
                    if *claimant == self.pid && view.phase == Phase::Active =>
                {
                    Some((*since, view.coins))
                }
                _ => None,
            });
        let Some((since, escrow)) = ours else {
            self.pending_claims.remove(pos);
            return Ok(FinalizeOutcome::Superseded);
        };
        if ledger.time() <= since + circuit.t_tr() {
            return Ok(FinalizeOutcome::NotYet);
        }
        let me = self.holder();
        let bolt = ctx.gen(me.clone());
        let serial = ctx.verify(bolt).expect("fresh bolt must verify");
        let report =
            match ledger.trigger(ssid, &self.pid, &Witness::Unchallenged(serial.clone()), 0) {
                Ok(r) => r,
                Err(e) => {
                    let _ = ctx.extract_certificate(bolt, &me);
                    return Err(e.into());
                }
            };
        self.pending_claims.remove(pos);
        let face = escrow - report.paid;
        match self.holdings.iter_mut().find(|h| h.ssid == ssid) {
            Some(h) => {
                // The superseded bolt stays in custody but is no longer a
                // banknote; only the fresh one matches the contract.
                h.bolt = bolt;
                h.serial = serial;
            }
            None => {
                self.holdings.push(Holding {
                    bolt,
                    serial,
                    ssid,
                    face_value: face,
                });
                self.banknote_value += face;
            }
        }
        self.check_value();
        Ok(FinalizeOutcome::Settled { paid: report.paid })
    }

    /// One monitoring pass over all holdings: challenge every foreign
    /// lost-note claim, using the held bolt's certificate, and replace the
    /// spent bolt with a re-serialed one. Holdings whose contracts died are
    /// dropped.
    pub fn monitor_step(
        &mut self,
        ctx: &mut LightningContext,
        ledger: &mut Ledger,
    ) -> Vec<MonitorReport> {
        let mut reports = Vec::new();
        let mut index = 0;
        while index < self.holdings.len() {
            let holding = self.holdings[index].clone();
            let action = match ledger.retrieve_contract(holding.ssid) {
                None => Some(None),
                Some(view) => match (&view.phase, &view.state.claim) {
                    (Phase::Active, Claim::ActiveClaim { claimant, .. })
                        if *claimant != self.pid =>
                    {
                        if view.state.serial == SerialSlot::Serial(holding.serial.clone()) {
                            Some(Some(()))
                        } else {
                            // Our bolt can no longer win this contract.
                            Some(None)
                        }
                    }
                    (Phase::Active, _) => None,
                    _ => Some(None),
                },
            };
            match action {
                None => index += 1,
                Some(None) => {
                    self.holdings.remove(index);
                    self.banknote_value -= holding.face_value;
                    reports.push(MonitorReport::HoldingDead { ssid: holding.ssid });
                }
                Some(Some(())) => {
                    let me = self.holder();
                    let cert = ctx
                        .extract_certificate(holding.bolt, &me)
                        .expect("held bolt must be extractable");
                    let fresh = ctx.gen(me.clone());
                    let serial = ctx.verify(fresh).expect("fresh bolt must verify");
                    match ledger.trigger(
                        holding.ssid,
                        &self.pid,
                        &Witness::Challenge(cert, serial.clone()),
                        0,
                    ) {
                        Ok(report) => {
                            let h = &mut self.holdings[index];
                            h.bolt = fresh;
                            h.serial = serial;
                            reports.push(MonitorReport::Challenged {
                                ssid: holding.ssid,
                                paid: report.paid,
                            });
                            index += 1;
                        }
                        Err(_) => {
                            let _ = ctx.extract_certificate(fresh, &me);
                            self.holdings.remove(index);
                            self.banknote_value -= holding.face_value;
                            reports.push(MonitorReport::HoldingDead { ssid: holding.ssid });
                        }
                    }
                }
            }
        }
        self.check_value();
        reports
    }

    /// Trade the note at `index` back into coins: destroy the bolt for its
    /// certificate and recover the full escrow. The contract is checked
    /// first so the bolt is never wasted on a contract that will refuse.
    pub fn redeem(
        &mut self,
        ctx: &mut LightningContext,
        ledger: &mut Ledger,
        index: usize,
    ) -> Result<u64, WalletError> {
        let holding = self
            .holdings
            .get(index)
            .ok_or(WalletError::NoSuchHolding(index))?;
        let redeemable = ledger.retrieve_contract(holding.ssid).is_some_and(|view| {
            view.phase == Phase::Active
                && view.state.claim == Claim::NoActiveClaim
                && view.state.serial == SerialSlot::Serial(holding.serial.clone())
        });
        if !redeemable {
            return Err(WalletError::NotRedeemable(holding.ssid));
        }
        let cert = ctx.extract_certificate(holding.bolt, &self.holder())?;
        let report = ledger.trigger(holding.ssid, &self.pid, &Witness::Recover(cert), 0)?;
        let holding = self.holdings.remove(index);
        self.banknote_value -= holding.face_value;
        self.check_value();
        Ok(report.paid)
    }

    /// Corruption hand-off: forget all holdings and pending value. Custody
    /// transfer of the bolts themselves is the caller's job.
    pub fn strip_for_corruption(&mut self) -> Vec<Holding> {
        self.banknote_value = 0;
        std::mem::take(&mut self.holdings)
    }

    /// Return to honest operation after corruption: nothing held, nothing
    /// pending, zero counted value.
    pub fn reset_after_corruption(&mut self) {
        self.holdings.clear();
        self.pending_claims.clear();
        self.banknote_value = 0;
    }
}
