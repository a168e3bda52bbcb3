//! Append-only coin ledger with stateful contracts.
//!
//! The ledger is a single serialized event processor. Every handler either
//! rejects, leaving the state bit-identical, or commits and appends one line
//! to the trace journal. Contracts are escrow accounts driven by the
//! banknote circuit: coins enter on initialization and trigger deposits,
//! and leave only through circuit-approved payouts.
//!
//! Conservation is the load-bearing invariant: the sum of party balances
//! and contract balances equals the sum of registered endowments after
//! every handler. The mutating handlers assert it in debug builds; the
//! harness asserts it after every scenario event.

use crate::contract::{BanknoteCircuit, BanknoteState, Payout, Witness};
use crate::party::PartyId;
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum LedgerError {
    #[error("party is already registered")]
    DuplicateParty,
    #[error("unknown party {0}")]
    UnknownParty(String),
    #[error("unknown contract {0}")]
    UnknownContract(u64),
    #[error("payment amount must be positive")]
    ZeroAmount,
    #[error("insufficient coins")]
    InsufficientCoins,
    #[error("malformed contract parameters: {0}")]
    MalformedParams(&'static str),
    #[error("contract is not in the required phase")]
    WrongPhase,
    #[error("party is not a contract member")]
    NotAMember,
    #[error("member already sent its initialization message")]
    DuplicateInitMessage,
    #[error("circuit rejected the witness")]
    CircuitRejected,
    #[error("time must advance by at least one tick")]
    ZeroTicks,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Phase {
    AwaitingInit,
    Active,
    Terminated,
}

impl Phase {
    fn tag(self) -> u8 {
        match self {
            Phase::AwaitingInit => 0,
            Phase::Active => 1,
            Phase::Terminated => 2,
        }
    }
}

/// Immutable contract blueprint: member set, required deposits, circuit,
/// starting state.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ContractParams {
    pub members: BTreeSet<PartyId>,
    pub deposits: BTreeMap<PartyId, u64>,
    pub circuit: BanknoteCircuit,
    pub initial_state: BanknoteState,
}

impl ContractParams {
    /// Single-owner escrow of `face` coins, the shape every banknote uses.
    pub fn banknote(
        owner: PartyId,
        face: u64,
        circuit: BanknoteCircuit,
        st0: BanknoteState,
    ) -> Self {
        ContractParams {
            members: BTreeSet::from([owner.clone()]),
            deposits: BTreeMap::from([(owner, face)]),
            circuit,
            initial_state: st0,
        }
    }

    pub fn write_canonical(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&(self.members.len() as u64).to_le_bytes());
        for pid in &self.members {
            pid.write_canonical(out);
        }
        out.extend_from_slice(&(self.deposits.len() as u64).to_le_bytes());
        for (pid, d) in &self.deposits {
            pid.write_canonical(out);
            out.extend_from_slice(&d.to_le_bytes());
        }
        self.circuit.write_canonical(out);
        self.initial_state.write_canonical(out);
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TransactionRecord {
    pub tr_id: u64,
    pub payer: PartyId,
    pub payee: PartyId,
    pub amount: u64,
    pub time: u64,
}

#[derive(Clone, Debug)]
struct ContractRecord {
    params: ContractParams,
    state: BanknoteState,
    coins: u64,
    phase: Phase,
    init_received: BTreeSet<PartyId>,
}

/// Read-only snapshot of one contract.
#[derive(Clone, Copy, Debug)]
pub struct ContractView<'a> {
    pub params: &'a ContractParams,
    pub state: &'a BanknoteState,
    pub coins: u64,
    pub phase: Phase,
}

/// What messaging a contract member changed.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum InitOutcome {
    /// Message recorded; other members still pending.
    Recorded,
    /// All members in; deposits collected; contract is live.
    Activated,
    /// All members in but someone cannot cover their deposit. No coins
    /// moved, and with every member's one message spent the contract is
    /// stuck awaiting forever.
    Stalled,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct TriggerReport {
    pub deposit: u64,
    pub paid: u64,
    pub terminated: bool,
}

pub struct Ledger {
    parties: BTreeMap<PartyId, u64>,
    contracts: BTreeMap<u64, ContractRecord>,
    transactions: Vec<TransactionRecord>,
    time: u64,
    trace: Vec<String>,
}

impl Default for Ledger {
    fn default() -> Self {
        Self::new()
    }
}

impl Ledger {
    pub fn new() -> Self {
        Ledger {
            parties: BTreeMap::new(),
            contracts: BTreeMap::new(),
            transactions: Vec::new(),
            time: 0,
            trace: Vec::new(),
        }
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    /// Journal of accepted mutating handlers, one line each, bit-exact for
    /// equal input sequences.
    pub fn trace(&self) -> &[String] {
        &self.trace
    }

    pub fn register(&mut self, pid: PartyId) -> Result<(), LedgerError> {
        if self.parties.contains_key(&pid) {
            return Err(LedgerError::DuplicateParty);
        }
        let line = format!("register pid={pid}");
        self.parties.insert(pid.clone(), pid.endowment());
        self.commit(line);
        Ok(())
    }

    pub fn retrieve_party(&self, pid: &PartyId) -> Option<u64> {
        self.parties.get(pid).copied()
    }

    pub fn registered_parties(&self) -> impl Iterator<Item = (&PartyId, u64)> {
        self.parties.iter().map(|(pid, &coins)| (pid, coins))
    }

    pub fn pay(
        &mut self,
        payer: &PartyId,
        payee: &PartyId,
        amount: u64,
    ) -> Result<u64, LedgerError> {
        let payer_coins = *self
            .parties
            .get(payer)
            .ok_or_else(|| LedgerError::UnknownParty(payer.to_string()))?;
        if !self.parties.contains_key(payee) {
            return Err(LedgerError::UnknownParty(payee.to_string()));
        }
        if amount == 0 {
            return Err(LedgerError::ZeroAmount);
        }
        // Strictly more than the amount: a party cannot empty its balance
        // through a payment.
        if payer_coins <= amount {
            return Err(LedgerError::InsufficientCoins);
        }
        *self.parties.get_mut(payer).unwrap() -= amount;
        *self.parties.get_mut(payee).unwrap() += amount;
        let tr_id = self.transactions.len() as u64 + 1;
        self.transactions.push(TransactionRecord {
            tr_id,
            payer: payer.clone(),
            payee: payee.clone(),
            amount,
            time: self.time,
        });
        self.commit(format!(
            "pay payer={payer} payee={payee} amount={amount} tr={tr_id}"
        ));
        Ok(tr_id)
    }

    pub fn retrieve_transaction(&self, tr_id: u64) -> Option<&TransactionRecord> {
        tr_id
            .checked_sub(1)
            .and_then(|i| self.transactions.get(i as usize))
    }

    pub fn initiate_smart_contract(
        &mut self,
        creator: &PartyId,
        params: ContractParams,
    ) -> Result<u64, LedgerError> {
        if !self.parties.contains_key(creator) {
            return Err(LedgerError::UnknownParty(creator.to_string()));
        }
        if params.members.is_empty() {
            return Err(LedgerError::MalformedParams("empty member set"));
        }
        if params.members.iter().ne(params.deposits.keys()) {
            return Err(LedgerError::MalformedParams(
                "deposit keys differ from members",
            ));
        }
        for pid in &params.members {
            if !self.parties.contains_key(pid) {
                return Err(LedgerError::UnknownParty(pid.to_string()));
            }
        }
        let ssid = self.contracts.len() as u64 + 1;
        let members = params
            .members
            .iter()
            .map(|p| p.to_string())
            .collect::<Vec<_>>()
            .join(",");
        self.contracts.insert(
            ssid,
            ContractRecord {
                state: params.initial_state.clone(),
                params,
                coins: 0,
                phase: Phase::AwaitingInit,
                init_received: BTreeSet::new(),
            },
        );
        self.commit(format!(
            "initiate ssid={ssid} creator={creator} members={members}"
        ));
        Ok(ssid)
    }

    pub fn initialize_with_coins(
        &mut self,
        ssid: u64,
        pid: &PartyId,
    ) -> Result<InitOutcome, LedgerError> {
        let record = self
            .contracts
            .get(&ssid)
            .ok_or(LedgerError::UnknownContract(ssid))?;
        if record.phase != Phase::AwaitingInit {
            return Err(LedgerError::WrongPhase);
        }
        if !record.params.members.contains(pid) {
            return Err(LedgerError::NotAMember);
        }
        if record.init_received.contains(pid) {
            return Err(LedgerError::DuplicateInitMessage);
        }

        let record = self.contracts.get_mut(&ssid).unwrap();
        record.init_received.insert(pid.clone());
        let outcome = if record.init_received.len() < record.params.members.len() {
            InitOutcome::Recorded
        } else {
            let funded = record
                .params
                .deposits
                .iter()
                .all(|(m, &d)| self.parties.get(m).copied().unwrap_or(0) >= d);
            if funded {
                let mut total = 0u64;
                for (m, &d) in &record.params.deposits {
                    *self.parties.get_mut(m).unwrap() -= d;
                    total += d;
                }
                record.coins = total;
                record.state = record.params.initial_state.clone();
                record.phase = Phase::Active;
                InitOutcome::Activated
            } else {
                InitOutcome::Stalled
            }
        };
        self.commit(format!(
            "initcoins ssid={ssid} pid={pid} outcome={outcome:?}"
        ));
        Ok(outcome)
    }

    /// Feed a witness to an Active contract. On circuit acceptance the
    /// deposit moves into escrow, the state advances, and the payout is
    /// released back to the caller, terminating the contract when it pays
    /// everything out (or cannot cover the released amount).
    pub fn trigger(
        &mut self,
        ssid: u64,
        pid: &PartyId,
        witness: &Witness,
        deposit: u64,
    ) -> Result<TriggerReport, LedgerError> {
        let record = self
            .contracts
            .get(&ssid)
            .ok_or(LedgerError::UnknownContract(ssid))?;
        if record.phase != Phase::Active {
            return Err(LedgerError::WrongPhase);
        }
        let caller_coins = *self
            .parties
            .get(pid)
            .ok_or_else(|| LedgerError::UnknownParty(pid.to_string()))?;
        if caller_coins < deposit {
            return Err(LedgerError::InsufficientCoins);
        }
        let (new_state, payout) = record
            .params
            .circuit
            .evaluate(pid, witness, self.time, &record.state, deposit)
            .ok_or(LedgerError::CircuitRejected)?;

        let record = self.contracts.get_mut(&ssid).unwrap();
        *self.parties.get_mut(pid).unwrap() -= deposit;
        record.coins += deposit;
        record.state = new_state;
        let balance = record.coins;
        let (paid, terminated) = match payout {
            Payout::AllCoins => (balance, true),
            Payout::Coins(e) => (e.min(balance), e >= balance),
        };
        record.coins = balance - paid;
        *self.parties.get_mut(pid).unwrap() += paid;
        if terminated {
            record.phase = Phase::Terminated;
        }
        self.commit(format!(
            "trigger ssid={ssid} pid={pid} w=[{}] deposit={deposit} paid={paid} terminated={terminated}",
            witness.encode()
        ));
        Ok(TriggerReport {
            deposit,
            paid,
            terminated,
        })
    }

    pub fn retrieve_contract(&self, ssid: u64) -> Option<ContractView<'_>> {
        self.contracts.get(&ssid).map(|r| ContractView {
            params: &r.params,
            state: &r.state,
            coins: r.coins,
            phase: r.phase,
        })
    }

    pub fn contract_ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.contracts.keys().copied()
    }

    pub fn advance_time(&mut self, ticks: u64) -> Result<u64, LedgerError> {
        if ticks == 0 {
            return Err(LedgerError::ZeroTicks);
        }
        self.time += ticks;
        self.commit(format!("advance ticks={ticks}"));
        Ok(self.time)
    }

    /// Sum of live coins (parties plus contract escrows).
    pub fn circulating_coins(&self) -> u64 {
        self.parties.values().sum::<u64>() + self.contracts.values().map(|c| c.coins).sum::<u64>()
    }

    pub fn endowment_total(&self) -> u64 {
        self.parties.keys().map(|p| p.endowment()).sum()
    }

    pub fn conservation_holds(&self) -> bool {
        self.circulating_coins() == self.endowment_total()
    }

    /// Canonical digest of the full ledger state. Two ledgers with equal
    /// hashes went through coin-identical histories.
    pub fn state_hash(&self) -> [u8; 32] {
        let mut buf = Vec::new();
        buf.extend_from_slice(&self.time.to_le_bytes());
        buf.extend_from_slice(&(self.parties.len() as u64).to_le_bytes());
        for (pid, coins) in &self.parties {
            pid.write_canonical(&mut buf);
            buf.extend_from_slice(&coins.to_le_bytes());
        }
        buf.extend_from_slice(&(self.contracts.len() as u64).to_le_bytes());
        for (ssid, record) in &self.contracts {
            buf.extend_from_slice(&ssid.to_le_bytes());
            record.params.write_canonical(&mut buf);
            record.state.write_canonical(&mut buf);
            buf.extend_from_slice(&record.coins.to_le_bytes());
            buf.push(record.phase.tag());
            buf.extend_from_slice(&(record.init_received.len() as u64).to_le_bytes());
            for pid in &record.init_received {
                pid.write_canonical(&mut buf);
            }
        }
        buf.extend_from_slice(&(self.transactions.len() as u64).to_le_bytes());
        for tr in &self.transactions {
            buf.extend_from_slice(&tr.tr_id.to_le_bytes());
            tr.payer.write_canonical(&mut buf);
            tr.payee.write_canonical(&mut buf);
            buf.extend_from_slice(&tr.amount.to_le_bytes());
            buf.extend_from_slice(&tr.time.to_le_bytes());
        }
        Sha256::digest(&buf).into()
    }

    pub fn state_hash_hex(&self) -> String {
        hex::encode(self.state_hash())
    }

    fn commit(&mut self, mut line: String) {
        debug_assert!(
            self.conservation_holds(),
            "coin conservation broken after: {line}"
        );
        let hash = self.state_hash();
        write!(line, " t={} hash={}", self.time, hex::encode(&hash[..8])).unwrap();
        self.trace.push(line);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contract::{Claim, SerialSlot};
    use crate::lightning::{BackendKind, Certificate, Holder, LightningContext, SerialNumber};

    const D0: u64 = 10;
    const T_TR: u64 = 100;

    fn pid(s: &str) -> PartyId {
        PartyId::parse(s).unwrap()
    }

    struct Rig {
        ctx: LightningContext,
        ledger: Ledger,
        circuit: BanknoteCircuit,
    }

    fn rig() -> Rig {
        let ctx = LightningContext::setup(BackendKind::Ideal, 16, 5).unwrap();
        let circuit = BanknoteCircuit::new(ctx.hash_spec(), D0, T_TR);
        Rig {
            ctx,
            ledger: Ledger::new(),
            circuit,
        }
    }

    fn mint_note(rig: &mut Rig, owner: &str, face: u64) -> (u64, SerialNumber, Certificate) {
        let owner = pid(owner);
        let holder = Holder::Party(owner.clone());
        let bolt = rig.ctx.gen(holder.clone());
        let serial = rig.ctx.verify(bolt).unwrap();
        let cert = rig.ctx.extract_certificate(bolt, &holder).unwrap();
        let params = ContractParams::banknote(
            owner.clone(),
            face,
            rig.circuit.clone(),
            BanknoteState::fresh(serial.clone()),
        );
        let ssid = rig.ledger.initiate_smart_contract(&owner, params).unwrap();
        assert_eq!(
            rig.ledger.initialize_with_coins(ssid, &owner),
            Ok(InitOutcome::Activated)
        );
        (ssid, serial, cert)
    }

    #[test]
    fn registration_endows_once() {
        let mut l = Ledger::new();
        l.register(pid("A#50")).unwrap();
        assert_eq!(l.retrieve_party(&pid("A#50")), Some(50));
        assert_eq!(l.register(pid("A#50")), Err(LedgerError::DuplicateParty));
        l.register(pid("B#0")).unwrap();
        assert_eq!(l.retrieve_party(&pid("B#0")), Some(0));
        assert_eq!(l.retrieve_party(&pid("C#1")), None);
        assert!(l.conservation_holds());
    }

    #[test]
    fn payment_moves_coins_and_logs() {
        let mut l = Ledger::new();
        l.register(pid("A#50")).unwrap();
        l.register(pid("B#0")).unwrap();
        let tr = l.pay(&pid("A#50"), &pid("B#0"), 10).unwrap();
        assert_eq!(tr, 1);
        assert_eq!(l.retrieve_party(&pid("A#50")), Some(40));
        assert_eq!(l.retrieve_party(&pid("B#0")), Some(10));
        let rec = l.retrieve_transaction(1).unwrap();
        assert_eq!((rec.amount, rec.time), (10, 0));
        assert_eq!(rec.payer, pid("A#50"));
    }

    #[test]
    fn payment_cannot_drain_the_balance() {
        let mut l = Ledger::new();
        l.register(pid("A#50")).unwrap();
        l.register(pid("B#0")).unwrap();
        let before = l.state_hash();
        assert_eq!(
            l.pay(&pid("A#50"), &pid("B#0"), 50),
            Err(LedgerError::InsufficientCoins)
        );
        assert_eq!(
            l.pay(&pid("A#50"), &pid("B#0"), 51),
            Err(LedgerError::InsufficientCoins)
        );
        assert_eq!(
            l.pay(&pid("A#50"), &pid("B#0"), 0),
            Err(LedgerError::ZeroAmount)
        );
        assert_eq!(
            l.pay(&pid("A#50"), &pid("C#1"), 5),
            Err(LedgerError::UnknownParty("C#1".into()))
        );
        assert_eq!(
            l.pay(&pid("C#1"), &pid("B#0"), 5),
            Err(LedgerError::UnknownParty("C#1".into()))
        );
        assert_eq!(l.state_hash(), before);
        assert!(l.pay(&pid("A#50"), &pid("B#0"), 49).is_ok());
    }

    #[test]
    fn transaction_lookup_is_pure() {
        let mut l = Ledger::new();
        l.register(pid("A#50")).unwrap();
        l.register(pid("B#0")).unwrap();
        l.pay(&pid("A#50"), &pid("B#0"), 10).unwrap();
        assert!(l.retrieve_transaction(1).is_some());
        assert!(l.retrieve_transaction(0).is_none());
        assert!(l.retrieve_transaction(99).is_none());
    }

    #[test]
    fn timestamps_follow_the_clock() {
        let mut l = Ledger::new();
        l.register(pid("A#50")).unwrap();
        l.register(pid("B#0")).unwrap();
        l.pay(&pid("A#50"), &pid("B#0"), 1).unwrap();
        assert_eq!(l.advance_time(5), Ok(5));
        l.pay(&pid("A#50"), &pid("B#0"), 1).unwrap();
        assert_eq!(l.retrieve_transaction(1).unwrap().time, 0);
        assert_eq!(l.retrieve_transaction(2).unwrap().time, 5);
        assert_eq!(l.advance_time(0), Err(LedgerError::ZeroTicks));
    }

    #[test]
    fn contract_initiation_checks_membership() {
        let mut r = rig();
        r.ledger.register(pid("A#50")).unwrap();
        let serial = {
            let bolt = r.ctx.gen(Holder::Party(pid("A#50")));
            r.ctx.verify(bolt).unwrap()
        };
        let params = ContractParams::banknote(
            pid("A#50"),
            30,
            r.circuit.clone(),
            BanknoteState::fresh(serial.clone()),
        );
        let ssid = r
            .ledger
            .initiate_smart_contract(&pid("A#50"), params.clone())
            .unwrap();
        assert_eq!(ssid, 1);
        assert_eq!(
            r.ledger.retrieve_contract(1).unwrap().phase,
            Phase::AwaitingInit
        );
        assert_eq!(r.ledger.retrieve_contract(1).unwrap().coins, 0);

        // Unregistered member.
        let bad = ContractParams::banknote(
            pid("Z#9"),
            30,
            r.circuit.clone(),
            BanknoteState::fresh(serial.clone()),
        );
        let before = r.ledger.state_hash();
        assert_eq!(
            r.ledger.initiate_smart_contract(&pid("A#50"), bad),
            Err(LedgerError::UnknownParty("Z#9".into()))
        );
        assert_eq!(r.ledger.state_hash(), before);

        // Deposit keys must mirror the member set.
        let mut mismatched = params.clone();
        mismatched.deposits = BTreeMap::from([(pid("B#0"), 30)]);
        assert_eq!(
            r.ledger.initiate_smart_contract(&pid("A#50"), mismatched),
            Err(LedgerError::MalformedParams(
                "deposit keys differ from members"
            ))
        );

        assert_eq!(
            r.ledger.initiate_smart_contract(&pid("A#50"), params),
            Ok(2)
        );
    }

    #[test]
    fn initialization_collects_deposits_atomically() {
        let mut r = rig();
        r.ledger.register(pid("A#50")).unwrap();
        let serial = {
            let bolt = r.ctx.gen(Holder::Party(pid("A#50")));
            r.ctx.verify(bolt).unwrap()
        };
        let params = ContractParams::banknote(
            pid("A#50"),
            30,
            r.circuit.clone(),
            BanknoteState::fresh(serial),
        );
        let ssid = r
            .ledger
            .initiate_smart_contract(&pid("A#50"), params)
            .unwrap();
        assert_eq!(
            r.ledger.initialize_with_coins(ssid, &pid("A#50")),
            Ok(InitOutcome::Activated)
        );
        assert_eq!(r.ledger.retrieve_party(&pid("A#50")), Some(20));
        let view = r.ledger.retrieve_contract(ssid).unwrap();
        assert_eq!((view.coins, view.phase), (30, Phase::Active));
        assert!(r.ledger.conservation_holds());

        assert_eq!(
            r.ledger.initialize_with_coins(ssid, &pid("A#50")),
            Err(LedgerError::WrongPhase)
        );
    }

    #[test]
    fn underfunded_initialization_stalls_without_moving_coins() {
        let mut r = rig();
        r.ledger.register(pid("A#20")).unwrap();
        let serial = {
            let bolt = r.ctx.gen(Holder::Party(pid("A#20")));
            r.ctx.verify(bolt).unwrap()
        };
        let params = ContractParams::banknote(
            pid("A#20"),
            30,
            r.circuit.clone(),
            BanknoteState::fresh(serial),
        );
        let ssid = r
            .ledger
            .initiate_smart_contract(&pid("A#20"), params)
            .unwrap();
        assert_eq!(
            r.ledger.initialize_with_coins(ssid, &pid("A#20")),
            Ok(InitOutcome::Stalled)
        );
        assert_eq!(r.ledger.retrieve_party(&pid("A#20")), Some(20));
        let view = r.ledger.retrieve_contract(ssid).unwrap();
        assert_eq!((view.coins, view.phase), (0, Phase::AwaitingInit));
        // The one message per member is spent; the contract is stuck.
        assert_eq!(
            r.ledger.initialize_with_coins(ssid, &pid("A#20")),
            Err(LedgerError::DuplicateInitMessage)
        );
    }

    #[test]
    fn initialization_rejects_outsiders_and_unknown_contracts() {
        let mut r = rig();
        r.ledger.register(pid("A#50")).unwrap();
        r.ledger.register(pid("B#50")).unwrap();
        let serial = {
            let bolt = r.ctx.gen(Holder::Party(pid("A#50")));
            r.ctx.verify(bolt).unwrap()
        };
        let params = ContractParams::banknote(
            pid("A#50"),
            30,
            r.circuit.clone(),
            BanknoteState::fresh(serial),
        );
        let ssid = r
            .ledger
            .initiate_smart_contract(&pid("A#50"), params)
            .unwrap();
        let before = r.ledger.state_hash();
        assert_eq!(
            r.ledger.initialize_with_coins(ssid, &pid("B#50")),
            Err(LedgerError::NotAMember)
        );
        assert_eq!(
            r.ledger.initialize_with_coins(99, &pid("A#50")),
            Err(LedgerError::UnknownContract(99))
        );
        assert_eq!(r.ledger.state_hash(), before);
    }

    #[test]
    fn trigger_runs_the_claim_cycle() {
        let mut r = rig();
        r.ledger.register(pid("A#50")).unwrap();
        r.ledger.register(pid("B#40")).unwrap();
        let (ssid, serial, cert) = mint_note(&mut r, "A#50", 30);
        assert_eq!(r.ledger.retrieve_party(&pid("A#50")), Some(20));

        // B claims the note lost, staking d0.
        r.ledger.advance_time(3).unwrap();
        let report = r
            .ledger
            .trigger(ssid, &pid("B#40"), &Witness::Lost, D0)
            .unwrap();
        assert_eq!(
            report,
            TriggerReport {
                deposit: D0,
                paid: 0,
                terminated: false
            }
        );
        assert_eq!(r.ledger.retrieve_party(&pid("B#40")), Some(30));
        let view = r.ledger.retrieve_contract(ssid).unwrap();
        assert_eq!(view.coins, 30 + D0);
        assert_eq!(
            view.state.claim,
            Claim::ActiveClaim {
                claimant: pid("B#40"),
                since: 3
            }
        );

        // A challenges with the certificate and a replacement serial.
        let fresh = SerialNumber::from_bits(r.ctx.random_bits(16));
        let w = Witness::Challenge(cert, fresh.clone());
        let report = r.ledger.trigger(ssid, &pid("A#50"), &w, 0).unwrap();
        assert_eq!(
            report,
            TriggerReport {
                deposit: 0,
                paid: D0,
                terminated: false
            }
        );
        assert_eq!(r.ledger.retrieve_party(&pid("A#50")), Some(20 + D0));
        let view = r.ledger.retrieve_contract(ssid).unwrap();
        assert_eq!(view.coins, 30);
        assert_eq!(view.state.serial, SerialSlot::Serial(fresh));
        assert_eq!(view.state.claim, Claim::NoActiveClaim);
        assert!(r.ledger.conservation_holds());
        let _ = serial;
    }

    #[test]
    fn recovery_pays_all_coins_and_terminates() {
        let mut r = rig();
        r.ledger.register(pid("A#50")).unwrap();
        r.ledger.register(pid("B#40")).unwrap();
        let (ssid, _, cert) = mint_note(&mut r, "A#50", 30);
        let report = r
            .ledger
            .trigger(ssid, &pid("B#40"), &Witness::Recover(cert), 0)
            .unwrap();
        assert_eq!(
            report,
            TriggerReport {
                deposit: 0,
                paid: 30,
                terminated: true
            }
        );
        assert_eq!(r.ledger.retrieve_party(&pid("B#40")), Some(70));
        let view = r.ledger.retrieve_contract(ssid).unwrap();
        assert_eq!((view.coins, view.phase), (0, Phase::Terminated));

        // Termination is absorbing.
        assert_eq!(
            r.ledger.trigger(ssid, &pid("B#40"), &Witness::Lost, D0),
            Err(LedgerError::WrongPhase)
        );
    }

    #[test]
    fn rejected_triggers_leave_no_trace() {
        let mut r = rig();
        r.ledger.register(pid("A#50")).unwrap();
        r.ledger.register(pid("B#5")).unwrap();
        let (ssid, _, _) = mint_note(&mut r, "A#50", 30);
        let before = r.ledger.state_hash();
        let trace_len = r.ledger.trace().len();

        // Circuit rejection: wrong stake.
        assert_eq!(
            r.ledger.trigger(ssid, &pid("A#50"), &Witness::Lost, D0 - 1),
            Err(LedgerError::CircuitRejected)
        );
        // Deposit the caller cannot cover.
        assert_eq!(
            r.ledger.trigger(ssid, &pid("B#5"), &Witness::Lost, D0),
            Err(LedgerError::InsufficientCoins)
        );
        // Unknown contract and unknown caller.
        assert_eq!(
            r.ledger.trigger(99, &pid("A#50"), &Witness::Lost, D0),
            Err(LedgerError::UnknownContract(99))
        );
        assert_eq!(
            r.ledger.trigger(ssid, &pid("Z#9"), &Witness::Lost, D0),
            Err(LedgerError::UnknownParty("Z#9".into()))
        );
        assert_eq!(r.ledger.state_hash(), before);
        assert_eq!(r.ledger.trace().len(), trace_len);
    }

    #[test]
    fn deposit_feasibility_is_non_strict() {
        // A trigger deposit may take the whole balance, unlike pay.
        let mut r = rig();
        r.ledger.register(pid("A#50")).unwrap();
        r.ledger.register(pid("B#10")).unwrap();
        let (ssid, _, _) = mint_note(&mut r, "A#50", 30);
        let report = r
            .ledger
            .trigger(ssid, &pid("B#10"), &Witness::Lost, D0)
            .unwrap();
        assert_eq!(report.deposit, D0);
        assert_eq!(r.ledger.retrieve_party(&pid("B#10")), Some(0));
    }

    #[test]
    fn identical_histories_hash_identically() {
        let run = || {
            let mut r = rig();
            r.ledger.register(pid("A#50")).unwrap();
            r.ledger.register(pid("B#40")).unwrap();
            let (ssid, _, cert) = mint_note(&mut r, "A#50", 30);
            r.ledger.advance_time(2).unwrap();
            r.ledger
                .trigger(ssid, &pid("B#40"), &Witness::Recover(cert), 0)
                .unwrap();
            (r.ledger.state_hash_hex(), r.ledger.trace().join("\n"))
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn counters_are_consecutive() {
        let mut r = rig();
        r.ledger.register(pid("A#50")).unwrap();
        r.ledger.register(pid("B#0")).unwrap();
        for expect in 1..=4u64 {
            assert_eq!(r.ledger.pay(&pid("A#50"), &pid("B#0"), 1), Ok(expect));
        }
        let (s1, _, _) = mint_note(&mut r, "A#50", 5);
        let (s2, _, _) = mint_note(&mut r, "A#50", 5);
        assert_eq!((s1, s2), (1, 2));
    }
}
