//! Adversarial scenario execution.
//!
//! A scenario is a seed, a backend choice, the contract constants, and a
//! script of events: invoke parties, corrupt and uncorrupt them, advance
//! time, drive honest wallet protocols, and launch adversary strategies.
//! Running one produces a trace with a security bookkeeping snapshot after
//! every event.
//!
//! The bookkeeping follows the adversary's balance sheet. `received` is
//! everything handed to the adversary: balances and note values captured by
//! corruption (minus balances given back on uncorruption) plus whatever
//! honest parties pay to corrupted ones. `current_or_spent` is what the
//! adversary has shown for it: value successfully spent into honest hands
//! plus the live ledger balances of corrupted parties. The security
//! property under test is that `current_or_spent - received` never goes
//! positive: the adversary can never hold or spend more than it was given.

pub mod fuzz;
pub mod script;
pub mod strategy;

use crate::contract::BanknoteCircuit;
use crate::ledger::{Ledger, LedgerError};
use crate::lightning::{
    BackendKind, BoltId, Holder, LightningContext, LightningError, SerialNumber,
};
use crate::party::PartyId;
use crate::wallet::{FinalizeOutcome, ReceiveOutcome, Wallet};
use std::collections::BTreeMap;
use std::fmt::Write as _;

pub use strategy::Strategy;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Constants {
    /// Stake for filing a lost-note claim.
    pub d0: u64,
    /// Challenge window in ticks.
    pub t_tr: u64,
    /// Monitor cadence: wallets sweep their holdings whenever the clock
    /// hits a multiple of this.
    pub t_r: u64,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            d0: 10,
            t_tr: 100,
            t_r: 50,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum HonestAction {
    Mint { face: u64 },
    Pay { payee: PartyId, holding: usize },
    Claim { ssid: u64 },
    Finalize { ssid: u64 },
    Redeem { holding: usize },
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Event {
    Invoke(PartyId),
    Corrupt(PartyId),
    Uncorrupt(PartyId),
    AdvanceTime(u64),
    Honest(PartyId, HonestAction),
    Adversary(Strategy),
}

impl Event {
    /// The scenario-file form of this event.
    pub fn script_line(&self) -> String {
        match self {
            Event::Invoke(pid) => format!("INVOKE {pid}"),
            Event::Corrupt(pid) => format!("CORRUPT {}", pid.name()),
            Event::Uncorrupt(pid) => format!("UNCORRUPT {}", pid.name()),
            Event::AdvanceTime(ticks) => format!("TICK {ticks}"),
            Event::Honest(pid, action) => {
                let p = pid.name();
                match action {
                    HonestAction::Mint { face } => format!("HONEST {p} MINT {face}"),
                    HonestAction::Pay { payee, holding } => {
                        format!("HONEST {p} PAY {} {holding}", payee.name())
                    }
                    HonestAction::Claim { ssid } => format!("HONEST {p} CLAIM {ssid}"),
                    HonestAction::Finalize { ssid } => format!("HONEST {p} FINALIZE {ssid}"),
                    HonestAction::Redeem { holding } => format!("HONEST {p} REDEEM {holding}"),
                }
            }
            Event::Adversary(strategy) => strategy.script_line(),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Scenario {
    pub seed: u64,
    pub backend: BackendKind,
    pub constants: Constants,
    pub script: Vec<Event>,
}

impl Scenario {
    pub fn to_script(&self) -> String {
        let mut out = String::new();
        for event in &self.script {
            out.push_str(&event.script_line());
            out.push('\n');
        }
        out
    }
}

/// The adversary's balance sheet. See the module docs for the two sides.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct SecurityLedger {
    received: i64,
    spent_to_honest: i64,
    corrupted_coins: i64,
    max_net: i64,
    sabotaged: bool,
}

impl SecurityLedger {
    /// Corruption hands over a party's balance and counted note value.
    fn on_corrupt(&mut self, coins: u64, banknote_value: u64) {
        if self.sabotaged {
            return;
        }
        self.received += (coins + banknote_value) as i64;
    }

    /// Uncorruption returns the party's current balance to honest hands.
    fn on_uncorrupt(&mut self, coins: u64) {
        if self.sabotaged {
            return;
        }
        self.received -= coins as i64;
    }

    /// An honest party paid value (coins or a note) to a corrupted one.
    fn on_value_to_adversary(&mut self, amount: u64) {
        if self.sabotaged {
            return;
        }
        self.received += amount as i64;
    }

    /// An honest party accepted value from the adversary.
    fn on_spent_to_honest(&mut self, amount: u64) {
        self.spent_to_honest += amount as i64;
    }

    /// Re-read the corrupted parties' live balances and fold the current
    /// net position into the running maximum.
    fn refresh(&mut self, corrupted_coins: u64) {
        self.corrupted_coins = corrupted_coins as i64;
        self.max_net = self.max_net.max(self.net());
    }

    pub fn received(&self) -> i64 {
        self.received
    }

    pub fn current_or_spent(&self) -> i64 {
        self.spent_to_honest + self.corrupted_coins
    }

    pub fn net(&self) -> i64 {
        self.current_or_spent() - self.received
    }

    pub fn max_net(&self) -> i64 {
        self.max_net
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TraceRow {
    pub step: usize,
    pub event: String,
    pub state_hash: String,
    pub received: i64,
    pub current_or_spent: i64,
    pub net: i64,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
    pub max_net: i64,
    pub breaches: Vec<String>,
    pub final_state_hash: String,
}

impl Trace {
    /// Tab-separated rendering, one row per event, byte-exact for equal
    /// scenarios and seeds.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("# step\tevent\tstate_hash\treceived\tcurrent_or_spent\tnet\n");
        for row in &self.rows {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                row.step, row.event, row.state_hash, row.received, row.current_or_spent, row.net
            )
            .unwrap();
        }
        writeln!(out, "# max_net={}", self.max_net).unwrap();
        writeln!(out, "# breaches={}", self.breaches.len()).unwrap();
        for breach in &self.breaches {
            writeln!(out, "# breach: {breach}").unwrap();
        }
        out
    }

    pub fn passed(&self) -> bool {
        self.max_net <= 0 && self.breaches.is_empty()
    }
}

/// Where the value sits when a scenario finishes.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Summary {
    pub time: u64,
    /// Ledger balance per invoked party.
    pub balances: BTreeMap<PartyId, u64>,
    /// Counted note value per wallet (zero while corrupted).
    pub note_values: BTreeMap<PartyId, u64>,
    /// Escrow still sitting in each contract.
    pub contract_coins: BTreeMap<u64, u64>,
    /// Notes left in the adversary's pool.
    pub pool_notes: usize,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum RunError {
    #[error("constants d0, t_tr, t_r must all be positive")]
    BadConstants,
    #[error("party {0} was invoked twice")]
    DuplicateInvoke(PartyId),
    #[error("event references {0} before its INVOKE")]
    UnknownParty(PartyId),
    #[error(transparent)]
    Lightning(#[from] LightningError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

/// A note in the adversary's pool: a bolt it holds plus the classical facts
/// needed to spend it.
#[derive(Clone, PartialEq, Eq, Debug)]
pub(crate) struct PoolNote {
    pub bolt: BoltId,
    pub serial: SerialNumber,
    pub ssid: u64,
    pub face_value: u64,
}

pub(crate) struct Slot {
    pub wallet: Wallet,
    pub corrupted: bool,
}

/// Everything one scenario run owns. Strategies operate on this directly.
pub(crate) struct World {
    pub ctx: LightningContext,
    pub ledger: Ledger,
    pub circuit: BanknoteCircuit,
    pub constants: Constants,
    pub parties: BTreeMap<PartyId, Slot>,
    pub pool: Vec<PoolNote>,
    pub security: SecurityLedger,
    pub breaches: Vec<String>,
}

impl World {
    fn new(scenario: &Scenario) -> Result<Self, RunError> {
        let c = scenario.constants;
        if c.d0 == 0 || c.t_tr == 0 || c.t_r == 0 {
            return Err(RunError::BadConstants);
        }
        let ctx = match scenario.backend {
            BackendKind::Ideal => LightningContext::setup(BackendKind::Ideal, 256, scenario.seed)?,
            BackendKind::Toy => LightningContext::toy_setup(4, 2, 2, scenario.seed)?,
        };
        let circuit = BanknoteCircuit::new(ctx.hash_spec(), c.d0, c.t_tr);
        Ok(World {
            ctx,
            ledger: Ledger::new(),
            circuit,
            constants: c,
            parties: BTreeMap::new(),
            pool: Vec::new(),
            security: SecurityLedger::default(),
            breaches: Vec::new(),
        })
    }

    pub fn is_corrupted(&self, pid: &PartyId) -> bool {
        self.parties.get(pid).is_some_and(|s| s.corrupted)
    }

    pub fn any_corrupted(&self) -> bool {
        self.parties.values().any(|s| s.corrupted)
    }

    /// Fold the current adversary position into the running maximum. Called
    /// after every event and after every strategy sub-step.
    pub fn sample(&mut self) {
        let corrupted_coins = self
            .parties
            .iter()
            .filter(|(_, slot)| slot.corrupted)
            .map(|(pid, _)| self.ledger.retrieve_party(pid).unwrap_or(0))
            .sum();
        self.security.refresh(corrupted_coins);
    }

    pub fn breach(&mut self, message: String) {
        self.breaches.push(message);
    }

    /// Deliver a spendable note into an honest wallet: move custody if the
    /// adversary still has it, then let the payee decide. On acceptance the
    /// adversary gets spend credit; recording that is the caller's job.
    pub fn offer_note_to_honest(
        &mut self,
        front: &PartyId,
        payee: &PartyId,
        note: &PoolNote,
    ) -> ReceiveOutcome {
        let msg = crate::wallet::PaymentMsg {
            bolt: note.bolt,
            ssid: note.ssid,
            serial: note.serial.clone(),
            face_value: note.face_value,
            payer: front.clone(),
        };
        let _ = self
            .ctx
            .transfer(note.bolt, &Holder::Adversary, Holder::Party(payee.clone()));
        let slot = self
            .parties
            .get_mut(payee)
            .expect("payee checked by caller");
        slot.wallet
            .receive_payment(&mut self.ctx, &self.ledger, &self.circuit, &msg)
    }

    /// Advance the clock one tick at a time. Whenever the time lands on a
    /// monitor boundary every honest wallet sweeps its holdings, in party
    /// id order.
    pub fn tick(&mut self, ticks: u64) {
        for _ in 0..ticks {
            self.ledger
                .advance_time(1)
                .expect("one tick is always legal");
            if self.ledger.time().is_multiple_of(self.constants.t_r) {
                self.monitor_pass();
            }
            self.sample();
        }
    }

    fn monitor_pass(&mut self) {
        let honest: Vec<PartyId> = self
            .parties
            .iter()
            .filter(|(_, slot)| !slot.corrupted)
            .map(|(pid, _)| pid.clone())
            .collect();
        for pid in honest {
            let slot = self.parties.get_mut(&pid).unwrap();
            let _ = slot.wallet.monitor_step(&mut self.ctx, &mut self.ledger);
            self.sample();
        }
    }

    fn execute(&mut self, event: &Event) -> Result<String, RunError> {
        let outcome = match event {
            Event::Invoke(pid) => {
                if self.parties.contains_key(pid) {
                    return Err(RunError::DuplicateInvoke(pid.clone()));
                }
                self.ledger.register(pid.clone())?;
                self.parties.insert(
                    pid.clone(),
                    Slot {
                        wallet: Wallet::new(pid.clone()),
                        corrupted: false,
                    },
                );
                format!("coins={}", pid.endowment())
            }
            Event::Corrupt(pid) => {
                let Some(slot) = self.parties.get_mut(pid) else {
                    return Err(RunError::UnknownParty(pid.clone()));
                };
                if slot.corrupted {
                    "fizzled: already corrupted".to_string()
                } else {
                    slot.corrupted = true;
                    let coins = self.ledger.retrieve_party(pid).unwrap_or(0);
                    let bv = slot.wallet.banknote_value();
                    self.security.on_corrupt(coins, bv);
                    let holdings = slot.wallet.strip_for_corruption();
                    for h in &holdings {
                        self.pool.push(PoolNote {
                            bolt: h.bolt,
                            serial: h.serial.clone(),
                            ssid: h.ssid,
                            face_value: h.face_value,
                        });
                    }
                    // Everything in the party's custody goes to the
                    // adversary, counted or not.
                    let me = Holder::Party(pid.clone());
                    for bolt in self.ctx.bolts_held_by(&me) {
                        self.ctx
                            .transfer(bolt, &me, Holder::Adversary)
                            .expect("live bolts listed by custody always move");
                    }
                    format!("seized coins={coins} notes={}", holdings.len())
                }
            }
            Event::Uncorrupt(pid) => {
                let Some(slot) = self.parties.get_mut(pid) else {
                    return Err(RunError::UnknownParty(pid.clone()));
                };
                if !slot.corrupted {
                    "fizzled: not corrupted".to_string()
                } else {
                    slot.corrupted = false;
                    slot.wallet.reset_after_corruption();
                    let coins = self.ledger.retrieve_party(pid).unwrap_or(0);
                    self.security.on_uncorrupt(coins);
                    format!("released coins={coins}")
                }
            }
            Event::AdvanceTime(ticks) => {
                self.tick(*ticks);
                format!("t={}", self.ledger.time())
            }
            Event::Honest(pid, action) => {
                if !self.parties.contains_key(pid) {
                    return Err(RunError::UnknownParty(pid.clone()));
                }
                if let HonestAction::Pay { payee, .. } = action {
                    if !self.parties.contains_key(payee) {
                        return Err(RunError::UnknownParty(payee.clone()));
                    }
                }
                if self.is_corrupted(pid) {
                    "fizzled: party is corrupted".to_string()
                } else {
                    self.run_honest(pid.clone(), action)
                }
            }
            Event::Adversary(strategy) => strategy::run(self, strategy)?,
        };
        self.sample();
        Ok(outcome)
    }

    fn run_honest(&mut self, pid: PartyId, action: &HonestAction) -> String {
        match action {
            HonestAction::Mint { face } => {
                let slot = self.parties.get_mut(&pid).unwrap();
                match slot
                    .wallet
                    .mint(&mut self.ctx, &mut self.ledger, &self.circuit, *face)
                {
                    Ok(ssid) => format!("ok ssid={ssid}"),
                    Err(e) => format!("refused: {e}"),
                }
            }
            HonestAction::Pay { payee, holding } => self.run_honest_pay(&pid, payee, *holding),
            HonestAction::Claim { ssid } => {
                let slot = self.parties.get_mut(&pid).unwrap();
                match slot
                    .wallet
                    .claim_lost(&mut self.ledger, &self.circuit, *ssid)
                {
                    Ok(()) => "claim filed".to_string(),
                    Err(e) => format!("refused: {e}"),
                }
            }
            HonestAction::Finalize { ssid } => {
                let slot = self.parties.get_mut(&pid).unwrap();
                match slot.wallet.finalize_claim(
                    &mut self.ctx,
                    &mut self.ledger,
                    &self.circuit,
                    *ssid,
                ) {
                    Ok(FinalizeOutcome::Settled { paid }) => format!("settled paid={paid}"),
                    Ok(FinalizeOutcome::NotYet) => "not yet".to_string(),
                    Ok(FinalizeOutcome::Superseded) => "superseded".to_string(),
                    Err(e) => format!("refused: {e}"),
                }
            }
            HonestAction::Redeem { holding } => {
                let slot = self.parties.get_mut(&pid).unwrap();
                match slot
                    .wallet
                    .redeem(&mut self.ctx, &mut self.ledger, *holding)
                {
                    Ok(paid) => format!("paid={paid}"),
                    Err(e) => format!("refused: {e}"),
                }
            }
        }
    }

    fn run_honest_pay(&mut self, payer: &PartyId, payee: &PartyId, holding: usize) -> String {
        if payer == payee {
            return "refused: cannot pay yourself".to_string();
        }
        let payee_corrupted = self.is_corrupted(payee);
        let destination = if payee_corrupted {
            Holder::Adversary
        } else {
            Holder::Party(payee.clone())
        };
        let sent = {
            let slot = self.parties.get_mut(payer).unwrap();
            slot.wallet
                .send_payment(&mut self.ctx, &self.ledger, holding, destination)
        };
        let msg = match sent {
            Ok(msg) => msg,
            Err(e) => return format!("refused: {e}"),
        };
        if payee_corrupted {
            // The value counts as received by the adversary whether or not
            // anything acknowledges it.
            self.security.on_value_to_adversary(msg.face_value);
            self.pool.push(PoolNote {
                bolt: msg.bolt,
                serial: msg.serial,
                ssid: msg.ssid,
                face_value: msg.face_value,
            });
            self.sample();
            "sent to corrupted payee".to_string()
        } else {
            let slot = self.parties.get_mut(payee).unwrap();
            match slot
                .wallet
                .receive_payment(&mut self.ctx, &self.ledger, &self.circuit, &msg)
            {
                ReceiveOutcome::Accepted => "accepted".to_string(),
                ReceiveOutcome::Aborted(reason) => format!("payee aborted: {reason}"),
            }
        }
    }

    fn check_invariants(&mut self, step: usize) {
        if !self.ledger.conservation_holds() {
            self.breach(format!(
                "step {step}: coin conservation broken ({} circulating vs {} endowed)",
                self.ledger.circulating_coins(),
                self.ledger.endowment_total()
            ));
        }
        for (pid, slot) in &self.parties {
            if !slot.corrupted && !slot.wallet.value_invariant_holds() {
                let msg = format!(
                    "step {step}: wallet value desync for {pid} (counts {}, holds {})",
                    slot.wallet.banknote_value(),
                    slot.wallet
                        .holdings()
                        .iter()
                        .map(|h| h.face_value)
                        .sum::<u64>()
                );
                self.breaches.push(msg);
            }
        }
        if self.ctx.backend_kind() == BackendKind::Ideal {
            if let Some(serial) = self.ctx.live_serial_collision() {
                self.breach(format!("step {step}: two live bolts share serial {serial}"));
            }
        }
    }
}

/// Execute a scenario start to finish and return its trace.
pub fn run_scenario(scenario: &Scenario) -> Result<Trace, RunError> {
    run_scenario_impl(scenario, false).map(|(trace, _)| trace)
}

/// Like [`run_scenario`], also reporting where the value ended up.
pub fn run_scenario_summarized(scenario: &Scenario) -> Result<(Trace, Summary), RunError> {
    run_scenario_impl(scenario, false)
}

/// Like [`run_scenario`] but with the adversary's credit side of the books
/// disabled: corruption and honest payments to corrupted parties record
/// nothing as received. Every capture then looks like theft, so any
/// scenario with a corruption must flag a violation. This exists to prove
/// the detector actually detects and is not part of the honest API.
#[doc(hidden)]
pub fn run_scenario_sabotaged(scenario: &Scenario) -> Result<Trace, RunError> {
    run_scenario_impl(scenario, true).map(|(trace, _)| trace)
}

fn run_scenario_impl(scenario: &Scenario, sabotaged: bool) -> Result<(Trace, Summary), RunError> {
    let mut world = World::new(scenario)?;
    world.security.sabotaged = sabotaged;
    let mut rows = Vec::with_capacity(scenario.script.len());
    for (i, event) in scenario.script.iter().enumerate() {
        let step = i + 1;
        let outcome = world.execute(event)?;
        world.check_invariants(step);
        let mut text = event.script_line();
        if !outcome.is_empty() {
            write!(text, " # {outcome}").unwrap();
        }
        rows.push(TraceRow {
            step,
            event: text,
            state_hash: world.ledger.state_hash_hex(),
            received: world.security.received(),
            current_or_spent: world.security.current_or_spent(),
            net: world.security.net(),
        });
    }
    let summary = Summary {
        time: world.ledger.time(),
        balances: world
            .parties
            .keys()
            .map(|pid| (pid.clone(), world.ledger.retrieve_party(pid).unwrap_or(0)))
            .collect(),
        note_values: world
            .parties
            .iter()
            .map(|(pid, slot)| (pid.clone(), slot.wallet.banknote_value()))
            .collect(),
        contract_coins: world
            .ledger
            .contract_ids()
            .filter_map(|ssid| {
                world
                    .ledger
                    .retrieve_contract(ssid)
                    .map(|v| (ssid, v.coins))
            })
            .collect(),
        pool_notes: world.pool.len(),
    };
    let trace = Trace {
        rows,
        max_net: world.security.max_net(),
        breaches: world.breaches,
        final_state_hash: world.ledger.state_hash_hex(),
    };
    Ok((trace, summary))
}
