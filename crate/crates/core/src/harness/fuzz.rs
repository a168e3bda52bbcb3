//! Randomized scenario search.
//!
//! Each trial derives its own seed from the master seed, generates a script
//! of bounded length, runs it, and checks the trace: the adversary's net
//! position must never go positive and no invariant may break. Violating
//! scenarios are shrunk by greedy event removal before being reported, so
//! the repro script is as short as the violation allows.

use super::strategy::Strategy;
use super::{
    run_scenario, run_scenario_sabotaged, Constants, Event, HonestAction, Scenario, Trace,
};
use crate::lightning::BackendKind;
use crate::party::PartyId;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

#[derive(Clone, Copy, Debug)]
pub struct FuzzConfig {
    pub trials: usize,
    pub master_seed: u64,
    pub backend: BackendKind,
    pub constants: Constants,
    /// Upper bound on script length per trial.
    pub max_events: usize,
    /// Run with the adversary credit bookkeeping turned off. Corruptions
    /// then register as pure theft, so the detector must fire; used to
    /// prove the harness can fail.
    pub sabotage_bookkeeping: bool,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            trials: 1000,
            master_seed: 0,
            backend: BackendKind::Ideal,
            constants: Constants::default(),
            max_events: 200,
            sabotage_bookkeeping: false,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Violation {
    pub index: usize,
    pub scenario: Scenario,
    pub shrunk: Scenario,
    pub max_net: i64,
    pub breaches: Vec<String>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FuzzReport {
    pub trials: usize,
    pub violations: Vec<Violation>,
}

impl FuzzReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// The 64-bit finalizer from the splitmix generator. Distinct inputs give
/// well-scattered outputs, which is all trial seeding needs.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn run_fuzz(config: &FuzzConfig) -> FuzzReport {
    let mut violations = Vec::new();
    for index in 0..config.trials {
        let seed = splitmix64(config.master_seed ^ index as u64);
        let scenario = generate_scenario(seed, config.backend, config.constants, config.max_events);
        match assess(&scenario, config.sabotage_bookkeeping) {
            Outcome::Clean => {}
            Outcome::Unsafe(max_net, breaches) => {
                let shrunk = shrink_with(&scenario, |c| {
                    matches!(assess(c, config.sabotage_bookkeeping), Outcome::Unsafe(..))
                });
                let (max_net, breaches) = match assess(&shrunk, config.sabotage_bookkeeping) {
                    Outcome::Unsafe(m, b) => (m, b),
                    _ => (max_net, breaches),
                };
                violations.push(Violation {
                    index,
                    scenario,
                    shrunk,
                    max_net,
                    breaches,
                });
            }
            Outcome::Broken(error) => {
                // A generated script should never fail to run; report it
                // as-is rather than shrinking across failure classes.
                let shrunk = scenario.clone();
                violations.push(Violation {
                    index,
                    scenario,
                    shrunk,
                    max_net: 0,
                    breaches: vec![error],
                });
            }
        }
    }
    FuzzReport {
        trials: config.trials,
        violations,
    }
}

enum Outcome {
    Clean,
    /// Ran, but the adversary came out ahead or an invariant broke.
    Unsafe(i64, Vec<String>),
    /// The scenario would not even run.
    Broken(String),
}

fn assess(scenario: &Scenario, sabotage: bool) -> Outcome {
    let run = if sabotage {
        run_scenario_sabotaged
    } else {
        run_scenario
    };
    match run(scenario) {
        Ok(trace) if trace.passed() => Outcome::Clean,
        Ok(Trace {
            max_net, breaches, ..
        }) => Outcome::Unsafe(max_net, breaches),
        Err(e) => Outcome::Broken(format!("scenario failed to run: {e}")),
    }
}

fn shrink_with(scenario: &Scenario, violates: impl Fn(&Scenario) -> bool) -> Scenario {
    let mut current = scenario.clone();
    loop {
        let mut improved = false;
        let mut i = 0;
        while i < current.script.len() {
            let mut candidate = current.clone();
            candidate.script.remove(i);
            if violates(&candidate) {
                current = candidate;
                improved = true;
            } else {
                i += 1;
            }
        }
        if !improved {
            return current;
        }
    }
}

pub fn generate_scenario(
    seed: u64,
    backend: BackendKind,
    constants: Constants,
    max_events: usize,
) -> Scenario {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let hi = max_events.max(4);
    let lo = 20.min(hi);
    let target = rng.gen_range(lo..=hi);

    let mut gen = Generator {
        rng,
        invoked: Vec::new(),
        corrupted: Vec::new(),
        script: Vec::new(),
    };
    let openers = gen.rng.gen_range(2..=4usize).min(target);
    for _ in 0..openers {
        gen.invoke();
    }
    while gen.script.len() < target {
        gen.step();
    }
    gen.script.truncate(target);
    Scenario {
        seed,
        backend,
        constants,
        script: gen.script,
    }
}

struct Generator {
    rng: ChaCha12Rng,
    invoked: Vec<PartyId>,
    corrupted: Vec<bool>,
    script: Vec<Event>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Op {
    Invoke,
    Tick,
    Mint,
    Pay,
    Claim,
    Finalize,
    Redeem,
    Corrupt,
    Uncorrupt,
    DoubleSpend,
    ForgeCert,
    MaliciousClaim,
    ClaimOwn,
    Replay,
}

impl Generator {
    fn invoke(&mut self) {
        let i = self.invoked.len();
        let name = if i < 26 {
            ((b'A' + i as u8) as char).to_string()
        } else {
            format!("P{i}")
        };
        let endowment = self.rng.gen_range(5..=100u64);
        let pid = PartyId::new(&name, endowment).expect("generated names are valid");
        self.invoked.push(pid.clone());
        self.corrupted.push(false);
        self.script.push(Event::Invoke(pid));
    }

    fn honest_indexes(&self) -> Vec<usize> {
        (0..self.invoked.len())
            .filter(|&i| !self.corrupted[i])
            .collect()
    }

    fn corrupted_indexes(&self) -> Vec<usize> {
        (0..self.invoked.len())
            .filter(|&i| self.corrupted[i])
            .collect()
    }

    fn any_party(&mut self) -> PartyId {
        let i = self.rng.gen_range(0..self.invoked.len());
        self.invoked[i].clone()
    }

    fn pick(&mut self, indexes: &[usize]) -> PartyId {
        let i = indexes[self.rng.gen_range(0..indexes.len())];
        self.invoked[i].clone()
    }

    fn step(&mut self) {
        let honest = self.honest_indexes();
        let corrupted = self.corrupted_indexes();

        let mut menu: Vec<(u32, Op)> = vec![
            (12, Op::Tick),
            (14, Op::Mint),
            (7, Op::Claim),
            (9, Op::Finalize),
            (9, Op::Redeem),
        ];
        if self.invoked.len() < 8 {
            menu.push((5, Op::Invoke));
        }
        if self.invoked.len() >= 2 {
            menu.push((14, Op::Pay));
        }
        if !honest.is_empty() {
            menu.push((6, Op::Corrupt));
        }
        if !corrupted.is_empty() {
            menu.push((3, Op::Uncorrupt));
            menu.push((3, Op::ForgeCert));
            menu.push((4, Op::MaliciousClaim));
            if !honest.is_empty() {
                menu.push((5, Op::DoubleSpend));
                menu.push((4, Op::ClaimOwn));
                menu.push((4, Op::Replay));
            }
        }

        let total: u32 = menu.iter().map(|(w, _)| w).sum();
        let mut roll = self.rng.gen_range(0..total);
        let op = menu
            .iter()
            .find(|(w, _)| {
                if roll < *w {
                    true
                } else {
                    roll -= w;
                    false
                }
            })
            .map(|(_, op)| *op)
            .expect("roll is below the total weight");

        let event = match op {
            Op::Invoke => {
                self.invoke();
                return;
            }
            Op::Tick => Event::AdvanceTime(self.rng.gen_range(1..=60)),
            Op::Mint => {
                let face = self.rng.gen_range(1..=30);
                Event::Honest(self.any_party(), HonestAction::Mint { face })
            }
            Op::Pay => {
                let payer = self.any_party();
                let payee = self.any_party();
                let holding = self.rng.gen_range(0..=2);
                Event::Honest(payer, HonestAction::Pay { payee, holding })
            }
            Op::Claim => {
                let ssid = self.rng.gen_range(1..=6);
                Event::Honest(self.any_party(), HonestAction::Claim { ssid })
            }
            Op::Finalize => {
                let ssid = self.rng.gen_range(1..=6);
                Event::Honest(self.any_party(), HonestAction::Finalize { ssid })
            }
            Op::Redeem => {
                let holding = self.rng.gen_range(0..=2);
                Event::Honest(self.any_party(), HonestAction::Redeem { holding })
            }
            Op::Corrupt => {
                let target = self.pick(&honest);
                let i = self.invoked.iter().position(|p| p == &target).unwrap();
                self.corrupted[i] = true;
                Event::Corrupt(target)
            }
            Op::Uncorrupt => {
                let target = self.pick(&corrupted);
                let i = self.invoked.iter().position(|p| p == &target).unwrap();
                self.corrupted[i] = false;
                Event::Uncorrupt(target)
            }
            Op::DoubleSpend => Event::Adversary(Strategy::DoubleSpend {
                payee1: self.pick(&honest),
                payee2: self.pick(&honest),
                note: self.rng.gen_range(0..=2),
            }),
            Op::ForgeCert => Event::Adversary(Strategy::ForgeCertificate {
                via: self.pick(&corrupted),
                ssid: self.rng.gen_range(1..=6),
            }),
            Op::MaliciousClaim => Event::Adversary(Strategy::MaliciousLostClaim {
                via: self.pick(&corrupted),
                ssid: self.rng.gen_range(1..=6),
            }),
            Op::ClaimOwn => Event::Adversary(Strategy::ClaimOwnNote {
                via: self.pick(&corrupted),
                payee: self.pick(&honest),
                note: self.rng.gen_range(0..=2),
            }),
            Op::Replay => Event::Adversary(Strategy::ReplayPayment {
                payee1: self.pick(&honest),
                payee2: self.pick(&honest),
                note: self.rng.gen_range(0..=2),
            }),
        };
        self.script.push(event);
    }
}
