//! Command line driver for the boltpay simulator.
//!
//! Four subcommands: `run` executes a scenario script and emits its trace,
//! `fuzz` generates and runs random adversarial scenarios, `games` estimates
//! the lightning security game win rates on the toy backend, and `selftest`
//! runs a fixed set of smoke checks.
//!
//! Exit codes are the machine contract: 0 means every check passed, 1 means
//! the invocation or an input was bad, 2 means a property was violated.
//! Every random choice derives from `--seed`; nothing here reads the clock
//! or the OS entropy pool, so equal invocations produce equal bytes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use boltpay_core::harness::fuzz::{run_fuzz, FuzzConfig};
use boltpay_core::harness::run_scenario_sabotaged;
use boltpay_core::harness::script::parse_script;
use boltpay_core::lightning::toy::{
    oracle_basis_duplicate_rate, oracle_random_cert_rate, oracle_reverify_rate,
    oracle_serial_collision_rate, run_copy_game, run_game1, run_game2, three_sigma, BasisDuplicate,
    EmptyCert, ExtractAndKeep, ExtractAndSwap, Extractor, RandomCert, TwoHonestBolts, ZeroBolt,
};
use boltpay_core::lightning::LightningError;
use boltpay_core::{run_scenario, BackendKind, Constants, LightningContext, Scenario, Trace};

const EXIT_VIOLATION: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "boltpay", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Execute a scenario script and emit its trace.
    Run {
        /// Path to the scenario script.
        scenario: PathBuf,
        #[command(flatten)]
        opts: Opts,
    },
    /// Generate and run random adversarial scenarios.
    Fuzz {
        #[command(flatten)]
        opts: Opts,
    },
    /// Estimate security game win rates against brute force values.
    Games {
        #[command(flatten)]
        opts: Opts,
    },
    /// Run the built-in smoke checks with fixed constants.
    Selftest {
        /// Master seed for the randomized checks.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Copy, Clone, PartialEq, Eq, Debug, ValueEnum)]
enum Backend {
    /// Classical registry with long serials; the default.
    Ideal,
    /// Four qubit statevector backend, small enough to brute force.
    Toy,
}

impl Backend {
    fn kind(self) -> BackendKind {
        match self {
            Backend::Ideal => BackendKind::Ideal,
            Backend::Toy => BackendKind::Toy,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Backend::Ideal => "ideal",
            Backend::Toy => "toy",
        }
    }
}

#[derive(Args, Debug)]
struct Opts {
    /// Master seed; every random choice in the process derives from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Lightning backend to run on.
    #[arg(long, value_enum, default_value_t = Backend::Ideal)]
    backend: Backend,
    /// Stake a claimant deposits when reporting a note lost.
    #[arg(long, default_value_t = 10)]
    d0: u64,
    /// Ticks a lost note claim stays open to challenges.
    #[arg(long = "ttr", default_value_t = 100)]
    t_tr: u64,
    /// Ticks between wallet monitor sweeps.
    #[arg(long = "tr", default_value_t = 50)]
    t_r: u64,
    /// Trial count for fuzz and games.
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Where to write the trace (run) or the shrunk repro script (fuzz).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Turn off the received side of the adversary balance sheet so every
    /// capture looks like theft. Exists to prove violations get reported.
    #[arg(long, hide = true)]
    sabotage_bookkeeping: bool,
}

impl Opts {
    fn constants(&self) -> Result<Constants, String> {
        let constants = Constants {
            d0: self.d0,
            t_tr: self.t_tr,
            t_r: self.t_r,
        };
        if constants.d0 == 0 || constants.t_tr == 0 || constants.t_r == 0 {
            return Err("d0, ttr, and tr must all be positive".into());
        }
        Ok(constants)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let code = match &cli.command {
        Command::Run { scenario, opts } => cmd_run(scenario, opts),
        Command::Fuzz { opts } => cmd_fuzz(opts),
        Command::Games { opts } => cmd_games(opts),
        Command::Selftest { seed } => cmd_selftest(*seed),
    };
    ExitCode::from(code)
}

fn fail(message: impl AsRef<str>) -> u8 {
    eprintln!("error: {}", message.as_ref());
    1
}

fn cmd_run(path: &Path, opts: &Opts) -> u8 {
    let constants = match opts.constants() {
        Ok(constants) => constants,
        Err(message) => return fail(message),
    };
    let text = match fs::read_to_string(path) {
        Ok(text) => text,
        Err(err) => return fail(format!("{}: {err}", path.display())),
    };
    let script = match parse_script(&text) {
        Ok(script) => script,
        Err(err) => return fail(format!("{}: {err}", path.display())),
    };
    let scenario = Scenario {
        seed: opts.seed,
        backend: opts.backend.kind(),
        constants,
        script,
    };
    let result = if opts.sabotage_bookkeeping {
        run_scenario_sabotaged(&scenario)
    } else {
        run_scenario(&scenario)
    };
    let trace = match result {
        Ok(trace) => trace,
        Err(err) => return fail(err.to_string()),
    };
    let tsv = trace.to_tsv();
    match &opts.out {
        Some(out) => {
            if let Err(err) = fs::write(out, &tsv) {
                return fail(format!("cannot write {}: {err}", out.display()));
            }
        }
        None => print!("{tsv}"),
    }
    if trace.passed() {
        println!(
            "run: ok (events={}, max_net={})",
            trace.rows.len(),
            trace.max_net
        );
        0
    } else {
        eprintln!("run: FAIL at {}", first_violation(&trace));
        EXIT_VIOLATION
    }
}

/// The earliest step where the adversary came out ahead, or the first
/// invariant breach when the books stayed level.
fn first_violation(trace: &Trace) -> String {
    if let Some(row) = trace.rows.iter().find(|row| row.net > 0) {
        return format!("step {}: {} (net={})", row.step, row.event, row.net);
    }
    if let Some(breach) = trace.breaches.first() {
        return breach.clone();
    }
    format!("max_net={}", trace.max_net)
}

fn cmd_fuzz(opts: &Opts) -> u8 {
    let constants = match opts.constants() {
        Ok(constants) => constants,
        Err(message) => return fail(message),
    };
    if opts.trials == 0 {
        return fail("fuzz needs --trials >= 1");
    }
    let config = FuzzConfig {
        trials: opts.trials,
        master_seed: opts.seed,
        backend: opts.backend.kind(),
        constants,
        sabotage_bookkeeping: opts.sabotage_bookkeeping,
        ..FuzzConfig::default()
    };
    let report = run_fuzz(&config);
    println!(
        "fuzz: trials={} backend={} seed={} max_events={}",
        report.trials,
        opts.backend.name(),
        opts.seed,
        config.max_events
    );
    println!("fuzz: violations={}", report.violations.len());
    if report.passed() {
        return 0;
    }
    for violation in &report.violations {
        println!(
            "fuzz: trial {} max_net={} breaches={} shrunk to {} events",
            violation.index,
            violation.max_net,
            violation.breaches.len(),
            violation.shrunk.script.len()
        );
    }
    let repro = opts
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("boltpay-repro.scn"));
    let first = &report.violations[0];
    match fs::write(&repro, first.shrunk.to_script()) {
        Ok(()) => println!("fuzz: repro written to {}", repro.display()),
        Err(err) => eprintln!("error: cannot write {}: {err}", repro.display()),
    }
    EXIT_VIOLATION
}

struct GameRow {
    name: &'static str,
    analytic: f64,
    empirical: f64,
}

fn cmd_games(opts: &Opts) -> u8 {
    if opts.backend != Backend::Toy {
        return fail("games need --backend toy; the ideal backend has nothing to measure");
    }
    if opts.trials == 0 {
        return fail("games need --trials >= 1");
    }
    let mut ctx = match LightningContext::toy_setup(4, 2, 2, opts.seed) {
        Ok(ctx) => ctx,
        Err(err) => return fail(err.to_string()),
    };
    let rows = match games_table(&mut ctx, opts.trials) {
        Ok(rows) => rows,
        Err(err) => return fail(err.to_string()),
    };
    println!(
        "games: backend=toy trials={} seed={}",
        opts.trials, opts.seed
    );
    println!(
        "{:<28} {:>9} {:>10} {:>8}  verdict",
        "game / adversary", "analytic", "empirical", "3sigma"
    );
    let mut outside = 0usize;
    for row in &rows {
        let band = three_sigma(row.analytic, opts.trials);
        let ok = (row.empirical - row.analytic).abs() <= band;
        if !ok {
            outside += 1;
        }
        println!(
            "{:<28} {:>9.4} {:>10.4} {:>8.4}  {}",
            row.name,
            row.analytic,
            row.empirical,
            band,
            if ok { "ok" } else { "OUTSIDE" }
        );
    }
    if outside == 0 {
        println!("games: all rates within 3 sigma");
        0
    } else {
        eprintln!("games: {outside} rate(s) outside the 3 sigma band");
        EXIT_VIOLATION
    }
}

fn games_table(ctx: &mut LightningContext, trials: usize) -> Result<Vec<GameRow>, LightningError> {
    let (reverify, random_cert, collision, basis) = {
        let hash = ctx.toy_hash().expect("games run on the toy backend");
        (
            oracle_reverify_rate(hash, 2),
            oracle_random_cert_rate(hash, 2),
            oracle_serial_collision_rate(hash, 2),
            oracle_basis_duplicate_rate(hash, 2),
        )
    };
    Ok(vec![
        GameRow {
            name: "game_1 / extractor",
            analytic: 1.0,
            empirical: estimate(ctx, trials, |c| run_game1(c, &mut Extractor))?,
        },
        GameRow {
            name: "game_1 / random certificate",
            analytic: random_cert,
            empirical: estimate(ctx, trials, |c| run_game1(c, &mut RandomCert))?,
        },
        GameRow {
            name: "game_1 / empty certificate",
            analytic: 0.0,
            empirical: estimate(ctx, trials, |c| run_game1(c, &mut EmptyCert))?,
        },
        GameRow {
            name: "game_2 / extract and keep",
            analytic: reverify,
            empirical: estimate(ctx, trials, |c| run_game2(c, &mut ExtractAndKeep))?,
        },
        GameRow {
            name: "game_2 / extract and swap",
            analytic: collision,
            empirical: estimate(ctx, trials, |c| run_game2(c, &mut ExtractAndSwap))?,
        },
        GameRow {
            name: "game_2 / zero bolt",
            analytic: 0.0,
            empirical: estimate(ctx, trials, |c| run_game2(c, &mut ZeroBolt))?,
        },
        GameRow {
            name: "copy / two honest bolts",
            analytic: collision,
            empirical: estimate(ctx, trials, |c| run_copy_game(c, &mut TwoHonestBolts))?,
        },
        GameRow {
            name: "copy / basis duplicate",
            analytic: basis,
            empirical: estimate(ctx, trials, |c| run_copy_game(c, &mut BasisDuplicate))?,
        },
    ])
}

fn estimate<F>(
    ctx: &mut LightningContext,
    trials: usize,
    mut play: F,
) -> Result<f64, LightningError>
where
    F: FnMut(&mut LightningContext) -> Result<bool, LightningError>,
{
    let mut wins = 0usize;
    for _ in 0..trials {
        if play(ctx)? {
            wins += 1;
        }
    }
    Ok(wins as f64 / trials as f64)
}

const SELFTEST_HONEST: &str = "\
INVOKE A#50
INVOKE B#10
HONEST A MINT 20
HONEST A PAY B 0
TICK 50
HONEST B REDEEM 0
";

const SELFTEST_GAUNTLET: &str = "\
INVOKE A#60
INVOKE M#30
HONEST M MINT 15
CORRUPT M
ADV DOUBLE_SPEND A A 0
UNCORRUPT M
TICK 50
HONEST A REDEEM 0
";

fn cmd_selftest(seed: u64) -> u8 {
    let mut checks = 0usize;
    let mut pass = |name: &str| {
        checks += 1;
        println!("selftest: {name} ok");
    };
    let scenario = |text: &str, seed: u64| -> Result<Scenario, String> {
        let script = parse_script(text).map_err(|e| e.to_string())?;
        Ok(Scenario {
            seed,
            backend: BackendKind::Ideal,
            constants: Constants::default(),
            script,
        })
    };

    let honest = match scenario(SELFTEST_HONEST, seed) {
        Ok(s) => s,
        Err(e) => return selftest_fail("honest demo", &e),
    };
    let first = match run_scenario(&honest) {
        Ok(trace) if trace.passed() && trace.max_net == 0 => trace,
        Ok(trace) => return selftest_fail("honest demo", &format!("max_net={}", trace.max_net)),
        Err(e) => return selftest_fail("honest demo", &e.to_string()),
    };
    pass("honest demo nets zero");

    match run_scenario(&honest) {
        Ok(again) if again.to_tsv() == first.to_tsv() => pass("equal seeds give equal traces"),
        Ok(_) => return selftest_fail("determinism", "traces differ across equal runs"),
        Err(e) => return selftest_fail("determinism", &e.to_string()),
    }

    let gauntlet = match scenario(SELFTEST_GAUNTLET, seed) {
        Ok(s) => s,
        Err(e) => return selftest_fail("double spend gauntlet", &e),
    };
    match run_scenario(&gauntlet) {
        Ok(trace) if trace.passed() => pass("double spend nets nothing"),
        Ok(trace) => {
            return selftest_fail(
                "double spend gauntlet",
                &format!("max_net={}", trace.max_net),
            )
        }
        Err(e) => return selftest_fail("double spend gauntlet", &e.to_string()),
    }

    match run_scenario_sabotaged(&gauntlet) {
        Ok(trace) if !trace.passed() => pass("sabotaged books are caught"),
        Ok(_) => return selftest_fail("detector", "sabotaged bookkeeping went unnoticed"),
        Err(e) => return selftest_fail("detector", &e.to_string()),
    }

    let config = FuzzConfig {
        trials: 25,
        master_seed: seed,
        max_events: 60,
        ..FuzzConfig::default()
    };
    let report = run_fuzz(&config);
    if !report.passed() {
        return selftest_fail(
            "fuzz batch",
            &format!("{} violation(s)", report.violations.len()),
        );
    }
    if run_fuzz(&config) != report {
        return selftest_fail("fuzz batch", "report changed across equal runs");
    }
    pass("25 fuzz trials run clean twice");

    let mut ctx = match LightningContext::toy_setup(4, 2, 2, seed) {
        Ok(ctx) => ctx,
        Err(e) => return selftest_fail("toy games", &e.to_string()),
    };
    let reverify = oracle_reverify_rate(ctx.toy_hash().expect("toy backend"), 2);
    match estimate(&mut ctx, 300, |c| run_game1(c, &mut Extractor)) {
        Ok(rate) => {
            if rate != 1.0 {
                return selftest_fail("toy games", &format!("extractor rate {rate}"));
            }
            pass("extractor wins game 1 every time");
        }
        Err(e) => return selftest_fail("toy games", &e.to_string()),
    }
    match estimate(&mut ctx, 1500, |c| run_game2(c, &mut ExtractAndKeep)) {
        Ok(rate) if (rate - reverify).abs() <= three_sigma(reverify, 1500) => {
            pass("post extraction reverify tracks the oracle")
        }
        Ok(rate) => {
            return selftest_fail(
                "toy games",
                &format!("reverify rate {rate} vs oracle {reverify}"),
            )
        }
        Err(e) => return selftest_fail("toy games", &e.to_string()),
    }

    println!("selftest: all {checks} checks passed");
    0
}

fn selftest_fail(name: &str, detail: &str) -> u8 {
    eprintln!("selftest: {name} FAILED: {detail}");
    EXIT_VIOLATION
}
