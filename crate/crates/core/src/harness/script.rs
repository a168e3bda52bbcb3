//! Text form of scenario scripts.
//!
//! One event per line, `#` starts a comment, blank lines are ignored:
//!
//! ```text
//! INVOKE A#50            # register A with endowment 50
//! INVOKE B#10
//! HONEST A MINT 30       # A escrows 30 coins into a fresh note
//! HONEST A PAY B 0       # A hands holding 0 to B
//! CORRUPT B
//! TICK 5
//! ADV DOUBLE_SPEND A A 0 # spend pool note 0 twice
//! UNCORRUPT B
//! ```
//!
//! Parties are referred to by the short name from their INVOKE line; the
//! endowment is written only there. References to names with no earlier
//! INVOKE are rejected at parse time with the line number, as are duplicate
//! INVOKEs of the same name.

use super::strategy::Strategy;
use super::{Event, HonestAction};
use crate::party::PartyId;
use std::collections::BTreeMap;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

fn err<T>(line: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        line,
        message: message.into(),
    })
}

/// A `#` opens a comment only at the start of a line or after whitespace;
/// the `#` inside a party id like `A#50` stays.
fn strip_comment(raw: &str) -> &str {
    let bytes = raw.as_bytes();
    for (i, &b) in bytes.iter().enumerate() {
        if b == b'#' && (i == 0 || bytes[i - 1].is_ascii_whitespace()) {
            return &raw[..i];
        }
    }
    raw
}

pub fn parse_script(text: &str) -> Result<Vec<Event>, ParseError> {
    let mut names: BTreeMap<String, PartyId> = BTreeMap::new();
    let mut events = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        events.push(parse_line(&tokens, &mut names, line_no)?);
    }
    Ok(events)
}

fn parse_line(
    tokens: &[&str],
    names: &mut BTreeMap<String, PartyId>,
    line: usize,
) -> Result<Event, ParseError> {
    match tokens[0] {
        "INVOKE" => {
            arity(tokens, 2, line)?;
            let pid = match PartyId::parse(tokens[1]) {
                Ok(pid) => pid,
                Err(e) => return err(line, e.to_string()),
            };
            if names.contains_key(pid.name()) {
                return err(line, format!("party {:?} was already invoked", pid.name()));
            }
            names.insert(pid.name().to_string(), pid.clone());
            Ok(Event::Invoke(pid))
        }
        "CORRUPT" => {
            arity(tokens, 2, line)?;
            Ok(Event::Corrupt(party(tokens[1], names, line)?))
        }
        "UNCORRUPT" => {
            arity(tokens, 2, line)?;
            Ok(Event::Uncorrupt(party(tokens[1], names, line)?))
        }
        "TICK" => {
            arity(tokens, 2, line)?;
            let ticks = number(tokens[1], "tick count", line)?;
            if ticks == 0 {
                return err(line, "tick count must be positive");
            }
            Ok(Event::AdvanceTime(ticks))
        }
        "HONEST" => {
            if tokens.len() < 3 {
                return err(line, "expected HONEST <party> <action> ...");
            }
            let pid = party(tokens[1], names, line)?;
            let action = match tokens[2] {
                "MINT" => {
                    arity(tokens, 4, line)?;
                    HonestAction::Mint {
                        face: number(tokens[3], "face value", line)?,
                    }
                }
                "PAY" => {
                    arity(tokens, 5, line)?;
                    HonestAction::Pay {
                        payee: party(tokens[3], names, line)?,
                        holding: index(tokens[4], line)?,
                    }
                }
                "CLAIM" => {
                    arity(tokens, 4, line)?;
                    HonestAction::Claim {
                        ssid: number(tokens[3], "contract id", line)?,
                    }
                }
                "FINALIZE" => {
                    arity(tokens, 4, line)?;
                    HonestAction::Finalize {
                        ssid: number(tokens[3], "contract id", line)?,
                    }
                }
                "REDEEM" => {
                    arity(tokens, 4, line)?;
                    HonestAction::Redeem {
                        holding: index(tokens[3], line)?,
                    }
                }
                other => return err(line, format!("unknown honest action {other:?}")),
            };
            Ok(Event::Honest(pid, action))
        }
        "ADV" => {
            if tokens.len() < 2 {
                return err(line, "expected ADV <strategy> ...");
            }
            let strategy = match tokens[1] {
                "DOUBLE_SPEND" => {
                    arity_range(tokens, 4, 5, line)?;
                    Strategy::DoubleSpend {
                        payee1: party(tokens[2], names, line)?,
                        payee2: party(tokens[3], names, line)?,
                        note: optional_index(tokens.get(4), line)?,
                    }
                }
                "FORGE_CERT" => {
                    arity(tokens, 4, line)?;
                    Strategy::ForgeCertificate {
                        via: party(tokens[2], names, line)?,
                        ssid: number(tokens[3], "contract id", line)?,
                    }
                }
                "MALICIOUS_CLAIM" => {
                    arity(tokens, 4, line)?;
                    Strategy::MaliciousLostClaim {
                        via: party(tokens[2], names, line)?,
                        ssid: number(tokens[3], "contract id", line)?,
                    }
                }
                "CLAIM_OWN" => {
                    arity_range(tokens, 4, 5, line)?;
                    Strategy::ClaimOwnNote {
                        via: party(tokens[2], names, line)?,
                        payee: party(tokens[3], names, line)?,
                        note: optional_index(tokens.get(4), line)?,
                    }
                }
                "REPLAY" => {
                    arity_range(tokens, 4, 5, line)?;
                    Strategy::ReplayPayment {
                        payee1: party(tokens[2], names, line)?,
                        payee2: party(tokens[3], names, line)?,
                        note: optional_index(tokens.get(4), line)?,
                    }
                }
                other => return err(line, format!("unknown adversary strategy {other:?}")),
            };
            Ok(Event::Adversary(strategy))
        }
        other => err(line, format!("unknown directive {other:?}")),
    }
}

fn arity(tokens: &[&str], want: usize, line: usize) -> Result<(), ParseError> {
    if tokens.len() == want {
        Ok(())
    } else {
        err(
            line,
            format!(
                "{} takes {} arguments, got {}",
                tokens[0],
                want - 1,
                tokens.len() - 1
            ),
        )
    }
}

fn arity_range(tokens: &[&str], min: usize, max: usize, line: usize) -> Result<(), ParseError> {
    if (min..=max).contains(&tokens.len()) {
        Ok(())
    } else {
        err(
            line,
            format!(
                "{} {} takes {} to {} arguments, got {}",
                tokens[0],
                tokens[1],
                min - 2,
                max - 2,
                tokens.len() - 2
            ),
        )
    }
}

fn party(
    name: &str,
    names: &BTreeMap<String, PartyId>,
    line: usize,
) -> Result<PartyId, ParseError> {
    match names.get(name) {
        Some(pid) => Ok(pid.clone()),
        None => err(line, format!("unknown party {name:?} (no earlier INVOKE)")),
    }
}

fn number(token: &str, what: &str, line: usize) -> Result<u64, ParseError> {
    token.parse::<u64>().map_err(|_| ParseError {
        line,
        message: format!("{what} must be a number, got {token:?}"),
    })
}

fn index(token: &str, line: usize) -> Result<usize, ParseError> {
    token.parse::<usize>().map_err(|_| ParseError {
        line,
        message: format!("index must be a number, got {token:?}"),
    })
}

fn optional_index(token: Option<&&str>, line: usize) -> Result<usize, ParseError> {
    match token {
        Some(t) => index(t, line),
        None => Ok(0),
    }
}
