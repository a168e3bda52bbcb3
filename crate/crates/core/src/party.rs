//! Party identities.
//!
//! A party is identified by a short name together with its initial coin
//! endowment; the pair is the identity, so `A#50` and `A#30` are different
//! parties. The `name#endowment` encoding is used on the wire and in traces.

use std::fmt;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum PartyIdError {
    #[error("party name must be nonempty and must not contain '#'")]
    BadName,
    #[error("malformed party id {0:?}: expected name#endowment")]
    Malformed(String),
    #[error("bad endowment in party id {0:?}")]
    BadEndowment(String),
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PartyId {
    name: String,
    endowment: u64,
}

impl PartyId {
    pub fn new(name: &str, endowment: u64) -> Result<Self, PartyIdError> {
        if name.is_empty() || name.contains('#') || name.contains(char::is_whitespace) {
            return Err(PartyIdError::BadName);
        }
        Ok(PartyId {
            name: name.to_string(),
            endowment,
        })
    }

    pub fn parse(encoded: &str) -> Result<Self, PartyIdError> {
        let (name, endow) = encoded
            .split_once('#')
            .ok_or_else(|| PartyIdError::Malformed(encoded.to_string()))?;
        let endowment = endow
            .parse::<u64>()
            .map_err(|_| PartyIdError::BadEndowment(encoded.to_string()))?;
        PartyId::new(name, endowment)
    }

    pub fn encode(&self) -> String {
        format!("{}#{}", self.name, self.endowment)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn endowment(&self) -> u64 {
        self.endowment
    }

    pub fn write_canonical(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&(self.name.len() as u64).to_le_bytes());
        out.extend_from_slice(self.name.as_bytes());
        out.extend_from_slice(&self.endowment.to_le_bytes());
    }
}

impl fmt::Display for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.name, self.endowment)
    }
}

impl fmt::Debug for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PartyId({self})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_and_encode() {
        let pid = PartyId::parse("A#50").unwrap();
        assert_eq!(pid.name(), "A");
        assert_eq!(pid.endowment(), 50);
        assert_eq!(pid.encode(), "A#50");
    }

    #[test]
    fn rejects_bad_ids() {
        assert!(PartyId::parse("A").is_err());
        assert!(PartyId::parse("A#").is_err());
        assert!(PartyId::parse("A#x").is_err());
        assert!(PartyId::parse("#5").is_err());
        assert!(PartyId::new("a#b", 1).is_err());
        assert!(PartyId::new("a b", 1).is_err());
    }

    #[test]
    fn same_name_different_endowment_is_a_different_party() {
        assert_ne!(
            PartyId::parse("A#50").unwrap(),
            PartyId::parse("A#30").unwrap()
        );
    }

    proptest! {
        #[test]
        fn encode_round_trips(name in "[A-Za-z][A-Za-z0-9_]{0,8}", endowment in 0u64..1_000_000) {
            let pid = PartyId::new(&name, endowment).unwrap();
            prop_assert_eq!(PartyId::parse(&pid.encode()).unwrap(), pid);
        }
    }
}
