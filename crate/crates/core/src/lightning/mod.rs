//! Bolt generation, verification, and custody.
//!
//! A bolt is an unclonable token whose serial number anyone can check. The
//! context tracks every bolt it has issued: who holds it (custody), whether
//! it is still Live or has been Consumed by certificate extraction, and the
//! backend payload. Two backends share one interface:
//!
//! * **Ideal** - an axiomatic registry. Serials are hashes of hidden random
//!   preimages, verification is an exact lookup, and cloning simply cannot
//!   be expressed. This is the backend the security suite runs against.
//! * **Toy** - a real statevector simulation over a truth-table hash (see
//!   [`toy`]), small enough to measure, clone-attack, and compare against
//!   brute-force analytics.
//!
//! Certificate extraction is the destructive trade at the heart of the
//! payment system: measuring a bolt yields a classical preimage of its
//! serial and destroys the bolt.

pub mod toy;

use crate::bits::BitString;
use crate::party::PartyId;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;
use toy::{FullBolt, ToyHash};

pub const MIN_SECURITY_PARAM: usize = 8;
pub const DEFAULT_SECURITY_PARAM: usize = 256;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum LightningError {
    #[error("security parameter {0} is below the minimum of {MIN_SECURITY_PARAM}")]
    SecurityParamTooSmall(usize),
    #[error("bad toy parameters: {0}")]
    BadToyParams(String),
    #[error("operation is not supported by this backend")]
    WrongBackend,
    #[error("unknown bolt")]
    UnknownBolt,
    #[error("bolt has been consumed")]
    Consumed,
    #[error("caller does not have custody of the bolt")]
    CustodyMismatch,
    #[error("state shape does not match the configured backend")]
    DimensionMismatch,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum BackendKind {
    Ideal,
    Toy,
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BoltId(u64);

impl fmt::Display for BoltId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "b{}", self.0)
    }
}

impl fmt::Debug for BoltId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BoltId({})", self.0)
    }
}

/// Who physically holds a bolt. The adversary is a single pooled holder: all
/// notes stolen through corruption end up there.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum Holder {
    Party(PartyId),
    Adversary,
}

impl fmt::Display for Holder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Holder::Party(pid) => write!(f, "{pid}"),
            Holder::Adversary => f.write_str("adversary"),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum BoltStatus {
    Live,
    Consumed,
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SerialNumber(BitString);

impl SerialNumber {
    pub fn from_bits(bits: BitString) -> Self {
        SerialNumber(bits)
    }

    pub fn bits(&self) -> &BitString {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_hex(&self) -> String {
        self.0.to_hex()
    }

    pub fn from_hex(s: &str, len: usize) -> Result<Self, crate::bits::BitError> {
        BitString::from_hex(s, len).map(SerialNumber)
    }

    pub fn write_canonical(&self, out: &mut Vec<u8>) {
        self.0.write_canonical(out);
    }
}

impl fmt::Display for SerialNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for SerialNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Serial({})", self.to_hex())
    }
}

/// Classical witness that a bolt with the matching serial was destroyed.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Certificate(BitString);

impl Certificate {
    pub fn from_bits(bits: BitString) -> Self {
        Certificate(bits)
    }

    pub fn bits(&self) -> &BitString {
        &self.0
    }

    pub fn into_bits(self) -> BitString {
        self.0
    }

    pub fn to_hex(&self) -> String {
        self.0.to_hex()
    }

    pub fn from_hex(s: &str, len: usize) -> Result<Self, crate::bits::BitError> {
        BitString::from_hex(s, len).map(Certificate)
    }

    pub fn write_canonical(&self, out: &mut Vec<u8>) {
        self.0.write_canonical(out);
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Certificate({})", self.to_hex())
    }
}

/// Self-contained description of the serial hash, embeddable in contract
/// parameters so the arbitration circuit can evaluate it on its own.
#[derive(Clone)]
pub enum HashSpec {
    Ideal { serial_len: usize },
    Toy { hash: Arc<ToyHash>, n: usize },
}

impl HashSpec {
    pub fn serial_len(&self) -> usize {
        match self {
            HashSpec::Ideal { serial_len } => *serial_len,
            HashSpec::Toy { hash, n } => hash.out_bits() as usize * n,
        }
    }

    pub fn cert_len(&self) -> usize {
        match self {
            HashSpec::Ideal { serial_len } => 2 * serial_len,
            HashSpec::Toy { hash, n } => hash.in_bits() as usize * n,
        }
    }

    /// Hash a candidate certificate; None for anything of the wrong length.
    pub fn eval(&self, x: &BitString) -> Option<SerialNumber> {
        if x.len() != self.cert_len() {
            return None;
        }
        match self {
            HashSpec::Ideal { serial_len } => Some(ideal_hash(*serial_len, x)),
            HashSpec::Toy { hash, n } => {
                let blocks = x.split_values(hash.in_bits() as usize)?;
                debug_assert_eq!(blocks.len(), *n);
                let mut s = BitString::zeros(0);
                for b in blocks {
                    let y = hash.eval_block(b);
                    s = s.concat(&BitString::from_value(y as u64, hash.out_bits() as usize).ok()?);
                }
                Some(SerialNumber(s))
            }
        }
    }

    pub fn write_canonical(&self, out: &mut Vec<u8>) {
        match self {
            HashSpec::Ideal { serial_len } => {
                out.push(0);
                out.extend_from_slice(&(*serial_len as u64).to_le_bytes());
            }
            HashSpec::Toy { hash, n } => {
                out.push(1);
                out.extend_from_slice(&(*n as u64).to_le_bytes());
                out.extend_from_slice(hash.digest());
            }
        }
    }
}

impl PartialEq for HashSpec {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (HashSpec::Ideal { serial_len: a }, HashSpec::Ideal { serial_len: b }) => a == b,
            (HashSpec::Toy { hash: ha, n: na }, HashSpec::Toy { hash: hb, n: nb }) => {
                na == nb && ha.digest() == hb.digest()
            }
            _ => false,
        }
    }
}

impl Eq for HashSpec {}

impl fmt::Debug for HashSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HashSpec::Ideal { serial_len } => write!(f, "HashSpec::Ideal({serial_len})"),
            HashSpec::Toy { hash, n } => {
                write!(
                    f,
                    "HashSpec::Toy({}x{}->{})",
                    n,
                    hash.in_bits(),
                    hash.out_bits()
                )
            }
        }
    }
}

/// Counter-mode expansion of SHA-256 down/up to `serial_len` bits.
fn ideal_hash(serial_len: usize, x: &BitString) -> SerialNumber {
    let need = serial_len.div_ceil(8);
    let mut bytes = Vec::with_capacity(need);
    let mut counter = 0u32;
    while bytes.len() < need {
        let mut h = Sha256::new();
        h.update(b"bolt-serial");
        h.update((serial_len as u64).to_le_bytes());
        h.update((x.len() as u64).to_le_bytes());
        h.update(x.as_bytes());
        h.update(counter.to_le_bytes());
        bytes.extend_from_slice(&h.finalize());
        counter += 1;
    }
    bytes.truncate(need);
    SerialNumber(BitString::from_bytes_truncated(&bytes, serial_len))
}

enum Payload {
    Preimage(BitString),
    State(FullBolt),
}

struct BoltRecord {
    status: BoltStatus,
    custody: Holder,
    serial_at_gen: SerialNumber,
    payload: Payload,
}

enum BackendData {
    Ideal { serial_len: usize },
    Toy { hash: Arc<ToyHash>, n: usize },
}

/// Issuer, verifier, and custody registry for bolts.
///
/// All randomness (preimages, measurement outcomes, adversarial coin flips)
/// flows through the context's seeded rng, so equal seeds replay exactly.
pub struct LightningContext {
    backend: BackendData,
    rng: ChaCha12Rng,
    registry: BTreeMap<BoltId, BoltRecord>,
    next_id: u64,
}

impl fmt::Debug for LightningContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LightningContext")
            .field("backend", &self.backend_kind())
            .field("bolts", &self.registry.len())
            .finish_non_exhaustive()
    }
}

impl LightningContext {
    pub fn setup(
        kind: BackendKind,
        security_param: usize,
        seed: u64,
    ) -> Result<Self, LightningError> {
        if security_param < MIN_SECURITY_PARAM {
            return Err(LightningError::SecurityParamTooSmall(security_param));
        }
        match kind {
            BackendKind::Ideal => Ok(LightningContext {
                backend: BackendData::Ideal {
                    serial_len: security_param,
                },
                rng: ChaCha12Rng::seed_from_u64(seed),
                registry: BTreeMap::new(),
                next_id: 1,
            }),
            BackendKind::Toy => Self::toy_setup(4, 2, 2, seed),
        }
    }

    /// Statevector backend over a fresh seeded regular hash.
    pub fn toy_setup(
        in_bits: u32,
        out_bits: u32,
        n: usize,
        seed: u64,
    ) -> Result<Self, LightningError> {
        if n == 0 || n > 32 {
            return Err(LightningError::BadToyParams(format!(
                "n = {n} out of range 1..=32"
            )));
        }
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let hash = ToyHash::random_regular(in_bits, out_bits, &mut rng)?;
        Ok(LightningContext {
            backend: BackendData::Toy {
                hash: Arc::new(hash),
                n,
            },
            rng,
            registry: BTreeMap::new(),
            next_id: 1,
        })
    }

    pub fn backend_kind(&self) -> BackendKind {
        match self.backend {
            BackendData::Ideal { .. } => BackendKind::Ideal,
            BackendData::Toy { .. } => BackendKind::Toy,
        }
    }

    pub fn serial_len(&self) -> usize {
        self.hash_spec().serial_len()
    }

    pub fn cert_len(&self) -> usize {
        self.hash_spec().cert_len()
    }

    pub fn hash_spec(&self) -> HashSpec {
        match &self.backend {
            BackendData::Ideal { serial_len } => HashSpec::Ideal {
                serial_len: *serial_len,
            },
            BackendData::Toy { hash, n } => HashSpec::Toy {
                hash: Arc::clone(hash),
                n: *n,
            },
        }
    }

    pub fn hash_cert(&self, x: &BitString) -> Option<SerialNumber> {
        self.hash_spec().eval(x)
    }

    /// Issue a fresh bolt into `holder`'s custody.
    pub fn gen(&mut self, holder: Holder) -> BoltId {
        let (serial, payload) = match &self.backend {
            BackendData::Ideal { serial_len } => {
                let preimage = BitString::random(2 * serial_len, &mut self.rng);
                let serial = ideal_hash(*serial_len, &preimage);
                (serial, Payload::Preimage(preimage))
            }
            BackendData::Toy { hash, n } => {
                let bolt = gen_state(hash, *n, &mut self.rng);
                (bolt.claimed_serial(hash.out_bits()), Payload::State(bolt))
            }
        };
        let id = BoltId(self.next_id);
        self.next_id += 1;
        self.registry.insert(
            id,
            BoltRecord {
                status: BoltStatus::Live,
                custody: holder,
                serial_at_gen: serial,
                payload,
            },
        );
        id
    }

    /// Check a bolt's serial number. None is the verifier's reject outcome:
    /// unknown handles, consumed bolts, and (on the toy backend) states that
    /// fail the projective measurement. Never an error; anyone may point the
    /// verifier at anything.
    pub fn verify(&mut self, id: BoltId) -> Option<SerialNumber> {
        let record = self.registry.get_mut(&id)?;
        if record.status == BoltStatus::Consumed {
            return None;
        }
        match (&self.backend, &mut record.payload) {
            (BackendData::Ideal { .. }, Payload::Preimage(_)) => Some(record.serial_at_gen.clone()),
            (BackendData::Toy { hash, n }, Payload::State(state)) => {
                toy::verify_state(hash, *n, &mut self.rng, state).expect("registered shape")
            }
            _ => unreachable!("payload always matches backend"),
        }
    }

    /// Destroy a bolt in exchange for a preimage of its serial number.
    pub fn extract_certificate(
        &mut self,
        id: BoltId,
        by: &Holder,
    ) -> Result<Certificate, LightningError> {
        let record = self
            .registry
            .get_mut(&id)
            .ok_or(LightningError::UnknownBolt)?;
        if record.status == BoltStatus::Consumed {
            return Err(LightningError::Consumed);
        }
        if record.custody != *by {
            return Err(LightningError::CustodyMismatch);
        }
        let cert = match (&self.backend, &mut record.payload) {
            (BackendData::Ideal { .. }, Payload::Preimage(x)) => Certificate(x.clone()),
            (BackendData::Toy { hash, n }, Payload::State(state)) => Certificate(
                toy::extract_state(hash, *n, &mut self.rng, state).expect("registered shape"),
            ),
            _ => unreachable!("payload always matches backend"),
        };
        record.status = BoltStatus::Consumed;
        Ok(cert)
    }

    /// Hand a Live bolt from one holder to another.
    pub fn transfer(
        &mut self,
        id: BoltId,
        from: &Holder,
        to: Holder,
    ) -> Result<(), LightningError> {
        let record = self
            .registry
            .get_mut(&id)
            .ok_or(LightningError::UnknownBolt)?;
        if record.status == BoltStatus::Consumed {
            return Err(LightningError::Consumed);
        }
        if record.custody != *from {
            return Err(LightningError::CustodyMismatch);
        }
        record.custody = to;
        Ok(())
    }

    pub fn custodian(&self, id: BoltId) -> Option<&Holder> {
        self.registry.get(&id).map(|r| &r.custody)
    }

    pub fn status(&self, id: BoltId) -> Option<BoltStatus> {
        self.registry.get(&id).map(|r| r.status)
    }

    pub fn bolts_held_by(&self, holder: &Holder) -> Vec<BoltId> {
        self.registry
            .iter()
            .filter(|(_, r)| r.custody == *holder && r.status == BoltStatus::Live)
            .map(|(&id, _)| id)
            .collect()
    }

    /// Two Live bolts sharing a serial would be a cloning event. On the ideal
    /// backend this must never happen; the harness asserts it after every
    /// step. (Toy serials are short enough to collide honestly.)
    pub fn live_serial_collision(&self) -> Option<SerialNumber> {
        let mut seen = BTreeMap::new();
        for record in self.registry.values() {
            if record.status != BoltStatus::Live {
                continue;
            }
            if let Some(()) = seen.insert(record.serial_at_gen.clone(), ()) {
                return Some(record.serial_at_gen.clone());
            }
        }
        None
    }

    pub fn random_bits(&mut self, len: usize) -> BitString {
        BitString::random(len, &mut self.rng)
    }

    // ── Raw toy-backend operations (loose states, no custody) ──────────────

    pub fn toy_hash(&self) -> Option<&ToyHash> {
        match &self.backend {
            BackendData::Toy { hash, .. } => Some(hash),
            BackendData::Ideal { .. } => None,
        }
    }

    pub fn toy_shape(&self) -> Option<(usize, usize)> {
        match &self.backend {
            BackendData::Toy { hash, n } => Some((*n, hash.domain_size())),
            BackendData::Ideal { .. } => None,
        }
    }

    pub fn toy_gen(&mut self) -> Result<FullBolt, LightningError> {
        match &self.backend {
            BackendData::Toy { hash, n } => Ok(gen_state(hash, *n, &mut self.rng)),
            BackendData::Ideal { .. } => Err(LightningError::WrongBackend),
        }
    }

    pub fn toy_verify(
        &mut self,
        bolt: &mut FullBolt,
    ) -> Result<Option<SerialNumber>, LightningError> {
        match &self.backend {
            BackendData::Toy { hash, n } => toy::verify_state(hash, *n, &mut self.rng, bolt),
            BackendData::Ideal { .. } => Err(LightningError::WrongBackend),
        }
    }

    pub fn toy_extract(&mut self, bolt: &mut FullBolt) -> Result<Certificate, LightningError> {
        self.toy_extract_bits(bolt).map(Certificate)
    }

    pub fn toy_extract_bits(&mut self, bolt: &mut FullBolt) -> Result<BitString, LightningError> {
        match &self.backend {
            BackendData::Toy { hash, n } => toy::extract_state(hash, *n, &mut self.rng, bolt),
            BackendData::Ideal { .. } => Err(LightningError::WrongBackend),
        }
    }
}

/// Fresh honest state: per mini, a uniformly random output value and the
/// uniform superposition over its preimages.
fn gen_state(hash: &ToyHash, n: usize, rng: &mut ChaCha12Rng) -> FullBolt {
    let minis = (0..n)
        .map(|_| {
            let y = rng.gen_range(0..hash.range_size()) as u16;
            toy::MiniBolt::uniform_over_preimages(hash, y)
        })
        .collect();
    FullBolt { minis }
}
