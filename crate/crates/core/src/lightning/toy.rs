//! Miniature statevector backend.
//!
//! The hash is a truth table on at most 12 input bits. A mini-bolt for output
//! `y` is the uniform superposition over the preimages of `y`; a full bolt is
//! `n` mini-bolts and its serial number is the concatenation of the `y`
//! values. Verification is the projective measurement onto the family of
//! preimage superpositions, extraction is a computational-basis measurement.
//! At these sizes the unforgeability games are played out for real: an
//! extractor wins the bolt-to-certificate game with certainty, and every
//! cloning attempt the library ships wins its game only at the small
//! brute-force-computable rate.

use super::{LightningContext, LightningError, SerialNumber};
use crate::bits::BitString;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

pub const MAX_IN_BITS: u32 = 12;

/// Truth table for the toy hash, with preimage buckets precomputed.
#[derive(Clone)]
pub struct ToyHash {
    in_bits: u32,
    out_bits: u32,
    table: Vec<u16>,
    buckets: Vec<Vec<usize>>,
    digest: [u8; 32],
}

impl ToyHash {
    /// Regular hash: every output has exactly `2^(in_bits - out_bits)` preimages,
    /// assigned by a seeded shuffle.
    pub fn random_regular(
        in_bits: u32,
        out_bits: u32,
        rng: &mut ChaCha12Rng,
    ) -> Result<Self, LightningError> {
        check_dims(in_bits, out_bits)?;
        let per_output = 1usize << (in_bits - out_bits);
        let mut table: Vec<u16> = (0..1usize << out_bits)
            .flat_map(|y| std::iter::repeat_n(y as u16, per_output))
            .collect();
        // Fisher-Yates, descending, so the draw order is pinned by the seed.
        for i in (1..table.len()).rev() {
            let j = rng.gen_range(0..=i);
            table.swap(i, j);
        }
        Self::from_table(in_bits, out_bits, table)
    }

    /// Arbitrary table. Rejected unless every output value has a preimage.
    pub fn from_table(
        in_bits: u32,
        out_bits: u32,
        table: Vec<u16>,
    ) -> Result<Self, LightningError> {
        check_dims(in_bits, out_bits)?;
        if table.len() != 1usize << in_bits {
            return Err(LightningError::BadToyParams(format!(
                "table length {} does not match 2^{in_bits}",
                table.len()
            )));
        }
        let range = 1usize << out_bits;
        let mut buckets = vec![Vec::new(); range];
        for (x, &y) in table.iter().enumerate() {
            if (y as usize) >= range {
                return Err(LightningError::BadToyParams(format!(
                    "table entry {y} out of range for {out_bits} output bits"
                )));
            }
            buckets[y as usize].push(x);
        }
        if buckets.iter().any(Vec::is_empty) {
            return Err(LightningError::BadToyParams(
                "every output value needs at least one preimage".into(),
            ));
        }
        let mut h = Sha256::new();
        h.update(in_bits.to_le_bytes());
        h.update(out_bits.to_le_bytes());
        for &y in &table {
            h.update(y.to_le_bytes());
        }
        Ok(ToyHash {
            in_bits,
            out_bits,
            table,
            buckets,
            digest: h.finalize().into(),
        })
    }

    pub fn in_bits(&self) -> u32 {
        self.in_bits
    }

    pub fn out_bits(&self) -> u32 {
        self.out_bits
    }

    pub fn domain_size(&self) -> usize {
        1 << self.in_bits
    }

    pub fn range_size(&self) -> usize {
        1 << self.out_bits
    }

    pub fn eval_block(&self, x: u64) -> u16 {
        self.table[x as usize]
    }

    pub fn preimages(&self, y: u16) -> &[usize] {
        &self.buckets[y as usize]
    }

    pub fn is_regular(&self) -> bool {
        let want = self.domain_size() / self.range_size();
        self.buckets.iter().all(|b| b.len() == want)
    }

    pub fn digest(&self) -> &[u8; 32] {
        &self.digest
    }
}

fn check_dims(in_bits: u32, out_bits: u32) -> Result<(), LightningError> {
    if in_bits == 0 || in_bits > MAX_IN_BITS || out_bits == 0 || out_bits >= in_bits {
        return Err(LightningError::BadToyParams(format!(
            "need 1 <= out_bits < in_bits <= {MAX_IN_BITS}, got in={in_bits} out={out_bits}"
        )));
    }
    Ok(())
}

/// One register: a state over `2^in_bits` basis vectors plus the output value
/// it was generated (or last collapsed) to.
#[derive(Clone, Debug)]
pub struct MiniBolt {
    pub amplitudes: Vec<Complex64>,
    pub serial_claim: u16,
}

impl MiniBolt {
    /// `|psi_y>`: uniform superposition over the preimages of `y`.
    pub fn uniform_over_preimages(hash: &ToyHash, y: u16) -> MiniBolt {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); hash.domain_size()];
        let pre = hash.preimages(y);
        let a = 1.0 / (pre.len() as f64).sqrt();
        for &x in pre {
            amplitudes[x] = Complex64::new(a, 0.0);
        }
        MiniBolt {
            amplitudes,
            serial_claim: y,
        }
    }

    pub fn basis_state(dim: usize, x: usize, claim: u16) -> MiniBolt {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[x] = Complex64::new(1.0, 0.0);
        MiniBolt {
            amplitudes,
            serial_claim: claim,
        }
    }

    pub fn zero(dim: usize) -> MiniBolt {
        MiniBolt {
            amplitudes: vec![Complex64::new(0.0, 0.0); dim],
            serial_claim: 0,
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(Complex64::norm_sqr).sum()
    }
}

#[derive(Clone, Debug)]
pub struct FullBolt {
    pub minis: Vec<MiniBolt>,
}

impl FullBolt {
    pub fn zero(n: usize, dim: usize) -> FullBolt {
        FullBolt {
            minis: (0..n).map(|_| MiniBolt::zero(dim)).collect(),
        }
    }

    /// Serial the bolt claims to have (concatenated per-mini outputs). A
    /// verification measurement is what actually vouches for it.
    pub fn claimed_serial(&self, out_bits: u32) -> SerialNumber {
        let mut s = BitString::zeros(0);
        for mini in &self.minis {
            s = s.concat(
                &BitString::from_value(mini.serial_claim as u64, out_bits as usize)
                    .expect("claim fits out_bits"),
            );
        }
        SerialNumber::from_bits(s)
    }
}

fn check_shape(hash: &ToyHash, n: usize, bolt: &FullBolt) -> Result<(), LightningError> {
    if bolt.minis.len() != n {
        return Err(LightningError::DimensionMismatch);
    }
    if bolt
        .minis
        .iter()
        .any(|m| m.amplitudes.len() != hash.domain_size())
    {
        return Err(LightningError::DimensionMismatch);
    }
    Ok(())
}

/// Measure one mini against `{ |psi_y><psi_y| } ∪ {fail}`.
///
/// On outcome `y` the state collapses to `|psi_y>` exactly; on fail it keeps
/// the renormalized residual (or stays zero if nothing is left).
fn measure_mini(hash: &ToyHash, rng: &mut ChaCha12Rng, mini: &mut MiniBolt) -> Option<u16> {
    let range = hash.range_size();
    let mut overlaps = Vec::with_capacity(range);
    for y in 0..range {
        let pre = hash.preimages(y as u16);
        let scale = 1.0 / (pre.len() as f64).sqrt();
        let a: Complex64 = pre.iter().map(|&x| mini.amplitudes[x]).sum::<Complex64>() * scale;
        overlaps.push(a);
    }
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (y, a) in overlaps.iter().enumerate() {
        acc += a.norm_sqr();
        if u < acc {
            *mini = MiniBolt::uniform_over_preimages(hash, y as u16);
            return Some(y as u16);
        }
    }
    // Fail outcome: project out every |psi_y> component.
    for (y, a) in overlaps.iter().enumerate() {
        let pre = hash.preimages(y as u16);
        let scale = 1.0 / (pre.len() as f64).sqrt();
        for &x in pre {
            mini.amplitudes[x] -= a * scale;
        }
    }
    let norm = mini.norm_sqr().sqrt();
    if norm > 1e-12 {
        for amp in &mut mini.amplitudes {
            *amp /= norm;
        }
    }
    None
}

/// Full verification: every mini must land on some `y`; the serial is the
/// concatenation. Any fail rejects the whole bolt.
pub(super) fn verify_state(
    hash: &ToyHash,
    n: usize,
    rng: &mut ChaCha12Rng,
    bolt: &mut FullBolt,
) -> Result<Option<SerialNumber>, LightningError> {
    check_shape(hash, n, bolt)?;
    let mut outcomes = Vec::with_capacity(n);
    let mut failed = false;
    for mini in &mut bolt.minis {
        match measure_mini(hash, rng, mini) {
            Some(y) => outcomes.push(y),
            None => failed = true,
        }
    }
    if failed {
        return Ok(None);
    }
    let mut s = BitString::zeros(0);
    for y in outcomes {
        s = s.concat(&BitString::from_value(y as u64, hash.out_bits() as usize).unwrap());
    }
    Ok(Some(SerialNumber::from_bits(s)))
}

/// Computational-basis measurement of every mini; collapses each register to
/// the sampled basis state and returns the concatenated preimage bits.
pub(super) fn extract_state(
    hash: &ToyHash,
    n: usize,
    rng: &mut ChaCha12Rng,
    bolt: &mut FullBolt,
) -> Result<BitString, LightningError> {
    check_shape(hash, n, bolt)?;
    let mut cert = BitString::zeros(0);
    for mini in &mut bolt.minis {
        let total: f64 = mini.norm_sqr();
        let mut x_out = 0usize;
        if total > 1e-12 {
            let u: f64 = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            for (x, amp) in mini.amplitudes.iter().enumerate() {
                acc += amp.norm_sqr();
                if u < acc {
                    x_out = x;
                    break;
                }
            }
        }
        *mini = MiniBolt::basis_state(hash.domain_size(), x_out, hash.eval_block(x_out as u64));
        cert = cert.concat(&BitString::from_value(x_out as u64, hash.in_bits() as usize).unwrap());
    }
    Ok(cert)
}

// ── Security games ──────────────────────────────────────────────────────────

/// Bolt-to-certificate, first game: the challenger generates a bolt and hands
/// it over; the adversary wins by producing a preimage of its serial.
pub trait Game1Adversary {
    fn play(&mut self, ctx: &mut LightningContext, bolt: FullBolt) -> (BitString, FullBolt);
}

/// Bolt-to-certificate, second game: the adversary fabricates both the
/// certificate and a bolt, and wins if the bolt verifies to the certificate's
/// hash.
pub trait Game2Adversary {
    fn play(&mut self, ctx: &mut LightningContext) -> (BitString, FullBolt);
}

/// Cloning game: the adversary submits two bolts and wins if both verify to
/// the same serial.
pub trait CopyAdversary {
    fn play(&mut self, ctx: &mut LightningContext) -> (FullBolt, FullBolt);
}

pub fn run_game1(
    ctx: &mut LightningContext,
    adversary: &mut dyn Game1Adversary,
) -> Result<bool, LightningError> {
    let mut bolt = ctx.toy_gen()?;
    let serial = ctx
        .toy_verify(&mut bolt)?
        .expect("freshly generated bolt verifies");
    let (cert, _residual) = adversary.play(ctx, bolt);
    Ok(ctx.hash_cert(&cert).is_some_and(|h| h == serial))
}

pub fn run_game2(
    ctx: &mut LightningContext,
    adversary: &mut dyn Game2Adversary,
) -> Result<bool, LightningError> {
    let (cert, mut bolt) = adversary.play(ctx);
    let Some(hashed) = ctx.hash_cert(&cert) else {
        return Ok(false);
    };
    Ok(ctx.toy_verify(&mut bolt)?.is_some_and(|s| s == hashed))
}

pub fn run_copy_game(
    ctx: &mut LightningContext,
    adversary: &mut dyn CopyAdversary,
) -> Result<bool, LightningError> {
    let (mut left, mut right) = adversary.play(ctx);
    let s_left = ctx.toy_verify(&mut left)?;
    let s_right = ctx.toy_verify(&mut right)?;
    Ok(match (s_left, s_right) {
        (Some(a), Some(b)) => a == b,
        _ => false,
    })
}

// ── Built-in adversaries ────────────────────────────────────────────────────

/// Measures the bolt in the computational basis; always wins game 1.
pub struct Extractor;

impl Game1Adversary for Extractor {
    fn play(&mut self, ctx: &mut LightningContext, mut bolt: FullBolt) -> (BitString, FullBolt) {
        let cert = ctx
            .toy_extract_bits(&mut bolt)
            .expect("shape fixed by challenger");
        (cert, bolt)
    }
}

/// Ignores the bolt and guesses a uniformly random certificate.
pub struct RandomCert;

impl Game1Adversary for RandomCert {
    fn play(&mut self, ctx: &mut LightningContext, bolt: FullBolt) -> (BitString, FullBolt) {
        let len = ctx.cert_len();
        let cert = ctx.random_bits(len);
        (cert, bolt)
    }
}

/// Returns an empty certificate; the hash rejects it outright.
pub struct EmptyCert;

impl Game1Adversary for EmptyCert {
    fn play(&mut self, _ctx: &mut LightningContext, bolt: FullBolt) -> (BitString, FullBolt) {
        (BitString::zeros(0), bolt)
    }
}

/// Generates a bolt, extracts its certificate, and submits the collapsed
/// remains. Wins game 2 only when the basis state happens to re-verify.
pub struct ExtractAndKeep;

impl Game2Adversary for ExtractAndKeep {
    fn play(&mut self, ctx: &mut LightningContext) -> (BitString, FullBolt) {
        let mut bolt = ctx.toy_gen().expect("toy backend");
        let cert = ctx.toy_extract_bits(&mut bolt).expect("fresh bolt");
        (cert, bolt)
    }
}

/// Extracts one bolt's certificate but submits an unrelated fresh bolt; wins
/// only on a serial collision.
pub struct ExtractAndSwap;

impl Game2Adversary for ExtractAndSwap {
    fn play(&mut self, ctx: &mut LightningContext) -> (BitString, FullBolt) {
        let mut sacrificed = ctx.toy_gen().expect("toy backend");
        let cert = ctx.toy_extract_bits(&mut sacrificed).expect("fresh bolt");
        (cert, ctx.toy_gen().expect("toy backend"))
    }
}

/// Submits the zero vector; it never verifies.
pub struct ZeroBolt;

impl Game2Adversary for ZeroBolt {
    fn play(&mut self, ctx: &mut LightningContext) -> (BitString, FullBolt) {
        let (n, dim) = ctx.toy_shape().expect("toy backend");
        (ctx.random_bits(ctx.cert_len()), FullBolt::zero(n, dim))
    }
}

/// Two independent honest bolts; wins the copy game only when the serials
/// collide by chance.
pub struct TwoHonestBolts;

impl CopyAdversary for TwoHonestBolts {
    fn play(&mut self, ctx: &mut LightningContext) -> (FullBolt, FullBolt) {
        (
            ctx.toy_gen().expect("toy backend"),
            ctx.toy_gen().expect("toy backend"),
        )
    }
}

/// Measures a bolt in the computational basis and submits two copies of the
/// (now classical) result. Copying classical states is easy; winning the
/// game still requires both copies to pass verification.
pub struct BasisDuplicate;

impl CopyAdversary for BasisDuplicate {
    fn play(&mut self, ctx: &mut LightningContext) -> (FullBolt, FullBolt) {
        let mut bolt = ctx.toy_gen().expect("toy backend");
        ctx.toy_extract_bits(&mut bolt).expect("fresh bolt");
        (bolt.clone(), bolt)
    }
}

// ── Brute-force analytics ───────────────────────────────────────────────────
//
// Each rate is recomputed from the truth table alone, independently of the
// statevector code, so the Monte Carlo runs have something honest to be
// checked against.

/// P[extracted basis state passes re-verification]; `(1/p)^n` for a regular
/// `p`-to-1 hash.
pub fn oracle_reverify_rate(hash: &ToyHash, n: usize) -> f64 {
    let per_mini: f64 = (0..hash.range_size())
        .map(|y| 1.0 / hash.preimages(y as u16).len() as f64)
        .sum::<f64>()
        / hash.range_size() as f64;
    per_mini.powi(n as i32)
}

/// P[uniformly random certificate hashes to a fresh bolt's serial].
pub fn oracle_random_cert_rate(hash: &ToyHash, n: usize) -> f64 {
    let per_mini: f64 = (0..hash.range_size())
        .map(|y| hash.preimages(y as u16).len() as f64 / hash.domain_size() as f64)
        .sum::<f64>()
        / hash.range_size() as f64;
    per_mini.powi(n as i32)
}

/// P[two independent honest bolts share a serial].
pub fn oracle_serial_collision_rate(hash: &ToyHash, n: usize) -> f64 {
    (1.0 / hash.range_size() as f64).powi(n as i32)
}

/// P[a measured basis state passes verification twice in a row].
pub fn oracle_basis_duplicate_rate(hash: &ToyHash, n: usize) -> f64 {
    let per_mini: f64 = (0..hash.range_size())
        .map(|y| {
            let p = hash.preimages(y as u16).len() as f64;
            1.0 / (p * p)
        })
        .sum::<f64>()
        / hash.range_size() as f64;
    per_mini.powi(n as i32)
}

/// Three binomial standard deviations around `p` at `trials` samples.
pub fn three_sigma(p: f64, trials: usize) -> f64 {
    3.0 * (p * (1.0 - p) / trials as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lightning::BackendKind;
    use rand::SeedableRng;

    fn toy_ctx(seed: u64) -> LightningContext {
        LightningContext::toy_setup(4, 2, 2, seed).unwrap()
    }

    #[test]
    fn regular_hash_has_even_buckets() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let hash = ToyHash::random_regular(4, 2, &mut rng).unwrap();
        assert!(hash.is_regular());
        for y in 0..4u16 {
            assert_eq!(hash.preimages(y).len(), 4);
        }
    }

    #[test]
    fn dims_are_validated() {
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        assert!(ToyHash::random_regular(2, 2, &mut rng).is_err());
        assert!(ToyHash::random_regular(13, 2, &mut rng).is_err());
        assert!(ToyHash::random_regular(4, 0, &mut rng).is_err());
        assert!(LightningContext::toy_setup(4, 4, 2, 0).is_err());
    }

    #[test]
    fn from_table_requires_full_range() {
        // Output 3 has no preimage.
        let table = vec![0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2, 0, 1, 2, 0];
        assert!(ToyHash::from_table(4, 2, table).is_err());
    }

    #[test]
    fn setup_is_deterministic() {
        let a = toy_ctx(9).hash_spec();
        let b = toy_ctx(9).hash_spec();
        assert_eq!(a, b);
    }

    #[test]
    fn generated_bolt_is_uniform_over_preimages() {
        let mut ctx = toy_ctx(1);
        let bolt = ctx.toy_gen().unwrap();
        assert_eq!(bolt.minis.len(), 2);
        for mini in &bolt.minis {
            assert!((mini.norm_sqr() - 1.0).abs() < 1e-9);
            let nonzero: Vec<usize> = mini
                .amplitudes
                .iter()
                .enumerate()
                .filter(|(_, a)| a.norm_sqr() > 1e-12)
                .map(|(x, _)| x)
                .collect();
            assert_eq!(nonzero.len(), 4);
            for a in nonzero.iter().map(|&x| mini.amplitudes[x]) {
                assert!((a - Complex64::new(0.5, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn honest_bolt_always_verifies_to_its_claim() {
        let mut ctx = toy_ctx(2);
        for _ in 0..1000 {
            let mut bolt = ctx.toy_gen().unwrap();
            let claimed = bolt.claimed_serial(2);
            let got = ctx.toy_verify(&mut bolt).unwrap();
            assert_eq!(got, Some(claimed));
        }
    }

    #[test]
    fn verification_does_not_disturb_honest_bolts() {
        let mut ctx = toy_ctx(4);
        let mut bolt = ctx.toy_gen().unwrap();
        let before = bolt.clone();
        ctx.toy_verify(&mut bolt).unwrap();
        for (m0, m1) in before.minis.iter().zip(&bolt.minis) {
            for (a0, a1) in m0.amplitudes.iter().zip(&m1.amplitudes) {
                assert!((a0 - a1).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn extraction_yields_a_preimage_of_the_serial() {
        let mut ctx = toy_ctx(5);
        for _ in 0..200 {
            let mut bolt = ctx.toy_gen().unwrap();
            let serial = bolt.claimed_serial(2);
            let cert = ctx.toy_extract_bits(&mut bolt).unwrap();
            assert_eq!(ctx.hash_cert(&cert), Some(serial));
        }
    }

    #[test]
    fn extracted_state_reverifies_at_the_oracle_rate() {
        let mut ctx = toy_ctx(6);
        let oracle = oracle_reverify_rate(ctx.toy_hash().unwrap(), 2);
        assert!((oracle - 1.0 / 16.0).abs() < 1e-12);
        let trials = 4000;
        let mut passes = 0;
        for _ in 0..trials {
            let mut bolt = ctx.toy_gen().unwrap();
            ctx.toy_extract_bits(&mut bolt).unwrap();
            if ctx.toy_verify(&mut bolt).unwrap().is_some() {
                passes += 1;
            }
        }
        let rate = passes as f64 / trials as f64;
        assert!(
            (rate - oracle).abs() <= three_sigma(oracle, trials),
            "rate {rate}"
        );
    }

    #[test]
    fn re_extraction_of_a_basis_state_is_stable() {
        let mut ctx = toy_ctx(7);
        let mut bolt = ctx.toy_gen().unwrap();
        let first = ctx.toy_extract_bits(&mut bolt).unwrap();
        let second = ctx.toy_extract_bits(&mut bolt).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn zero_vector_is_rejected() {
        let mut ctx = toy_ctx(8);
        let mut bolt = FullBolt::zero(2, 16);
        assert_eq!(ctx.toy_verify(&mut bolt).unwrap(), None);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let mut ctx = toy_ctx(9);
        let mut wrong_n = FullBolt::zero(3, 16);
        assert!(matches!(
            ctx.toy_verify(&mut wrong_n),
            Err(LightningError::DimensionMismatch)
        ));
        let mut wrong_dim = FullBolt::zero(2, 8);
        assert!(matches!(
            ctx.toy_verify(&mut wrong_dim),
            Err(LightningError::DimensionMismatch)
        ));
        assert!(ctx.toy_extract(&mut wrong_dim).is_err());
    }

    #[test]
    fn toy_ops_error_on_the_ideal_backend() {
        let mut ctx = LightningContext::setup(BackendKind::Ideal, 16, 0).unwrap();
        assert!(matches!(ctx.toy_gen(), Err(LightningError::WrongBackend)));
    }

    #[test]
    fn measurement_statistics_match_overlaps() {
        // 0.3 / 0.7 superposition of two preimage states.
        let mut ctx = toy_ctx(10);
        let hash = ctx.toy_hash().unwrap().clone();
        let a = MiniBolt::uniform_over_preimages(&hash, 0);
        let b = MiniBolt::uniform_over_preimages(&hash, 1);
        let template: Vec<Complex64> = a
            .amplitudes
            .iter()
            .zip(&b.amplitudes)
            .map(|(x, y)| x * 0.3f64.sqrt() + y * 0.7f64.sqrt())
            .collect();
        let trials = 4000;
        let mut zeroes = 0;
        for _ in 0..trials {
            let mut bolt = FullBolt {
                minis: vec![
                    MiniBolt {
                        amplitudes: template.clone(),
                        serial_claim: 0,
                    },
                    MiniBolt::uniform_over_preimages(&hash, 3),
                ],
            };
            let outcome = ctx.toy_verify(&mut bolt).unwrap().unwrap();
            match outcome.bits().split_values(2).unwrap()[0] {
                0 => zeroes += 1,
                1 => {}
                other => panic!("impossible outcome {other}"),
            }
        }
        let rate = zeroes as f64 / trials as f64;
        assert!(
            (rate - 0.3).abs() <= three_sigma(0.3, trials),
            "rate {rate}"
        );
    }

    #[test]
    fn failed_verification_keeps_a_residual() {
        let mut ctx = toy_ctx(11);
        let hash = ctx.toy_hash().unwrap().clone();
        // A state orthogonal to every |psi_y>: difference of two preimages of y=0.
        let pre = hash.preimages(0);
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); hash.domain_size()];
        amplitudes[pre[0]] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        amplitudes[pre[1]] = Complex64::new(-std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let mini = MiniBolt {
            amplitudes,
            serial_claim: 0,
        };
        let mut bolt = FullBolt {
            minis: vec![mini, MiniBolt::uniform_over_preimages(&hash, 1)],
        };
        assert_eq!(ctx.toy_verify(&mut bolt).unwrap(), None);
        // The orthogonal register survives the failed measurement unchanged.
        assert!((bolt.minis[0].norm_sqr() - 1.0).abs() < 1e-9);
        assert!(bolt.minis[0].amplitudes[pre[0]].re > 0.0);
    }

    #[test]
    fn games_are_deterministic_under_a_seed() {
        let run = |seed| {
            let mut ctx = toy_ctx(seed);
            (0..50)
                .map(|_| run_game2(&mut ctx, &mut ExtractAndKeep).unwrap())
                .collect::<Vec<bool>>()
        };
        assert_eq!(run(42), run(42));
        assert_ne!(run(42), run(43)); // overwhelmingly likely to differ somewhere
    }

    #[test]
    fn extractor_always_wins_game1() {
        let mut ctx = toy_ctx(12);
        for _ in 0..1000 {
            assert!(run_game1(&mut ctx, &mut Extractor).unwrap());
        }
    }

    #[test]
    fn random_guess_wins_game1_at_the_oracle_rate() {
        let mut ctx = toy_ctx(13);
        let oracle = oracle_random_cert_rate(ctx.toy_hash().unwrap(), 2);
        assert!((oracle - 1.0 / 16.0).abs() < 1e-12);
        let trials = 4000;
        let wins = (0..trials)
            .filter(|_| run_game1(&mut ctx, &mut RandomCert).unwrap())
            .count();
        let rate = wins as f64 / trials as f64;
        assert!(
            (rate - oracle).abs() <= three_sigma(oracle, trials),
            "rate {rate}"
        );
    }

    #[test]
    fn empty_certificate_never_wins() {
        let mut ctx = toy_ctx(14);
        assert!((0..200).all(|_| !run_game1(&mut ctx, &mut EmptyCert).unwrap()));
    }

    #[test]
    fn game2_extract_and_keep_wins_at_the_reverify_rate() {
        let mut ctx = toy_ctx(15);
        let oracle = oracle_reverify_rate(ctx.toy_hash().unwrap(), 2);
        let trials = 4000;
        let wins = (0..trials)
            .filter(|_| run_game2(&mut ctx, &mut ExtractAndKeep).unwrap())
            .count();
        let rate = wins as f64 / trials as f64;
        assert!(
            (rate - oracle).abs() <= three_sigma(oracle, trials),
            "rate {rate}"
        );
    }

    #[test]
    fn game2_fresh_bolt_wins_only_on_collisions() {
        let mut ctx = toy_ctx(16);
        let oracle = oracle_serial_collision_rate(ctx.toy_hash().unwrap(), 2);
        let trials = 4000;
        let wins = (0..trials)
            .filter(|_| run_game2(&mut ctx, &mut ExtractAndSwap).unwrap())
            .count();
        let rate = wins as f64 / trials as f64;
        assert!(
            (rate - oracle).abs() <= three_sigma(oracle, trials),
            "rate {rate}"
        );
    }

    #[test]
    fn game2_zero_bolt_never_wins() {
        let mut ctx = toy_ctx(17);
        assert!((0..200).all(|_| !run_game2(&mut ctx, &mut ZeroBolt).unwrap()));
    }

    #[test]
    fn copy_game_rates() {
        let mut ctx = toy_ctx(18);
        let hash = ctx.toy_hash().unwrap().clone();
        let trials = 4000;

        let honest = (0..trials)
            .filter(|_| run_copy_game(&mut ctx, &mut TwoHonestBolts).unwrap())
            .count() as f64
            / trials as f64;
        let p_honest = oracle_serial_collision_rate(&hash, 2);
        assert!(
            (honest - p_honest).abs() <= three_sigma(p_honest, trials),
            "honest {honest}"
        );

        let dup = (0..trials)
            .filter(|_| run_copy_game(&mut ctx, &mut BasisDuplicate).unwrap())
            .count() as f64
            / trials as f64;
        let p_dup = oracle_basis_duplicate_rate(&hash, 2);
        assert!(
            (dup - p_dup).abs() <= three_sigma(p_dup, trials).max(3.0 / trials as f64),
            "dup {dup}"
        );
    }
}
