//! ElGamal over a safe-prime group with multiplicatively homomorphic boolean
//! encoding: `false` is the identity and `true` is a non-trivial power of `z`.
//!
//! Private keys may be split into additive shares; the compound public key is
//! the product of the share public keys, and decryption strips one share at a
//! time.

use std::sync::OnceLock;

use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, Zero};
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CryptoError {
    #[error("invalid group parameters: {0}")]
    InvalidParams(&'static str),
    #[error("malformed plaintext after decryption")]
    Malformed,
    #[error("truncated or malformed encoding")]
    Encoding,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupParams {
    pub p: BigUint,
    pub g: BigUint,
    pub z: BigUint,
    pub bits: u32,
    /// Group order `p - 1`.
    order: BigUint,
    /// `(p - 1) / 2`.
    t: BigUint,
}

const P512: &str = "a3754e70c282bb14761453c8cf34fb05e50185623f6dc8b5d50665327c763f77ef8ebd8526400436a7020560975f4740948324a05d2d3bd5d2d6284b48138e5b";
const P64: u64 = 14_681_116_535_111_654_543;

impl GroupParams {
    /// Builds parameters from a safe prime and generator; `z` is fixed to `g^2`,
    /// which has order `(p - 1) / 2`.
    pub fn new(p: BigUint, g: BigUint) -> Result<Self, CryptoError> {
        let one = BigUint::one();
        if p < BigUint::from(7u32) || !p.bit(0) {
            return Err(CryptoError::InvalidParams("p must be an odd prime above 5"));
        }
        let order = &p - &one;
        let t = &order >> 1;
        if g <= one || g >= order {
            return Err(CryptoError::InvalidParams("g out of range"));
        }
        let g2 = g.modpow(&BigUint::from(2u32), &p);
        if g2 == one || g.modpow(&t, &p) == one {
            return Err(CryptoError::InvalidParams("g does not generate Z_p^*"));
        }
        let bits = p.bits() as u32;
        Ok(GroupParams { z: g2, p, g, bits, order, t })
    }

    /// The textbook group `p = 23, g = 5`.
    pub fn toy23() -> Self {
        GroupParams::new(BigUint::from(23u32), BigUint::from(5u32)).expect("valid")
    }

    /// A fixed 64-bit safe-prime group for fast tests.
    pub fn toy64() -> Self {
        static G: OnceLock<GroupParams> = OnceLock::new();
        G.get_or_init(|| GroupParams::new(BigUint::from(P64), BigUint::from(5u32)).expect("valid")).clone()
    }

    /// A fixed 512-bit safe-prime group.
    pub fn default512() -> Self {
        static G: OnceLock<GroupParams> = OnceLock::new();
        G.get_or_init(|| {
            let p = BigUint::parse_bytes(P512.as_bytes(), 16).expect("hex");
            GroupParams::new(p, BigUint::from(2u32)).expect("valid")
        })
        .clone()
    }

    /// Fixed group for 64 or 512 bits, freshly generated otherwise.
    pub fn for_bits<R: RngCore>(bits: u32, rng: &mut R) -> Result<Self, CryptoError> {
        match bits {
            5 => Ok(Self::toy23()),
            64 => Ok(Self::toy64()),
            512 => Ok(Self::default512()),
            b if b < 16 => Err(CryptoError::InvalidParams("key size below 16 bits")),
            b => Self::generate(b, rng),
        }
    }

    /// Searches for a random safe prime of exactly `bits` bits and its smallest generator.
    pub fn generate<R: RngCore>(bits: u32, rng: &mut R) -> Result<Self, CryptoError> {
        if bits < 16 {
            return Err(CryptoError::InvalidParams("key size below 16 bits"));
        }
        loop {
            let mut t = rng.gen_biguint(u64::from(bits - 1));
            t.set_bit(u64::from(bits - 2), true);
            t.set_bit(0, true);
            if small_factor(&t) || !is_probable_prime(&t, 32, rng) {
                continue;
            }
            let p: BigUint = (&t << 1) + 1u32;
            if small_factor(&p) || !is_probable_prime(&p, 32, rng) {
                continue;
            }
            let mut g = BigUint::from(2u32);
            loop {
                if let Ok(params) = GroupParams::new(p.clone(), g.clone()) {
                    return Ok(params);
                }
                g += 1u32;
            }
        }
    }

    pub fn order(&self) -> &BigUint {
        &self.order
    }

    /// Uniform exponent in `[1, p - 2]`.
    pub fn random_exponent<R: RngCore>(&self, rng: &mut R) -> BigUint {
        rng.gen_biguint_range(&BigUint::one(), &self.order)
    }

    pub fn keygen<R: RngCore>(&self, rng: &mut R) -> KeyPairShare {
        let x = self.random_exponent(rng);
        let y = self.g.modpow(&x, &self.p);
        KeyPairShare { x, y }
    }

    /// Splits `private` into `k` exponents summing to it modulo the group order.
    pub fn split_private<R: RngCore>(&self, private: &BigUint, k: usize, rng: &mut R) -> Vec<KeyPairShare> {
        assert!(k >= 1);
        let mut out = Vec::with_capacity(k);
        let mut acc = BigUint::zero();
        for _ in 1..k {
            let x = rng.gen_biguint_below(&self.order);
            acc = (acc + &x) % &self.order;
            out.push(self.share_from_exponent(x));
        }
        let last = (private + &self.order - acc) % &self.order;
        out.push(self.share_from_exponent(last));
        out
    }

    fn share_from_exponent(&self, x: BigUint) -> KeyPairShare {
        let y = self.g.modpow(&x, &self.p);
        KeyPairShare { x, y }
    }

    pub fn compound_key<'a>(&self, shares: impl IntoIterator<Item = &'a BigUint>) -> CompoundPublicKey {
        let mut y = BigUint::one();
        let mut n = 0;
        for s in shares {
            y = y * s % &self.p;
            n += 1;
        }
        CompoundPublicKey { y, shares: n }
    }

    pub fn encode_bool(&self, m: bool) -> BigUint {
        if m {
            self.z.clone()
        } else {
            BigUint::one()
        }
    }

    /// Encodes a vector entry `v` in `{-1, 0, 1}` as `z^(v + 2)`.
    pub fn encode_tri(&self, v: i8) -> BigUint {
        assert!((-1..=1).contains(&v));
        self.z.modpow(&BigUint::from((v + 2) as u32), &self.p)
    }

    pub fn decode_tri(&self, m: &BigUint) -> Result<i8, CryptoError> {
        let mut acc = self.z.clone();
        for v in -1..=1i8 {
            if *m == acc {
                return Ok(v);
            }
            acc = acc * &self.z % &self.p;
        }
        Err(CryptoError::Malformed)
    }

    pub fn encrypt_element(&self, key: &CompoundPublicKey, m: &BigUint, r: &BigUint) -> Cyphertext {
        Cyphertext { alpha: m * key.y.modpow(r, &self.p) % &self.p, beta: self.g.modpow(r, &self.p) }
    }

    pub fn encrypt(&self, key: &CompoundPublicKey, m: bool, r: &BigUint) -> Cyphertext {
        self.encrypt_element(key, &self.encode_bool(m), r)
    }

    pub fn encrypt_random<R: RngCore>(&self, key: &CompoundPublicKey, m: bool, rng: &mut R) -> Cyphertext {
        let r = self.random_exponent(rng);
        self.encrypt(key, m, &r)
    }

    /// Multiplies in a fresh encryption of the identity.
    pub fn rerandomize(&self, key: &CompoundPublicKey, c: &Cyphertext, r: &BigUint) -> Cyphertext {
        Cyphertext {
            alpha: &c.alpha * key.y.modpow(r, &self.p) % &self.p,
            beta: &c.beta * self.g.modpow(r, &self.p) % &self.p,
        }
    }

    pub fn rerandomize_random<R: RngCore>(&self, key: &CompoundPublicKey, c: &Cyphertext, rng: &mut R) -> Cyphertext {
        let r = self.random_exponent(rng);
        self.rerandomize(key, c, &r)
    }

    /// Homomorphic OR: the product of two encrypted booleans.
    pub fn or(&self, a: &Cyphertext, b: &Cyphertext) -> Cyphertext {
        Cyphertext { alpha: &a.alpha * &b.alpha % &self.p, beta: &a.beta * &b.beta % &self.p }
    }

    /// AND with a cleartext bit: a fresh `E(false)` if `b` is false, a
    /// rerandomization of `c` otherwise.
    pub fn and_cleartext<R: RngCore>(
        &self,
        key: &CompoundPublicKey,
        c: &Cyphertext,
        b: bool,
        rng: &mut R,
    ) -> Cyphertext {
        if b {
            self.rerandomize_random(key, c, rng)
        } else {
            self.encrypt_random(key, false, rng)
        }
    }

    /// `beta^x` for one key share.
    pub fn partial_decrypt(&self, c: &Cyphertext, share: &BigUint) -> BigUint {
        c.beta.modpow(share, &self.p)
    }

    /// Removes one share's contribution: `(alpha / beta^x, beta)`.
    pub fn strip_share(&self, c: &Cyphertext, share: &BigUint) -> Cyphertext {
        let e = (&self.order - (share % &self.order)) % &self.order;
        Cyphertext { alpha: &c.alpha * c.beta.modpow(&e, &self.p) % &self.p, beta: c.beta.clone() }
    }

    /// Recovers the plaintext element from all shares.
    pub fn decrypt_element<'a>(&self, c: &Cyphertext, shares: impl IntoIterator<Item = &'a BigUint>) -> BigUint {
        let mut x = BigUint::zero();
        for s in shares {
            x = (x + s) % &self.order;
        }
        self.strip_share(c, &x).alpha
    }

    /// Decrypts a boolean, accepting `1` as false and `z^k` for `1 <= k <= max_power` as true.
    pub fn combine_decrypt<'a>(
        &self,
        c: &Cyphertext,
        shares: impl IntoIterator<Item = &'a BigUint>,
        max_power: u32,
    ) -> Result<bool, CryptoError> {
        let m = self.decrypt_element(c, shares);
        self.decode_bool_strict(&m, max_power)
    }

    pub fn decode_bool_strict(&self, m: &BigUint, max_power: u32) -> Result<bool, CryptoError> {
        if m.is_one() {
            return Ok(false);
        }
        let mut acc = self.z.clone();
        for _ in 0..max_power {
            if *m == acc {
                return Ok(true);
            }
            acc = acc * &self.z % &self.p;
        }
        Err(CryptoError::Malformed)
    }

    /// Truth of a decrypted element: anything other than the identity.
    pub fn decode_bool(&self, m: &BigUint) -> bool {
        !m.is_one()
    }

    /// Serializes `(p, g, z, bit_length)`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for x in [&self.p, &self.g, &self.z] {
            put_uint(&mut out, x);
        }
        out.extend_from_slice(&self.bits.to_be_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CryptoError> {
        let mut rest = bytes;
        let p = take_uint(&mut rest)?;
        let g = take_uint(&mut rest)?;
        let z = take_uint(&mut rest)?;
        if rest.len() != 4 {
            return Err(CryptoError::Encoding);
        }
        let bits = u32::from_be_bytes(rest.try_into().expect("len 4"));
        let params = GroupParams::new(p, g)?;
        if params.z != z || params.bits != bits {
            return Err(CryptoError::InvalidParams("z or bit length inconsistent with p, g"));
        }
        Ok(params)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyPairShare {
    pub x: BigUint,
    pub y: BigUint,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompoundPublicKey {
    pub y: BigUint,
    pub shares: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cyphertext {
    pub alpha: BigUint,
    pub beta: BigUint,
}

impl Cyphertext {
    /// Two length-prefixed big-endian unsigned integers.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_bytes(&mut out);
        out
    }

    pub fn write_bytes(&self, out: &mut Vec<u8>) {
        put_uint(out, &self.alpha);
        put_uint(out, &self.beta);
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CryptoError> {
        let mut rest = bytes;
        let alpha = take_uint(&mut rest)?;
        let beta = take_uint(&mut rest)?;
        if !rest.is_empty() {
            return Err(CryptoError::Encoding);
        }
        Ok(Cyphertext { alpha, beta })
    }
}

pub(crate) fn put_uint(out: &mut Vec<u8>, x: &BigUint) {
    let b = if x.is_zero() { Vec::new() } else { x.to_bytes_be() };
    out.extend_from_slice(&(b.len() as u32).to_be_bytes());
    out.extend_from_slice(&b);
}

fn take_uint(rest: &mut &[u8]) -> Result<BigUint, CryptoError> {
    if rest.len() < 4 {
        return Err(CryptoError::Encoding);
    }
    let len = u32::from_be_bytes(rest[..4].try_into().expect("len 4")) as usize;
    if rest.len() < 4 + len {
        return Err(CryptoError::Encoding);
    }
    let x = BigUint::from_bytes_be(&rest[4..4 + len]);
    *rest = &rest[4 + len..];
    Ok(x)
}

const SMALL_PRIMES: [u32; 24] =
    [3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97];

fn small_factor(n: &BigUint) -> bool {
    SMALL_PRIMES.iter().any(|p| {
        let p = BigUint::from(*p);
        *n != p && (n % &p).is_zero()
    })
}

/// Miller-Rabin with `rounds` random bases.
pub fn is_probable_prime<R: RngCore>(n: &BigUint, rounds: u32, rng: &mut R) -> bool {
    let two = BigUint::from(2u32);
    if *n < two {
        return false;
    }
    for p in SMALL_PRIMES.iter().chain(std::iter::once(&2)) {
        let p = BigUint::from(*p);
        if *n == p {
            return true;
        }
        if (n % &p).is_zero() {
            return false;
        }
    }
    let n1 = n - 1u32;
    let s = n1.trailing_zeros().unwrap_or(0);
    let d = &n1 >> s;
    'witness: for _ in 0..rounds {
        let a = rng.gen_biguint_range(&two, &n1);
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n1 {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Uniform random 128-bit value, used for codenames and tickets.
pub fn random_u128<R: Rng>(rng: &mut R) -> u128 {
    rng.gen()
}
