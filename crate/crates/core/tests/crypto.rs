use num_bigint::BigUint;
use privdcsp::crypto::{CompoundPublicKey, GroupParams, KeyPairShare};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn groups() -> [GroupParams; 3] {
    [GroupParams::toy23(), GroupParams::toy64(), GroupParams::default512()]
}

fn ring(g: &GroupParams, k: usize, rng: &mut ChaCha20Rng) -> (Vec<KeyPairShare>, CompoundPublicKey) {
    let shares: Vec<KeyPairShare> = (0..k).map(|_| g.keygen(rng)).collect();
    let key = g.compound_key(shares.iter().map(|s| &s.y));
    (shares, key)
}

fn decrypt(g: &GroupParams, c: &privdcsp::crypto::Cyphertext, shares: &[KeyPairShare]) -> bool {
    g.combine_decrypt(c, shares.iter().map(|s| &s.x), 4).unwrap()
}

#[test]
fn or_and_cleartext_and_are_exhaustively_correct() {
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    for g in groups() {
        let (shares, key) = ring(&g, 3, &mut rng);
        for a in [false, true] {
            for b in [false, true] {
                let ea = g.encrypt_random(&key, a, &mut rng);
                let eb = g.encrypt_random(&key, b, &mut rng);
                assert_eq!(decrypt(&g, &g.or(&ea, &eb), &shares), a || b);
                assert_eq!(decrypt(&g, &g.and_cleartext(&key, &ea, b, &mut rng), &shares), a && b);
            }
        }
    }
}

#[test]
fn or_of_many_trues_stays_decodable() {
    let mut rng = ChaCha20Rng::seed_from_u64(8);
    let g = GroupParams::toy64();
    let (shares, key) = ring(&g, 2, &mut rng);
    let t = g.encrypt_random(&key, true, &mut rng);
    let c = g.or(&g.or(&t, &t), &t);
    let m = g.decrypt_element(&c, shares.iter().map(|s| &s.x));
    assert_eq!(m, g.z.modpow(&BigUint::from(3u32), &g.p));
    assert!(g.decode_bool(&m));
    assert!(g.combine_decrypt(&c, shares.iter().map(|s| &s.x), 2).is_err());
}

#[test]
fn every_share_is_needed() {
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    for g in [GroupParams::toy64(), GroupParams::default512()] {
        for k in 1..=5 {
            let (shares, key) = ring(&g, k, &mut rng);
            for m in [false, true] {
                let c = g.encrypt_random(&key, m, &mut rng);
                assert_eq!(decrypt(&g, &c, &shares), m);
                for skip in 0..k {
                    let subset: Vec<&BigUint> =
                        shares.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, s)| &s.x).collect();
                    let e = g.decrypt_element(&c, subset);
                    assert_ne!(e, g.encode_bool(m), "k = {k}, missing share {skip}");
                }
            }
        }
    }
}

#[test]
fn split_shares_recombine_to_the_private_key() {
    let mut rng = ChaCha20Rng::seed_from_u64(12);
    let g = GroupParams::toy64();
    let whole = g.keygen(&mut rng);
    let parts = g.split_private(&whole.x, 4, &mut rng);
    let key = g.compound_key(parts.iter().map(|s| &s.y));
    assert_eq!(key.y, whole.y);
    let c = g.encrypt_random(&key, true, &mut rng);
    assert!(g.combine_decrypt(&c, [&whole.x], 1).unwrap());
}

#[test]
fn chained_rerandomization_keeps_the_plaintext() {
    let mut rng = ChaCha20Rng::seed_from_u64(13);
    for g in [GroupParams::toy64(), GroupParams::default512()] {
        let (shares, key) = ring(&g, 3, &mut rng);
        for m in [false, true] {
            let mut c = g.encrypt_random(&key, m, &mut rng);
            for _ in 0..10 {
                let next = g.rerandomize_random(&key, &c, &mut rng);
                assert_ne!(next, c);
                c = next;
            }
            assert_eq!(decrypt(&g, &c, &shares), m);
        }
    }
}

#[test]
fn partial_decryptions_compose() {
    let mut rng = ChaCha20Rng::seed_from_u64(14);
    let g = GroupParams::toy64();
    let (shares, key) = ring(&g, 3, &mut rng);
    let c = g.encrypt_random(&key, true, &mut rng);
    let mut stripped = c.clone();
    for s in &shares {
        stripped = g.strip_share(&stripped, &s.x);
    }
    assert_eq!(stripped.alpha, g.z);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn homomorphism_holds_for_any_randomness(seed: u64, a: bool, b: bool, k in 1usize..5) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let g = GroupParams::toy64();
        let (shares, key) = ring(&g, k, &mut rng);
        let ea = g.encrypt_random(&key, a, &mut rng);
        let eb = g.encrypt_random(&key, b, &mut rng);
        prop_assert_eq!(decrypt(&g, &g.or(&ea, &eb), &shares), a || b);
        prop_assert_eq!(decrypt(&g, &g.and_cleartext(&key, &ea, b, &mut rng), &shares), a && b);
        prop_assert_eq!(decrypt(&g, &g.rerandomize_random(&key, &ea, &mut rng), &shares), a);
    }

    #[test]
    fn tri_values_survive_encryption(seed: u64, v in -1i8..=1) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let g = GroupParams::toy64();
        let (shares, key) = ring(&g, 2, &mut rng);
        let r = g.random_exponent(&mut rng);
        let c = g.encrypt_element(&key, &g.encode_tri(v), &r);
        let m = g.decrypt_element(&c, shares.iter().map(|s| &s.x));
        prop_assert_eq!(g.decode_tri(&m).unwrap(), v);
    }
}
