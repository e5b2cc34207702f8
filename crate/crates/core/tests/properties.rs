use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use snngx::attack::{random_bit_baseline, BitScope};
use snngx::genetic::{apply_key, fitness, recovery_mutation, SecretKey, SignBitVector};
use snngx::io::{decode_dataset, encode_dataset, key_from_json, key_to_json, KeyMeta};
use snngx::snn::{quantize, Architecture, Dataset, FloatNetwork, LabeledSample, NeuronParams, SpikeTrain};

fn signs(len: usize) -> impl Strategy<Value = SignBitVector> {
    prop::collection::vec(prop::bool::ANY, len)
        .prop_map(|b| SignBitVector::new(b.into_iter().map(|x| if x { 1 } else { -1 }).collect()).unwrap())
}

fn dataset() -> impl Strategy<Value = Dataset> {
    (1usize..6, 1usize..20, 1usize..5).prop_flat_map(|(t, f, c)| {
        let sample = (prop::collection::vec(0u8..2, t * f), 0..c)
            .prop_map(move |(bits, label)| LabeledSample { input: SpikeTrain::new(t, f, bits).unwrap(), label });
        prop::collection::vec(sample, 0..8).prop_map(move |s| Dataset::new(t, f, c, s).unwrap())
    })
}

fn small_net(seed: u64) -> snngx::snn::QuantizedNetwork {
    let arch: Architecture = "6F-5F-3F".parse().unwrap();
    quantize(&FloatNetwork::random(&arch, NeuronParams::default(), 2.0, seed).unwrap(), 8).unwrap()
}

fn samples(seed: u64) -> Vec<LabeledSample> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..6)
        .map(|i| LabeledSample {
            input: SpikeTrain::new(4, 6, (0..24).map(|_| rng.gen_range(0..2)).collect()).unwrap(),
            label: i % 3,
        })
        .collect()
}

proptest! {
    #[test]
    fn in_budget_always_beats_out_of_budget(
        eps in 1usize..500, d_in in 0usize..500, extra in 1usize..500, l1 in 0.0f64..=1.0, l2 in 0.0f64..=1.0,
    ) {
        let d_in = d_in.min(eps);
        prop_assert!(fitness(l1, d_in, eps) < fitness(l2, eps + extra, eps));
    }

    #[test]
    fn mutation_never_moves_away_from_the_original(
        (x, raw) in (1usize..300).prop_flat_map(|n| (signs(n), signs(n))),
        p in 0.0f64..=1.0,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = recovery_mutation(&x, &raw, p, &mut rng).unwrap();
        prop_assert!(y.hamming(&raw) <= x.hamming(&raw));
        for i in 0..x.len() {
            if x.as_slice()[i] == raw.as_slice()[i] {
                prop_assert_eq!(y.as_slice()[i], x.as_slice()[i]);
            }
        }
    }

    #[test]
    fn applying_a_key_twice_is_the_identity(
        seed in 0u64..1000,
        positions in prop::collection::btree_set(0u32..30, 0..30),
    ) {
        let net = small_net(seed);
        let key = SecretKey::new(0, 8, 30, positions.into_iter().collect()).unwrap();
        let once = apply_key(&net, &key).unwrap();
        prop_assert_eq!(apply_key(&once, &key).unwrap(), net.clone());
        let changed = net.layers()[0].weights.values.as_slice().iter()
            .zip(once.layers()[0].weights.values.as_slice())
            .filter(|(a, b)| a != b)
            .count();
        prop_assert_eq!(changed, key.len());
    }

    #[test]
    fn datasets_roundtrip_through_the_binary_format(d in dataset()) {
        let bytes = encode_dataset(&d).unwrap();
        let back = decode_dataset(&bytes).unwrap();
        prop_assert_eq!(encode_dataset(&back).unwrap(), bytes);
        prop_assert_eq!(back, d);
    }

    #[test]
    fn truncated_datasets_are_rejected(d in dataset(), cut in 1usize..64) {
        let bytes = encode_dataset(&d).unwrap();
        let keep = bytes.len().saturating_sub(cut);
        prop_assert!(decode_dataset(&bytes[..keep]).is_err());
    }

    #[test]
    fn keys_roundtrip_through_json(
        len in 1usize..2000,
        raw in prop::collection::btree_set(0u32..2000, 0..64),
        eps in 0usize..100,
        seed in any::<u64>(),
        acc in 0.0f64..=1.0,
    ) {
        let positions: Vec<u32> = raw.into_iter().filter(|&p| (p as usize) < len).collect();
        let key = SecretKey::new(2, 8, len, positions).unwrap();
        let meta = KeyMeta { epsilon: eps, seed, generations_run: 7, final_accuracy: acc };
        let (k2, m2) = key_from_json(&key_to_json(&key, &meta)).unwrap();
        prop_assert_eq!(k2, key);
        prop_assert_eq!(m2, meta);
    }

    #[test]
    fn random_baseline_is_reproducible(seed in any::<u64>(), budget in 0usize..20) {
        let net = small_net(3);
        let d = samples(4);
        let a = random_bit_baseline(&net, &d, budget, BitScope::AllBitsOfModel, 3, seed).unwrap();
        let b = random_bit_baseline(&net, &d, budget, BitScope::AllBitsOfModel, 3, seed).unwrap();
        prop_assert_eq!(a.trials, b.trials);
    }
}
