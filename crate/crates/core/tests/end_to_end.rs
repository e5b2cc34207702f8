use snngx::genetic::{apply_key, extract_sign_bits, GaConfig};
use snngx::hwsim::Accelerator;
use snngx::io::{load_key, load_quantized_network};
use snngx::pipeline::{encrypt, run_encrypt_job, EncryptJob};
use snngx::repro::ToyFixture;
use snngx::snn::{evaluate_accuracy, FixedFormat, MembraneArithmetic};

#[test]
fn toy_model_is_protected_and_restored() {
    let fx = ToyFixture::build().unwrap();
    let layer = fx.output_layer();
    let len = extract_sign_bits(&fx.quantized, layer).unwrap().len();
    let ga = GaConfig { epsilon: 30, target_layer: layer, enc_samples: 32, seed: 0, ..GaConfig::default() };
    let enc = encrypt(&fx.quantized, &fx.train, &ga, 2).unwrap();
    assert_eq!(enc.report.genome_length, len);
    assert!(enc.key.len() <= 30);

    let plain = evaluate_accuracy(&fx.quantized, fx.test.samples()).unwrap();
    let locked = evaluate_accuracy(&enc.encrypted, fx.test.samples()).unwrap();
    assert!(locked < plain, "encrypted {locked} vs plain {plain}");
    assert_eq!(apply_key(&enc.encrypted, &enc.key).unwrap(), fx.quantized);

    let hw = Accelerator::program(&enc.encrypted, &enc.key, FixedFormat::default()).unwrap();
    let arith = MembraneArithmetic::Fixed(FixedFormat::default());
    for s in fx.test.samples().iter().take(20) {
        let sw = fx.quantized.forward_with(&s.input, arith).unwrap();
        assert_eq!(hw.infer(&s.input, None).unwrap().output, sw);
    }
}

#[test]
fn encrypt_job_writes_loadable_artifacts() {
    let fx = ToyFixture::build().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("q8.json");
    let data = dir.path().join("train.sngx");
    snngx::io::save_quantized_network(&fx.quantized, &net).unwrap();
    snngx::io::save_dataset(&fx.train, &data).unwrap();
    let ga = GaConfig { epsilon: 30, target_layer: fx.output_layer(), enc_samples: 32, ..GaConfig::default() };
    let job = EncryptJob { network: net, dataset: data, ga, max_workers: 2 };
    let out = dir.path().join("out");
    let summary = run_encrypt_job(&job, &out).unwrap();
    let encrypted = load_quantized_network(&summary.encrypted_path).unwrap();
    let (key, meta) = load_key(&summary.key_path).unwrap();
    assert_eq!(meta.epsilon, 30);
    assert_eq!(key.len(), summary.distance);
    assert_eq!(apply_key(&encrypted, &key).unwrap(), fx.quantized);
}
