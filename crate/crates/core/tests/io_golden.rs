use snngx::io::{decode_dataset, encode_dataset, DATASET_MAGIC};
use snngx::repro::golden::{check_golden, golden_files};
use snngx::Error;

#[test]
fn committed_golden_files_match_a_fresh_build() {
    for (name, outcome) in check_golden().unwrap() {
        assert!(outcome.is_ok(), "{name}: {}", outcome.unwrap_err());
    }
}

#[test]
fn golden_dataset_errors_are_distinguishable() {
    let files = golden_files().unwrap();
    let bytes = &files.iter().find(|(n, _)| *n == "dataset.sngx").unwrap().1;
    assert_eq!(&bytes[..4], &DATASET_MAGIC);
    assert_eq!(encode_dataset(&decode_dataset(bytes).unwrap()).unwrap(), *bytes);

    let mut bad = bytes.clone();
    bad[0] ^= 0xff;
    assert_eq!(decode_dataset(&bad).unwrap_err().code(), "E_MAGIC");

    let mut bad = bytes.clone();
    bad[4] = 9;
    assert!(matches!(decode_dataset(&bad), Err(Error::UnsupportedVersion { .. })));

    assert_eq!(decode_dataset(&bytes[..bytes.len() - 1]).unwrap_err().code(), "E_TRUNCATED");

    let mut long = bytes.clone();
    long.push(0);
    assert!(decode_dataset(&long).is_err());
}
