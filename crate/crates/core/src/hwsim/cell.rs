use serde::{Deserialize, Serialize};

/// Resistance state of one RRAM cell. HRS stores 0, LRS stores 1.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RramCell {
    #[default]
    Hrs,
    Lrs,
}

impl RramCell {
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            RramCell::Lrs
        } else {
            RramCell::Hrs
        }
    }

    pub fn bit(self) -> bool {
        self == RramCell::Lrs
    }
}

/// One column's multiply-then-decrypt: with key 0 the decryptor is bypassed
/// and the output is `x AND w_e`; with key 1 it is `(x AND w_e) XOR x`.
/// Either way the result equals `x AND w` for the plaintext bit `w = w_e XOR key`.
#[inline]
pub fn decrypt_mac_bit(x: bool, w_e: bool, key: bool) -> bool {
    let mac = x & w_e;
    if key {
        mac ^ x
    } else {
        mac
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exhaustive_truth_table() {
        for w in [false, true] {
            for key in [false, true] {
                for x in [false, true] {
                    assert_eq!(decrypt_mac_bit(x, w ^ key, key), x & w, "w={w} key={key} x={x}");
                }
            }
        }
    }

    #[test]
    fn encrypted_rows() {
        // weight 1 stored as HRS under key 1
        assert!(decrypt_mac_bit(true, RramCell::Hrs.bit(), true));
        // weight 0 stored as LRS under key 1
        assert!(!decrypt_mac_bit(true, RramCell::Lrs.bit(), true));
        assert!(!decrypt_mac_bit(false, RramCell::Hrs.bit(), true));
        assert!(!decrypt_mac_bit(false, RramCell::Lrs.bit(), true));
    }
}
