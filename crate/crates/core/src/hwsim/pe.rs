use crate::error::{Error, Result};
use crate::hwsim::cell::{decrypt_mac_bit, RramCell};
use crate::tensor::Matrix;

pub const PE_ROWS: usize = 32;
pub const PE_COLS: usize = 1024;
pub const CELLS_PER_WEIGHT: usize = 8;
pub const WEIGHTS_PER_ROW: usize = PE_COLS / CELLS_PER_WEIGHT;
/// Weights the adder tree consumes per cycle.
pub const ADDER_TREE_WIDTH: usize = 8;
pub const ADDER_PASSES_PER_ROW: u32 = (WEIGHTS_PER_ROW / ADDER_TREE_WIDTH) as u32;

/// 32 x 1024 RRAM sub-array. Weight `(row, lane)` occupies columns
/// `lane*8 .. lane*8+8`, most significant bit first.
///
/// Each column has a decryptor. Its key bit comes from a key memory with the
/// same shape as the array, addressed by the active wordline.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeArray {
    cells: Vec<RramCell>,
    key: Vec<bool>,
}

impl Default for PeArray {
    fn default() -> Self {
        PeArray { cells: vec![RramCell::Hrs; PE_ROWS * PE_COLS], key: vec![false; PE_ROWS * PE_COLS] }
    }
}

/// Result of activating one wordline.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeCycle {
    /// Signed contribution of the active row to each of the 128 lanes.
    pub lane_sums: Vec<i64>,
    pub adder_passes: u32,
}

fn check_slot(row: usize, lane: usize) -> Result<()> {
    if row >= PE_ROWS || lane >= WEIGHTS_PER_ROW {
        return Err(Error::Capacity(format!("slot ({row}, {lane}) outside {PE_ROWS}x{WEIGHTS_PER_ROW}")));
    }
    Ok(())
}

impl PeArray {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cell(&self, row: usize, col: usize) -> RramCell {
        self.cells[row * PE_COLS + col]
    }

    /// Writes an 8-bit two's-complement value into its cell group.
    pub fn write_weight(&mut self, row: usize, lane: usize, value: i32) -> Result<()> {
        check_slot(row, lane)?;
        if !(-128..=127).contains(&value) {
            return Err(Error::Capacity(format!("weight {value} does not fit 8 cells")));
        }
        let byte = value as u8;
        let base = row * PE_COLS + lane * CELLS_PER_WEIGHT;
        for b in 0..CELLS_PER_WEIGHT {
            self.cells[base + b] = RramCell::from_bit(byte >> (7 - b) & 1 == 1);
        }
        Ok(())
    }

    /// Raw stored value, without decryption.
    pub fn read_weight(&self, row: usize, lane: usize) -> i32 {
        let base = row * PE_COLS + lane * CELLS_PER_WEIGHT;
        let byte = (0..CELLS_PER_WEIGHT).fold(0u8, |acc, b| acc << 1 | u8::from(self.cells[base + b].bit()));
        byte as i8 as i32
    }

    /// Programs a block of at most 32 x 128 weights starting at slot (0, 0).
    pub fn program_weights(&mut self, weights: &Matrix<i32>) -> Result<()> {
        if weights.rows() > PE_ROWS || weights.cols() > WEIGHTS_PER_ROW {
            return Err(Error::Capacity(format!(
                "{}x{} block exceeds {PE_ROWS}x{WEIGHTS_PER_ROW}",
                weights.rows(),
                weights.cols()
            )));
        }
        for r in 0..weights.rows() {
            for (c, &w) in weights.row(r).iter().enumerate() {
                self.write_weight(r, c, w)?;
            }
        }
        Ok(())
    }

    pub fn set_key_bit(&mut self, row: usize, col: usize, bit: bool) -> Result<()> {
        if row >= PE_ROWS || col >= PE_COLS {
            return Err(Error::Capacity(format!("key cell ({row}, {col}) outside {PE_ROWS}x{PE_COLS}")));
        }
        self.key[row * PE_COLS + col] = bit;
        Ok(())
    }

    pub fn key_bit(&self, row: usize, col: usize) -> bool {
        self.key[row * PE_COLS + col]
    }

    /// Activates wordline `row` with input bit `x`. Each column goes through
    /// its decryptor, each group of 8 decrypted bits is reassembled into a
    /// signed value, and the adder tree accumulates 8 lanes per pass.
    pub fn cycle(&self, row: usize, x: bool) -> Result<PeCycle> {
        if row >= PE_ROWS {
            return Err(Error::Capacity(format!("row {row} outside the {PE_ROWS}-row array")));
        }
        let base = row * PE_COLS;
        let mut lane_sums = vec![0i64; WEIGHTS_PER_ROW];
        let mut adder_passes = 0;
        for group in lane_sums.chunks_mut(ADDER_TREE_WIDTH).enumerate() {
            let (g, lanes) = group;
            for (k, acc) in lanes.iter_mut().enumerate() {
                let lane = g * ADDER_TREE_WIDTH + k;
                let col = base + lane * CELLS_PER_WEIGHT;
                let byte = (0..CELLS_PER_WEIGHT).fold(0u8, |v, b| {
                    v << 1 | u8::from(decrypt_mac_bit(x, self.cells[col + b].bit(), self.key[col + b]))
                });
                *acc += byte as i8 as i64;
            }
            adder_passes += 1;
        }
        Ok(PeCycle { lane_sums, adder_passes })
    }
}

/// Free-function form of [`PeArray::cycle`].
pub fn pe_cycle(pe: &PeArray, active_row: usize, x: bool) -> Result<PeCycle> {
    pe.cycle(active_row, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snn::flip_msb;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bit_patterns() {
        let mut pe = PeArray::new();
        pe.write_weight(0, 0, -127).unwrap();
        use RramCell::{Hrs as H, Lrs as L};
        let cells: Vec<_> = (0..8).map(|c| pe.cell(0, c)).collect();
        assert_eq!(cells, vec![L, H, H, H, H, H, H, L]);
        pe.write_weight(0, 1, 0).unwrap();
        assert!((8..16).all(|c| pe.cell(0, c) == H));
        assert!(pe.write_weight(32, 0, 0).is_err());
        assert!(pe.write_weight(0, 0, 128).is_err());
    }

    #[test]
    fn random_block_roundtrips() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = Matrix::from_fn(32, 128, |_, _| rng.gen_range(-128..=127));
        let mut pe = PeArray::new();
        pe.program_weights(&m).unwrap();
        for r in 0..32 {
            for c in 0..128 {
                assert_eq!(pe.read_weight(r, c), *m.get(r, c));
            }
        }
        assert!(pe.program_weights(&Matrix::filled(33, 1, 0)).is_err());
    }

    #[test]
    fn cycle_matches_plaintext_dot_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let plain = Matrix::from_fn(32, 128, |_, _| rng.gen_range(-127..=127));
        let mut pe = PeArray::new();
        for r in 0..32 {
            for c in 0..128 {
                let key = rng.gen_bool(0.3);
                let w = *plain.get(r, c);
                pe.write_weight(r, c, if key { flip_msb(w, 8) } else { w }).unwrap();
                pe.set_key_bit(r, c * 8, key).unwrap();
            }
        }
        for r in 0..32 {
            let out = pe_cycle(&pe, r, true).unwrap();
            assert_eq!(out.adder_passes, 16);
            let expected: Vec<i64> = plain.row(r).iter().map(|&w| w as i64).collect();
            assert_eq!(out.lane_sums, expected);
            assert!(pe_cycle(&pe, r, false).unwrap().lane_sums.iter().all(|&s| s == 0));
        }
    }

    #[test]
    fn single_weight_lane() {
        let mut pe = PeArray::new();
        pe.write_weight(3, 7, -5).unwrap();
        let out = pe.cycle(3, true).unwrap();
        assert_eq!(out.lane_sums[7], -5);
        assert_eq!(out.lane_sums.iter().sum::<i64>(), -5);
        assert!(pe.cycle(32, true).is_err());
    }
}
