use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::genetic::SecretKey;
use crate::hwsim::neuron::FixedPointLif;
use crate::hwsim::pe::{PeArray, CELLS_PER_WEIGHT, PE_ROWS, WEIGHTS_PER_ROW};
use crate::snn::{argmax_lowest, FixedFormat, ForwardOutput, LayerSums, QuantizedMatrix, QuantizedNetwork, SpikeTrain};

pub const PES_PER_TILE: usize = 16;
pub const NEURONS_PER_TILE: usize = 64;

/// One weight matrix spread over PE arrays. Input `j` drives wordline
/// `j % 32` of the PEs in input block `j / 32`; output `i` is lane `i % 128`
/// of output block `i / 128`.
#[derive(Clone, Debug)]
struct MappedMatrix {
    n_out: usize,
    blocks_out: usize,
    delta: f64,
    /// Indexed `in_block * blocks_out + out_block`.
    pes: Vec<PeArray>,
    /// Global PE index of `pes[0]`, used for tile assignment.
    first_pe: usize,
}

impl MappedMatrix {
    fn program(m: &QuantizedMatrix, first_pe: usize) -> Result<Self> {
        let (n_out, n_in) = (m.values.rows(), m.values.cols());
        let blocks_in = n_in.div_ceil(PE_ROWS);
        let blocks_out = n_out.div_ceil(WEIGHTS_PER_ROW);
        let mut pes = vec![PeArray::new(); blocks_in * blocks_out];
        for i in 0..n_out {
            for j in 0..n_in {
                let pe = &mut pes[(j / PE_ROWS) * blocks_out + i / WEIGHTS_PER_ROW];
                pe.write_weight(j % PE_ROWS, i % WEIGHTS_PER_ROW, *m.values.get(i, j))?;
            }
        }
        Ok(MappedMatrix { n_out, blocks_out, delta: m.delta, pes, first_pe })
    }

    fn set_key(&mut self, n_in: usize, position: usize) -> Result<()> {
        let (i, j) = (position / n_in, position % n_in);
        let pe = &mut self.pes[(j / PE_ROWS) * self.blocks_out + i / WEIGHTS_PER_ROW];
        pe.set_key_bit(j % PE_ROWS, (i % WEIGHTS_PER_ROW) * CELLS_PER_WEIGHT, true)
    }

    /// Integer partial sums for the active inputs, activating one wordline
    /// per spiking input in every output block.
    fn accumulate(
        &self,
        active: &[usize],
        stats: &mut HwStats,
        mut trace: Option<&mut TraceSink<'_>>,
        ctx: (usize, usize, MatrixRole),
    ) -> Result<Vec<i64>> {
        let mut sums = vec![0i64; self.n_out];
        for &j in active {
            for bo in 0..self.blocks_out {
                let idx = (j / PE_ROWS) * self.blocks_out + bo;
                let row = j % PE_ROWS;
                let out = self.pes[idx].cycle(row, true)?;
                stats.rows_activated += 1;
                stats.pe_cycles += u64::from(out.adder_passes);
                let base = bo * WEIGHTS_PER_ROW;
                let width = (self.n_out - base).min(WEIGHTS_PER_ROW);
                for (s, v) in sums[base..base + width].iter_mut().zip(&out.lane_sums) {
                    *s += v;
                }
                if let Some(t) = trace.as_deref_mut() {
                    let pe = self.first_pe + idx;
                    t.emit(&TraceEvent::Row {
                        t: ctx.0,
                        layer: ctx.1,
                        matrix: ctx.2,
                        pe,
                        tile: pe % t.tiles,
                        row,
                        lane_sums: &out.lane_sums[..width],
                    })?;
                }
            }
        }
        Ok(sums)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixRole {
    Feedforward,
    Recurrent,
}

#[derive(Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
enum TraceEvent<'a> {
    Row { t: usize, layer: usize, matrix: MatrixRole, pe: usize, tile: usize, row: usize, lane_sums: &'a [i64] },
    Spikes { t: usize, layer: usize, spikes: &'a [usize] },
}

struct TraceSink<'a> {
    out: &'a mut dyn Write,
    tiles: usize,
}

impl TraceSink<'_> {
    fn emit(&mut self, e: &TraceEvent<'_>) -> Result<()> {
        serde_json::to_writer(&mut *self.out, e)?;
        self.out.write_all(b"\n")?;
        Ok(())
    }
}

#[derive(Clone, Debug)]
struct MappedLayer {
    n_in: usize,
    ff: MappedMatrix,
    rec: Option<MappedMatrix>,
    neurons: Vec<FixedPointLif>,
}

/// Cycle accounting for one inference.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct HwStats {
    /// Wordline activations across all PEs.
    pub rows_activated: u64,
    /// Adder-tree passes; each activation costs one pass per 8 lanes.
    pub pe_cycles: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HwInference {
    pub output: ForwardOutput,
    pub stats: HwStats,
    /// `[timestep][layer]` integer partial sums.
    pub sums: Vec<Vec<LayerSums>>,
}

/// Accelerator programmed with encrypted weights and their key.
///
/// Layers are spread over 32x1024 PEs; PEs are assigned to tiles of 16 in
/// round-robin order. Only 8-bit networks are mappable.
#[derive(Clone, Debug)]
pub struct Accelerator {
    layers: Vec<MappedLayer>,
    num_classes: usize,
    pes: usize,
    tiles: usize,
}

impl Accelerator {
    pub fn program(encrypted: &QuantizedNetwork, key: &SecretKey, format: FixedFormat) -> Result<Self> {
        if encrypted.n_bit() != 8 {
            return Err(Error::Unmappable(format!("PE cells hold 8-bit weights, network has n_bit = {}", encrypted.n_bit())));
        }
        let target = encrypted.layer(key.layer())?;
        if key.genome_length() != target.weights.values.len() {
            return Err(Error::KeyLength {
                layer: key.layer(),
                key: key.genome_length(),
                expected: target.weights.values.len(),
            });
        }
        if key.n_bit() != 8 {
            return Err(Error::Unmappable(format!("key targets n_bit = {}", key.n_bit())));
        }
        let mut layers = Vec::with_capacity(encrypted.layers().len());
        let mut next_pe = 0;
        for (li, l) in encrypted.layers().iter().enumerate() {
            let mut ff = MappedMatrix::program(&l.weights, next_pe)?;
            next_pe += ff.pes.len();
            if li == key.layer() {
                for &p in key.positions() {
                    ff.set_key(l.n_in(), p as usize)?;
                }
            }
            let rec = match &l.recurrent_weights {
                Some(r) => {
                    let m = MappedMatrix::program(r, next_pe)?;
                    next_pe += m.pes.len();
                    Some(m)
                }
                None => None,
            };
            let neurons = (0..l.n_out()).map(|_| FixedPointLif::new(&l.neuron, format)).collect::<Result<_>>()?;
            layers.push(MappedLayer { n_in: l.n_in(), ff, rec, neurons });
        }
        Ok(Accelerator { layers, num_classes: encrypted.num_classes(), pes: next_pe, tiles: next_pe.div_ceil(PES_PER_TILE) })
    }

    pub fn pe_count(&self) -> usize {
        self.pes
    }

    pub fn tile_count(&self) -> usize {
        self.tiles
    }

    /// Runs one sample. Every inference starts from reset neurons, so the
    /// accelerator can be reused.
    pub fn infer(&self, sample: &SpikeTrain, trace: Option<&mut dyn Write>) -> Result<HwInference> {
        let n_in = self.layers[0].n_in;
        if sample.features() != n_in {
            return Err(Error::Dimension(format!("sample has {} features, network expects {n_in}", sample.features())));
        }
        let mut sink = trace.map(|out| TraceSink { out, tiles: self.tiles.max(1) });
        let mut neurons: Vec<Vec<FixedPointLif>> = self.layers.iter().map(|l| l.neurons.clone()).collect();
        let mut prev: Vec<Vec<usize>> = self.layers.iter().map(|_| Vec::new()).collect();
        let mut stats = HwStats::default();
        let mut counts = vec![0u32; self.num_classes];
        let mut sums = Vec::with_capacity(sample.timesteps());
        for (t, input) in sample.active_per_step().into_iter().enumerate() {
            let mut x = input;
            let mut step_sums = Vec::with_capacity(self.layers.len());
            for (li, layer) in self.layers.iter().enumerate() {
                let ff = layer.ff.accumulate(&x, &mut stats, sink.as_mut(), (t, li, MatrixRole::Feedforward))?;
                let rec = match &layer.rec {
                    Some(r) => Some(r.accumulate(&prev[li], &mut stats, sink.as_mut(), (t, li, MatrixRole::Recurrent))?),
                    None => None,
                };
                let mut spikes = Vec::new();
                for (i, n) in neurons[li].iter_mut().enumerate() {
                    let mut i_ext = n.scale_input(ff[i], layer.ff.delta);
                    if let (Some(rs), Some(rm)) = (&rec, &layer.rec) {
                        i_ext = n.add_inputs(i_ext, n.scale_input(rs[i], rm.delta));
                    }
                    if n.step(i_ext) {
                        spikes.push(i);
                    }
                }
                if let Some(s) = sink.as_mut() {
                    s.emit(&TraceEvent::Spikes { t, layer: li, spikes: &spikes })?;
                }
                prev[li] = spikes.clone();
                x = spikes;
                step_sums.push(LayerSums { feedforward: ff, recurrent: rec });
            }
            for &k in &x {
                counts[k] += 1;
            }
            sums.push(step_sums);
        }
        Ok(HwInference { output: ForwardOutput { prediction: argmax_lowest(&counts), counts }, stats, sums })
    }
}

/// Programs an accelerator with `encrypted` and `key` and runs one sample.
pub fn simulate_inference(
    encrypted: &QuantizedNetwork,
    key: &SecretKey,
    sample: &SpikeTrain,
    format: FixedFormat,
) -> Result<HwInference> {
    Accelerator::program(encrypted, key, format)?.infer(sample, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genetic::apply_key;
    use crate::snn::{quantize, Architecture, FloatNetwork, MembraneArithmetic, NeuronParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sample(rng: &mut ChaCha8Rng, t: usize, f: usize) -> SpikeTrain {
        SpikeTrain::new(t, f, (0..t * f).map(|_| u8::from(rng.gen_bool(0.3))).collect()).unwrap()
    }

    #[test]
    fn matches_software_across_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let arch: Architecture = "70F-150R-3F".parse().unwrap();
        let q = quantize(&FloatNetwork::random(&arch, NeuronParams::default(), 3.0, 1).unwrap(), 8).unwrap();
        let len = q.layers()[0].weights.values.len();
        let mut pos: Vec<u32> = (0..40).map(|_| rng.gen_range(0..len as u32)).collect();
        pos.sort_unstable();
        pos.dedup();
        let key = SecretKey::new(0, 8, len, pos).unwrap();
        let enc = apply_key(&q, &key).unwrap();
        let acc = Accelerator::program(&enc, &key, FixedFormat::default()).unwrap();
        assert_eq!(acc.pe_count(), 3 * 2 + 5 * 2 + 5);
        assert_eq!(acc.tile_count(), 2);
        for _ in 0..10 {
            let s = random_sample(&mut rng, 12, 70);
            let hw = acc.infer(&s, None).unwrap();
            let sw = q.forward_traced(&s, MembraneArithmetic::Fixed(FixedFormat::default())).unwrap();
            assert_eq!(hw.output, sw.output);
            assert_eq!(hw.sums, sw.sums);
        }
    }

    #[test]
    fn wrong_key_is_faithful() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let arch: Architecture = "20F-10F-3F".parse().unwrap();
        let q = quantize(&FloatNetwork::random(&arch, NeuronParams::default(), 3.0, 2).unwrap(), 8).unwrap();
        let key = SecretKey::new(1, 8, 30, vec![1, 5, 9]).unwrap();
        let wrong = SecretKey::new(1, 8, 30, vec![1, 6]).unwrap();
        let enc = apply_key(&q, &key).unwrap();
        let decrypted_wrong = apply_key(&enc, &wrong).unwrap();
        let fmt = FixedFormat::default();
        for _ in 0..10 {
            let s = random_sample(&mut rng, 8, 20);
            let hw = simulate_inference(&enc, &wrong, &s, fmt).unwrap();
            let sw = decrypted_wrong.forward_traced(&s, MembraneArithmetic::Fixed(fmt)).unwrap();
            assert_eq!((hw.output, hw.sums), (sw.output, sw.sums));
        }
    }

    #[test]
    fn cycle_accounting_and_trace() {
        let arch: Architecture = "4F-2F".parse().unwrap();
        let q = quantize(&FloatNetwork::random(&arch, NeuronParams::default(), 1.0, 0).unwrap(), 8).unwrap();
        let key = SecretKey::empty(0, 8, 8);
        let s = SpikeTrain::new(2, 4, vec![1, 1, 0, 0, 0, 0, 0, 1]).unwrap();
        let mut buf = Vec::new();
        let acc = Accelerator::program(&q, &key, FixedFormat::default()).unwrap();
        let hw = acc.infer(&s, Some(&mut buf)).unwrap();
        assert_eq!(hw.stats, HwStats { rows_activated: 3, pe_cycles: 48 });
        let lines: Vec<serde_json::Value> =
            String::from_utf8(buf).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(lines.len(), 3 + 2);
        assert_eq!(lines[0]["event"], "row");
        assert_eq!(lines[0]["lane_sums"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn unmappable_precision() {
        let arch: Architecture = "4F-2F".parse().unwrap();
        let q = quantize(&FloatNetwork::random(&arch, NeuronParams::default(), 1.0, 0).unwrap(), 4).unwrap();
        let err = Accelerator::program(&q, &SecretKey::empty(0, 4, 8), FixedFormat::default()).unwrap_err();
        assert_eq!(err.code(), "E_UNMAPPABLE");
    }
}
