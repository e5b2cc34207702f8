use std::io::{BufRead, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::snn::{Dataset, LabeledSample, SpikeTrain};

pub const DATASET_MAGIC: [u8; 4] = *b"SNGX";
pub const DATASET_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 4 + 4 + 2 + 4;

/// Bytes needed for one bit-packed sample.
pub fn packed_len(timesteps: usize, features: usize) -> usize {
    (timesteps * features).div_ceil(8)
}

/// Packs a spike train row-major, bit `i` at byte `i / 8`, position `i % 8`.
pub fn pack_spikes(train: &SpikeTrain) -> Vec<u8> {
    let mut out = vec![0u8; packed_len(train.timesteps(), train.features())];
    for (i, &b) in train.as_bits().iter().enumerate() {
        out[i / 8] |= b << (i % 8);
    }
    out
}

pub fn unpack_spikes(bytes: &[u8], timesteps: usize, features: usize) -> Result<SpikeTrain> {
    let n = timesteps * features;
    if bytes.len() != packed_len(timesteps, features) {
        return Err(Error::Truncated(format!("sample needs {} bytes, got {}", packed_len(timesteps, features), bytes.len())));
    }
    let bits = (0..n).map(|i| (bytes[i / 8] >> (i % 8)) & 1).collect();
    SpikeTrain::new(timesteps, features, bits)
}

fn narrow<T: TryFrom<usize>>(v: usize, what: &str) -> Result<T> {
    T::try_from(v).map_err(|_| Error::Validation(format!("{what} = {v} does not fit the dataset header")))
}

pub fn encode_dataset(d: &Dataset) -> Result<Vec<u8>> {
    let per = packed_len(d.timesteps(), d.features());
    let mut out = Vec::with_capacity(HEADER_LEN + d.len() * (2 + per));
    out.extend_from_slice(&DATASET_MAGIC);
    out.extend_from_slice(&DATASET_VERSION.to_le_bytes());
    out.extend_from_slice(&narrow::<u32>(d.timesteps(), "timesteps")?.to_le_bytes());
    out.extend_from_slice(&narrow::<u32>(d.features(), "features")?.to_le_bytes());
    out.extend_from_slice(&narrow::<u16>(d.num_classes(), "num_classes")?.to_le_bytes());
    out.extend_from_slice(&narrow::<u32>(d.len(), "count")?.to_le_bytes());
    for s in d.samples() {
        out.extend_from_slice(&(s.label as u16).to_le_bytes());
        out.extend_from_slice(&pack_spikes(&s.input));
    }
    Ok(out)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Truncated(format!(
                "{what}: need {n} bytes at offset {}, only {} left",
                self.pos,
                self.buf.len() - self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

pub fn decode_dataset(bytes: &[u8]) -> Result<Dataset> {
    let mut c = Cursor { buf: bytes, pos: 0 };
    let magic: [u8; 4] = c.take(4, "magic")?.try_into().unwrap();
    if magic != DATASET_MAGIC {
        return Err(Error::BadMagic { found: magic, expected: DATASET_MAGIC });
    }
    let version = c.u16("version")?;
    if version != DATASET_VERSION {
        return Err(Error::UnsupportedVersion { found: version.into(), supported: DATASET_VERSION.into() });
    }
    let t = c.u32("timesteps")? as usize;
    let f = c.u32("features")? as usize;
    let classes = c.u16("num_classes")? as usize;
    let count = c.u32("count")? as usize;
    let per = packed_len(t, f);
    let mut samples = Vec::with_capacity(count.min(bytes.len() / (2 + per.max(1))));
    for i in 0..count {
        let label = c.u16(&format!("label of sample {i}"))? as usize;
        let packed = c.take(per, &format!("spikes of sample {i}"))?;
        if t * f % 8 != 0 && packed[per - 1] >> (t * f % 8) != 0 {
            return Err(Error::Validation(format!("sample {i} has nonzero padding bits")));
        }
        samples.push(LabeledSample { input: unpack_spikes(packed, t, f)?, label });
    }
    if c.pos != bytes.len() {
        return Err(Error::Parse(format!("{} trailing bytes after {count} samples", bytes.len() - c.pos)));
    }
    Dataset::new(t, f, classes, samples)
}

pub fn write_dataset(d: &Dataset, w: &mut impl Write) -> Result<()> {
    w.write_all(&encode_dataset(d)?)?;
    Ok(())
}

pub fn read_dataset(r: &mut impl Read) -> Result<Dataset> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    decode_dataset(&buf)
}

pub fn save_dataset(d: &Dataset, path: &Path) -> Result<()> {
    std::fs::write(path, encode_dataset(d)?)?;
    Ok(())
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    decode_dataset(&std::fs::read(path)?)
}

fn csv_reader(r: impl Read) -> csv::Reader<impl Read> {
    csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).comment(Some(b'#')).from_reader(r)
}

fn parse_fields(rec: &csv::StringRecord, expected: usize, line: u64) -> Result<Option<Vec<usize>>> {
    if rec.len() != expected {
        return Err(Error::Parse(format!("line {line}: expected {expected} fields, got {}", rec.len())));
    }
    let parsed: std::result::Result<Vec<usize>, _> = rec.iter().map(str::parse::<usize>).collect();
    match parsed {
        Ok(v) => Ok(Some(v)),
        // A non-numeric first line is a header.
        Err(_) if line == 1 => Ok(None),
        Err(e) => Err(Error::Parse(format!("line {line}: {e}"))),
    }
}

fn set_event(train: &mut SpikeTrain, t: usize, f: usize, line: u64) -> Result<()> {
    if t >= train.timesteps() || f >= train.features() {
        return Err(Error::Validation(format!(
            "line {line}: event (t={t}, feature={f}) outside {}x{}",
            train.timesteps(),
            train.features()
        )));
    }
    train.set(t, f, true);
    Ok(())
}

/// Reads one spike train from `t,feature` event lines.
pub fn import_events_csv(r: impl BufRead, timesteps: usize, features: usize) -> Result<SpikeTrain> {
    let mut train = SpikeTrain::zeros(timesteps, features)?;
    for (n, rec) in csv_reader(r).records().enumerate() {
        let line = n as u64 + 1;
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        if let Some(v) = parse_fields(&rec, 2, line)? {
            set_event(&mut train, v[0], v[1], line)?;
        }
    }
    Ok(train)
}

/// Reads a labelled dataset from `sample,label,t,feature` event lines.
/// Sample ids must be dense from 0 and every sample needs at least one event.
pub fn import_dataset_csv(r: impl BufRead, timesteps: usize, features: usize, num_classes: usize) -> Result<Dataset> {
    let mut samples: Vec<Option<LabeledSample>> = Vec::new();
    for (n, rec) in csv_reader(r).records().enumerate() {
        let line = n as u64 + 1;
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let Some(v) = parse_fields(&rec, 4, line)? else { continue };
        let (id, label) = (v[0], v[1]);
        if id >= samples.len() {
            samples.resize(id + 1, None);
        }
        let slot = samples[id].get_or_insert_with(|| LabeledSample { input: SpikeTrain::zeros(timesteps, features).unwrap(), label });
        if slot.label != label {
            return Err(Error::Validation(format!("line {line}: sample {id} relabelled {} -> {label}", slot.label)));
        }
        set_event(&mut slot.input, v[2], v[3], line)?;
    }
    let samples = samples
        .into_iter()
        .enumerate()
        .map(|(i, s)| s.ok_or_else(|| Error::Validation(format!("sample id {i} has no events"))))
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(timesteps, features, num_classes, samples)
}

/// Writes a dataset as `sample,label,t,feature` lines with a header, the
/// inverse of [`import_dataset_csv`] for datasets whose samples all fire.
pub fn export_dataset_csv(d: &Dataset, w: impl Write) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["sample", "label", "t", "feature"]).map_err(|e| Error::Parse(e.to_string()))?;
    for (i, s) in d.samples().iter().enumerate() {
        for (t, step) in s.input.active_per_step().iter().enumerate() {
            for f in step {
                wtr.write_record([i.to_string(), s.label.to_string(), t.to_string(), f.to_string()])
                    .map_err(|e| Error::Parse(e.to_string()))?;
            }
        }
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Dataset {
        let a = SpikeTrain::new(3, 3, vec![1, 0, 0, 0, 1, 0, 0, 0, 1]).unwrap();
        let b = SpikeTrain::new(3, 3, vec![0, 0, 0, 0, 0, 0, 1, 1, 1]).unwrap();
        Dataset::new(3, 3, 2, vec![LabeledSample { input: a, label: 1 }, LabeledSample { input: b, label: 0 }]).unwrap()
    }

    #[test]
    fn bit_order_is_lsb_first() {
        let bytes = encode_dataset(&tiny()).unwrap();
        assert_eq!(&bytes[..HEADER_LEN], b"SNGX\x01\x00\x03\x00\x00\x00\x03\x00\x00\x00\x02\x00\x02\x00\x00\x00");
        // Bits 0, 4, 8 set: 0b0001_0001, 0b0000_0001.
        assert_eq!(&bytes[HEADER_LEN..HEADER_LEN + 4], &[1, 0, 0x11, 0x01]);
        assert_eq!(&bytes[HEADER_LEN + 4..], &[0, 0, 0xC0, 0x01]);
    }

    #[test]
    fn roundtrip() {
        let d = tiny();
        assert_eq!(decode_dataset(&encode_dataset(&d).unwrap()).unwrap(), d);
    }

    #[test]
    fn corrupt_inputs_are_distinct_errors() {
        let good = encode_dataset(&tiny()).unwrap();
        let mut bad = good.clone();
        bad[0] = b'X';
        assert_eq!(decode_dataset(&bad).unwrap_err().code(), "E_MAGIC");
        let mut bad = good.clone();
        bad[4] = 9;
        assert_eq!(decode_dataset(&bad).unwrap_err().code(), "E_VERSION");
        assert_eq!(decode_dataset(&good[..good.len() - 1]).unwrap_err().code(), "E_TRUNCATED");
        let mut bad = good.clone();
        bad.push(0);
        assert_eq!(decode_dataset(&bad).unwrap_err().code(), "E_PARSE");
        let mut bad = good;
        bad[HEADER_LEN] = 5;
        assert_eq!(decode_dataset(&bad).unwrap_err().code(), "E_VALIDATION");
    }

    #[test]
    fn csv_imports() {
        let t = import_events_csv("t,feature\n0,0\n1,1\n2,2\n".as_bytes(), 3, 3).unwrap();
        assert_eq!(t, tiny().samples()[0].input);
        let d = import_dataset_csv("0,1,0,0\n0,1,1,1\n1,0,2,0\n0,1,2,2\n1,0,2,1\n1,0,2,2\n".as_bytes(), 3, 3, 2).unwrap();
        assert_eq!(d, tiny());
        assert!(import_events_csv("3,0\n".as_bytes(), 3, 3).is_err());
        assert!(import_dataset_csv("0,1,0,0\n0,0,1,1\n".as_bytes(), 3, 3, 2).is_err());
        let mut buf = Vec::new();
        export_dataset_csv(&tiny(), &mut buf).unwrap();
        assert_eq!(import_dataset_csv(buf.as_slice(), 3, 3, 2).unwrap(), tiny());
    }
}
