//! Binary feature archive, one file per split.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic      4 bytes  "VACF"
//! version    u32      = 1
//! frames     u32      T
//! bins       u32      F
//! axis       u8       0 = linear frequency, 1 = mel
//! reserved   3 bytes  zero
//! count      u32      number of records
//! record*:
//!   id_len   u32
//!   id       id_len bytes, UTF-8
//!   label    i32      -1 when unlabeled
//!   values   T*F f32  row-major, frame by frame
//!   mask     T bytes  0 or 1
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::audio::{ActivityMask, AxisKind, Spectrogram};
use crate::error::{Error, Result};

pub const ARCHIVE_MAGIC: &[u8; 4] = b"VACF";
pub const ARCHIVE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSample {
    pub id: String,
    pub label: Option<u32>,
    /// `frames * bins` normalized values.
    pub values: Vec<f32>,
    pub mask: Vec<u8>,
}

impl FeatureSample {
    pub fn from_spectrogram(
        id: impl Into<String>,
        label: Option<u32>,
        spec: &Spectrogram,
        mask: &ActivityMask,
    ) -> Result<Self> {
        if mask.len() != spec.frames {
            return Err(Error::Dimension(format!(
                "mask has {} frames, spectrogram {}",
                mask.len(),
                spec.frames
            )));
        }
        Ok(Self {
            id: id.into(),
            label,
            values: spec.values.iter().map(|&v| v as f32).collect(),
            mask: mask.frames.clone(),
        })
    }

    pub fn active_frames(&self) -> usize {
        self.mask.iter().filter(|&&m| m != 0).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureArchive {
    pub frames: usize,
    pub bins: usize,
    pub axis: AxisKind,
    pub samples: Vec<FeatureSample>,
}

impl FeatureArchive {
    pub fn new(frames: usize, bins: usize, axis: AxisKind) -> Self {
        Self {
            frames,
            bins,
            axis,
            samples: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn push(&mut self, sample: FeatureSample) -> Result<()> {
        if sample.values.len() != self.frames * self.bins || sample.mask.len() != self.frames {
            return Err(Error::Dimension(format!(
                "sample {} does not match archive geometry {}x{}",
                sample.id, self.frames, self.bins
            )));
        }
        self.samples.push(sample);
        Ok(())
    }

    pub fn labels(&self) -> Option<Vec<usize>> {
        self.samples
            .iter()
            .map(|s| s.label.map(|l| l as usize))
            .collect()
    }

    /// Rows of flattened features, used by the classical baselines.
    pub fn flattened(&self) -> Vec<Vec<f64>> {
        self.samples
            .iter()
            .map(|s| s.values.iter().map(|&v| f64::from(v)).collect())
            .collect()
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e| Error::io("<archive>", e);
        w.write_all(ARCHIVE_MAGIC).map_err(io)?;
        w.write_u32::<LittleEndian>(ARCHIVE_VERSION).map_err(io)?;
        w.write_u32::<LittleEndian>(self.frames as u32).map_err(io)?;
        w.write_u32::<LittleEndian>(self.bins as u32).map_err(io)?;
        let axis = match self.axis {
            AxisKind::LinearFrequency => 0u8,
            AxisKind::Mel => 1u8,
        };
        w.write_all(&[axis, 0, 0, 0]).map_err(io)?;
        w.write_u32::<LittleEndian>(self.samples.len() as u32).map_err(io)?;
        for s in &self.samples {
            w.write_u32::<LittleEndian>(s.id.len() as u32).map_err(io)?;
            w.write_all(s.id.as_bytes()).map_err(io)?;
            w.write_i32::<LittleEndian>(s.label.map_or(-1, |l| l as i32)).map_err(io)?;
            for &v in &s.values {
                w.write_f32::<LittleEndian>(v).map_err(io)?;
            }
            w.write_all(&s.mask).map_err(io)?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let io = |e| Error::io("<archive>", e);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != ARCHIVE_MAGIC {
            return Err(Error::Format("not a feature archive".into()));
        }
        let version = r.read_u32::<LittleEndian>().map_err(io)?;
        if version != ARCHIVE_VERSION {
            return Err(Error::Version {
                found: version,
                expected: ARCHIVE_VERSION,
            });
        }
        let frames = r.read_u32::<LittleEndian>().map_err(io)? as usize;
        let bins = r.read_u32::<LittleEndian>().map_err(io)? as usize;
        let mut axis = [0u8; 4];
        r.read_exact(&mut axis).map_err(io)?;
        let axis = match axis[0] {
            0 => AxisKind::LinearFrequency,
            1 => AxisKind::Mel,
            other => return Err(Error::Format(format!("unknown axis kind {other}"))),
        };
        let count = r.read_u32::<LittleEndian>().map_err(io)? as usize;
        let mut archive = FeatureArchive::new(frames, bins, axis);
        for _ in 0..count {
            let id_len = r.read_u32::<LittleEndian>().map_err(io)? as usize;
            let mut id = vec![0u8; id_len];
            r.read_exact(&mut id).map_err(io)?;
            let id = String::from_utf8(id).map_err(|e| Error::Format(e.to_string()))?;
            let label = r.read_i32::<LittleEndian>().map_err(io)?;
            let mut values = vec![0f32; frames * bins];
            r.read_f32_into::<LittleEndian>(&mut values).map_err(io)?;
            let mut mask = vec![0u8; frames];
            r.read_exact(&mut mask).map_err(io)?;
            archive.samples.push(FeatureSample {
                id,
                label: (label >= 0).then_some(label as u32),
                values,
                mask,
            });
        }
        Ok(archive)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(f);
        self.write_to(&mut w)?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(f))
    }
}

/// Canonical file name of a split inside a features directory.
pub fn split_path(dir: &Path, split: &str) -> std::path::PathBuf {
    dir.join(format!("{split}.vacf"))
}
