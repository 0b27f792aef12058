//! Per-subject, per-domain feature files.
//!
//! ```text
//! magic      8 bytes  "CNNFEAT\0"
//! version    u16 major, u16 minor
//! kind       u8       0 = VAR, 1 = PDC, 2 = CN
//! flags      u8       bit 0: PDC diagonal excluded
//! shape      u8 rank, u32 dims
//! bands      u8 count, then (name, lo f64, hi f64) per band
//! subject    u32 length + UTF-8
//! label      u8       255 = unlabeled
//! extension  u32 length + bytes (reserved for later minor versions)
//! payload    u64 count + f64 LE values, row-major
//! crc32      u32 over everything above
//! ```
//!
//! Readers accept any minor version of a known major version and skip the
//! extension block.

use std::path::Path;

use crate::binfmt::{BinReader, BinWriter};
use crate::eeg_io::Label;
use crate::error::{Error, Result};
use crate::features::{Domain, SubjectFeatures};
use crate::netmetrics::CnFeatureVector;
use crate::spectral::{Band, BandSpec, PdcTensor};
use crate::tensor::Tensor;

pub const FEATURE_MAGIC: &[u8; 8] = b"CNNFEAT\0";
pub const FEATURE_MAJOR: u16 = 1;
pub const FEATURE_MINOR: u16 = 0;
const UNLABELED: u8 = 255;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureContainer {
    pub kind: Domain,
    pub tensor: Tensor,
    pub bands: BandSpec,
    pub self_excluded: bool,
    pub subject_id: String,
    pub label: Option<Label>,
}

fn kind_code(d: Domain) -> u8 {
    d.index() as u8
}

fn kind_from_code(c: u8) -> Result<Domain> {
    Domain::ALL
        .get(c as usize)
        .copied()
        .ok_or_else(|| Error::format(format!("unknown feature kind {c}")))
}

impl FeatureContainer {
    pub fn from_features(f: &SubjectFeatures, kind: Domain) -> Self {
        Self {
            kind,
            tensor: f.domain(kind).clone(),
            bands: f.pdc.bands.clone(),
            self_excluded: f.pdc.self_excluded,
            subject_id: f.subject_id.clone(),
            label: f.label,
        }
    }

    /// Encodes with an explicit minor version and extension block; used to
    /// exercise forward compatibility.
    pub fn to_bytes_versioned(&self, minor: u16, extension: &[u8]) -> Vec<u8> {
        let mut w = BinWriter::new();
        w.bytes(FEATURE_MAGIC);
        w.u16(FEATURE_MAJOR);
        w.u16(minor);
        w.u8(kind_code(self.kind));
        w.u8(u8::from(self.self_excluded));
        w.dims(self.tensor.shape());
        w.u8(self.bands.len() as u8);
        for b in self.bands.bands() {
            w.str(&b.name);
            w.f64(b.lo);
            w.f64(b.hi);
        }
        w.str(&self.subject_id);
        w.u8(self.label.map_or(UNLABELED, |l| l as u8));
        w.u32(extension.len() as u32);
        w.bytes(extension);
        w.f64s(self.tensor.data());
        w.finish()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.to_bytes_versioned(FEATURE_MINOR, &[])
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self> {
        let mut r = BinReader::checked(data)?;
        if r.bytes(8)? != FEATURE_MAGIC {
            return Err(Error::format("not a feature container (bad magic)"));
        }
        let major = r.u16()?;
        let _minor = r.u16()?;
        if major != FEATURE_MAJOR {
            return Err(Error::format(format!("unsupported feature container major version {major}")));
        }
        let kind = kind_from_code(r.u8()?)?;
        let self_excluded = r.u8()? & 1 == 1;
        let shape = r.dims()?;
        let nb = r.u8()? as usize;
        let mut bands = Vec::with_capacity(nb);
        for _ in 0..nb {
            let name = r.str()?;
            let lo = r.f64()?;
            let hi = r.f64()?;
            bands.push(Band::new(name, lo, hi));
        }
        let bands = BandSpec::new(bands)?;
        let subject_id = r.str()?;
        let label = match r.u8()? {
            UNLABELED => None,
            l @ (0 | 1) => Some(l as Label),
            other => return Err(Error::format(format!("invalid label code {other}"))),
        };
        let ext = r.u32()? as usize;
        r.bytes(ext)?;
        let payload = r.f64s()?;
        r.expect_end()?;
        let tensor = Tensor::new(shape, payload)
            .map_err(|e| Error::format(format!("payload does not match declared shape: {e}")))?;
        Ok(Self { kind, tensor, bands, self_excluded, subject_id, label })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

/// File name for one subject and domain, e.g. `sub001.pdc.feat`.
pub fn feature_file_name(subject_id: &str, kind: Domain) -> String {
    format!("{subject_id}.{}.feat", kind.file_tag())
}

pub fn write_subject(dir: &Path, f: &SubjectFeatures) -> Result<()> {
    for d in Domain::ALL {
        FeatureContainer::from_features(f, d).write(&dir.join(feature_file_name(&f.subject_id, d)))?;
    }
    Ok(())
}

/// Reassembles a subject from its three containers.
pub fn read_subject(dir: &Path, subject_id: &str) -> Result<SubjectFeatures> {
    let load = |d: Domain| -> Result<FeatureContainer> {
        let c = FeatureContainer::read(&dir.join(feature_file_name(subject_id, d)))?;
        if c.kind != d || c.subject_id != subject_id {
            return Err(Error::format(format!(
                "{} holds {} features of '{}'",
                feature_file_name(subject_id, d),
                c.kind.name(),
                c.subject_id
            )));
        }
        Ok(c)
    };
    let (var, pdc, cn) = (load(Domain::Var)?, load(Domain::Pdc)?, load(Domain::Cn)?);
    Ok(SubjectFeatures {
        subject_id: subject_id.to_string(),
        label: pdc.label,
        var: var.tensor,
        pdc: PdcTensor { values: pdc.tensor, bands: pdc.bands, self_excluded: pdc.self_excluded },
        cn: CnFeatureVector { values: cn.tensor, bands: cn.bands },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> FeatureContainer {
        FeatureContainer {
            kind: Domain::Cn,
            tensor: Tensor::new(vec![6, 5], (0..30).map(|i| i as f64 * 0.5).collect()).unwrap(),
            bands: BandSpec::default(),
            self_excluded: true,
            subject_id: "s7".into(),
            label: Some(1),
        }
    }

    #[test]
    fn round_trip() {
        let c = sample();
        assert_eq!(FeatureContainer::from_bytes(&c.to_bytes()).unwrap(), c);
    }

    #[test]
    fn newer_minor_version_is_readable() {
        let c = sample();
        let bytes = c.to_bytes_versioned(FEATURE_MINOR + 3, b"future header fields");
        assert_eq!(FeatureContainer::from_bytes(&bytes).unwrap(), c);
    }

    #[test]
    fn rejects_corruption_and_other_major() {
        let c = sample();
        let mut bytes = c.to_bytes();
        let n = bytes.len();
        bytes[n - 10] ^= 0xff;
        assert!(FeatureContainer::from_bytes(&bytes).is_err());

        let mut w = BinWriter::new();
        w.bytes(FEATURE_MAGIC);
        w.u16(FEATURE_MAJOR + 1);
        w.u16(0);
        let err = FeatureContainer::from_bytes(&w.finish()).unwrap_err();
        assert!(err.to_string().contains("major"), "{err}");
    }
}
