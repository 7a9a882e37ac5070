//! Parameter storage, seeded initialization, the portable archive format and
//! soft target updates.
//!
//! Archive layout (all little-endian):
//! `"LVPM"`, version u16, fingerprint u64, arch descriptor (views u8,
//! with_state u8, attention u8, positional u8, feature_dim u16, channels u16),
//! tensor count u32, then per tensor: name (u16 length + bytes), ndim u8,
//! dims u32 each, f32 payload; finally an FNV-1a checksum u64 over every
//! preceding byte.

use super::arch::{ArchConfig, Layout};
use super::scalar::Scalar;
use crate::error::{LiftError, Result};
use crate::rng::Fnv1a;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

const MAGIC: &[u8; 4] = b"LVPM";
const VERSION: u16 = 1;

/// Named-tensor parameter set backed by one flat vector.
#[derive(Debug, Clone)]
pub struct Params<T: Scalar = f32> {
    pub layout: Arc<Layout>,
    pub data: Vec<T>,
}

impl<T: Scalar> Params<T> {
    pub fn zeros(layout: Arc<Layout>) -> Self {
        let total = layout.total;
        Params { layout, data: vec![T::zero(); total] }
    }

    pub fn seg(&self, name: &str) -> &[T] {
        let r = self.layout.range(name);
        &self.data[r]
    }

    pub fn seg_mut(&mut self, name: &str) -> &mut [T] {
        let r = self.layout.range(name);
        &mut self.data[r]
    }

    pub fn fingerprint(&self) -> u64 {
        self.layout.fingerprint
    }

    pub fn arch(&self) -> &ArchConfig {
        &self.layout.arch
    }

    /// Cast to a different element type (exact for f32 -> f64).
    pub fn cast<U: Scalar>(&self) -> Params<U> {
        Params {
            layout: self.layout.clone(),
            data: self.data.iter().map(|v| U::from_f64(v.as_f64())).collect(),
        }
    }

    pub fn assert_finite(&self) -> Result<()> {
        for seg in self.layout.segments.iter() {
            if self.data[seg.offset..seg.offset + seg.len]
                .iter()
                .any(|v| !v.is_finite())
            {
                return Err(LiftError::Training(format!(
                    "non-finite values in tensor {}",
                    seg.name
                )));
            }
        }
        Ok(())
    }
}

impl Params<f32> {

    /// Seeded initialization: He-style fan-in scaling for conv and linear
    /// weights, zeroed attention output projection so the residual branch
    /// starts as identity, small final actor layers, unit layer-norm gain.
    pub fn init(layout: Arc<Layout>, rng: &mut ChaCha8Rng) -> Self {
        let mut p = Params::<f32>::zeros(layout.clone());
        let normal = |std: f32, rng: &mut ChaCha8Rng| -> f32 {
            let u1: f64 = rng.random_range(1e-12..1.0);
            let u2: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            ((-2.0 * u1.ln()).sqrt() * u2.cos()) as f32 * std
        };
        for seg in layout.segments.iter() {
            let slice = &mut p.data[seg.offset..seg.offset + seg.len];
            let name = seg.name.as_str();
            if name == "ln.gamma" {
                slice.fill(1.0);
            } else if name == "attn.wo" || name == "attn.pos" {
                let std = if name == "attn.pos" { 0.02 } else { 0.0 };
                for v in slice.iter_mut() {
                    *v = if std > 0.0 { normal(std, rng) } else { 0.0 };
                }
            } else if name.ends_with(".w") || name.starts_with("attn.w") {
                let fan_in = seg.shape[1] as f32;
                let mut std = (2.0 / fan_in).sqrt();
                if name == "actor.mean.w" || name == "actor.logstd.w" {
                    std *= 0.01;
                }
                for v in slice.iter_mut() {
                    *v = normal(std, rng);
                }
            } else if name == "actor.logstd.b" {
                // logstd = -4 + 6 tanh(raw); bias 0.55 puts the initial
                // standard deviation near exp(-1).
                slice.fill(0.55);
            }
            // Remaining biases and ln.beta stay zero.
        }
        p
    }

}

/// target <- (1 - tau) * target + tau * online, elementwise.
pub fn soft_update<T: Scalar>(target: &mut Params<T>, online: &Params<T>, tau: T) -> Result<()> {
    if target.fingerprint() != online.fingerprint() {
        return Err(LiftError::Fingerprint {
            expected: target.fingerprint(),
            found: online.fingerprint(),
        });
    }
    for (t, o) in target.data.iter_mut().zip(online.data.iter()) {
        *t = (T::one() - tau) * *t + tau * *o;
    }
    Ok(())
}

fn arch_bytes(arch: &ArchConfig) -> [u8; 8] {
    [
        arch.views as u8,
        arch.with_state as u8,
        arch.attention as u8,
        arch.positional_encoding as u8,
        (arch.feature_dim & 0xff) as u8,
        (arch.feature_dim >> 8) as u8,
        (arch.channels & 0xff) as u8,
        (arch.channels >> 8) as u8,
    ]
}

fn arch_from_bytes(b: &[u8; 8]) -> ArchConfig {
    ArchConfig {
        views: b[0] as usize,
        with_state: b[1] != 0,
        attention: b[2] != 0,
        positional_encoding: b[3] != 0,
        feature_dim: b[4] as usize | ((b[5] as usize) << 8),
        channels: b[6] as usize | ((b[7] as usize) << 8),
    }
}

/// Serialize to the archive format; bit-exact round trip.
pub fn save_params(params: &Params<f32>, path: &Path) -> Result<()> {
    let mut buf: Vec<u8> = Vec::with_capacity(params.data.len() * 4 + 1024);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&params.fingerprint().to_le_bytes());
    buf.extend_from_slice(&arch_bytes(params.arch()));
    buf.extend_from_slice(&(params.layout.segments.len() as u32).to_le_bytes());
    for seg in params.layout.segments.iter() {
        buf.extend_from_slice(&(seg.name.len() as u16).to_le_bytes());
        buf.extend_from_slice(seg.name.as_bytes());
        buf.push(seg.shape.len() as u8);
        for &d in &seg.shape {
            buf.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &v in &params.data[seg.offset..seg.offset + seg.len] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let checksum = {
        let mut h = Fnv1a::new();
        h.update(&buf);
        h.finish()
    };
    buf.extend_from_slice(&checksum.to_le_bytes());
    let tmp = path.with_extension("tmp");
    std::fs::File::create(&tmp)?.write_all(&buf)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(LiftError::Integrity("archive truncated".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Load an archive; the stored arch descriptor rebuilds the layout and the
/// fingerprint plus whole-file checksum are verified.
pub fn load_params(path: &Path) -> Result<Params<f32>> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 30 {
        return Err(LiftError::Integrity("archive too short".into()));
    }
    let (payload, tail) = bytes.split_at(bytes.len() - 8);
    let stored_sum = u64::from_le_bytes(tail.try_into().unwrap());
    let actual_sum = {
        let mut h = Fnv1a::new();
        h.update(payload);
        h.finish()
    };
    if stored_sum != actual_sum {
        return Err(LiftError::Integrity(format!(
            "checksum mismatch: stored {stored_sum:#018x}, computed {actual_sum:#018x}"
        )));
    }
    let mut cur = Cursor { bytes: payload, pos: 0 };
    if cur.take(4)? != MAGIC {
        return Err(LiftError::Integrity("bad magic".into()));
    }
    let version = cur.u16()?;
    if version != VERSION {
        return Err(LiftError::Integrity(format!("unsupported archive version {version}")));
    }
    let fingerprint = cur.u64()?;
    let arch = arch_from_bytes(cur.take(8)?.try_into().unwrap());
    let layout = Layout::new(arch);
    if layout.fingerprint != fingerprint {
        return Err(LiftError::Fingerprint {
            expected: layout.fingerprint,
            found: fingerprint,
        });
    }
    let count = cur.u32()? as usize;
    if count != layout.segments.len() {
        return Err(LiftError::Integrity(format!(
            "tensor count {count} does not match layout ({})",
            layout.segments.len()
        )));
    }
    let mut params = Params::<f32>::zeros(layout.clone());
    for seg in layout.segments.iter() {
        let name_len = cur.u16()? as usize;
        let name = std::str::from_utf8(cur.take(name_len)?)
            .map_err(|_| LiftError::Integrity("bad tensor name".into()))?;
        if name != seg.name {
            return Err(LiftError::Integrity(format!(
                "tensor order mismatch: expected {}, found {name}",
                seg.name
            )));
        }
        let ndim = cur.take(1)?[0] as usize;
        if ndim != seg.shape.len() {
            return Err(LiftError::Integrity(format!("tensor {name} ndim mismatch")));
        }
        for &d in &seg.shape {
            if cur.u32()? as usize != d {
                return Err(LiftError::Integrity(format!("tensor {name} shape mismatch")));
            }
        }
        let raw = cur.take(seg.len * 4)?;
        for (i, chunk) in raw.chunks_exact(4).enumerate() {
            params.data[seg.offset + i] = f32::from_le_bytes(chunk.try_into().unwrap());
        }
    }
    params.assert_finite()?;
    Ok(params)
}

/// Check a loaded parameter set against the architecture the caller expects.
pub fn expect_arch<T: Scalar>(params: &Params<T>, arch: &ArchConfig) -> Result<()> {
    let expected = Layout::new(*arch);
    if params.fingerprint() != expected.fingerprint {
        return Err(LiftError::Fingerprint {
            expected: expected.fingerprint,
            found: params.fingerprint(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::child_rng;

    fn tmpdir() -> std::path::PathBuf {
        let d = std::env::temp_dir().join(format!("liftview_params_{}", std::process::id()));
        std::fs::create_dir_all(&d).unwrap();
        d
    }

    #[test]
    fn save_load_roundtrip_is_bit_exact() {
        let layout = Layout::new(ArchConfig::new(2, true));
        let params = Params::init(layout, &mut child_rng(0, "init", 0));
        let path = tmpdir().join("roundtrip.params");
        save_params(&params, &path).unwrap();
        let loaded = load_params(&path).unwrap();
        assert_eq!(params.data, loaded.data);
        assert_eq!(params.fingerprint(), loaded.fingerprint());
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn wrong_architecture_is_a_fingerprint_error() {
        let params = Params::init(Layout::new(ArchConfig::new(1, false)), &mut child_rng(1, "init", 0));
        let path = tmpdir().join("arch.params");
        save_params(&params, &path).unwrap();
        let loaded = load_params(&path).unwrap();
        let err = expect_arch(&loaded, &ArchConfig::new(3, false)).unwrap_err();
        assert!(matches!(err, LiftError::Fingerprint { .. }));
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn truncated_file_is_an_integrity_error() {
        let params = Params::init(Layout::new(ArchConfig::new(1, false)), &mut child_rng(2, "init", 0));
        let path = tmpdir().join("trunc.params");
        save_params(&params, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 16]).unwrap();
        let err = load_params(&path).unwrap_err();
        assert!(matches!(err, LiftError::Integrity(_)));
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn corrupted_payload_is_detected() {
        let params = Params::init(Layout::new(ArchConfig::new(1, false)), &mut child_rng(3, "init", 0));
        let path = tmpdir().join("corrupt.params");
        save_params(&params, &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0xff;
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(load_params(&path).unwrap_err(), LiftError::Integrity(_)));
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn soft_update_arithmetic() {
        let layout = Layout::new(ArchConfig::new(1, false));
        let mut target = Params::<f32>::zeros(layout.clone());
        let mut online = Params::<f32>::zeros(layout);
        online.data.fill(1.0);
        soft_update(&mut target, &online, 0.5).unwrap();
        assert!(target.data.iter().all(|&v| v == 0.5));
        soft_update(&mut target, &online, 0.5).unwrap();
        assert!(target.data.iter().all(|&v| v == 0.75));
        let mut copy = Params::<f32>::zeros(Layout::new(ArchConfig::new(1, false)));
        soft_update(&mut copy, &online, 1.0).unwrap();
        assert_eq!(copy.data, online.data);
        let mut frozen = Params::<f32>::zeros(Layout::new(ArchConfig::new(1, false)));
        let before = frozen.data.clone();
        soft_update(&mut frozen, &online, 0.0).unwrap();
        assert_eq!(frozen.data, before);
    }

    #[test]
    fn soft_update_rejects_mismatched_fingerprints() {
        let mut a = Params::<f32>::zeros(Layout::new(ArchConfig::new(1, false)));
        let b = Params::<f32>::zeros(Layout::new(ArchConfig::new(2, false)));
        assert!(matches!(
            soft_update(&mut a, &b, 0.1).unwrap_err(),
            LiftError::Fingerprint { .. }
        ));
    }
}
