//! Replay buffer with exact FIFO eviction and a length-prefixed spill file
//! format used for demonstration sets.
//!
//! Observations are stored as 8-bit images; renderer output lives on the
//! 8-bit grid, so the round trip is lossless.

use crate::error::{LiftError, Result};
use crate::raster::{Image, OBS_HEIGHT, OBS_WIDTH};
use crate::rng::Fnv1a;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"LVRB";
const VERSION: u16 = 1;

/// One experience tuple; image lists hold all configured camera views.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub images: Vec<Vec<u8>>,
    pub q: Option<[f32; 7]>,
    pub action: [f32; 5],
    pub reward: f32,
    pub done: bool,
    pub next_images: Vec<Vec<u8>>,
    pub next_q: Option<[f32; 7]>,
}

impl Transition {
    pub fn view_count(&self) -> usize {
        self.images.len()
    }

    pub fn image(&self, view: usize) -> Result<Image> {
        Image::from_u8(OBS_WIDTH, OBS_HEIGHT, &self.images[view])
    }

    pub fn next_image(&self, view: usize) -> Result<Image> {
        Image::from_u8(OBS_WIDTH, OBS_HEIGHT, &self.next_images[view])
    }
}

pub fn images_to_u8(images: &[Image]) -> Vec<Vec<u8>> {
    images.iter().map(|i| i.to_u8()).collect()
}

/// Ring storage; when full, insertion evicts the oldest element exactly.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    storage: Vec<Transition>,
    capacity: usize,
    cursor: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "capacity must be positive");
        ReplayBuffer { storage: Vec::new(), capacity, cursor: 0 }
    }

    pub fn len(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.storage.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, t: Transition) {
        if self.storage.len() < self.capacity {
            self.storage.push(t);
        } else {
            self.storage[self.cursor] = t;
            self.cursor = (self.cursor + 1) % self.capacity;
        }
    }

    pub fn get(&self, i: usize) -> &Transition {
        &self.storage[i]
    }

    /// Uniform batch indices, deterministic under the caller's generator.
    pub fn sample_indices(&self, batch: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
        (0..batch).map(|_| rng.random_range(0..self.storage.len())).collect()
    }

    /// Oldest-to-newest iteration order (FIFO order across the ring seam).
    pub fn iter_fifo(&self) -> impl Iterator<Item = &Transition> {
        let (newer, older) = self.storage.split_at(self.cursor);
        older.iter().chain(newer.iter())
    }
}

fn write_opt_q(buf: &mut Vec<u8>, q: &Option<[f32; 7]>) {
    match q {
        Some(vals) => {
            buf.push(1);
            for v in vals {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        None => buf.push(0),
    }
}

fn encode_record(t: &Transition) -> Vec<u8> {
    let mut rec = Vec::new();
    for v in t.action {
        rec.extend_from_slice(&v.to_le_bytes());
    }
    rec.extend_from_slice(&t.reward.to_le_bytes());
    rec.push(t.done as u8);
    write_opt_q(&mut rec, &t.q);
    write_opt_q(&mut rec, &t.next_q);
    for img in &t.images {
        rec.extend_from_slice(img);
    }
    for img in &t.next_images {
        rec.extend_from_slice(img);
    }
    rec
}

/// Write transitions in FIFO order to the spill format.
pub fn save_transitions<'a>(
    transitions: impl Iterator<Item = &'a Transition>,
    views: usize,
    path: &Path,
) -> Result<usize> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.push(views as u8);
    buf.extend_from_slice(&(OBS_WIDTH as u16).to_le_bytes());
    buf.extend_from_slice(&(OBS_HEIGHT as u16).to_le_bytes());
    let count_pos = buf.len();
    buf.extend_from_slice(&0u32.to_le_bytes());
    let mut count = 0u32;
    for t in transitions {
        if t.images.len() != views || t.next_images.len() != views {
            return Err(LiftError::Shape(format!(
                "transition has {} views, file header says {views}",
                t.images.len()
            )));
        }
        let rec = encode_record(t);
        buf.extend_from_slice(&(rec.len() as u32).to_le_bytes());
        buf.extend_from_slice(&rec);
        count += 1;
    }
    buf[count_pos..count_pos + 4].copy_from_slice(&count.to_le_bytes());
    let checksum = {
        let mut h = Fnv1a::new();
        h.update(&buf);
        h.finish()
    };
    buf.extend_from_slice(&checksum.to_le_bytes());
    let tmp = path.with_extension("tmp");
    std::fs::File::create(&tmp)?.write_all(&buf)?;
    std::fs::rename(&tmp, path)?;
    Ok(count as usize)
}

/// Load a spill file; returns the transitions and the view count.
pub fn load_transitions(path: &Path) -> Result<(Vec<Transition>, usize)> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 23 {
        return Err(LiftError::Integrity("replay file too short".into()));
    }
    let (payload, tail) = bytes.split_at(bytes.len() - 8);
    let stored = u64::from_le_bytes(tail.try_into().unwrap());
    let mut h = Fnv1a::new();
    h.update(payload);
    if stored != h.finish() {
        return Err(LiftError::Integrity("replay file checksum mismatch".into()));
    }
    if &payload[0..4] != MAGIC {
        return Err(LiftError::Integrity("bad replay magic".into()));
    }
    let version = u16::from_le_bytes(payload[4..6].try_into().unwrap());
    if version != VERSION {
        return Err(LiftError::Integrity(format!("unsupported replay version {version}")));
    }
    let views = payload[6] as usize;
    let w = u16::from_le_bytes(payload[7..9].try_into().unwrap()) as usize;
    let hgt = u16::from_le_bytes(payload[9..11].try_into().unwrap()) as usize;
    if w != OBS_WIDTH || hgt != OBS_HEIGHT {
        return Err(LiftError::Shape(format!("replay file is {w}x{hgt}, expected 84x84")));
    }
    let count = u32::from_le_bytes(payload[11..15].try_into().unwrap()) as usize;
    let img_len = w * hgt * 3;
    let mut pos = 15;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        if pos + 4 > payload.len() {
            return Err(LiftError::Integrity("replay record truncated".into()));
        }
        let rec_len = u32::from_le_bytes(payload[pos..pos + 4].try_into().unwrap()) as usize;
        pos += 4;
        if pos + rec_len > payload.len() {
            return Err(LiftError::Integrity("replay record truncated".into()));
        }
        let rec = &payload[pos..pos + rec_len];
        pos += rec_len;
        let mut rp = 0usize;
        let mut action = [0f32; 5];
        for a in action.iter_mut() {
            *a = f32::from_le_bytes(rec[rp..rp + 4].try_into().unwrap());
            rp += 4;
        }
        let reward = f32::from_le_bytes(rec[rp..rp + 4].try_into().unwrap());
        rp += 4;
        let done = rec[rp] != 0;
        rp += 1;
        let read_q = |rp: &mut usize| -> Option<[f32; 7]> {
            let present = rec[*rp] != 0;
            *rp += 1;
            if !present {
                return None;
            }
            let mut q = [0f32; 7];
            for v in q.iter_mut() {
                *v = f32::from_le_bytes(rec[*rp..*rp + 4].try_into().unwrap());
                *rp += 4;
            }
            Some(q)
        };
        let q = read_q(&mut rp);
        let next_q = read_q(&mut rp);
        let expected = rp + 2 * views * img_len;
        if rec.len() != expected {
            return Err(LiftError::Integrity(format!(
                "record length {} != expected {expected}",
                rec.len()
            )));
        }
        let mut images = Vec::with_capacity(views);
        for _ in 0..views {
            images.push(rec[rp..rp + img_len].to_vec());
            rp += img_len;
        }
        let mut next_images = Vec::with_capacity(views);
        for _ in 0..views {
            next_images.push(rec[rp..rp + img_len].to_vec());
            rp += img_len;
        }
        out.push(Transition { images, q, action, reward, done, next_images, next_q });
    }
    Ok((out, views))
}
