//! Architecture description and the flat parameter layout derived from it.
//!
//! Parameters live in one flat `Vec<f32>`; the layout maps named tensors
//! (ordered) onto ranges of that vector. The architecture fingerprint hashes
//! the full layout, so any structural change invalidates stored archives.

use crate::rng::Fnv1a;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;

pub const OBS_SIDE: usize = 84;
pub const ACTION_DIM: usize = 5;
pub const STATE_DIM: usize = 7;
pub const HEAD_HIDDEN: usize = 128;
/// Conv stride pattern; 84 -> 42 -> 21 -> 11 across the three stride-2 layers.
pub const CONV_STRIDES: [usize; 12] = [2, 1, 1, 2, 1, 1, 2, 1, 1, 1, 1, 1];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchConfig {
    /// Number of camera views; input channels are 3 * views.
    pub views: usize,
    /// Append the 7-dim pseudo-joint vector to the feature before the heads.
    pub with_state: bool,
    /// Encoder output dimension z.
    pub feature_dim: usize,
    /// Channels per conv layer.
    pub channels: usize,
    pub attention: bool,
    pub positional_encoding: bool,
}

impl ArchConfig {
    pub fn new(views: usize, with_state: bool) -> Self {
        ArchConfig {
            views,
            with_state,
            feature_dim: 64,
            channels: 32,
            attention: true,
            positional_encoding: true,
        }
    }

    pub fn input_channels(&self) -> usize {
        3 * self.views
    }

    /// Feature length seen by the policy heads.
    pub fn head_input_dim(&self) -> usize {
        self.feature_dim + if self.with_state { STATE_DIM } else { 0 }
    }

    /// Spatial side lengths entering each conv layer, plus the final one.
    pub fn conv_sides(&self) -> [usize; 13] {
        let mut sides = [0usize; 13];
        sides[0] = OBS_SIDE;
        for (i, &s) in CONV_STRIDES.iter().enumerate() {
            // 3x3 kernel, padding 1.
            sides[i + 1] = (sides[i] + 2 - 3) / s + 1;
        }
        sides
    }

    pub fn grid_side(&self) -> usize {
        self.conv_sides()[12]
    }

    pub fn grid_len(&self) -> usize {
        let s = self.grid_side();
        s * s
    }

    pub fn flat_len(&self) -> usize {
        self.channels * self.grid_len()
    }

    fn describe(&self) -> String {
        format!(
            "liftview-arch-v1;views={};state={};z={};ch={};attn={};pos={};strides={:?};side={}",
            self.views,
            self.with_state as u8,
            self.feature_dim,
            self.channels,
            self.attention as u8,
            self.positional_encoding as u8,
            CONV_STRIDES,
            OBS_SIDE,
        )
    }
}

#[derive(Debug, Clone)]
pub struct Segment {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
    pub len: usize,
}

/// Parameter groups for optimizer learning-rate assignment and gradient
/// masking assertions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamGroup {
    Encoder,
    Actor,
    Critic,
}

#[derive(Debug)]
pub struct Layout {
    pub arch: ArchConfig,
    pub segments: Vec<Segment>,
    pub total: usize,
    pub fingerprint: u64,
    by_name: BTreeMap<String, usize>,
}

impl Layout {
    pub fn new(arch: ArchConfig) -> Arc<Layout> {
        let mut segments = Vec::new();
        let mut total = 0usize;
        let mut push = |name: String, shape: Vec<usize>, total: &mut usize| {
            let len = shape.iter().product();
            segments.push(Segment { name, shape, offset: *total, len });
            *total += len;
        };

        let ch = arch.channels;
        for i in 0..12 {
            let c_in = if i == 0 { arch.input_channels() } else { ch };
            push(format!("conv{i}.w"), vec![ch, c_in * 9], &mut total);
            push(format!("conv{i}.b"), vec![ch], &mut total);
        }
        if arch.attention {
            if arch.positional_encoding {
                push("attn.pos".into(), vec![ch, arch.grid_len()], &mut total);
            }
            for nm in ["q", "k", "v", "o"] {
                push(format!("attn.w{nm}"), vec![ch, ch], &mut total);
                push(format!("attn.b{nm}"), vec![ch], &mut total);
            }
        }
        push("proj.w".into(), vec![arch.feature_dim, arch.flat_len()], &mut total);
        push("proj.b".into(), vec![arch.feature_dim], &mut total);
        push("ln.gamma".into(), vec![arch.feature_dim], &mut total);
        push("ln.beta".into(), vec![arch.feature_dim], &mut total);

        let fin = arch.head_input_dim();
        push("actor.l1.w".into(), vec![HEAD_HIDDEN, fin], &mut total);
        push("actor.l1.b".into(), vec![HEAD_HIDDEN], &mut total);
        push("actor.l2.w".into(), vec![HEAD_HIDDEN, HEAD_HIDDEN], &mut total);
        push("actor.l2.b".into(), vec![HEAD_HIDDEN], &mut total);
        push("actor.mean.w".into(), vec![ACTION_DIM, HEAD_HIDDEN], &mut total);
        push("actor.mean.b".into(), vec![ACTION_DIM], &mut total);
        push("actor.logstd.w".into(), vec![ACTION_DIM, HEAD_HIDDEN], &mut total);
        push("actor.logstd.b".into(), vec![ACTION_DIM], &mut total);

        for c in ["critic1", "critic2"] {
            push(format!("{c}.l1.w"), vec![HEAD_HIDDEN, fin + ACTION_DIM], &mut total);
            push(format!("{c}.l1.b"), vec![HEAD_HIDDEN], &mut total);
            push(format!("{c}.l2.w"), vec![HEAD_HIDDEN, HEAD_HIDDEN], &mut total);
            push(format!("{c}.l2.b"), vec![HEAD_HIDDEN], &mut total);
            push(format!("{c}.out.w"), vec![1, HEAD_HIDDEN], &mut total);
            push(format!("{c}.out.b"), vec![1], &mut total);
        }

        let mut by_name = BTreeMap::new();
        for (i, seg) in segments.iter().enumerate() {
            by_name.insert(seg.name.clone(), i);
        }

        let mut h = Fnv1a::new();
        h.update(arch.describe().as_bytes());
        for seg in &segments {
            h.update(seg.name.as_bytes());
            for &d in &seg.shape {
                h.update(&(d as u64).to_le_bytes());
            }
        }
        Arc::new(Layout { arch, segments, total, fingerprint: h.finish(), by_name })
    }

    pub fn segment(&self, name: &str) -> &Segment {
        &self.segments[*self.by_name.get(name).unwrap_or_else(|| {
            panic!("unknown parameter segment: {name}")
        })]
    }

    pub fn range(&self, name: &str) -> std::ops::Range<usize> {
        let seg = self.segment(name);
        seg.offset..seg.offset + seg.len
    }

    /// Name of the segment owning flat index `i`.
    pub fn name_at(&self, i: usize) -> &str {
        let idx = match self
            .segments
            .binary_search_by(|seg| seg.offset.cmp(&i))
        {
            Ok(k) => k,
            Err(k) => k - 1,
        };
        &self.segments[idx].name
    }

    pub fn group_of(&self, name: &str) -> ParamGroup {
        if name.starts_with("actor.") {
            ParamGroup::Actor
        } else if name.starts_with("critic") {
            ParamGroup::Critic
        } else {
            ParamGroup::Encoder
        }
    }

    /// Flat index ranges belonging to a group, in layout order.
    pub fn group_ranges(&self, group: ParamGroup) -> Vec<std::ops::Range<usize>> {
        self.segments
            .iter()
            .filter(|s| self.group_of(&s.name) == group)
            .map(|s| s.offset..s.offset + s.len)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spatial_pyramid_ends_at_11() {
        let arch = ArchConfig::new(3, false);
        let sides = arch.conv_sides();
        assert_eq!(sides[0], 84);
        assert_eq!(sides[1], 42);
        assert_eq!(sides[4], 21);
        assert_eq!(sides[7], 11);
        assert_eq!(sides[12], 11);
        assert_eq!(arch.grid_len(), 121);
    }

    #[test]
    fn fingerprint_distinguishes_architectures() {
        let a = Layout::new(ArchConfig::new(3, false));
        let b = Layout::new(ArchConfig::new(1, false));
        let c = Layout::new(ArchConfig::new(3, true));
        assert_ne!(a.fingerprint, b.fingerprint);
        assert_ne!(a.fingerprint, c.fingerprint);
        let a2 = Layout::new(ArchConfig::new(3, false));
        assert_eq!(a.fingerprint, a2.fingerprint);
    }

    #[test]
    fn input_channels_reflect_view_count() {
        assert_eq!(ArchConfig::new(1, false).input_channels(), 3);
        assert_eq!(ArchConfig::new(2, false).input_channels(), 6);
        assert_eq!(ArchConfig::new(3, false).input_channels(), 9);
    }

    #[test]
    fn name_at_resolves_segment_boundaries() {
        let layout = Layout::new(ArchConfig::new(1, false));
        let seg = layout.segment("conv3.w");
        assert_eq!(layout.name_at(seg.offset), "conv3.w");
        assert_eq!(layout.name_at(seg.offset + seg.len - 1), "conv3.w");
        assert_eq!(layout.name_at(seg.offset + seg.len), "conv3.b");
    }

    #[test]
    fn groups_partition_the_layout() {
        let layout = Layout::new(ArchConfig::new(2, true));
        let mut covered = 0usize;
        for g in [ParamGroup::Encoder, ParamGroup::Actor, ParamGroup::Critic] {
            covered += layout.group_ranges(g).iter().map(|r| r.len()).sum::<usize>();
        }
        assert_eq!(covered, layout.total);
    }
}
