//! Latent frame sequences and the frame-axis gather / reconstruct operators.
//!
//! A [`LatentSequence`] stores a video latent as a dense `f32` buffer laid out
//! row-major in `(frame, height, width, channel)` order. Every frame is a
//! contiguous slice of `height * width * channels` values, so selecting or
//! writing a frame is a single slice copy.

use alloc::vec::Vec;

use crate::error::{contract, invalid, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LatentSequence {
    frames: usize,
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f32>,
}

impl LatentSequence {
    /// Wraps an existing buffer. Fails if any dimension is zero, the length
    /// does not match, or a value is not finite.
    pub fn new(
        frames: usize,
        height: usize,
        width: usize,
        channels: usize,
        data: Vec<f32>,
    ) -> Result<Self> {
        check_dims(frames, height, width, channels)?;
        let expected = frames * height * width * channels;
        if data.len() != expected {
            return Err(invalid!(
                "data length {} does not match {frames}x{height}x{width}x{channels} = {expected}",
                data.len()
            ));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(invalid!("non-finite value at flat index {pos}"));
        }
        Ok(Self {
            frames,
            height,
            width,
            channels,
            data,
        })
    }

    pub fn zeros(frames: usize, height: usize, width: usize, channels: usize) -> Result<Self> {
        check_dims(frames, height, width, channels)?;
        let data = alloc::vec![0.0; frames * height * width * channels];
        Ok(Self {
            frames,
            height,
            width,
            channels,
            data,
        })
    }

    /// Builds a sequence from `f(frame, h, w, channel)`.
    pub fn from_fn(
        frames: usize,
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize, usize) -> f32,
    ) -> Result<Self> {
        check_dims(frames, height, width, channels)?;
        let mut data = Vec::with_capacity(frames * height * width * channels);
        for fr in 0..frames {
            for h in 0..height {
                for w in 0..width {
                    for c in 0..channels {
                        data.push(f(fr, h, w, c));
                    }
                }
            }
        }
        Self::new(frames, height, width, channels, data)
    }

    /// Internal constructor for buffers produced by trusted kernels.
    pub(crate) fn from_parts_unchecked(
        frames: usize,
        height: usize,
        width: usize,
        channels: usize,
        data: Vec<f32>,
    ) -> Self {
        debug_assert_eq!(data.len(), frames * height * width * channels);
        Self {
            frames,
            height,
            width,
            channels,
            data,
        }
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// `(frames, height, width, channels)`
    pub fn shape(&self) -> (usize, usize, usize, usize) {
        (self.frames, self.height, self.width, self.channels)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    /// Spatial tokens per frame, `H * W`.
    pub fn tokens_per_frame(&self) -> usize {
        self.height * self.width
    }

    /// Total token count `F * H * W`.
    pub fn token_count(&self) -> usize {
        self.frames * self.height * self.width
    }

    /// Number of scalars in one frame, `H * W * D`.
    pub fn frame_len(&self) -> usize {
        self.height * self.width * self.channels
    }

    pub fn frame(&self, f: usize) -> &[f32] {
        let len = self.frame_len();
        &self.data[f * len..(f + 1) * len]
    }

    /// Copies frame `f` out as a single-frame sequence.
    pub fn frame_sequence(&self, f: usize) -> Result<Self> {
        if f >= self.frames {
            return Err(contract!(
                "frame {f} out of range for {} frames",
                self.frames
            ));
        }
        Ok(Self {
            frames: 1,
            height: self.height,
            width: self.width,
            channels: self.channels,
            data: self.frame(f).to_vec(),
        })
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.shape() == other.shape()
    }

    /// Largest elementwise absolute difference. Shapes must match.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f32> {
        if !self.same_shape(other) {
            return Err(invalid!(
                "shape mismatch {:?} vs {:?}",
                self.shape(),
                other.shape()
            ));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f32::max))
    }

    /// Elementwise scaling; used by the scale-awareness diagnostics.
    pub fn scaled(&self, c: f32) -> Self {
        Self {
            data: self.data.iter().map(|v| v * c).collect(),
            ..self.clone()
        }
    }
}

fn check_dims(frames: usize, height: usize, width: usize, channels: usize) -> Result<()> {
    if frames == 0 || height == 0 || width == 0 || channels == 0 {
        return Err(invalid!(
            "all dimensions must be >= 1, got {frames}x{height}x{width}x{channels}"
        ));
    }
    Ok(())
}

/// A strictly increasing set of frame indices within `0..frames_total`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FrameIndexSet {
    frames_total: usize,
    indices: Vec<usize>,
}

impl FrameIndexSet {
    /// Sorts and deduplicates `indices`; fails if any index is `>= frames_total`.
    pub fn new(frames_total: usize, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut indices: Vec<usize> = indices.into_iter().collect();
        indices.sort_unstable();
        indices.dedup();
        if let Some(&last) = indices.last() {
            if last >= frames_total {
                return Err(contract!(
                    "frame index {last} out of range for {frames_total} frames"
                ));
            }
        }
        Ok(Self {
            frames_total,
            indices,
        })
    }

    /// The full set `{0, ..., frames_total - 1}`.
    pub fn full(frames_total: usize) -> Self {
        Self {
            frames_total,
            indices: (0..frames_total).collect(),
        }
    }

    pub fn frames_total(&self) -> usize {
        self.frames_total
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, f: usize) -> bool {
        self.indices.binary_search(&f).is_ok()
    }

    pub fn is_full(&self) -> bool {
        self.indices.len() == self.frames_total
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }
}

/// Copies the anchor frames of `x`, in anchor order, into a new sequence.
pub fn gather(x: &LatentSequence, anchors: &FrameIndexSet) -> Result<LatentSequence> {
    if anchors.is_empty() {
        return Err(invalid!("anchor set is empty"));
    }
    if anchors.frames_total() != x.frames() {
        return Err(contract!(
            "anchor set built for {} frames applied to {} frames",
            anchors.frames_total(),
            x.frames()
        ));
    }
    let mut data = Vec::with_capacity(anchors.len() * x.frame_len());
    for f in anchors.iter() {
        data.extend_from_slice(x.frame(f));
    }
    Ok(LatentSequence::from_parts_unchecked(
        anchors.len(),
        x.height(),
        x.width(),
        x.channels(),
        data,
    ))
}

/// Rebuilds `frames_total` frames from anchor outputs.
///
/// Anchor frames are copied verbatim. A skipped frame `u` between consecutive
/// anchors `a < u < b` becomes `((b - u) * y[a] + (u - a) * y[b]) / (b - a)`.
/// The anchor set must contain both boundary frames.
pub fn reconstruct(
    y_anc: &LatentSequence,
    anchors: &FrameIndexSet,
    frames_total: usize,
) -> Result<LatentSequence> {
    if anchors.frames_total() != frames_total {
        return Err(contract!(
            "anchor set built for {} frames, reconstructing {frames_total}",
            anchors.frames_total()
        ));
    }
    if y_anc.frames() != anchors.len() {
        return Err(contract!(
            "{} anchor outputs for {} anchors",
            y_anc.frames(),
            anchors.len()
        ));
    }
    let idx = anchors.indices();
    if idx.first() != Some(&0) || idx.last() != Some(&(frames_total - 1)) {
        return Err(invalid!(
            "anchor set must contain boundary frames 0 and {}",
            frames_total - 1
        ));
    }

    let len = y_anc.frame_len();
    let mut data = alloc::vec![0.0f32; frames_total * len];
    data[..len].copy_from_slice(y_anc.frame(0));
    for (j, pair) in idx.windows(2).enumerate() {
        let (fa, fb) = (pair[0], pair[1]);
        let ya = y_anc.frame(j);
        let yb = y_anc.frame(j + 1);
        let span = (fb - fa) as f64;
        for fu in fa + 1..fb {
            let wa = (fb - fu) as f64 / span;
            let wb = (fu - fa) as f64 / span;
            let out = &mut data[fu * len..(fu + 1) * len];
            for ((o, &a), &b) in out.iter_mut().zip(ya).zip(yb) {
                *o = (wa * a as f64 + wb * b as f64) as f32;
            }
        }
        data[fb * len..(fb + 1) * len].copy_from_slice(yb);
    }
    Ok(LatentSequence::from_parts_unchecked(
        frames_total,
        y_anc.height(),
        y_anc.width(),
        y_anc.channels(),
        data,
    ))
}

/// Euclidean norm of `a - b` over the whole tensor, accumulated in `f64`.
pub fn frame_l2_distance(a: &LatentSequence, b: &LatentSequence) -> Result<f64> {
    if !a.same_shape(b) {
        return Err(invalid!(
            "shape mismatch {:?} vs {:?}",
            a.shape(),
            b.shape()
        ));
    }
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum();
    Ok(libm::sqrt(sum))
}
