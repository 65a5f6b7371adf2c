//! The `4J - 2` channel map stack.
//!
//! Channel order is fixed:
//!
//! | channels                 | content                                         |
//! |--------------------------|-------------------------------------------------|
//! | `0 .. J`                 | keypoint heatmaps, by joint index               |
//! | `J + 2p`, `J + 2p + 1`   | part affinity field (x, y) for part `p`         |
//! | `3J - 2`                 | root depth map (normalized depth, 0 = no root)  |
//! | `3J - 1 + p`             | relative depth of part `p` (child minus parent) |
//!
//! Maps are row-major `[channel, row, column]`, so pixel `(x, y)` of channel
//! `c` is `data[[c, y, x]]`.

use crate::skeleton::channel_count;
use ndarray::{s, Array3, ArrayView2, ArrayView3, ArrayViewMut2, ArrayViewMut3};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StackError {
    #[error("stack has {got} channels, a {joints}-joint skeleton needs {expected}")]
    ChannelCount { joints: usize, expected: usize, got: usize },
    #[error("channel count {0} is not of the form 4J - 2")]
    NotALayout(usize),
    #[error("stack shapes differ: {a:?} vs {b:?}")]
    ShapeMismatch { a: [usize; 3], b: [usize; 3] },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepresentationStack {
    joints: usize,
    data: Array3<f32>,
}

impl RepresentationStack {
    pub fn zeros(joints: usize, height: usize, width: usize) -> Self {
        Self {
            joints,
            data: Array3::zeros((channel_count(joints), height, width)),
        }
    }

    pub fn from_array(joints: usize, data: Array3<f32>) -> Result<Self, StackError> {
        let expected = channel_count(joints);
        if data.dim().0 != expected {
            return Err(StackError::ChannelCount {
                joints,
                expected,
                got: data.dim().0,
            });
        }
        Ok(Self { joints, data })
    }

    /// Infers the joint count from the channel dimension.
    pub fn from_channels(data: Array3<f32>) -> Result<Self, StackError> {
        let c = data.dim().0;
        if c < 2 || !(c + 2).is_multiple_of(4) {
            return Err(StackError::NotALayout(c));
        }
        Self::from_array((c + 2) / 4, data)
    }

    pub fn joints(&self) -> usize {
        self.joints
    }

    pub fn parts(&self) -> usize {
        self.joints - 1
    }

    pub fn channels(&self) -> usize {
        self.data.dim().0
    }

    pub fn height(&self) -> usize {
        self.data.dim().1
    }

    pub fn width(&self) -> usize {
        self.data.dim().2
    }

    pub fn shape(&self) -> [usize; 3] {
        let (c, h, w) = self.data.dim();
        [c, h, w]
    }

    pub fn data(&self) -> &Array3<f32> {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut Array3<f32> {
        &mut self.data
    }

    pub fn into_array(self) -> Array3<f32> {
        self.data
    }

    pub fn heatmap_channel(joint: usize) -> usize {
        joint
    }

    pub fn paf_channels(&self, part: usize) -> (usize, usize) {
        (self.joints + 2 * part, self.joints + 2 * part + 1)
    }

    pub fn root_depth_channel(&self) -> usize {
        3 * self.joints - 2
    }

    pub fn rel_depth_channel(&self, part: usize) -> usize {
        3 * self.joints - 1 + part
    }

    pub fn heatmaps(&self) -> ArrayView3<'_, f32> {
        self.data.slice(s![0..self.joints, .., ..])
    }

    pub fn heatmaps_mut(&mut self) -> ArrayViewMut3<'_, f32> {
        let j = self.joints;
        self.data.slice_mut(s![0..j, .., ..])
    }

    pub fn heatmap(&self, joint: usize) -> ArrayView2<'_, f32> {
        self.data.slice(s![joint, .., ..])
    }

    /// All PAF channels, `2(J - 1)` of them, interleaved x/y by part.
    pub fn pafs(&self) -> ArrayView3<'_, f32> {
        let j = self.joints;
        self.data.slice(s![j..3 * j - 2, .., ..])
    }

    pub fn pafs_mut(&mut self) -> ArrayViewMut3<'_, f32> {
        let j = self.joints;
        self.data.slice_mut(s![j..3 * j - 2, .., ..])
    }

    pub fn paf(&self, part: usize) -> (ArrayView2<'_, f32>, ArrayView2<'_, f32>) {
        let (cx, cy) = self.paf_channels(part);
        (self.data.slice(s![cx, .., ..]), self.data.slice(s![cy, .., ..]))
    }

    pub fn root_depth(&self) -> ArrayView2<'_, f32> {
        self.data.slice(s![self.root_depth_channel(), .., ..])
    }

    pub fn root_depth_mut(&mut self) -> ArrayViewMut2<'_, f32> {
        let c = self.root_depth_channel();
        self.data.slice_mut(s![c, .., ..])
    }

    pub fn rel_depths(&self) -> ArrayView3<'_, f32> {
        let j = self.joints;
        self.data.slice(s![3 * j - 1.., .., ..])
    }

    pub fn rel_depths_mut(&mut self) -> ArrayViewMut3<'_, f32> {
        let j = self.joints;
        self.data.slice_mut(s![3 * j - 1.., .., ..])
    }

    pub fn rel_depth(&self, part: usize) -> ArrayView2<'_, f32> {
        self.data.slice(s![self.rel_depth_channel(part), .., ..])
    }
}
