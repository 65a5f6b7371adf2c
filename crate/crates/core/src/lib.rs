//! Codec, depth-aware association and evaluation for single-shot
//! multi-person absolute 3D pose estimation.
//!
//! A scene of people in camera coordinates is encoded into a `4J - 2`
//! channel stack of image-aligned maps: keypoint heatmaps, part affinity
//! fields, a root depth map and per-part relative depth maps. The decoder
//! extracts keypoints, groups them into people near-to-far using the root
//! depths and a depth-adaptive bone-length limit, reads joint depths along
//! the skeleton and back-projects everything through the pinhole model.
//! [`metrics`] scores decoded people against ground truth.
//!
//! ```
//! use depthpose::prelude::*;
//!
//! let spec = default_skeleton();
//! let stats = default_bone_stats();
//! let cfg = SynthConfig { people: (2, 2), ..SynthConfig::default() };
//! let scene = synth_scene(&cfg, &spec, &stats).unwrap();
//!
//! let stack = encode(&scene, &spec, &EncoderConfig::default()).unwrap();
//! let people = decode(&stack, &scene.cam, &spec, &stats, &AssocConfig::default()).unwrap();
//! assert_eq!(people.len(), 2);
//! ```

// Range checks are written as negated comparisons so that NaN fails them.
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::too_many_arguments,
    clippy::type_complexity
)]

pub mod corpus;
pub mod decoder;
pub mod encoder;
pub mod geometry;
pub mod io;
pub mod loss;
pub mod metrics;
pub mod pose;
pub mod skeleton;
pub mod stack;
pub mod synth;

pub mod prelude {
    pub use crate::decoder::{
        associate_2d, decode, depth_aware_associate, extract_keypoints, link_threshold, paf_score, read_depths,
        reconstruct_3d, AssocConfig, AssocMethod, Decoder, KeypointCandidate, PersonHypothesis, PoseRefiner,
    };
    pub use crate::encoder::{encode, EncoderConfig};
    pub use crate::geometry::{
        back_project, denormalize_depth, normalize_depth, project, CameraIntrinsics, NormalizedDepth, Point2D, Point3D,
    };
    pub use crate::loss::{compute_losses, LossReport, LossWeights};
    pub use crate::metrics::{evaluate, match_people, EvalConfig, Frame, MetricReport};
    pub use crate::pose::{AbsolutePose3D, Distractor, Joint3D, Scene};
    pub use crate::skeleton::{default_bone_stats, default_skeleton, BoneStats, SkeletonSpec};
    pub use crate::stack::RepresentationStack;
    pub use crate::synth::{synth_frame, synth_scene, SynthConfig};
}
