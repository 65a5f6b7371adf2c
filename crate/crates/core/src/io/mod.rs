//! File formats: binary map stacks and JSON scenes, skeletons and bone stats.

pub mod scene;
pub mod tensor;

pub use scene::{
    parse_camera, parse_json, parse_scene, read_json, read_scene, to_json_string, write_json, write_scene, SceneError,
    SceneFile,
};
pub use tensor::{read_stack, stack_from_bytes, stack_to_bytes, write_stack, TensorError};
