//! TOML run configuration. Every table and field is optional.
//!
//! ```toml
//! count = 100
//!
//! [scene]
//! group_count_range = { min = 3, max = 10 }
//!
//! [scene.placement]
//! beta = 0.4
//! gamma = 2.0
//!
//! [camera]
//! distance = { lo = 8.0, hi = 16.0 }
//!
//! [evaluation]
//! tolerance = 0.6666666666666666
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::fixture::FixtureSpec;
use super::DataError;
use crate::evaluation::EvaluationConfig;
use crate::imaging::CameraRanges;
use crate::synthesis::SceneConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Scenes per `synthesize` run.
    pub count: usize,
    pub scene: SceneConfig,
    pub camera: CameraRanges,
    pub fixture: FixtureSpec,
    pub evaluation: EvaluationConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            count: 100,
            scene: SceneConfig::default(),
            camera: CameraRanges::default(),
            fixture: FixtureSpec::default(),
            evaluation: EvaluationConfig::default(),
        }
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, DataError> {
    toml::from_str(text).map_err(|e| {
        let line = e.span().map_or(0, |s| text[..s.start.min(text.len())].matches('\n').count() + 1);
        DataError::parse(line as u64, e.message().to_string())
    })
}

pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig, DataError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
    parse_config(&text).map_err(|e| e.with_path(path))
}
