//! Scene synthesis, imaging statistics and group-detection scoring for
//! free-standing conversational groups.

pub mod evaluation;
pub mod geometry;
pub mod imaging;
pub mod io;
pub mod placement;
pub mod synthesis;
