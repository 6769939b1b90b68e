//! File formats, random instances and reports.

pub mod generate;
pub mod obj;
pub mod off;
pub mod scene;
