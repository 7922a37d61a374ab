//! File formats, the source-ranking pipeline and the command-line front end
//! for [`esm_select_core`].

pub mod cli;
pub mod manifest;
pub mod pipeline;
pub mod report;
pub mod store;
