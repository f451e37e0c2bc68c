//! Dataset parsing, environment construction from tag assignments, and the
//! environment file format.

pub mod envfile;
mod hetrec;

pub use envfile::{export_environment, import_environment};
pub use hetrec::{build_environment, parse_hetrec, BuildConfig, PreparedDataset, RawInteractions};
