//! File formats, benchmark harness and command-line front end for `mteq-core`.

pub mod bench;
pub mod cli;
pub mod io;
pub mod run;

use mteq_core::tensor::DEFAULT_DENSE_CAP;

/// Environment variable overriding the dense-entry cap.
pub const DENSE_CAP_VAR: &str = "MTEQ_DENSE_CAP";

/// The dense-entry cap: `MTEQ_DENSE_CAP` if set, else the library default.
pub fn dense_cap() -> Result<usize, String> {
    match std::env::var(DENSE_CAP_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| format!("{DENSE_CAP_VAR}=`{v}` is not a nonnegative integer")),
        Err(std::env::VarError::NotPresent) => Ok(DEFAULT_DENSE_CAP),
        Err(e) => Err(format!("{DENSE_CAP_VAR}: {e}")),
    }
}
