//! Command-line pipeline around the `nvism` library: configuration, the
//! file-based stages and the mapping of outcomes to exit codes.

pub mod config;
pub mod stages;

use nvism::NvError;

/// Exit code for a run that completed with all checks passing.
pub const EXIT_OK: i32 = 0;
/// Exit code when a check or round trip exceeded its tolerance.
pub const EXIT_CHECK_FAILED: i32 = 1;
/// Exit code for usage, input and output errors.
pub const EXIT_USAGE: i32 = 2;
/// Exit code when an iterative solver did not converge.
pub const EXIT_NON_CONVERGENCE: i32 = 3;

/// Exit code of a failed stage.
pub fn exit_code(err: &NvError) -> i32 {
    match err {
        NvError::NonConvergence { .. } => EXIT_NON_CONVERGENCE,
        _ => EXIT_USAGE,
    }
}
