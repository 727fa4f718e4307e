//! Process exit codes. These values are part of the command-line contract.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    /// Success; for `run`, the flow converged.
    Ok,
    /// Invalid configuration, I/O failure or a rejected precondition.
    Error,
    /// Command-line usage error (reported by the argument parser).
    Usage,
    /// The flow diverged.
    Diverged,
    /// The flow hit the iteration cap without converging.
    MaxIter,
    /// At least one verified property failed.
    VerifyFailed,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Ok => 0,
            ExitStatus::Error => 1,
            ExitStatus::Usage => 2,
            ExitStatus::Diverged => 3,
            ExitStatus::MaxIter => 4,
            ExitStatus::VerifyFailed => 5,
        }
    }
}
