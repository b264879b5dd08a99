//! Acceptance checks, shared by `pblab verify` and the `acceptance`
//! integration test target.

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub name: &'static str,
    pub passed: bool,
    pub details: String,
}

/// Runs every acceptance criterion in order.
pub fn run_all() -> Vec<CheckReport> {
    Vec::new()
}
