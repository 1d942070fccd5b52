//! Word-length and order caps shared by the trace and verification code.

/// Environment variable that overrides the trace cap.
pub const MAX_WORD_LEN_VAR: &str = "GJS_MAX_WORD_LEN";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caps {
    /// Longest word accepted by the trace functions.
    pub trace: usize,
    /// Highest order checked by cumulant verification.
    pub cumulant_check: usize,
    /// Longest power accepted by `matrix_moment`.
    pub matrix_moment: usize,
    /// Highest order of `free_poisson_moment`.
    pub free_poisson: usize,
    /// Highest moment order of the quadrature oracle.
    pub mp: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Self {
            trace: 12,
            cumulant_check: 6,
            matrix_moment: 8,
            free_poisson: 14,
            mp: 12,
        }
    }
}

impl Caps {
    /// Defaults, with the trace cap taken from `GJS_MAX_WORD_LEN` when set to
    /// a valid integer.
    pub fn from_env() -> Self {
        let mut caps = Self::default();
        if let Some(v) = std::env::var(MAX_WORD_LEN_VAR)
            .ok()
            .and_then(|s| s.trim().parse::<usize>().ok())
        {
            caps.trace = v;
        }
        caps
    }
}
