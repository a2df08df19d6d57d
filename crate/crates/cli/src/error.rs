use vortex_core::VortexError;

/// Exit codes: 1 verify failure, 2 invalid parameter or I/O, 3 numeric failure, 4 vortex coincidence.
#[derive(Debug)]
pub enum CliError {
    Invalid(String),
    Numeric(String),
    Coincidence(String),
    VerifyFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::VerifyFailed(_) => 1,
            CliError::Invalid(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Coincidence(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Invalid(m) => write!(f, "invalid parameter: {m}"),
            CliError::Numeric(m) => write!(f, "numerical failure: {m}"),
            CliError::Coincidence(m) => write!(f, "{m}"),
            CliError::VerifyFailed(k) => write!(f, "{k} invariant check(s) failed"),
        }
    }
}

impl From<VortexError> for CliError {
    fn from(e: VortexError) -> Self {
        let m = e.to_string();
        match e {
            VortexError::CoincidentVortices { .. } => CliError::Coincidence(m),
            VortexError::SingularPairing { .. } | VortexError::Numeric(_) => CliError::Numeric(m),
            VortexError::ChartSingularity(_)
            | VortexError::Domain(_)
            | VortexError::InvalidState(_)
            | VortexError::ZeroMomentum
            | VortexError::Unsupported(_)
            | VortexError::DegenerateKappa
            | VortexError::NoKappa => CliError::Invalid(m),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Invalid(format!("i/o: {e}"))
    }
}
