use conjecture_core::looper::LoopError;
use conjecture_core::store::StoreError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Code {
    Failure = 1,
    Usage = 2,
    Corrupt = 3,
    Backend = 4,
}

impl Code {
    pub fn as_u8(self) -> u8 {
        self as u8
    }
}

#[derive(Debug)]
pub struct Failure {
    pub code: Code,
    pub error: anyhow::Error,
}

pub type CmdResult = Result<(), Failure>;

impl Failure {
    pub fn new(code: Code, error: impl Into<anyhow::Error>) -> Self {
        Failure { code, error: error.into() }
    }

    pub fn usage(msg: impl std::fmt::Display) -> Self {
        Failure::new(Code::Usage, anyhow::anyhow!("{msg}"))
    }
}

pub fn store_code(e: &StoreError) -> Code {
    match e {
        StoreError::Corrupt { .. } => Code::Corrupt,
        StoreError::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => Code::Usage,
        StoreError::Io { .. } => Code::Failure,
    }
}

impl From<StoreError> for Failure {
    fn from(e: StoreError) -> Self {
        Failure::new(store_code(&e), e)
    }
}

pub fn loop_code(e: &LoopError) -> Code {
    match e {
        LoopError::SeedUnreadable { .. } | LoopError::ZeroIterations => Code::Usage,
        LoopError::Store(s) => store_code(s),
        LoopError::AlreadyTerminated(_) | LoopError::EmptyAccumulation => Code::Failure,
    }
}
