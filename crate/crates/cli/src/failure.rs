use std::fmt::Display;

/// Command failure tagged with its exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad or missing input data, I/O and network errors: exit 1.
    Data(anyhow::Error),
    /// Flags or programs that cannot work for this input: exit 2.
    Usage(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Data(_) => 1,
            Failure::Usage(_) => 2,
        }
    }

    pub fn usage(msg: impl Display) -> Self {
        Failure::Usage(anyhow::anyhow!("{msg}"))
    }
}

impl Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Data(e) | Failure::Usage(e) => write!(f, "{e:#}"),
        }
    }
}

pub type CmdResult<T = ()> = Result<T, Failure>;

pub trait Classify<T> {
    fn usage(self) -> CmdResult<T>;
    fn data_ctx(self, context: impl Display) -> CmdResult<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn usage(self) -> CmdResult<T> {
        self.map_err(|e| Failure::Usage(e.into()))
    }

    fn data_ctx(self, context: impl Display) -> CmdResult<T> {
        self.map_err(|e| Failure::Data(e.into().context(context.to_string())))
    }
}
