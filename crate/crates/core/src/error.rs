use std::io;
use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("part_rows must be a power of two, got {0}")]
    PartRows(usize),

    #[error("memory budget exhausted: requested {requested} bytes with {allocated} of {budget} bytes allocated")]
    Budget {
        requested: usize,
        allocated: usize,
        budget: usize,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("I/O error on partition {partition} of {path}: {source}")]
    PartitionIo {
        partition: usize,
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("partition range {first}..{end} out of bounds ({count} partitions)")]
    PartitionRange {
        first: usize,
        end: usize,
        count: usize,
    },

    #[error("partition {partition} geometry mismatch: expected {expected} bytes, got {actual}")]
    Geometry {
        partition: usize,
        expected: usize,
        actual: usize,
    },

    #[error("partition {0} has not been written")]
    Unwritten(usize),

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported format version {0}")]
    Version(u32),

    #[error("truncated file: partition {partition} is incomplete")]
    Truncated { partition: usize },

    #[error("malformed header: {0}")]
    Header(String),

    #[error("ragged row {row}: expected {expected} fields, found {found}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("cannot parse {token:?} at row {row}, field {field}")]
    Parse {
        row: usize,
        field: usize,
        token: String,
    },

    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    Shape {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("type mismatch in {op}: {detail}")]
    Type { op: &'static str, detail: String },

    #[error("label {label} out of range [0, {k}) in {op}")]
    Label { op: &'static str, label: i64, k: usize },

    #[error("empty fold in {0}")]
    EmptyFold(&'static str),

    #[error("unknown function {0:?}")]
    UnknownFn(String),

    #[error("node #{node} rows {rows:?}: {source}")]
    Node {
        node: u64,
        rows: (usize, usize),
        #[source]
        source: Box<Error>,
    },

    #[error("matrix of {bytes} bytes exceeds the local size cap of {cap} bytes")]
    SizeCap { bytes: usize, cap: usize },

    #[error("line {line}: {msg}")]
    EdgeList { line: usize, msg: String },

    #[error("vertex index {index} out of range for n = {n}")]
    VertexRange { index: u64, n: u64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("worker failed: {0}")]
    Worker(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// Short machine-readable category, used by the CLI on failure.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Io { .. } | Error::PartitionIo { .. } => "io",
            Error::BadMagic { .. }
            | Error::Version(_)
            | Error::Truncated { .. }
            | Error::Header(_)
            | Error::Ragged { .. }
            | Error::Parse { .. }
            | Error::EdgeList { .. }
            | Error::VertexRange { .. } => "format",
            Error::Budget { .. } | Error::SizeCap { .. } => "memory",
            Error::Shape { .. }
            | Error::Type { .. }
            | Error::Label { .. }
            | Error::UnknownFn(_)
            | Error::PartRows(_)
            | Error::Invalid(_) => "usage",
            Error::EmptyFold(_) | Error::Numerical(_) => "numerical",
            Error::Node { source, .. } => source.category(),
            Error::PartitionRange { .. }
            | Error::Geometry { .. }
            | Error::Unwritten(_)
            | Error::Worker(_) => "engine",
        }
    }

    /// Strips node context and returns the innermost error.
    pub fn root_cause(&self) -> &Error {
        match self {
            Error::Node { source, .. } => source.root_cause(),
            e => e,
        }
    }
}
