use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh resolution {0}: must be at least 1")]
    InvalidResolution(usize),

    #[error("non-conforming mesh: edge ({0}, {1}) is shared by {2} cells")]
    NonConforming(usize, usize, usize),

    #[error("cell {cell} references vertex {vertex} but the mesh has {nv} vertices")]
    BadVertexIndex { cell: usize, vertex: usize, nv: usize },

    #[error("degenerate or clockwise cell {cell} (signed area {area:e})")]
    DegenerateCell { cell: usize, area: f64 },

    #[error("degenerate affine map (det J = {0:e})")]
    DegenerateMap(f64),

    #[error("quadrature degree {0} is not supported (maximum 10)")]
    UnsupportedQuadrature(usize),

    #[error("unsupported element: {0}")]
    UnsupportedElement(String),

    #[error("singular functional matrix while building {family} basis (pivot {pivot:e})")]
    SingularFunctionals { family: String, pivot: f64 },

    #[error("incompatible spaces: {0}")]
    IncompatibleSpaces(String),

    #[error("singular saddle-point system: {0}")]
    SingularSystem(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("fit requires at least 3 levels with distinct mesh sizes, got {0}")]
    TooFewLevels(usize),

    #[error("no reference data for {0}")]
    MissingReference(String),

    #[error("level N={level}: {source}")]
    AtLevel {
        level: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
