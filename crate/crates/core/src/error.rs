use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("director is not a unit vector (|n| = {norm})")]
    NonUnitDirector { norm: f64 },

    #[error("projection undefined: leading eigenvalue gap {gap:e} is below {gap_min:e}")]
    ProjectionUndefined { gap: f64, gap_min: f64 },

    #[error("invalid parameter `{name}` = {value}")]
    InvalidParameter { name: &'static str, value: f64 },

    #[error("point ({}, {}, {}) lies outside the node hull", point[0], point[1], point[2])]
    OutOfDomain { point: [f64; 3] },

    #[error(
        "blow-up target corner ({}, {}, {}) maps to ({}, {}, {}), outside the source hull",
        corner[0], corner[1], corner[2], image[0], image[1], image[2]
    )]
    BlowupOutOfDomain { corner: [f64; 3], image: [f64; 3] },

    #[error("degenerate region: radius {radius} does not exceed the spacing {spacing}")]
    DegenerateRegion { radius: f64, spacing: f64 },

    #[error("radius {radius} outside the admissible range ({min}, {max}]")]
    RadiusOutOfRange { radius: f64, min: f64, max: f64 },

    #[error("annulus [{inner}, {outer}] is thinner than {min_width}")]
    AnnulusTooThin { inner: f64, outer: f64, min_width: f64 },

    #[error("annulus [{inner}, {outer}] contains no nodes")]
    EmptyAnnulus { inner: f64, outer: f64 },

    #[error("non-finite energy at node {node} (i={}, j={}, k={})", ijk[0], ijk[1], ijk[2])]
    NonFinite { node: usize, ijk: [usize; 3] },

    #[error("map leaves N_delta0 at sphere vertex {vertex}: eigenvalue gap {gap:e}")]
    LeavesNeighborhood { vertex: usize, gap: f64 },

    #[error("degree undefined: sign lift frustrated on {frustrated_edges} edge(s)")]
    LiftFrustrated { frustrated_edges: usize },

    #[error("degree sum {raw} is {residual} away from an integer; increase the subdivision level")]
    DegreeResolution { raw: f64, residual: f64 },

    #[error("tangent fit undefined: moment matrix is rank deficient (singular values {singular_values:?})")]
    RankDeficient { singular_values: [f64; 3] },

    #[error("Newton iteration did not converge: residual {residual:e} after {iterations} iterations")]
    NewtonDiverged { residual: f64, iterations: usize },

    #[error("grid reaches radius {grid_radius}, beyond the profile's {r_max}")]
    ProfileTooShort { grid_radius: f64, r_max: f64 },

    #[error("grid must be centred at the origin")]
    GridNotCentered,

    #[error("epsilon sequence must be nonincreasing")]
    LadderNotDecreasing,

    #[error("{0}")]
    Invalid(&'static str),
}
