//! Closed-form isospectral twirling of fourth-moment probes of quantum chaos.
//!
//! This crate is `no_std` + `alloc`. It holds everything that is pure
//! arithmetic: the exact algebra of the symmetric group S4 acting on four
//! tensor copies, Gram and Weingarten matrices (plain and Clifford-projected),
//! the Haar / Clifford / T-doped moment coefficients, spectral form factors
//! and their ensemble averages, the stabilizer Hamiltonian models, and the
//! probe assembly.
//!
//! Dense-matrix verification, sampling and the command line live in the
//! `isotwirl` crate.
//!
//! # Conventions
//!
//! * Permutations of the four tensor slots are stored in one-line notation
//!   (`p[j]` is the image of slot `j`, 0-based) and enumerated in
//!   lexicographic order; see [`perm_algebra::ALL`].
//! * `T_π` sends the factor in slot `j` to slot `π(j)`, so that
//!   `Tr[T_π (X₁⊗X₂⊗X₃⊗X₄)]` is a product of cyclic traces, one per cycle.
//! * Slots 1, 2 carry `V` and slots 3, 4 carry `V†` in `V^{⊗2,2}`.
//! * Probe values are real; wherever `g₃` enters, only `Re g₃` is used.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod hamiltonians;
pub mod linalg;
pub mod perm_algebra;
pub mod probes;
pub mod spectral;
pub mod twirl_engine;
pub mod weingarten;

use core::fmt;

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Errors surfaced by the closed-form machinery.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// Dimension below the minimum the operation is defined for.
    DimensionTooSmall { d: u64, min: u64 },
    /// Dimension must be a power of two (qubit systems, XOR-indexed spectra).
    NotPowerOfTwo { d: u64 },
    /// Dimension must be a perfect square (equal bipartition).
    NonSquareDimension { d: u64 },
    /// A Gram matrix has lower rank than its generic rank at this `d`.
    SingularGram { d: u64, rank: usize, generic_rank: usize },
    /// The requested formula has a pole at this dimension.
    Pole { what: &'static str, d: u64 },
    /// Doping angle is a multiple of π/2 (the gate would be Clifford).
    InvalidAngle { theta: f64 },
    /// Form factors lack the stabilizer-valid `g̃₃`.
    NotStabilizerValid,
    /// Generic invalid-argument error.
    Invalid(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionTooSmall { d, min } => {
                write!(f, "dimension d={d} is below the minimum {min}")
            }
            Error::NotPowerOfTwo { d } => write!(f, "dimension d={d} is not a power of two"),
            Error::NonSquareDimension { d } => {
                write!(f, "dimension d={d} is not a perfect square (equal bipartition required)")
            }
            Error::SingularGram { d, rank, generic_rank } => write!(
                f,
                "Gram matrix at d={d} has rank {rank} < generic rank {generic_rank}"
            ),
            Error::Pole { what, d } => write!(f, "{what} has a pole at d={d}"),
            Error::InvalidAngle { theta } => {
                write!(f, "doping angle θ={theta} is a multiple of π/2")
            }
            Error::NotStabilizerValid => {
                write!(f, "form factors carry no stabilizer-valid g̃₃")
            }
            Error::Invalid(msg) => write!(f, "{msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;

/// `log2(d)` when `d` is a power of two `≥ 2`.
pub fn qubits_of(d: u64) -> Result<u32> {
    if d < 2 {
        return Err(Error::DimensionTooSmall { d, min: 2 });
    }
    if !d.is_power_of_two() {
        return Err(Error::NotPowerOfTwo { d });
    }
    Ok(d.trailing_zeros())
}
