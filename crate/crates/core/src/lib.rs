//! Finite-dimensional analysis of local quantum channels: Schmidt
//! structure, maximally entangled states (pure and mixed), Kraus/Choi
//! channel algebra, the pure-state-preserving channel classification,
//! and randomized probes of which local channels preserve maximal
//! entanglement, Schmidt rank, and separability.

pub mod channels;
pub mod error;
pub mod generators;
pub mod linalg;
pub mod probes;
pub mod states;

pub use channels::{ChannelClass, ChoiMatrix, ClassTag, KrausChannel};
pub use error::{Error, Result};
pub use generators::Seed;
pub use linalg::{BipartiteDims, ComplexMatrix, ComplexVector, Subsystem, Tolerances};
pub use probes::{EquivalenceReport, ProbeMode, ProbeReport, Verdict};
pub use states::{DensityMatrix, PureState, SchmidtData};
