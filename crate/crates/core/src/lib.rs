//! Involution kernels and Ruelle/Koopman duality for finite-depth potentials
//! on the full shift.
//!
//! Functions of finitely many coordinates are stored as tables
//! ([`CylinderFunction`]) and evaluated exactly at points with a constant
//! tail ([`Point`]). From a depth-`k` potential `A` the crate builds the dual
//! potential `A*` and the involution kernel `W` ([`sinai_pair`]), the
//! transfer matrices and spectra of `L_A` and `L_{A*}`, the atomic measures
//! `D_{n,x'}` converging to eigendistributions ([`DistributionApproximant`]),
//! and the Koopman-side isomorphisms ([`verify_koopman_theorem`]).
//!
//! All tables hold double-double complex numbers ([`Cdd`]); pairings at
//! non-leading eigenvalues amplify rounding by `(rho/|lambda|)^n`, which
//! plain `f64` does not survive.
//!
//! Word sums run on rayon when the default `parallel` feature is enabled and
//! are bit-identical to the sequential path.

pub mod dd;
pub mod eigendistribution;
pub mod error;
pub mod involution;
pub mod koopman;
pub mod linalg;
pub mod operators;
pub mod symbolic;
pub mod words;

pub use dd::{Cdd, Dd};
pub use eigendistribution::{
    multiplicity_pair, oracle_pairing, DistributionApproximant, LimitPairing, MultiplicityPair, PairingOptions,
    RhoData, TraceRow,
};
pub use error::{Error, Result};
pub use involution::{
    cocycle_iterate_check, kernel_norm_bounds, sinai_pair, truncate_potential, verify_involution, DualTriple,
    KernelBounds,
};
pub use koopman::{
    build_lift, cylinder_grid, fundamental_identity_residual, koopman_eigenspace_dim, koopman_residual, lift_e,
    lift_f_pairing, verify_koopman_theorem, KoopmanLift, KoopmanProblem, KoopmanReport, Stage,
};
pub use operators::{
    koopman_apply, rho_sequence, rpf_leading, ruelle_apply, spectrum_of, Eigenspace, RhoSequence, RpfData, Spectrum,
    TransferMatrix,
};
pub use symbolic::{AprioriMeasure, CylinderFunction, KernelTable, Point, Side, Word};
pub use words::{configure_threads, Execution};
