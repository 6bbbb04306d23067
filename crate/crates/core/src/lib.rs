//! Simulation of randomized scattering for anonymous oblivious robots in the
//! plane, with exact rational geometry and per-robot random-bit accounting.
//!
//! The core types are generic over a [`Scalar`] coordinate type. The aliases
//! below fix it to arbitrary-precision rationals, which every protocol supports;
//! `Rational64` works for small lattices and fails with
//! [`GeometryError::Unrepresentable`] once coordinates overflow.

pub mod analysis;
pub mod geometry;
pub mod protocols;
pub mod randomness;
pub mod scalar;
pub mod scheduler;

use num_rational::BigRational;

pub use analysis::{
    check_lemma_bounds, chernoff_bound, chernoff_reference, estimate, exact_max_load, run_batch,
    scaling_fit, AnalysisError, Estimate, FitReport, GrowthModel, LemmaReport, TrialBatch, Verdict,
};
pub use geometry::{
    destination_at, safe_region, safe_regions, voronoi_membership, Configuration, GeometryError,
    GridLayout, Point, SafeRegion,
};
pub use protocols::{
    parse_protocol, DestinationFunction, FFunction, ProtocolError, DEFAULT_SCRIPT_N, PROTOCOL_NAMES,
};
pub use randomness::{derive_seed, BitLedger, BitSource, RandomnessError};
pub use scalar::Scalar;
pub use scheduler::{
    check_movement_contract, validate, DetectionMode, InitialConfig, MoveModel, SchedulerPolicy,
    SimError, SimOptions, SimulationState, StepReport, TrialRecord,
};

pub type RationalPoint = Point<BigRational>;
pub type RationalConfiguration = Configuration<BigRational>;
pub type RationalSafeRegion = SafeRegion<BigRational>;
pub type RationalSimulation = SimulationState<BigRational>;
pub type RationalOptions = SimOptions<BigRational>;
pub type RationalInit = InitialConfig<BigRational>;
pub type RationalProtocol = dyn DestinationFunction<BigRational>;
