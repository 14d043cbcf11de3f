//! Predict and tune the constructor distributions of random generators for
//! algebraic data types.
//!
//! Declarations are parsed into a [`Universe`]. The prediction engine treats
//! a size-bounded generator as a multi-type branching process and computes
//! expected constructor counts from mean matrices. Cost functions score
//! those predictions against a target, the optimizer tunes probabilities by
//! local search, and the sampler draws values to check the predictions.
//!
//! The prediction engine is generic over the number type; the aliases below
//! name the common instantiations.

pub mod adt;
pub mod cost;
pub mod error;
pub mod optimize;
pub mod predict;
pub mod probmap;
pub mod sample;
pub mod scalar;
pub mod spec;
pub mod verify;

use num_rational::BigRational;

pub use adt::{parse_universe, Universe};
pub use cost::{chi_square, CostFunction, CostSpec};
pub use error::{Error, Result};
pub use optimize::{derive_generator, optimize, Outcome, SearchConfig, SearchTrace};
pub use predict::{predict, predict_constructors, MeanMatrix, PopulationVector, PredictionReport};
pub use probmap::{uniform_probmap, ProbMap};
pub use sample::{empirical_stats, Sample, SampleStats, Sampler, Value};
pub use scalar::{RealScalar, Scalar};
pub use spec::{GenSpec, Strategy};
pub use verify::{verify, VerifyReport};

pub type ProbMapF64 = ProbMap<f64>;
pub type ProbMapF32 = ProbMap<f32>;
pub type ExactProbMap = ProbMap<BigRational>;
pub type MeanMatrixF64 = MeanMatrix<f64>;
pub type MeanMatrixF32 = MeanMatrix<f32>;
pub type ExactMeanMatrix = MeanMatrix<BigRational>;
pub type PopulationVectorF64 = PopulationVector<f64>;
pub type PopulationVectorF32 = PopulationVector<f32>;
pub type ExactPopulationVector = PopulationVector<BigRational>;
pub type PredictionReportF64 = PredictionReport<f64>;
pub type PredictionReportF32 = PredictionReport<f32>;
pub type ExactPredictionReport = PredictionReport<BigRational>;
