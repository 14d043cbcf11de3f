//! Branching-process expectations for sized generators.

mod extinction;
mod matrix;
mod report;

pub use extinction::{extinction_probability, EXTINCTION_MAX_ITERATIONS, EXTINCTION_TOLERANCE};
pub use matrix::{
    expected_generation, expected_population, initial_population, mean_matrix_constructors,
    mean_matrix_types, Granularity, MeanMatrix, PopulationVector,
};
pub use report::{
    predict, predict_constructors, predict_constructors_direct, predict_foreign, star_probs,
    ConstructorTerms, PredictionReport, PredictionReportJson, StarProbs,
};
