//! A small probabilistic programming language with interval refinement types,
//! a type-directed program synthesizer and a regression search built on it.

pub mod baseline;
pub mod gof;
pub mod intervals;
pub mod lang;
pub mod regression;
pub mod rng;
pub mod sampler;
pub mod synth;
pub mod typecheck;

pub use intervals::{Bound, DualBound, IntervalError};
pub use lang::{parse_program, print_program, Arg, DistFamily, Expr, ParseError};
pub use rng::RngStream;
pub use sampler::{sample_many, sample_once, RuntimeError, SampleSet};
pub use typecheck::{check, infer, TypeError, TypingContext};
pub use synth::{partition_add, pick, split_budget, synthesize, synthesize_with, PointList, RuleWeights, SynthError, SynthRequest};
pub use baseline::{generate_random, success_rate, validate_by_sampling, GenConfig};
pub use gof::{fitness, FitnessScore, Metric};
pub use regression::{evaluate_candidate, search, Mode, SearchConfig, SearchResult};
