//! Distractor generation for reading-comprehension multiple-choice questions
//! and the tooling to evaluate generated distractors.

pub mod baseline;
pub mod corpus;
pub mod error;
pub mod extract;
pub mod generate;
pub mod humaneval;
pub mod grct;
pub mod io;
pub mod kernel;
pub mod metrics;
pub mod parses;
pub mod predictor;
pub mod seeding;
pub mod select;
pub mod tokens;
pub mod udtree;

pub use corpus::{AnswerSpan, Corpus, Mcq, SpanKind, Split, TextDoc};
pub use error::{Error, Result};
pub use grct::{to_grct, GrctNode, NodeKind};
pub use kernel::{ncptk, ptk, KernelParams, KernelScorer};
pub use udtree::{parse_conllu, DepTree, UdToken};
