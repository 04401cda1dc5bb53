//! Verification and reward toolkit for embodied multi-robot plans.
//!
//! The pieces, bottom-up:
//!
//! * [`domain`]: robot kinds, primitives, capability tables, scenes, goals.
//! * [`parse`]: tag extraction and answer parsers for the three task levels.
//! * [`sim`]: action checker, world simulator, goal checker, feedback text
//!   and a breadth-first reference solver.
//! * [`metrics`]: RMSE, Hausdorff and discrete Fréchet trajectory distances.
//! * [`rewards`]: format reward, level-specific accuracy rewards and their
//!   weighted sum.
//! * [`refine`]: the generate / check / refine loop and pass@k harness.
//! * [`grpo`]: SFT warmup and group-relative policy optimisation on a toy
//!   categorical policy.
//! * [`dataset`], [`synth`], [`eval`], [`config`]: JSONL I/O, synthetic data,
//!   batch evaluation and configuration.

pub mod domain;
pub mod literal;
pub mod metrics;
pub mod parse;
pub mod sim;
pub mod rewards;
pub mod dataset;
pub mod synth;
pub mod grpo;
pub mod refine;
pub mod eval;
pub mod config;
