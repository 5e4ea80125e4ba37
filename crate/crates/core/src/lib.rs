//! Molecular quotient-graph coarsening with message-passing models.
//!
//! The library turns SMILES strings into featurized molecular graphs,
//! detects functional groups, contracts each molecule into its functional-group
//! quotient graph, and trains MPNN / DMPNN message-passing networks on the
//! result. Numeric code is generic over the scalar type (`f32` / `f64`);
//! the crate-root aliases pin the default double-precision variants.
//!
//! Pipeline overview:
//!
//! ```text
//! SMILES ──parse──▶ Molecule ──featurize──▶ MolGraph ──funqg──▶ QuotientGraph
//!                       │                                            │
//!                       └──fg::detect──▶ FunctionalGroups ───────────┘
//!                                                                    ▼
//!                                              GraphBatch ──▶ MPNN / DMPNN
//! ```

pub mod coarsen;
pub mod featurize;
pub mod fg;
pub mod hash;
pub mod model;
pub mod nn;
pub mod scaffold;
pub mod smiles;
pub mod synth;

pub use nn::scalar::Scalar;

/// Default scalar for the whole pipeline. Double precision keeps the
/// finite-difference gradient checks tight.
pub type Real = f64;

/// Dense matrix over the default scalar.
pub type Tensor = nn::Tensor2<Real>;

/// Featurized molecular graph over the default scalar.
pub type MolGraph = featurize::MolGraph<Real>;

/// Coarsened graph over the default scalar.
pub type QuotientGraph = coarsen::QuotientGraph<Real>;

/// Batched graph input over the default scalar.
pub type GraphBatch = model::GraphBatch<Real>;

/// Parameter store over the default scalar.
pub type ParamStore = nn::ParamStore<Real>;

/// Single-precision variants for callers that trade precision for memory.
pub type Tensor32 = nn::Tensor2<f32>;
pub type MolGraph32 = featurize::MolGraph<f32>;
pub type QuotientGraph32 = coarsen::QuotientGraph<f32>;
