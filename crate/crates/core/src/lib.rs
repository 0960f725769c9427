//! Combinatorial machinery for Cantor-set dynamics at finite scale.
//!
//! The crate is organized around a tower of finite approximations to the
//! universal adding machine and the spiral compactifications built on it:
//!
//! * [`adding_machine`]: exact residue arithmetic in the cyclic quotients
//!   with moduli `1!, 2!, ..., k!` and the translation-by-one map.
//! * [`relations`]: finite surjective relations, total maps between finite
//!   sets, exact image computation and equivariance checks.
//! * [`spirals`]: finite spirals: a bi-infinite orbit segment glued to a
//!   factorial cycle at each end, with canonical projections and end
//!   collapses.
//! * [`tower`]: the inverse system of word-indexed spiral unions connected
//!   by letter-driven maps, with piece bookkeeping and preimage counting.
//! * [`representation`]: representation of an arbitrary finite surjective
//!   relation by a disjoint union of finite spirals via eventually periodic
//!   chains.
//! * [`lifting`]: given an equivariant surjection from a spiral model onto
//!   a tower level, construct a lift through the connecting maps to a deeper
//!   level (duplication, piece matching, zero-point anchoring).
//! * [`rohlin`]: a locally compact group of block-structured permutations
//!   of the naturals with explicit conjugacy witnesses between basic clopen
//!   neighborhoods.
//!
//! Supporting modules: [`export`] (DOT graph output), [`formats`] (the JSON
//! file formats used by the CLI) and [`sampling`] (seeded generators for the
//! randomized verification suites).
//!
//! All values are immutable after construction and all operations are pure
//! functions, so everything here can be shared freely across threads.

pub mod adding_machine;
pub mod export;
pub mod formats;
pub mod lifting;
pub mod relations;
pub mod representation;
pub mod rohlin;
pub mod sampling;
pub mod spirals;
pub mod tower;
