//! Continued fraction families of real quadratic fields.
//!
//! A family is seeded by a symmetric word `(u_1, ..., u_{s-1})`: the
//! discriminants whose surd expansion repeats that word (with only the
//! endpoints varying) are exactly the squarefree values of a quadratic
//! polynomial `D(n)`.  Over such a family the fundamental unit is of size
//! `sqrt(d)`, so the class number is driven by `L(1, chi_d)` alone, and the
//! statistics of `L(1, chi_d)` are captured by a random Euler product built
//! from the root counts of `D` modulo prime powers.
//!
//! The crate is organised around that pipeline:
//!
//! * [`intmath`] — residue symbols, factorization, root counts `c(n)`,
//!   Jacobsthal sums `J(m)`, and the dyadic averages `K(l)`.
//! * [`cfquad`] — periodic continued fractions of quadratic surds,
//!   convergents, fundamental units, and a Pell-equation oracle.
//! * [`family`] — word admissibility, synthesis of `D(n)` and `k(n)`,
//!   normalization, enumeration, and the density constant `C_1`.
//! * [`randmodel`] — the random Euler product: local laws, moments,
//!   Monte-Carlo sampling, saddle-point tails, and the constants `C_0`, `C_2`.
//! * [`classno`] — `L(1, chi_d)`, regulators, class numbers, and an
//!   independent binary-quadratic-form oracle.
//! * [`harness`] — experiment drivers, caching, and report emission behind
//!   the `cfq` command line tool.

pub mod cfquad;
pub mod classno;
pub mod error;
pub mod family;
pub mod harness;
pub mod intmath;
pub mod randmodel;

pub use error::{Error, Result};
