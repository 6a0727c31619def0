//! Exact integer arithmetic primitives.
//!
//! Residue symbols, factorization with a deterministic primality test,
//! root counting of a quadratic polynomial modulo n, Jacobsthal sums, and
//! the dyadic symbol averages K(l) that drive the 2-adic part of the
//! random model.

mod factor;
mod quadpoly;
mod symbols;

pub use factor::{factorize, is_prime, is_squarefree, sieve_primes};
pub use quadpoly::{count_roots, count_roots_brute, jacobsthal, jacobsthal_sum_prime, k_ell, QuadPoly};
pub use symbols::{kron2, kronecker};
