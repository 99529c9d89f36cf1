//! Exact joint-description checks for Bell and Local Friendliness
//! scenarios, with the duplication credence calculus and a toy
//! algorithmic-probability estimator alongside.

pub mod behavior;
pub mod certificate;
pub mod cli;
pub mod duplication;
pub mod induction;
pub mod io;
pub mod lp;
pub mod membership;
pub mod quantum;
pub mod rational;
