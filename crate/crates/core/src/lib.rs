// Negated float comparisons below deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod casestudy;
pub mod cli;
pub mod io;
pub mod optim;
pub mod poly;
pub mod rsi;
pub mod sim;
pub mod sos;
pub mod synth;
pub mod system;
