//! Feasibility of block-diagonal linear matrix inequalities
//! `F_0 + sum_l y_l F_l ⪰ 0`, with verified points and Farkas rays.

mod problem;
mod solver;
mod verify;

pub use problem::{LmiBlock, LmiProblem};
pub use solver::{solve, FeasResult, FeasStatus, SolveOptions};
pub use verify::{verify_point, verify_ray};

#[cfg(test)]
mod tests;
