//! Transaction-cost solver.
//!
//! With a proportional cost `θ` on trading the durable good, the value
//! function reduces to `V(x, k, p) = (kp)^(β(1-γ)) v(z)` with `z = x/(kp)`,
//! and `v` solves a quasi-variational inequality on `z >= θ`:
//!
//! ```text
//! max( sup_{ĉ,π̂₁,q̂} [ -ρ̄v + L v + ĉ^β̄/(1-γ) ],  Mv - v ) = 0,   v(θ) = 0
//! ```
//!
//! `L` is the generator of `z` (diffusion, drift and the two jump terms) and
//! `M` is the intervention operator. The pieces:
//!
//! * [`grid`]: uniform grid and jump-target interpolation.
//! * [`generator`]: upwind discretization of `L`, shared by the control
//!   search and the matrix assembly.
//! * [`controls`]: per-node control optimization.
//! * [`lcp`]: sparse matrices, projected SOR and a direct solver for the
//!   obstacle-free equation.
//! * [`solver`]: never-trade initialization, inner policy iteration and
//!   the outer stopping-time iteration.
//! * [`bands`]: extraction of the no-trading interval.

pub mod bands;
pub mod bounds;
pub mod controls;
pub mod generator;
pub mod grid;
pub mod intervention;
pub mod lcp;
pub mod solver;

pub use bands::{excess, extract_bands, TradingBands};
pub use bounds::{bounds, lower_alpha, ValueBounds};
pub use controls::{optimize_controls, optimize_policy, ControlOptions};
pub use generator::{discretize_generator, Controls, Generator, PolicyField};
pub use grid::Grid;
pub use intervention::{intervention, Intervention};
pub use lcp::{lcp_residuals, psor_solve, CsrMatrix, LcpProblem, LcpResiduals, PsorOptions, PsorReport};
pub use solver::{
    inner_loop, main_loop, solve_initial, solve_tc, sweep_tc_loading, InnerOutcome, SolverConfig, TcSolution,
    TraceEntry,
};
