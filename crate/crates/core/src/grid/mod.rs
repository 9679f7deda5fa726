//! Desk-scale DC power grid: specification, flow solver and simulator.

mod flow;
mod sim;
mod spec;

pub use flow::{flow_solve, node_balance_residual, FlowError, FlowSolution, Islands};
pub use sim::{
    apply_action, episode_rng, run_episode, run_episode_observed, settle, step_dense, step_dense_observed, Action,
    EpisodeConfig, EpisodeEvent, EpisodeRecord, GridState, Settled, SimError, StepOutput, TimedAction,
};
pub use spec::{GridSpec, GridSpecError, Line, Node, NodeKind, Profile};
