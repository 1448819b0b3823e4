pub mod ctl;
pub mod explain;
pub mod mcts;
pub mod model;
pub mod scenario;
pub mod session;
pub mod sim;
