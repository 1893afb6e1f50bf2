//! Optimal control of the continuity equation: steer a transported density so that as
//! much mass as possible sits inside a target set at the final time.
//!
//! The cost is evaluated by transporting the target boundary backward along
//! characteristics and integrating an exact primitive of the initial density over the
//! resulting curve. Controls are improved by needle variations selected from a
//! boundary-flux gain profile, with a monotone line search over the needle measure.

pub mod bench;
pub mod boundary;
pub mod cli;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod oracle;
pub mod output;
pub mod problem;
pub mod solver;

pub use error::{Error, Result};
pub use geometry::Vec2;
