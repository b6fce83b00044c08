pub mod classify;
pub mod cloud;
pub mod commands;
pub mod config;
pub mod direction;
pub mod error;
pub mod flow_map;
pub mod ode;
pub mod poincare;
pub mod stats;
pub mod strain;
pub mod velocity;
