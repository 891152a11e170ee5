//! Entry points around the meshkit engine: terminal chat, the scenario
//! runner and the session service.

pub mod chat;
pub mod service;
pub mod simulate;
pub mod store;
pub mod wire;
