//! HTTP session service and command-line front end for [`cfexplain`].
//!
//! The service keeps one simulated environment per session. Clients inject
//! events, read state and history, and ask for explanations of the current
//! state. See [`api::router`] for the routes.

pub mod api;
pub mod cli;
pub mod store;

pub use api::{router, AppState};
pub use store::{Session, SessionStore, Snapshot, StoreError};
