//! Gold annotation service: task queue, append-only response log, gold
//! export and agreement, behind a small JSON HTTP API.

mod http;
mod store;

pub use http::{router, serve, serve_blocking, ApiError, AppState, SubmitBody, TaskList};
pub use store::{GoldStore, StoreError, DEFAULT_ANNOTATORS_PER_TASK, DEFAULT_BATCH};
