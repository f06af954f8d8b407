//! HTTP session service for interactive endowment-effect experiments.
//!
//! A session walks forward through eliciting items, presenting them,
//! endowing one, and recording the agent's keep/exchange decision. State is
//! persisted after every change and each completed session yields one
//! outcome record.

pub mod api;
pub mod demo;
pub mod error;
pub mod service;
pub mod session;
pub mod store;

pub use api::{router, API_VERSION};
pub use error::ServiceError;
pub use service::{CreateSession, EndowChoice, EndowmentService, ItemInput, ServiceConfig};
pub use session::{Decision, EndowmentSession, EndowmentTrialRecord, Phase, Turn};

/// Serves the API on `listener` until `shutdown` resolves.
pub async fn serve<F>(
    listener: tokio::net::TcpListener,
    service: std::sync::Arc<EndowmentService>,
    shutdown: F,
) -> std::io::Result<()>
where
    F: std::future::Future<Output = ()> + Send + 'static,
{
    axum::serve(listener, router(service)).with_graceful_shutdown(shutdown).await
}
