//! HTTP facade over the outfit engine: catalog ingestion, three-direction
//! outfit generation and like/dislike feedback.

pub mod api;
pub mod error;
pub mod state;

pub use api::router;
pub use state::AppState;
