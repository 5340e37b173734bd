pub mod embed;
mod http;
pub mod textcore;

pub use http::HttpError;
pub mod retrieval;
pub mod proxylm;
pub mod select;
pub mod assemble;
pub mod evalkit;
pub mod pipeline;
pub mod cli;
