//! Record-level security services for tabular stores.

pub mod authentication;
pub mod codec;
pub mod config;
pub mod confidentiality;
pub mod envelope;
pub mod integrity;
pub mod keys;
pub mod model;
pub mod provider;
pub mod sqlrand;
pub mod storage;
