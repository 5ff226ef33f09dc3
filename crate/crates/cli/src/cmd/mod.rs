pub mod agg;
pub mod anon;
pub mod auth;
pub mod img;
pub mod keys;
pub mod merkle;
pub mod search;
pub mod sqlrand;
pub mod store;
pub mod wm;
