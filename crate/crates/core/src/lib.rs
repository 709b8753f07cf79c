pub mod cache;
pub mod chevalley;
pub mod cli;
pub mod groups;
pub mod igusa;
pub mod json;
pub mod matrix;
pub mod presburger;
pub mod rings;
pub mod rootdata;
pub mod verify;
pub mod zeta;
