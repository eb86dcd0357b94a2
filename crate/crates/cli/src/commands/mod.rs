pub mod boxes;
pub mod caption;
pub mod color;
pub mod render;
pub mod tabr;
