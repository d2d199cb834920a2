//! Dual action (placeholder).
