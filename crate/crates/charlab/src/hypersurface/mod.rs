//! Convex body models (placeholder).
