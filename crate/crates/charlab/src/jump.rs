//! Jump verifier (placeholder).
