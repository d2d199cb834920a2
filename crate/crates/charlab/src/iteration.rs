//! Index iteration (placeholder while the lower layers are being built).
