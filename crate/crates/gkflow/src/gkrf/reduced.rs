//! Reduced 1-form/scalar flow (placeholder).
