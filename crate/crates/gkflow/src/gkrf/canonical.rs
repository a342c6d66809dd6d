//! Canonical deformations (placeholder).
