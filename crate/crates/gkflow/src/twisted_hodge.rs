//! Twisted Hodge theory (placeholder).
