//! Hyperkähler Hamiltonian scenario (placeholder).
