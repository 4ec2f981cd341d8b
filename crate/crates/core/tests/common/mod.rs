#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use secrecy_core::channel::complex_gaussian_matrix;
use secrecy_core::kkt::random_feasible_start;
use secrecy_core::linalg::{hermitize, CMatrix};
use secrecy_core::Covariance;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Hermitian matrix with unit Frobenius norm.
pub fn unit_hermitian(n: usize, rng: &mut ChaCha20Rng) -> CMatrix {
    let d = hermitize(&complex_gaussian_matrix(n, n, rng));
    let norm = d.norm();
    d.scale(1.0 / norm)
}

/// Haar-ish unitary from the Q factor of a complex Gaussian matrix.
pub fn unitary(n: usize, rng: &mut ChaCha20Rng) -> CMatrix {
    complex_gaussian_matrix(n, n, rng).qr().q()
}

/// Feasible point with a random trace in `(0, P_T]` and, half the time, a rank deficit.
pub fn feasible_point(n: usize, p_total: f64, rng: &mut ChaCha20Rng) -> Covariance {
    use rand::Rng;
    let full = random_feasible_start(n, p_total, rng).unwrap();
    let mut q = full.into_matrix().scale(rng.random_range(0.05..1.0));
    if n > 1 && rng.random_bool(0.5) {
        let v = complex_gaussian_matrix(n, 1, rng);
        let v = v.scale(1.0 / v.norm());
        let p = CMatrix::identity(n, n) - &v * v.adjoint();
        q = hermitize(&(&p * q * &p));
    }
    Covariance::new(q, p_total).unwrap()
}
