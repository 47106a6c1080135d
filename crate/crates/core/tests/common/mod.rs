//! Test-side oracles: dense matrix formulas and random generators that do not
//! go through the library's tangent machinery.
#![allow(dead_code)]

use nalgebra::DMatrix;
use qudit_bandit::environment::haar_state;
use qudit_bandit::geometry::{complete_tangent_basis, PureState, TangentVector, C64};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type CMat = DMatrix<C64>;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    qudit_bandit::rng::StreamKey::new(seed).named("tests").rng()
}

pub fn random_state(d: usize, rng: &mut ChaCha8Rng) -> PureState {
    haar_state(d, rng).unwrap()
}

/// Random tangent vector at `base` with Frobenius norm `norm`.
pub fn random_tangent(base: &PureState, norm: f64, rng: &mut ChaCha8Rng) -> TangentVector {
    let basis = complete_tangent_basis(base).unwrap();
    let mut v = TangentVector::zero(base.clone());
    for b in basis.vectors() {
        let c: f64 = rng.sample(StandardNormal);
        v.add_scaled(c, b).unwrap();
    }
    let n = v.norm();
    v.scaled(norm / n)
}

pub fn random_unit_tangent(base: &PureState, rng: &mut ChaCha8Rng) -> TangentVector {
    random_tangent(base, 1.0, rng)
}

/// `C X (I − C) + (I − C) X C`.
pub fn dense_project(c: &CMat, x: &CMat) -> CMat {
    let q = CMat::identity(c.nrows(), c.ncols()) - c;
    c * x * &q + &q * x * c
}

/// `Re Tr(A B)` for Hermitian `A`, `B`.
pub fn hs_inner(a: &CMat, b: &CMat) -> f64 {
    (a * b).trace().re
}

pub fn frob(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `|φ⟩⟨ψ| + |ψ⟩⟨φ|` scaled by `1/√2`, built entrywise.
pub fn dense_tangent(psi: &[C64], phi: &[C64]) -> CMat {
    let d = psi.len();
    CMat::from_fn(d, d, |r, c| (phi[r] * psi[c].conj() + psi[r] * phi[c].conj()) / std::f64::consts::SQRT_2)
}

pub fn outer(u: &[C64]) -> CMat {
    let d = u.len();
    CMat::from_fn(d, d, |r, c| u[r] * u[c].conj())
}
