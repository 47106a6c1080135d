//! Pure states, tangent spaces of the pure-state manifold, and the maps
//! between them.
//!
//! A tangent vector at base state `|ψ⟩` is stored as its coordinate vector
//! `|φ⟩` with `⟨φ|ψ⟩ = 0`; it encodes the Hermitian matrix
//! `V = (|φ⟩⟨ψ| + |ψ⟩⟨φ|)/√2`, whose Frobenius norm equals `‖φ‖`. Dense
//! `d × d` matrices are only materialized on request.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tolerance for structural invariants (unit norm, tangency, Hermiticity).
pub const STRUCTURAL_TOL: f64 = 1e-10;

/// Norm below which a tangent estimate is treated as zero by [`update_base`].
pub const ZERO_TANGENT_TOL: f64 = 1e-14;

/// Largest tangent norm on which the base update is provably 6-Lipschitz.
pub fn inverse_retraction_radius() -> f64 {
    (3.0f64 / 8.0).sqrt()
}

#[inline]
fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[inline]
fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// A unit vector in `C^d`, standing for the rank-one projector `|ψ⟩⟨ψ|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<C64>", into = "Vec<C64>")]
pub struct PureState {
    amps: Vec<C64>,
}

impl TryFrom<Vec<C64>> for PureState {
    type Error = Error;

    fn try_from(amps: Vec<C64>) -> Result<Self> {
        PureState::new(amps)
    }
}

impl From<PureState> for Vec<C64> {
    fn from(s: PureState) -> Self {
        s.amps
    }
}

impl PureState {
    /// Wraps amplitudes that are already normalized (within 1e−10).
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        if amps.len() < 2 {
            return Err(Error::DimensionTooSmall(amps.len()));
        }
        let n = norm_sqr(&amps).sqrt();
        if !n.is_finite() || (n - 1.0).abs() > STRUCTURAL_TOL {
            return Err(Error::validation(format!("state norm is {n}, expected 1")));
        }
        Ok(PureState { amps })
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(mut amps: Vec<C64>) -> Result<Self> {
        if amps.len() < 2 {
            return Err(Error::DimensionTooSmall(amps.len()));
        }
        let n = norm_sqr(&amps).sqrt();
        if !n.is_finite() || n == 0.0 {
            return Err(Error::validation("cannot normalize a zero or non-finite vector"));
        }
        amps.iter_mut().for_each(|a| *a /= n);
        Ok(PureState { amps })
    }

    /// Canonical basis state `|k⟩`.
    pub fn basis(d: usize, k: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::DimensionTooSmall(d));
        }
        if k >= d {
            return Err(Error::validation(format!("basis index {k} out of range for d={d}")));
        }
        let mut amps = vec![C64::new(0.0, 0.0); d];
        amps[k] = C64::new(1.0, 0.0);
        Ok(PureState { amps })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    /// `⟨self|other⟩`.
    pub fn overlap(&self, other: &PureState) -> Result<C64> {
        check_dim(self.dim(), other.dim())?;
        Ok(inner(&self.amps, &other.amps))
    }

    /// Same projector, i.e. equal up to a global phase.
    pub fn same_projector(&self, other: &PureState) -> bool {
        if self.amps == other.amps {
            return true;
        }
        match self.overlap(other) {
            Ok(o) => o.norm_sqr() >= 1.0 - STRUCTURAL_TOL,
            Err(_) => false,
        }
    }

    /// Dense projector `|ψ⟩⟨ψ|`.
    pub fn projector(&self) -> DMatrix<C64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |r, c| self.amps[r] * self.amps[c].conj())
    }
}

/// Element of the tangent space at `base`, in `|φ⟩` coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TangentVector {
    base: PureState,
    phi: Vec<C64>,
}

impl TangentVector {
    /// Builds a tangent vector, rejecting `phi` that is not orthogonal to the base.
    pub fn new(base: PureState, phi: Vec<C64>) -> Result<Self> {
        check_dim(base.dim(), phi.len())?;
        let residual = inner(&base.amps, &phi).norm();
        let scale = norm_sqr(&phi).sqrt().max(1.0);
        if residual > STRUCTURAL_TOL * scale {
            return Err(Error::validation(format!(
                "phi is not tangent to the base state (|<psi|phi>| = {residual:e})"
            )));
        }
        Ok(TangentVector { base, phi })
    }

    /// Builds a tangent vector by projecting out the base component of `phi`.
    pub fn from_projected(base: PureState, mut phi: Vec<C64>) -> Result<Self> {
        check_dim(base.dim(), phi.len())?;
        let c = inner(&base.amps, &phi);
        for (p, b) in phi.iter_mut().zip(&base.amps) {
            *p -= b * c;
        }
        Ok(TangentVector { base, phi })
    }

    pub fn zero(base: PureState) -> Self {
        let phi = vec![C64::new(0.0, 0.0); base.dim()];
        TangentVector { base, phi }
    }

    pub fn base(&self) -> &PureState {
        &self.base
    }

    pub fn phi(&self) -> &[C64] {
        &self.phi
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    /// Frobenius norm of the encoded matrix, which equals `‖φ‖`.
    pub fn norm(&self) -> f64 {
        norm_sqr(&self.phi).sqrt()
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.phi)
    }

    /// Coordinates of `other` expressed against this vector's base amplitudes.
    ///
    /// Bases that differ by a global phase `e^{iθ}` encode the same matrix when
    /// `φ` carries the same phase, so `other.phi` is rotated by `e^{-iθ}`.
    fn aligned_phi<'a>(&self, other: &'a TangentVector) -> Result<std::borrow::Cow<'a, [C64]>> {
        check_dim(self.dim(), other.dim())?;
        if self.base.amps == other.base.amps {
            return Ok(std::borrow::Cow::Borrowed(&other.phi));
        }
        let o = inner(&self.base.amps, &other.base.amps);
        if o.norm_sqr() < 1.0 - STRUCTURAL_TOL {
            return Err(Error::BaseMismatch);
        }
        let phase = (o / o.norm()).conj();
        Ok(std::borrow::Cow::Owned(other.phi.iter().map(|p| p * phase).collect()))
    }

    /// Checks that `other` is anchored at the same projector.
    pub fn check_same_base(&self, other: &TangentVector) -> Result<()> {
        self.aligned_phi(other).map(|_| ())
    }

    pub fn scaled(&self, c: f64) -> TangentVector {
        TangentVector {
            base: self.base.clone(),
            phi: self.phi.iter().map(|p| p * c).collect(),
        }
    }

    /// `self += c · other`.
    pub fn add_scaled(&mut self, c: f64, other: &TangentVector) -> Result<()> {
        let other = self.aligned_phi(other)?;
        for (p, q) in self.phi.iter_mut().zip(other.iter()) {
            *p += q * c;
        }
        Ok(())
    }

    pub fn add(&self, other: &TangentVector) -> Result<TangentVector> {
        let mut out = self.clone();
        out.add_scaled(1.0, other)?;
        Ok(out)
    }

    pub fn sub(&self, other: &TangentVector) -> Result<TangentVector> {
        let mut out = self.clone();
        out.add_scaled(-1.0, other)?;
        Ok(out)
    }

    /// Dense encoded matrix `(|φ⟩⟨ψ| + |ψ⟩⟨φ|)/√2`.
    pub fn to_matrix(&self) -> DMatrix<C64> {
        let d = self.dim();
        let psi = &self.base.amps;
        let phi = &self.phi;
        DMatrix::from_fn(d, d, |r, c| {
            (phi[r] * psi[c].conj() + psi[r] * phi[c].conj()) * FRAC_1_SQRT_2
        })
    }
}

/// Frobenius inner product `Tr(V1 V2) = Re⟨φ1|φ2⟩` of two tangent vectors at the same base.
pub fn tangent_inner(v1: &TangentVector, v2: &TangentVector) -> Result<f64> {
    let phi2 = v1.aligned_phi(v2)?;
    Ok(inner(&v1.phi, &phi2).re)
}

/// Ordered Frobenius-orthonormal basis of a tangent space.
#[derive(Clone, Debug)]
pub struct TangentBasis {
    base: PureState,
    vectors: Vec<TangentVector>,
}

impl TangentBasis {
    pub fn base(&self) -> &PureState {
        &self.base
    }

    pub fn vectors(&self) -> &[TangentVector] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Real coordinates of `v` in this basis.
    pub fn coordinates(&self, v: &TangentVector) -> Result<Vec<f64>> {
        self.vectors.iter().map(|b| tangent_inner(b, v)).collect()
    }
}

/// Deterministic orthonormal basis of the tangent space at `base`.
///
/// The base is completed to an orthonormal basis of `C^d` by Gram–Schmidt over
/// the canonical vectors, always taking the canonical vector with the largest
/// residual next (lowest index on ties). Each completion vector `e` then
/// contributes the pair `V(e)`, `V(i·e)`.
pub fn complete_tangent_basis(base: &PureState) -> Result<TangentBasis> {
    let d = base.dim();
    if d < 2 {
        return Err(Error::DimensionTooSmall(d));
    }
    let mut frame: Vec<Vec<C64>> = vec![base.amps.clone()];
    let mut used = vec![false; d];
    while frame.len() < d {
        let mut best: Option<(usize, Vec<C64>, f64)> = None;
        for k in (0..d).filter(|&k| !used[k]) {
            let mut r = vec![C64::new(0.0, 0.0); d];
            r[k] = C64::new(1.0, 0.0);
            // modified Gram-Schmidt, applied twice for stability
            for _ in 0..2 {
                for f in &frame {
                    let c = inner(f, &r);
                    for (x, y) in r.iter_mut().zip(f) {
                        *x -= y * c;
                    }
                }
            }
            let n = norm_sqr(&r).sqrt();
            if best.as_ref().is_none_or(|(_, _, bn)| n > *bn) {
                best = Some((k, r, n));
            }
        }
        let (k, mut r, n) = best.expect("a canonical vector remains while the frame is incomplete");
        used[k] = true;
        r.iter_mut().for_each(|x| *x /= n);
        frame.push(r);
    }
    let i = C64::new(0.0, 1.0);
    let mut vectors = Vec::with_capacity(2 * (d - 1));
    for e in frame.into_iter().skip(1) {
        let ie: Vec<C64> = e.iter().map(|x| x * i).collect();
        vectors.push(TangentVector { base: base.clone(), phi: e });
        vectors.push(TangentVector { base: base.clone(), phi: ie });
    }
    Ok(TangentBasis { base: base.clone(), vectors })
}

fn check_hermitian(x: &DMatrix<C64>, d: usize) -> Result<()> {
    if x.nrows() != d || x.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, found: x.nrows().max(x.ncols()) });
    }
    for r in 0..d {
        for c in r..d {
            if (x[(r, c)] - x[(c, r)].conj()).norm() > STRUCTURAL_TOL {
                return Err(Error::validation("matrix is not Hermitian"));
            }
        }
    }
    Ok(())
}

/// Orthogonal projection `C X (I−C) + (I−C) X C` of a Hermitian matrix onto
/// the tangent space at `base`; in coordinates `φ = √2 (I−C) X|ψ⟩`.
pub fn project_to_tangent(base: &PureState, x: &DMatrix<C64>) -> Result<TangentVector> {
    let d = base.dim();
    check_hermitian(x, d)?;
    let psi = &base.amps;
    let x_psi: Vec<C64> = (0..d).map(|r| (0..d).map(|c| x[(r, c)] * psi[c]).sum()).collect();
    let c = inner(psi, &x_psi);
    let phi = x_psi
        .iter()
        .zip(psi)
        .map(|(xp, p)| (xp - p * c) * SQRT_2)
        .collect();
    Ok(TangentVector { base: base.clone(), phi })
}

/// Exact tangent target `P_C(ρ − C)` for a pure `ρ`, without dense matrices.
///
/// Equals `project_to_tangent(base, ρ − C)`; here `φ = √2 ⟨ψ_ρ|ψ⟩ (|ψ_ρ⟩ − ⟨ψ|ψ_ρ⟩|ψ⟩)`.
pub fn tangent_target(base: &PureState, rho: &PureState) -> Result<TangentVector> {
    check_dim(base.dim(), rho.dim())?;
    let psi = &base.amps;
    let chi = &rho.amps;
    let a = inner(psi, chi); // ⟨ψ|χ⟩
    let phi = chi
        .iter()
        .zip(psi)
        .map(|(x, p)| (x - p * a) * a.conj() * SQRT_2)
        .collect();
    Ok(TangentVector { base: base.clone(), phi })
}

/// Moves along the geodesic from `base` in the unit direction `v`:
/// `cos(τ/√2)|ψ⟩ + sin(τ/√2)|φ⟩`.
pub fn retract(base: &PureState, v: &TangentVector, tau: f64) -> Result<PureState> {
    let probe = TangentVector::zero(base.clone());
    let phi = probe.aligned_phi(v)?;
    let n = norm_sqr(&phi).sqrt();
    if (n - 1.0).abs() > STRUCTURAL_TOL {
        return Err(Error::validation(format!("retraction direction has norm {n}, expected 1")));
    }
    if !tau.is_finite() {
        return Err(Error::Domain { op: "retract", value: tau });
    }
    let (s, c) = (tau * FRAC_1_SQRT_2).sin_cos();
    let amps: Vec<C64> = base.amps.iter().zip(phi.iter()).map(|(p, f)| p * c + f * s).collect();
    PureState::normalized(amps)
}

/// `‖P − Q‖_F² = 2(1 − |⟨p|q⟩|²)`.
pub fn frobenius_dist2(p: &PureState, q: &PureState) -> Result<f64> {
    Ok((2.0 * (1.0 - fidelity(p, q)?)).clamp(0.0, 2.0))
}

/// Pure-state fidelity `|⟨p|q⟩|²`.
pub fn fidelity(p: &PureState, q: &PureState) -> Result<f64> {
    Ok(p.overlap(q)?.norm_sqr().clamp(0.0, 1.0))
}

/// `‖P_C(ρ − C)‖² = x(1 − x/2)` as a function of `x = ‖ρ − C‖_F²`.
pub fn secant_tangent_norm2(x: f64) -> Result<f64> {
    if !(0.0..=2.0).contains(&x) {
        return Err(Error::Domain { op: "secant_tangent_norm2", value: x });
    }
    Ok(x * (1.0 - x / 2.0))
}

/// Geodesic angle `½ arcsin(min{1, √2·norm})` of the base update.
pub fn gamma_hat(norm: f64) -> Result<f64> {
    if norm.is_nan() || norm < 0.0 {
        return Err(Error::Domain { op: "gamma_hat", value: norm });
    }
    Ok(0.5 * (SQRT_2 * norm).min(1.0).asin())
}

/// Whether `‖Δ̂‖` lies beyond the domain where the arcsin is not clamped
/// by the stability analysis (`√(3/8)`).
pub fn outside_update_domain(norm: f64) -> bool {
    norm > inverse_retraction_radius()
}

/// New base state from a tangent estimate `Δ̂` at `base`.
///
/// Retracts by `√2·γ̂(‖Δ̂‖)` along `Δ̂/‖Δ̂‖`; returns `base` unchanged when
/// `‖Δ̂‖ ≤ 1e−14`. When `Δ̂` is the exact target of some `ρ` with
/// `‖ρ − C‖² ≤ 1/2`, the result is `ρ`.
pub fn update_base(base: &PureState, delta_hat: &TangentVector) -> Result<PureState> {
    let probe = TangentVector::zero(base.clone());
    let phi = probe.aligned_phi(delta_hat)?;
    let norm = norm_sqr(&phi).sqrt();
    if norm <= ZERO_TANGENT_TOL {
        return Ok(base.clone());
    }
    let unit = TangentVector {
        base: base.clone(),
        phi: phi.iter().map(|p| p / norm).collect(),
    };
    retract(base, &unit, SQRT_2 * gamma_hat(norm)?)
}

/// Analytic Lipschitz bound `L(x)` of the base update at tangent norm `x ≤ 1/√2`.
pub fn update_lipschitz_bound(x: f64) -> Result<f64> {
    if !(0.0..=FRAC_1_SQRT_2).contains(&x) {
        return Err(Error::Domain { op: "update_lipschitz_bound", value: x });
    }
    let w = (1.0 - 2.0 * x * x).sqrt();
    Ok(1.0 + 2.0 * x / w + 2.0 * SQRT_2 * x.powi(3) / (w * (1.0 + w).powi(2)) + 2.0 * SQRT_2 * x / (1.0 + w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn pure_state_rejects_bad_norm_and_small_dimension() {
        assert!(PureState::new(vec![c(1.0, 0.0), c(1.0, 0.0)]).is_err());
        assert!(matches!(PureState::new(vec![c(1.0, 0.0)]), Err(Error::DimensionTooSmall(1))));
        assert!(PureState::normalized(vec![c(0.0, 0.0); 3]).is_err());
    }

    #[test]
    fn phase_equivalent_states_share_a_projector() {
        let p = PureState::normalized(vec![c(1.0, 2.0), c(-0.5, 0.3)]).unwrap();
        let phase = C64::from_polar(1.0, 0.7);
        let q = PureState::new(p.amplitudes().iter().map(|a| a * phase).collect()).unwrap();
        assert!(p.same_projector(&q));
        assert!((fidelity(&p, &q).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn qubit_basis_completion_is_canonical() {
        let base = PureState::basis(2, 0).unwrap();
        let b = complete_tangent_basis(&base).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b.vectors()[0].phi(), &[c(0.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(b.vectors()[1].phi(), &[c(0.0, 0.0), c(0.0, 1.0)]);
    }

    #[test]
    fn inner_of_real_and_imaginary_directions_vanishes() {
        let base = PureState::basis(3, 0).unwrap();
        let v = TangentVector::new(base.clone(), vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let w = TangentVector::new(base, vec![c(0.0, 0.0), c(0.0, 1.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(tangent_inner(&v, &v).unwrap(), 1.0);
        assert_eq!(tangent_inner(&v, &w).unwrap(), 0.0);
    }

    #[test]
    fn tangent_inner_rejects_mismatches() {
        let a = TangentVector::zero(PureState::basis(3, 0).unwrap());
        let b = TangentVector::zero(PureState::basis(3, 1).unwrap());
        let e = TangentVector::zero(PureState::basis(4, 0).unwrap());
        assert!(matches!(tangent_inner(&a, &b), Err(Error::BaseMismatch)));
        assert!(matches!(tangent_inner(&a, &e), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn non_tangent_phi_is_rejected() {
        let base = PureState::basis(2, 0).unwrap();
        assert!(TangentVector::new(base, vec![c(0.1, 0.0), c(1.0, 0.0)]).is_err());
    }

    #[test]
    fn projecting_the_base_gives_zero() {
        let base = PureState::normalized(vec![c(0.3, 0.1), c(-0.2, 0.7), c(0.5, -0.4)]).unwrap();
        let v = project_to_tangent(&base, &base.projector()).unwrap();
        assert!(v.norm() < 1e-14);
    }

    #[test]
    fn projection_rejects_non_hermitian() {
        let base = PureState::basis(2, 0).unwrap();
        let mut x = DMatrix::from_element(2, 2, c(0.0, 0.0));
        x[(0, 1)] = c(1.0, 0.0);
        assert!(project_to_tangent(&base, &x).is_err());
    }

    #[test]
    fn projection_of_half_distance_secant() {
        // ρ at squared distance 1/2 from C: sin²γ = 1/4
        let g = (0.5f64).asin();
        let base = PureState::basis(2, 0).unwrap();
        let rho = PureState::new(vec![c(g.cos(), 0.0), c(g.sin(), 0.0)]).unwrap();
        assert!((frobenius_dist2(&base, &rho).unwrap() - 0.5).abs() < 1e-14);
        let x = rho.projector() - base.projector();
        let v = project_to_tangent(&base, &x).unwrap();
        assert!((v.norm_sqr() - 3.0 / 8.0).abs() < 1e-14);
        assert_eq!(secant_tangent_norm2(0.5).unwrap(), 3.0 / 8.0);
    }

    #[test]
    fn secant_tangent_domain() {
        assert_eq!(secant_tangent_norm2(0.0).unwrap(), 0.0);
        assert!(secant_tangent_norm2(-0.1).is_err());
        assert!(secant_tangent_norm2(2.1).is_err());
    }

    #[test]
    fn retraction_endpoints() {
        let base = PureState::basis(3, 0).unwrap();
        let v = TangentVector::new(base.clone(), vec![c(0.0, 0.0), c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        let a0 = retract(&base, &v, 0.0).unwrap();
        assert!(a0.same_projector(&base));
        let a1 = retract(&base, &v, PI / SQRT_2).unwrap();
        let target = PureState::new(v.phi().to_vec()).unwrap();
        assert!((fidelity(&a1, &target).unwrap() - 1.0).abs() < 1e-14);
        let a2 = retract(&base, &v, FRAC_1_SQRT_2).unwrap();
        let expected = 2.0 * (0.5f64).sin().powi(2);
        assert!((frobenius_dist2(&base, &a2).unwrap() - expected).abs() < 1e-14);
        assert!((expected - 0.45970).abs() < 1e-5);
    }

    #[test]
    fn retraction_requires_unit_direction() {
        let base = PureState::basis(2, 0).unwrap();
        let v = TangentVector::new(base.clone(), vec![c(0.0, 0.0), c(2.0, 0.0)]).unwrap();
        assert!(retract(&base, &v, 0.1).is_err());
    }

    #[test]
    fn distance_and_fidelity_extremes() {
        let p = PureState::basis(3, 0).unwrap();
        let q = PureState::basis(3, 2).unwrap();
        assert_eq!(frobenius_dist2(&p, &p).unwrap(), 0.0);
        assert_eq!(frobenius_dist2(&p, &q).unwrap(), 2.0);
        assert_eq!(fidelity(&p, &p).unwrap(), 1.0);
        assert_eq!(fidelity(&p, &q).unwrap(), 0.0);
        assert!(fidelity(&p, &PureState::basis(2, 0).unwrap()).is_err());
    }

    #[test]
    fn gamma_hat_values() {
        assert_eq!(gamma_hat(0.0).unwrap(), 0.0);
        assert!((gamma_hat(0.5).unwrap() - PI / 8.0).abs() < 1e-15);
        assert!((gamma_hat(0.9).unwrap() - PI / 4.0).abs() < 1e-15);
        assert!(gamma_hat(-1e-3).is_err());
    }

    #[test]
    fn update_with_zero_estimate_keeps_base() {
        let base = PureState::normalized(vec![c(0.3, 0.1), c(-0.2, 0.7)]).unwrap();
        let out = update_base(&base, &TangentVector::zero(base.clone())).unwrap();
        assert_eq!(out, base);
    }

    #[test]
    fn update_rejects_foreign_anchor() {
        let base = PureState::basis(2, 0).unwrap();
        let other = PureState::basis(2, 1).unwrap();
        let v = TangentVector::new(other, vec![c(0.3, 0.0), c(0.0, 0.0)]).unwrap();
        assert!(matches!(update_base(&base, &v), Err(Error::BaseMismatch)));
    }

    #[test]
    fn lipschitz_bound_at_domain_edge() {
        let l = update_lipschitz_bound(inverse_retraction_radius()).unwrap();
        assert!((l - 5.181).abs() < 1e-3, "L = {l}");
        assert_eq!(update_lipschitz_bound(0.0).unwrap(), 1.0);
    }

    #[test]
    fn tangent_target_matches_projection() {
        let base = PureState::normalized(vec![c(0.3, 0.1), c(-0.2, 0.7), c(0.5, -0.4)]).unwrap();
        let rho = PureState::normalized(vec![c(0.1, 0.9), c(0.2, -0.1), c(0.4, 0.0)]).unwrap();
        let a = tangent_target(&base, &rho).unwrap();
        let b = project_to_tangent(&base, &(rho.projector() - base.projector())).unwrap();
        let diff = a.sub(&b).unwrap();
        assert!(diff.norm() < 1e-14);
    }
}
