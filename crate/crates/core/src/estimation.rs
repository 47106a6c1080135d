//! Tangent-space least squares and the distance-median MoM selector.
//!
//! Under uniform weights and a full orthonormal sweep of tangent directions
//! per step, the design superoperator stays a multiple of the identity. It is
//! therefore tracked as a single scalar `λ`.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::environment::DifferenceObservation;
use crate::error::{Error, Result};
use crate::geometry::{PureState, TangentVector};

/// Isotropic design superoperator `λ·I` for one epoch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DesignState {
    pub mu_prev: f64,
    pub omega: f64,
    pub lambda: f64,
    pub steps_applied: u64,
}

/// Hot start at the inherited precision: `λ_0 = μ_{m−1}`.
pub fn design_init(mu_prev: f64) -> Result<DesignState> {
    if !(mu_prev > 0.0 && mu_prev.is_finite()) {
        return Err(Error::Domain { op: "design_init", value: mu_prev });
    }
    Ok(DesignState { mu_prev, omega: 0.0, lambda: mu_prev, steps_applied: 0 })
}

impl DesignState {
    pub fn with_omega(mut self, omega: f64) -> Self {
        self.omega = omega;
        self
    }

    /// One full sweep over all tangent directions:
    /// `λ ← λ + (ω/2)·sin²(√(2/λ))`.
    pub fn step(&self) -> DesignState {
        let s = (2.0 / self.lambda).sqrt().sin();
        DesignState {
            lambda: self.lambda + 0.5 * self.omega * s * s,
            steps_applied: self.steps_applied + 1,
            ..*self
        }
    }

    /// Geodesic step size `τ = 1/√λ` for the next step's actions.
    pub fn step_size(&self) -> f64 {
        self.lambda.sqrt().recip()
    }

    /// Coefficient `sin(√2·τ)/√2` of the odd tangent term at the current `λ`.
    pub fn observation_scale(&self) -> f64 {
        (2.0 / self.lambda).sqrt().sin() * FRAC_1_SQRT_2
    }
}

/// Free-function form of [`DesignState::step`].
pub fn design_step(ds: &DesignState) -> DesignState {
    ds.step()
}

/// Running `Σ ω·Y·O` of one repetition block.
#[derive(Clone, Debug)]
pub struct BlockAccumulator {
    weighted_sum: TangentVector,
    block_index: usize,
}

impl BlockAccumulator {
    pub fn new(base: PureState, block_index: usize) -> Self {
        BlockAccumulator { weighted_sum: TangentVector::zero(base), block_index }
    }

    pub fn base(&self) -> &PureState {
        self.weighted_sum.base()
    }

    pub fn block_index(&self) -> usize {
        self.block_index
    }

    pub fn weighted_sum(&self) -> &TangentVector {
        &self.weighted_sum
    }

    /// `Σ += ω · y · c · v` where `c` is the odd-term coefficient of the step.
    pub fn accumulate(
        &mut self,
        obs: &DifferenceObservation,
        direction: &TangentVector,
        step_scale: f64,
        omega: f64,
    ) -> Result<()> {
        let y = obs.y();
        if y == 0.0 {
            return self.weighted_sum.check_same_base(direction);
        }
        self.weighted_sum.add_scaled(omega * y * step_scale, direction)
    }

    /// Least-squares estimate `(λ·I)^{-1} Σ ω Y O`.
    pub fn solve(&self, final_lambda: f64) -> Result<TangentVector> {
        if !(final_lambda > 0.0) {
            return Err(Error::Domain { op: "solve_block", value: final_lambda });
        }
        Ok(self.weighted_sum.scaled(final_lambda.recip()))
    }
}

/// `‖v‖_𝒱 = √λ · ‖v‖_F` for the isotropic design.
pub fn weighted_norm(v: &TangentVector, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Domain { op: "weighted_norm", value: lambda });
    }
    Ok(lambda.sqrt() * v.norm())
}

#[derive(Clone, Debug)]
pub struct MoMResult {
    pub selected_index: usize,
    pub estimate: TangentVector,
    pub median_distances: Vec<f64>,
}

/// Lower-middle order statistic (the middle one for odd counts).
fn lower_median(values: &mut [f64]) -> f64 {
    let k = (values.len() - 1) / 2;
    let (_, m, _) = values.select_nth_unstable_by(k, |a, b| a.total_cmp(b));
    *m
}

/// Distance-median selection: for each estimate the median weighted distance
/// to the other `N−1`, then the argmin (lowest index on ties).
pub fn mom_select(estimates: &[TangentVector], lambda: f64) -> Result<MoMResult> {
    if estimates.len() < 2 {
        return Err(Error::validation(format!(
            "median-of-means needs at least 2 estimates, got {}",
            estimates.len()
        )));
    }
    if !(lambda > 0.0) {
        return Err(Error::Domain { op: "mom_select", value: lambda });
    }
    let n = estimates.len();
    let first = &estimates[0];
    for e in &estimates[1..] {
        first.check_same_base(e)?;
    }
    let scale = lambda.sqrt();
    let mut dist = vec![0.0; n * n];
    for j in 0..n {
        for l in (j + 1)..n {
            let dd = scale * estimates[j].sub(&estimates[l])?.norm();
            dist[j * n + l] = dd;
            dist[l * n + j] = dd;
        }
    }
    let mut row = Vec::with_capacity(n - 1);
    let median_distances: Vec<f64> = (0..n)
        .map(|j| {
            row.clear();
            row.extend((0..n).filter(|&l| l != j).map(|l| dist[j * n + l]));
            lower_median(&mut row)
        })
        .collect();
    let mut selected_index = 0;
    for (j, &y) in median_distances.iter().enumerate().skip(1) {
        if y < median_distances[selected_index] {
            selected_index = j;
        }
    }
    Ok(MoMResult {
        selected_index,
        estimate: estimates[selected_index].clone(),
        median_distances,
    })
}

/// Regularization bias `μ_{m−1}·(λ·I)^{-1} Δ_*` of the hot-started estimator.
pub fn bias_vector(delta_star: &TangentVector, mu_prev: f64, final_lambda: f64) -> Result<TangentVector> {
    if !(final_lambda > 0.0) {
        return Err(Error::Domain { op: "bias_vector", value: final_lambda });
    }
    Ok(delta_star.scaled(mu_prev / final_lambda))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{complete_tangent_basis, C64};

    fn base() -> PureState {
        PureState::normalized(vec![C64::new(0.6, 0.2), C64::new(-0.1, 0.5), C64::new(0.3, -0.4)]).unwrap()
    }

    #[test]
    fn design_init_values() {
        let ds = design_init(2.0).unwrap();
        assert_eq!((ds.lambda, ds.steps_applied), (2.0, 0));
        assert_eq!(design_init(41472.0).unwrap().lambda, 41472.0);
        assert!(design_init(0.0).is_err());
        assert!(design_init(-1.0).is_err());
    }

    #[test]
    fn design_step_values() {
        let ds = design_init(2.0).unwrap().with_omega(2.0).step();
        let expected = 2.0 + 1f64.sin().powi(2);
        assert!((ds.lambda - expected).abs() < 1e-15);
        assert!((ds.lambda - 2.70807).abs() < 1e-5);
        assert_eq!(ds.steps_applied, 1);
        let l2 = ds.lambda * ds.lambda;
        assert!((l2 - 7.3336).abs() < 1e-4);
        assert!(l2 >= 4.0 + 2.0 * 1f64.sin().powi(2) * 2.0 && l2 <= 10.0);
        let frozen = design_init(3.0).unwrap().with_omega(0.0).step();
        assert_eq!(frozen.lambda, 3.0);
    }

    #[test]
    fn zero_observation_leaves_accumulator_unchanged() {
        let b = base();
        let basis = complete_tangent_basis(&b).unwrap();
        let mut acc = BlockAccumulator::new(b, 0);
        let obs = DifferenceObservation { x_plus: true, x_minus: true };
        acc.accumulate(&obs, &basis.vectors()[0], 0.3, 2.0).unwrap();
        assert_eq!(acc.weighted_sum().norm(), 0.0);
    }

    #[test]
    fn single_observation_sum() {
        let b = base();
        let basis = complete_tangent_basis(&b).unwrap();
        let v = &basis.vectors()[2];
        let mut acc = BlockAccumulator::new(b, 3);
        let obs = DifferenceObservation { x_plus: true, x_minus: false };
        acc.accumulate(&obs, v, 0.3, 2.0).unwrap();
        let expected = v.scaled(2.0 * 0.3 / 2.0);
        assert!(acc.weighted_sum().sub(&expected).unwrap().norm() < 1e-15);
        let solved = acc.solve(4.0).unwrap();
        assert!(solved.sub(&expected.scaled(0.25)).unwrap().norm() < 1e-15);
        assert!(acc.solve(0.0).is_err());
        assert_eq!(acc.block_index(), 3);
    }

    #[test]
    fn accumulate_rejects_foreign_direction() {
        let b = base();
        let other = PureState::basis(3, 0).unwrap();
        let basis = complete_tangent_basis(&other).unwrap();
        let mut acc = BlockAccumulator::new(b, 0);
        let obs = DifferenceObservation { x_plus: true, x_minus: false };
        assert!(acc.accumulate(&obs, &basis.vectors()[0], 0.3, 1.0).is_err());
    }

    #[test]
    fn empty_accumulator_solves_to_zero() {
        let acc = BlockAccumulator::new(base(), 0);
        assert_eq!(acc.solve(7.0).unwrap().norm(), 0.0);
    }

    #[test]
    fn weighted_norm_values() {
        let b = base();
        let basis = complete_tangent_basis(&b).unwrap();
        assert_eq!(weighted_norm(&TangentVector::zero(b), 3.0).unwrap(), 0.0);
        assert!((weighted_norm(&basis.vectors()[0], 4.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(weighted_norm(&basis.vectors()[0], 0.0).is_err());
    }

    #[test]
    fn mom_prefers_the_repeated_estimate() {
        let b = base();
        let basis = complete_tangent_basis(&b).unwrap();
        let v = basis.vectors()[0].scaled(0.1);
        let w = basis.vectors()[1].scaled(5.0);
        let r = mom_select(&[v.clone(), v.clone(), w], 1.0).unwrap();
        assert_eq!(r.selected_index, 0);
        assert_eq!(r.median_distances[0], 0.0);
    }

    #[test]
    fn mom_identical_estimates_select_first() {
        let b = base();
        let v = complete_tangent_basis(&b).unwrap().vectors()[3].scaled(0.2);
        let r = mom_select(&vec![v; 6], 9.0).unwrap();
        assert_eq!(r.selected_index, 0);
        assert!(r.median_distances.iter().all(|&y| y == 0.0));
    }

    #[test]
    fn mom_rejects_bad_input() {
        let b = base();
        let v = TangentVector::zero(b);
        assert!(mom_select(std::slice::from_ref(&v), 1.0).is_err());
        let other = TangentVector::zero(PureState::basis(3, 0).unwrap());
        assert!(mom_select(&[v.clone(), other], 1.0).is_err());
        assert!(mom_select(&[v.clone(), v], 0.0).is_err());
    }

    #[test]
    fn mom_one_dimensional_brute_force() {
        let b = base();
        let e = complete_tangent_basis(&b).unwrap().vectors()[0].clone();
        let values = [0.0, 0.1, 0.2, 5.0, 9.0];
        let ests: Vec<TangentVector> = values.iter().map(|&x| e.scaled(x)).collect();
        let r = mom_select(&ests, 1.0).unwrap();
        // brute force: sort the 4 distances, take the lower-middle (index 1)
        let brute: Vec<f64> = (0..5)
            .map(|j| {
                let mut ds: Vec<f64> = (0..5).filter(|&l| l != j).map(|l| (values[j] - values[l]).abs()).collect();
                ds.sort_by(|a, b| a.partial_cmp(b).unwrap());
                ds[1]
            })
            .collect();
        for (a, b) in r.median_distances.iter().zip(&brute) {
            assert!((a - b).abs() < 1e-14);
        }
        let best = (0..5).fold(0, |bi, j| if brute[j] < brute[bi] { j } else { bi });
        assert_eq!(r.selected_index, best);
        assert_eq!(best, 1);
    }

    #[test]
    fn bias_vector_cases() {
        let b = base();
        let v = complete_tangent_basis(&b).unwrap().vectors()[1].scaled(0.3);
        assert_eq!(bias_vector(&TangentVector::zero(b), 2.0, 5.0).unwrap().norm(), 0.0);
        assert!(bias_vector(&v, 5.0, 5.0).unwrap().sub(&v).unwrap().norm() < 1e-15);
        assert!(bias_vector(&v, 5.0, 0.0).is_err());
    }
}
