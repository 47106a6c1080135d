//! Constant-accuracy initial tomography.
//!
//! Haar-random rank-one projectors are each measured a fixed number of times.
//! The frequencies are inverted by least squares over the traceless Hermitian
//! coordinates (trace pinned to one), and the top eigenvector of the
//! reconstructed matrix becomes the first base state.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::environment::{haar_state, Environment};
use crate::error::{Error, Result};
use crate::geometry::{PureState, C64};
use crate::rng::StreamKey;

pub const DEFAULT_C_W: f64 = 40.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WarmupConfig {
    pub c_w: f64,
    pub delta_w: f64,
    /// Number of random directions; `3d²` when unset.
    pub n_directions: Option<usize>,
}

impl WarmupConfig {
    pub fn new(delta_w: f64) -> Self {
        WarmupConfig { c_w: DEFAULT_C_W, delta_w, n_directions: None }
    }

    /// Sample plan for dimension `d`: `⌈c_w d² ln(1/δ_w)⌉` copies, rounded up
    /// to a multiple of the number of directions.
    pub fn plan(&self, d: usize) -> Result<WarmupPlan> {
        if d < 2 {
            return Err(Error::DimensionTooSmall(d));
        }
        if !(self.delta_w > 0.0 && self.delta_w <= 1.0) {
            return Err(Error::config(format!("delta_w must lie in (0, 1], got {}", self.delta_w)));
        }
        if !(self.c_w > 0.0 && self.c_w.is_finite()) {
            return Err(Error::config(format!("c_w must be positive, got {}", self.c_w)));
        }
        let n_directions = self.n_directions.unwrap_or(3 * d * d);
        if n_directions < d * d {
            return Err(Error::config(format!(
                "n_directions = {n_directions} cannot determine a {d}x{d} state (need at least {})",
                d * d
            )));
        }
        let raw = (self.c_w * (d * d) as f64 * (1.0 / self.delta_w).ln()).ceil().max(1.0) as u64;
        let reps_per_direction = raw.div_ceil(n_directions as u64);
        Ok(WarmupPlan {
            n_directions,
            reps_per_direction,
            total_samples: reps_per_direction * n_directions as u64,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WarmupPlan {
    pub n_directions: usize,
    pub reps_per_direction: u64,
    pub total_samples: u64,
}

/// Orthonormal basis of traceless Hermitian `d × d` matrices
/// (generalized Gell-Mann matrices with `Tr(G_a G_b) = δ_ab`).
fn traceless_basis(d: usize) -> Vec<DMatrix<C64>> {
    let zero = C64::new(0.0, 0.0);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(d * d - 1);
    for j in 0..d {
        for k in (j + 1)..d {
            let mut s = DMatrix::from_element(d, d, zero);
            s[(j, k)] = C64::new(h, 0.0);
            s[(k, j)] = C64::new(h, 0.0);
            out.push(s);
            let mut a = DMatrix::from_element(d, d, zero);
            a[(j, k)] = C64::new(0.0, -h);
            a[(k, j)] = C64::new(0.0, h);
            out.push(a);
        }
    }
    for l in 1..d {
        let norm = ((l * (l + 1)) as f64).sqrt();
        let mut g = DMatrix::from_element(d, d, zero);
        for m in 0..l {
            g[(m, m)] = C64::new(1.0 / norm, 0.0);
        }
        g[(l, l)] = C64::new(-(l as f64) / norm, 0.0);
        out.push(g);
    }
    out
}

fn expectation(g: &DMatrix<C64>, u: &PureState) -> f64 {
    let a = u.amplitudes();
    let d = a.len();
    let mut acc = C64::new(0.0, 0.0);
    for r in 0..d {
        for c in 0..d {
            acc += a[r].conj() * g[(r, c)] * a[c];
        }
    }
    acc.re
}

/// Trace-one least-squares reconstruction from rank-one frequencies.
pub fn linear_inversion(directions: &[PureState], frequencies: &[f64]) -> Result<DMatrix<C64>> {
    let d = directions.first().map(PureState::dim).ok_or_else(|| Error::config("no warm-up directions"))?;
    if directions.len() != frequencies.len() {
        return Err(Error::validation("one frequency per direction is required"));
    }
    if directions.len() < d * d {
        return Err(Error::config(format!("{} directions cannot determine a {d}x{d} state", directions.len())));
    }
    let basis = traceless_basis(d);
    let design = DMatrix::from_fn(directions.len(), basis.len(), |k, a| expectation(&basis[a], &directions[k]));
    let rhs = DVector::from_iterator(frequencies.len(), frequencies.iter().map(|p| p - 1.0 / d as f64));
    let svd = design.svd(true, true);
    let smallest = svd.singular_values.min();
    if smallest <= 1e-10 * svd.singular_values.max() {
        return Err(Error::config("warm-up design is rank deficient"));
    }
    let coeffs = svd.solve(&rhs, 0.0).map_err(|e| Error::validation(e.to_string()))?;
    let mut x = DMatrix::identity(d, d) * C64::new(1.0 / d as f64, 0.0);
    for (g, c) in basis.iter().zip(coeffs.iter()) {
        x += g * C64::new(*c, 0.0);
    }
    Ok(x)
}

/// Eigenvector of the largest eigenvalue of a Hermitian matrix (lowest index on ties).
pub fn top_eigenvector(x: &DMatrix<C64>) -> Result<PureState> {
    let eig = SymmetricEigen::new(x.clone());
    let mut best = 0;
    for i in 1..eig.eigenvalues.len() {
        if eig.eigenvalues[i] > eig.eigenvalues[best] {
            best = i;
        }
    }
    PureState::normalized(eig.eigenvectors.column(best).iter().copied().collect())
}

#[derive(Clone, Debug)]
pub struct WarmupOutcome {
    pub estimate: PureState,
    pub samples_used: u64,
    pub directions: Vec<PureState>,
    pub frequencies: Vec<f64>,
}

/// Runs the warm-up, calling `on_copy` after each measured copy.
///
/// Directions come from `key`; measurement draws are tagged under
/// `tag_prefix` so they never collide with later phases.
pub fn run_warmup_observed(
    env: &mut Environment,
    cfg: &WarmupConfig,
    key: StreamKey,
    tag_prefix: u64,
    mut on_copy: impl FnMut(&PureState),
) -> Result<WarmupOutcome> {
    let d = env.dim();
    let plan = cfg.plan(d)?;
    let mut rng = key.rng();
    let directions = (0..plan.n_directions)
        .map(|_| haar_state(d, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let start = env.copies_consumed();
    let mut frequencies = Vec::with_capacity(plan.n_directions);
    for (k, p) in directions.iter().enumerate() {
        let mut hits = 0u64;
        for r in 0..plan.reps_per_direction {
            if env.measure_tagged(p, &[tag_prefix, k as u64, r])? {
                hits += 1;
            }
            on_copy(p);
        }
        frequencies.push(hits as f64 / plan.reps_per_direction as f64);
    }
    let x = linear_inversion(&directions, &frequencies)?;
    Ok(WarmupOutcome {
        estimate: top_eigenvector(&x)?,
        samples_used: env.copies_consumed() - start,
        directions,
        frequencies,
    })
}

/// Runs the warm-up with directions drawn from the `"warmup"` substream of `seed`.
pub fn run_warmup(env: &mut Environment, seed: u64, cfg: &WarmupConfig) -> Result<(PureState, u64)> {
    let out = run_warmup_observed(env, cfg, StreamKey::new(seed).named("warmup"), 0, |_| {})?;
    Ok((out.estimate, out.samples_used))
}
