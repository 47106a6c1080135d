//! Simulated unknown pure state.
//!
//! [`Environment`] is the learner-facing channel: it only returns Born-rule
//! bits and counts consumed copies. Ground truth lives behind [`Evaluator`],
//! a separate handle used for regret and infidelity accounting; it never
//! touches the measurement random stream.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::{fidelity, frobenius_dist2, PureState, C64};
use crate::rng::StreamKey;

/// Haar-random pure state from normalized complex Gaussian amplitudes.
pub fn haar_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<PureState> {
    if d < 2 {
        return Err(Error::DimensionTooSmall(d));
    }
    loop {
        let amps: Vec<C64> = (0..d)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        if amps.iter().any(|a| a.norm_sqr() > 0.0) {
            return PureState::normalized(amps);
        }
    }
}

/// Outcome of measuring a symmetric pair of actions on two fresh copies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DifferenceObservation {
    pub x_plus: bool,
    pub x_minus: bool,
}

impl DifferenceObservation {
    /// `y = (x⁺ − x⁻)/2 ∈ {−1/2, 0, 1/2}`.
    pub fn y(&self) -> f64 {
        (f64::from(u8::from(self.x_plus)) - f64::from(u8::from(self.x_minus))) / 2.0
    }
}

#[derive(Debug)]
pub struct Environment {
    hidden: PureState,
    stream: StreamKey,
    copies_consumed: u64,
}

impl Environment {
    /// Creates an environment for `seed`. Without an explicit state the hidden
    /// state is drawn Haar-uniformly from the seed's `"state"` substream.
    pub fn new(d: usize, seed: u64, state: Option<PureState>) -> Result<Self> {
        if d < 2 {
            return Err(Error::DimensionTooSmall(d));
        }
        let root = StreamKey::new(seed);
        let hidden = match state {
            Some(s) => {
                if s.dim() != d {
                    return Err(Error::DimensionMismatch { expected: d, found: s.dim() });
                }
                s
            }
            None => haar_state(d, &mut root.named("state").rng())?,
        };
        Ok(Environment {
            hidden,
            stream: root.named("measure"),
            copies_consumed: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.hidden.dim()
    }

    pub fn copies_consumed(&self) -> u64 {
        self.copies_consumed
    }

    /// Ground-truth handle for accounting. Holds a copy of the hidden state.
    pub fn evaluator(&self) -> Evaluator {
        Evaluator { hidden: self.hidden.clone() }
    }

    fn draw(&mut self, action: &PureState, key: StreamKey) -> Result<bool> {
        let p = fidelity(&self.hidden, action)?;
        self.copies_consumed += 1;
        Ok(key.uniform() < p)
    }

    /// Measures one fresh copy with the projector onto `action`, using the
    /// next sequential draw of the measurement stream.
    pub fn measure(&mut self, action: &PureState) -> Result<bool> {
        let key = self.stream.named("sequential").child(self.copies_consumed);
        self.draw(action, key)
    }

    /// Measures one fresh copy, with the random draw addressed by `tag`.
    ///
    /// Callers must not reuse a tag within one environment; distinct tags give
    /// independent draws regardless of call order.
    pub fn measure_tagged(&mut self, action: &PureState, tag: &[u64]) -> Result<bool> {
        let key = self.stream.named("tagged").path(tag);
        self.draw(action, key)
    }

    /// Two independent copies, one per action.
    pub fn measure_pair(&mut self, a_plus: &PureState, a_minus: &PureState) -> Result<DifferenceObservation> {
        let x_plus = self.measure(a_plus)?;
        let x_minus = self.measure(a_minus)?;
        Ok(DifferenceObservation { x_plus, x_minus })
    }
}

/// Evaluator-only access to the hidden state.
#[derive(Clone, Debug)]
pub struct Evaluator {
    hidden: PureState,
}

impl Evaluator {
    pub fn hidden_state(&self) -> &PureState {
        &self.hidden
    }

    /// `Tr(ρA) = |⟨ψ_ρ|ψ_A⟩|²`.
    ///
    /// # Panics
    /// If `action` has a different dimension than the hidden state.
    pub fn true_expectation(&self, action: &PureState) -> f64 {
        fidelity(&self.hidden, action).expect("action dimension must match the environment")
    }

    /// Instantaneous regret `1 − Tr(ρA) = ½‖ρ − A‖_F²`.
    pub fn regret_increment(&self, action: &PureState) -> f64 {
        1.0 - self.true_expectation(action)
    }

    /// `1 − F(ρ, estimate)`.
    pub fn infidelity(&self, estimate: &PureState) -> f64 {
        self.regret_increment(estimate)
    }

    /// `‖ρ − C‖_F²`.
    pub fn dist2(&self, state: &PureState) -> f64 {
        frobenius_dist2(&self.hidden, state).expect("state dimension must match the environment")
    }
}
