//! Flat parameter storage in canonical layout.
//!
//! Layout: layers in forward order; within a layer all weights, then all
//! biases. Conv weights are indexed `[filter][in_channel][ky][kx]`, dense
//! weights `[out_unit][in_unit]`, both row-major.

use rand::Rng as _;
use rand_chacha::rand_core::SeedableRng;

use super::spec::{count_parameters, NetworkSpec};
use crate::rng::Rng;
use crate::{PdError, Result};

/// Flat float64 vector covering every weight and bias of one `NetworkSpec`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterStore {
    pub values: Vec<f64>,
}

impl ParameterStore {
    pub fn zeros(spec: &NetworkSpec) -> Result<Self> {
        Ok(ParameterStore {
            values: vec![0.0; count_parameters(spec)?],
        })
    }

    pub fn from_values(spec: &NetworkSpec, values: Vec<f64>) -> Result<Self> {
        let expect = count_parameters(spec)?;
        if values.len() != expect {
            return Err(PdError::ShapeMismatch(format!(
                "parameter store has {} values, spec needs {}",
                values.len(),
                expect
            )));
        }
        Ok(ParameterStore { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Exact bit-level equality, the test for "parameters untouched".
    pub fn bits_eq(&self, other: &ParameterStore) -> bool {
        self.values.len() == other.values.len()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Deterministic initialization: weights uniform in the open interval
/// `(-1/sqrt(fan_in), 1/sqrt(fan_in))`, biases zero.
pub fn init_parameters(spec: &NetworkSpec, seed: u64) -> Result<ParameterStore> {
    let layers = spec.layers()?;
    let mut rng = Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(count_parameters(spec)?);
    for layer in &layers {
        let bound = 1.0 / (layer.fan_in() as f64).sqrt();
        for _ in 0..layer.weight_count() {
            values.push(sample_open(&mut rng, bound));
        }
        values.extend(std::iter::repeat(0.0).take(layer.bias_count()));
    }
    Ok(ParameterStore { values })
}

fn sample_open(rng: &mut Rng, bound: f64) -> f64 {
    loop {
        let x = (2.0 * rng.gen::<f64>() - 1.0) * bound;
        if x.abs() < bound {
            return x;
        }
    }
}
