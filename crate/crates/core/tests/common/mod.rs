//! Shared test oracles: an independent straight-line forward pass written
//! from the documented parameter layout, central finite differences, and
//! random instance generators. Nothing here calls into the library's layer
//! machinery, so agreement is evidence, not tautology.
//!
//! Different test binaries use different subsets of these helpers.
#![allow(dead_code)]

use pd_core::nn::{ConvSpec, NetworkSpec, ParameterStore};
use pd_core::rng::Rng;
use rand::Rng as _;

/// Forward pass computed directly from the layout contract ("layer by layer,
/// weights then biases; conv weights `[filter][channel][ky][kx]`, dense
/// weights `[out][in]`, rectifiers between consecutive layers, linear
/// output"). Returns the output and the smallest |preactivation| seen at any
/// rectified unit, which callers use to reject near-kink instances.
pub fn oracle_forward(spec: &NetworkSpec, params: &[f64], input: &[f64]) -> (Vec<f64>, f64) {
    let mut min_abs_pre = f64::INFINITY;
    let mut c = spec.input_channels;
    let mut h = spec.input_height;
    let mut w = spec.input_width;
    let mut activ = input.to_vec();
    let mut offset = 0usize;

    for conv in &spec.conv_layers {
        let out_h = (h - conv.kernel) / conv.stride + 1;
        let out_w = (w - conv.kernel) / conv.stride + 1;
        let wlen = conv.filters * c * conv.kernel * conv.kernel;
        let weights = &params[offset..offset + wlen];
        let biases = &params[offset + wlen..offset + wlen + conv.filters];
        offset += wlen + conv.filters;
        let mut next = vec![0.0; conv.filters * out_h * out_w];
        for f in 0..conv.filters {
            for oy in 0..out_h {
                for ox in 0..out_w {
                    let mut pre = biases[f];
                    for ch in 0..c {
                        for ky in 0..conv.kernel {
                            for kx in 0..conv.kernel {
                                let iy = oy * conv.stride + ky;
                                let ix = ox * conv.stride + kx;
                                let wv = weights
                                    [((f * c + ch) * conv.kernel + ky) * conv.kernel + kx];
                                pre += wv * activ[ch * h * w + iy * w + ix];
                            }
                        }
                    }
                    min_abs_pre = min_abs_pre.min(pre.abs());
                    next[f * out_h * out_w + oy * out_w + ox] = pre.max(0.0);
                }
            }
        }
        activ = next;
        c = conv.filters;
        h = out_h;
        w = out_w;
    }

    let mut units = c * h * w;
    for &n in &spec.dense_layers {
        let weights = &params[offset..offset + units * n];
        let biases = &params[offset + units * n..offset + units * n + n];
        offset += units * n + n;
        let mut next = vec![0.0; n];
        for o in 0..n {
            let mut pre = biases[o];
            for i in 0..units {
                pre += weights[o * units + i] * activ[i];
            }
            min_abs_pre = min_abs_pre.min(pre.abs());
            next[o] = pre.max(0.0);
        }
        activ = next;
        units = n;
    }

    let n = spec.output_units;
    let weights = &params[offset..offset + units * n];
    let biases = &params[offset + units * n..offset + units * n + n];
    offset += units * n + n;
    assert_eq!(offset, params.len(), "layout mismatch");
    let mut out = vec![0.0; n];
    for o in 0..n {
        let mut pre = biases[o];
        for i in 0..units {
            pre += weights[o * units + i] * activ[i];
        }
        out[o] = pre;
    }
    (out, min_abs_pre)
}

/// Central finite differences of a scalar function of the parameters.
pub fn fd_gradient(
    loss: &mut dyn FnMut(&ParameterStore) -> f64,
    params: &ParameterStore,
    h: f64,
) -> Vec<f64> {
    let mut grad = vec![0.0; params.len()];
    for i in 0..params.len() {
        let mut plus = params.clone();
        plus.values[i] += h;
        let mut minus = params.clone();
        minus.values[i] -= h;
        grad[i] = (loss(&plus) - loss(&minus)) / (2.0 * h);
    }
    grad
}

/// Relative-error gradient comparison with an absolute floor: passes when
/// `|a - b| <= floor` or `|a - b| / max(|a|, |b|) <= rel`.
pub fn gradients_match(analytic: &[f64], numeric: &[f64], rel: f64, floor: f64) -> Result<(), String> {
    assert_eq!(analytic.len(), numeric.len());
    for i in 0..analytic.len() {
        let (a, b) = (analytic[i], numeric[i]);
        let diff = (a - b).abs();
        if diff <= floor {
            continue;
        }
        let scale = a.abs().max(b.abs());
        if diff / scale > rel {
            return Err(format!("coordinate {i}: analytic {a}, numeric {b}, rel {}", diff / scale));
        }
    }
    Ok(())
}

/// A small random dense-only spec.
pub fn random_dense_spec(rng: &mut Rng) -> NetworkSpec {
    let input = rng.gen_range(3..7);
    let hidden = rng.gen_range(3..6);
    let out = rng.gen_range(2..5);
    NetworkSpec::dense(input, vec![hidden], out)
}

/// A small random conv spec over a tiny image.
pub fn random_conv_spec(rng: &mut Rng) -> NetworkSpec {
    let channels = rng.gen_range(1..3);
    let side = rng.gen_range(5..7);
    let kernel = rng.gen_range(2..4);
    let stride = rng.gen_range(1..=kernel);
    NetworkSpec {
        input_channels: channels,
        input_height: side,
        input_width: side,
        conv_layers: vec![ConvSpec { filters: rng.gen_range(2..4), kernel, stride }],
        dense_layers: vec![rng.gen_range(3..6)],
        output_units: rng.gen_range(2..5),
    }
}

/// Random parameters roughly at unit scale and a random input.
pub fn random_instance(spec: &NetworkSpec, rng: &mut Rng) -> (ParameterStore, Vec<f64>) {
    let params = ParameterStore::from_values(
        spec,
        (0..pd_core::nn::count_parameters(spec).unwrap())
            .map(|_| rng.gen_range(-0.8..0.8))
            .collect(),
    )
    .unwrap();
    let input: Vec<f64> = (0..spec.input_len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    (params, input)
}
