//! Forward pass and backpropagation over the flat parameter layout.

use super::loss::QVector;
use super::params::ParameterStore;
use super::spec::{LayerShape, NetworkSpec};
use crate::{PdError, Result};

/// Activations recorded during a forward pass. `activations[0]` is the input,
/// `activations[i + 1]` the output of layer `i` (post-rectifier for hidden
/// layers, linear for the output layer).
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    activations: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("trace has at least the input")
    }

    /// Post-rectifier activations of layer `index` (0-based).
    pub fn layer_output(&self, index: usize) -> &[f64] {
        &self.activations[index + 1]
    }
}

pub(crate) fn check_input(spec: &NetworkSpec, input: &[f64]) -> Result<()> {
    if input.len() != spec.input_len() {
        return Err(PdError::ShapeMismatch(format!(
            "input has {} values, spec expects {}",
            input.len(),
            spec.input_len()
        )));
    }
    Ok(())
}

pub(crate) fn apply_layer(layer: &LayerShape, params: &[f64], input: &[f64], out: &mut Vec<f64>) {
    match *layer {
        LayerShape::Dense { in_units, out_units, relu } => {
            out.resize(out_units, 0.0);
            let (weights, biases) = params.split_at(in_units * out_units);
            for o in 0..out_units {
                let row = &weights[o * in_units..(o + 1) * in_units];
                let mut acc = biases[o];
                for (w, x) in row.iter().zip(input) {
                    acc += w * x;
                }
                out[o] = if relu { acc.max(0.0) } else { acc };
            }
        }
        LayerShape::Conv {
            in_channels,
            in_height,
            in_width,
            filters,
            kernel,
            stride,
            out_height,
            out_width,
        } => {
            out.resize(filters * out_height * out_width, 0.0);
            let (weights, biases) = params.split_at(filters * in_channels * kernel * kernel);
            let ksq = kernel * kernel;
            for f in 0..filters {
                let wf = &weights[f * in_channels * ksq..(f + 1) * in_channels * ksq];
                for oy in 0..out_height {
                    for ox in 0..out_width {
                        let mut acc = biases[f];
                        for c in 0..in_channels {
                            let wc = &wf[c * ksq..(c + 1) * ksq];
                            let base = c * in_height * in_width;
                            for ky in 0..kernel {
                                let row = base + (oy * stride + ky) * in_width + ox * stride;
                                let irow = &input[row..row + kernel];
                                let wrow = &wc[ky * kernel..(ky + 1) * kernel];
                                for (w, x) in wrow.iter().zip(irow) {
                                    acc += w * x;
                                }
                            }
                        }
                        // Rectifier between consecutive layers.
                        out[f * out_height * out_width + oy * out_width + ox] = acc.max(0.0);
                    }
                }
            }
        }
    }
}

/// Deterministic forward pass; returns one linear output per action.
pub fn forward(spec: &NetworkSpec, params: &ParameterStore, input: &[f64]) -> Result<QVector> {
    Ok(forward_traced(spec, params, input)?.activations.pop().unwrap())
}

/// Forward pass that keeps every intermediate activation for backprop.
pub fn forward_traced(
    spec: &NetworkSpec,
    params: &ParameterStore,
    input: &[f64],
) -> Result<ForwardTrace> {
    check_input(spec, input)?;
    let layers = spec.layers()?;
    let total: usize = layers.iter().map(LayerShape::parameter_count).sum();
    if params.len() != total {
        return Err(PdError::ShapeMismatch(format!(
            "parameter store has {} values, spec needs {}",
            params.len(),
            total
        )));
    }
    let mut activations = Vec::with_capacity(layers.len() + 1);
    activations.push(input.to_vec());
    let mut offset = 0;
    for layer in &layers {
        let n = layer.parameter_count();
        let mut out = Vec::new();
        apply_layer(layer, &params.values[offset..offset + n], activations.last().unwrap(), &mut out);
        activations.push(out);
        offset += n;
    }
    Ok(ForwardTrace { activations })
}

/// Gradient of a scalar loss with respect to every parameter, given the
/// loss gradient at the network output. Same layout as `ParameterStore`.
pub fn backward(
    spec: &NetworkSpec,
    params: &ParameterStore,
    input: &[f64],
    output_gradient: &[f64],
) -> Result<Vec<f64>> {
    let trace = forward_traced(spec, params, input)?;
    let mut grads = vec![0.0; params.len()];
    backward_traced(spec, params, &trace, output_gradient, &mut grads)?;
    Ok(grads)
}

/// Backprop from a recorded trace, accumulating into `grads` (so a minibatch
/// can share one gradient buffer).
pub fn backward_traced(
    spec: &NetworkSpec,
    params: &ParameterStore,
    trace: &ForwardTrace,
    output_gradient: &[f64],
    grads: &mut [f64],
) -> Result<()> {
    let layers = spec.layers()?;
    if output_gradient.len() != spec.output_units {
        return Err(PdError::ShapeMismatch(format!(
            "output gradient has {} values, spec has {} outputs",
            output_gradient.len(),
            spec.output_units
        )));
    }
    if grads.len() != params.len() {
        return Err(PdError::ShapeMismatch("gradient buffer length mismatch".into()));
    }

    let mut offsets = Vec::with_capacity(layers.len());
    let mut offset = 0;
    for layer in &layers {
        offsets.push(offset);
        offset += layer.parameter_count();
    }

    let mut delta = output_gradient.to_vec();
    for (i, layer) in layers.iter().enumerate().rev() {
        let p = &params.values[offsets[i]..offsets[i] + layer.parameter_count()];
        let g = &mut grads[offsets[i]..offsets[i] + layer.parameter_count()];
        let input = &trace.activations[i];
        let output = &trace.activations[i + 1];
        delta = backprop_layer(layer, p, g, input, output, &delta);
    }
    Ok(())
}

/// Propagates `delta` (dL/d layer-output) through one layer: accumulates
/// weight/bias gradients and returns dL/d layer-input.
pub(crate) fn backprop_layer(
    layer: &LayerShape,
    params: &[f64],
    grads: &mut [f64],
    input: &[f64],
    output: &[f64],
    delta: &[f64],
) -> Vec<f64> {
    match *layer {
        LayerShape::Dense { in_units, out_units, relu } => {
            let weights = &params[..in_units * out_units];
            let (gw, gb) = grads.split_at_mut(in_units * out_units);
            let mut din = vec![0.0; in_units];
            for o in 0..out_units {
                // Rectifier subgradient: zero where the unit did not fire.
                let d = if relu && output[o] <= 0.0 { 0.0 } else { delta[o] };
                if d == 0.0 {
                    continue;
                }
                gb[o] += d;
                let wrow = &weights[o * in_units..(o + 1) * in_units];
                let grow = &mut gw[o * in_units..(o + 1) * in_units];
                for i in 0..in_units {
                    grow[i] += d * input[i];
                    din[i] += d * wrow[i];
                }
            }
            din
        }
        LayerShape::Conv {
            in_channels,
            in_height,
            in_width,
            filters,
            kernel,
            stride,
            out_height,
            out_width,
        } => {
            let ksq = kernel * kernel;
            let wlen = filters * in_channels * ksq;
            let weights = &params[..wlen];
            let (gw, gb) = grads.split_at_mut(wlen);
            let mut din = vec![0.0; in_channels * in_height * in_width];
            for f in 0..filters {
                let wf = &weights[f * in_channels * ksq..(f + 1) * in_channels * ksq];
                let gf = &mut gw[f * in_channels * ksq..(f + 1) * in_channels * ksq];
                for oy in 0..out_height {
                    for ox in 0..out_width {
                        let idx = f * out_height * out_width + oy * out_width + ox;
                        let d = if output[idx] <= 0.0 { 0.0 } else { delta[idx] };
                        if d == 0.0 {
                            continue;
                        }
                        gb[f] += d;
                        for c in 0..in_channels {
                            let base = c * in_height * in_width;
                            for ky in 0..kernel {
                                let row = base + (oy * stride + ky) * in_width + ox * stride;
                                let widx = c * ksq + ky * kernel;
                                for kx in 0..kernel {
                                    gf[widx + kx] += d * input[row + kx];
                                    din[row + kx] += d * wf[widx + kx];
                                }
                            }
                        }
                    }
                }
            }
            din
        }
    }
}
