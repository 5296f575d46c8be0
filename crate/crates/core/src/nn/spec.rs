//! Network architecture description and exact parameter counting.

use crate::{PdError, Result};

/// One convolutional layer: `filters` kernels of size `kernel`x`kernel`
/// applied at `stride`, no padding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvSpec {
    pub filters: usize,
    pub kernel: usize,
    pub stride: usize,
}

/// Layered architecture: input volume, conv stack, dense stack, linear output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkSpec {
    pub input_channels: usize,
    pub input_height: usize,
    pub input_width: usize,
    pub conv_layers: Vec<ConvSpec>,
    pub dense_layers: Vec<usize>,
    pub output_units: usize,
}

/// Resolved per-layer shape, in forward order. The output layer is the last
/// `Dense` entry with `relu == false`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerShape {
    Conv {
        in_channels: usize,
        in_height: usize,
        in_width: usize,
        filters: usize,
        kernel: usize,
        stride: usize,
        out_height: usize,
        out_width: usize,
    },
    Dense {
        in_units: usize,
        out_units: usize,
        relu: bool,
    },
}

impl LayerShape {
    pub fn weight_count(&self) -> usize {
        match *self {
            LayerShape::Conv {
                in_channels,
                filters,
                kernel,
                ..
            } => filters * in_channels * kernel * kernel,
            LayerShape::Dense {
                in_units, out_units, ..
            } => in_units * out_units,
        }
    }

    pub fn bias_count(&self) -> usize {
        match *self {
            LayerShape::Conv { filters, .. } => filters,
            LayerShape::Dense { out_units, .. } => out_units,
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.weight_count() + self.bias_count()
    }

    /// Fan-in feeding each output unit, used for weight initialization.
    pub fn fan_in(&self) -> usize {
        match *self {
            LayerShape::Conv {
                in_channels, kernel, ..
            } => in_channels * kernel * kernel,
            LayerShape::Dense { in_units, .. } => in_units,
        }
    }

    pub fn output_len(&self) -> usize {
        match *self {
            LayerShape::Conv {
                filters,
                out_height,
                out_width,
                ..
            } => filters * out_height * out_width,
            LayerShape::Dense { out_units, .. } => out_units,
        }
    }
}

impl NetworkSpec {
    /// Dense-only network: `input -> dense_layers -> output`.
    pub fn dense(input_units: usize, dense_layers: Vec<usize>, output_units: usize) -> Self {
        NetworkSpec {
            input_channels: input_units,
            input_height: 1,
            input_width: 1,
            conv_layers: Vec::new(),
            dense_layers,
            output_units,
        }
    }

    pub fn input_len(&self) -> usize {
        self.input_channels * self.input_height * self.input_width
    }

    /// Checks positivity, stride bounds, and that every conv layer leaves a
    /// strictly positive spatial extent.
    pub fn validate(&self) -> Result<()> {
        self.layers().map(|_| ())
    }

    /// Resolves the full layer list (conv stack, flattening, dense stack,
    /// linear output), validating the spec along the way.
    pub fn layers(&self) -> Result<Vec<LayerShape>> {
        if self.input_channels == 0 || self.input_height == 0 || self.input_width == 0 {
            return Err(PdError::InvalidSpec("input dimensions must be positive".into()));
        }
        if self.output_units == 0 {
            return Err(PdError::InvalidSpec("output_units must be positive".into()));
        }
        let mut layers = Vec::with_capacity(self.conv_layers.len() + self.dense_layers.len() + 1);
        let (mut c, mut h, mut w) = (self.input_channels, self.input_height, self.input_width);
        for (i, conv) in self.conv_layers.iter().enumerate() {
            if conv.filters == 0 || conv.kernel == 0 || conv.stride == 0 {
                return Err(PdError::InvalidSpec(format!(
                    "conv layer {i}: filters, kernel and stride must be positive"
                )));
            }
            if conv.stride > conv.kernel {
                return Err(PdError::InvalidSpec(format!(
                    "conv layer {i}: stride {} exceeds kernel {}",
                    conv.stride, conv.kernel
                )));
            }
            if conv.kernel > h || conv.kernel > w {
                return Err(PdError::InvalidSpec(format!(
                    "conv layer {i}: kernel {} larger than input {}x{}",
                    conv.kernel, h, w
                )));
            }
            let out_h = (h - conv.kernel) / conv.stride + 1;
            let out_w = (w - conv.kernel) / conv.stride + 1;
            layers.push(LayerShape::Conv {
                in_channels: c,
                in_height: h,
                in_width: w,
                filters: conv.filters,
                kernel: conv.kernel,
                stride: conv.stride,
                out_height: out_h,
                out_width: out_w,
            });
            c = conv.filters;
            h = out_h;
            w = out_w;
        }
        let mut units = c * h * w;
        for (i, &n) in self.dense_layers.iter().enumerate() {
            if n == 0 {
                return Err(PdError::InvalidSpec(format!("dense layer {i}: zero units")));
            }
            layers.push(LayerShape::Dense {
                in_units: units,
                out_units: n,
                relu: true,
            });
            units = n;
        }
        layers.push(LayerShape::Dense {
            in_units: units,
            out_units: self.output_units,
            relu: false,
        });
        Ok(layers)
    }
}

/// Exact trainable-parameter count (weights plus biases) for a valid spec.
pub fn count_parameters(spec: &NetworkSpec) -> Result<usize> {
    Ok(spec.layers()?.iter().map(LayerShape::parameter_count).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arch(convs: [(usize, usize, usize); 3], dense: usize, out: usize) -> NetworkSpec {
        NetworkSpec {
            input_channels: 4,
            input_height: 84,
            input_width: 84,
            conv_layers: convs
                .iter()
                .map(|&(f, k, s)| ConvSpec { filters: f, kernel: k, stride: s })
                .collect(),
            dense_layers: vec![dense],
            output_units: out,
        }
    }

    #[test]
    fn reference_architecture_counts() {
        // Published single-task architectures with 18 actions.
        let teacher = arch([(32, 8, 4), (64, 4, 2), (64, 3, 1)], 512, 18);
        assert_eq!(count_parameters(&teacher).unwrap(), 1_693_362);

        let quarter = arch([(16, 8, 4), (32, 4, 2), (32, 3, 1)], 256, 18);
        assert_eq!(count_parameters(&quarter).unwrap(), 427_874);

        let seven_pct = arch([(16, 8, 4), (16, 4, 2), (16, 3, 1)], 128, 18);
        assert_eq!(count_parameters(&seven_pct).unwrap(), 113_346);

        let four_pct = arch([(16, 8, 4), (16, 4, 2), (16, 3, 1)], 64, 18);
        assert_eq!(count_parameters(&four_pct).unwrap(), 61_954);
    }

    #[test]
    fn minimal_dense_network_has_weight_and_bias() {
        let spec = NetworkSpec::dense(1, vec![], 1);
        assert_eq!(count_parameters(&spec).unwrap(), 2);
    }

    #[test]
    fn conv_output_shapes() {
        let teacher = arch([(32, 8, 4), (64, 4, 2), (64, 3, 1)], 512, 18);
        let layers = teacher.layers().unwrap();
        match layers[0] {
            LayerShape::Conv { out_height, out_width, .. } => {
                assert_eq!((out_height, out_width), (20, 20));
            }
            _ => panic!("expected conv"),
        }
        match layers[2] {
            LayerShape::Conv { out_height, out_width, .. } => {
                assert_eq!((out_height, out_width), (7, 7));
            }
            _ => panic!("expected conv"),
        }
        match layers[3] {
            LayerShape::Dense { in_units, .. } => assert_eq!(in_units, 64 * 7 * 7),
            _ => panic!("expected dense"),
        }
    }

    #[test]
    fn rejects_collapsed_spatial_dims() {
        let spec = NetworkSpec {
            input_channels: 1,
            input_height: 4,
            input_width: 4,
            conv_layers: vec![ConvSpec { filters: 2, kernel: 5, stride: 1 }],
            dense_layers: vec![],
            output_units: 2,
        };
        assert!(matches!(count_parameters(&spec), Err(PdError::InvalidSpec(_))));
    }

    #[test]
    fn rejects_stride_above_kernel() {
        let spec = NetworkSpec {
            input_channels: 1,
            input_height: 8,
            input_width: 8,
            conv_layers: vec![ConvSpec { filters: 2, kernel: 2, stride: 3 }],
            dense_layers: vec![],
            output_units: 2,
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn rejects_zero_counts() {
        assert!(NetworkSpec::dense(1, vec![0], 1).validate().is_err());
        assert!(NetworkSpec::dense(1, vec![1], 0).validate().is_err());
        assert!(NetworkSpec::dense(0, vec![1], 1).validate().is_err());
    }
}
