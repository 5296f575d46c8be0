//! Feed-forward function approximator with explicit float64 parameters.
//!
//! Networks are a stack of valid-padding convolutions followed by dense
//! layers, rectifier nonlinearities between consecutive layers, and a linear
//! output (one unit per action). Softmax is applied only inside losses and
//! policies, never in the network itself.

mod checkpoint;
mod forward;
mod loss;
mod params;
mod rmsprop;
mod spec;

pub use checkpoint::{load_checkpoint, read_checkpoint_bytes, save_checkpoint, write_checkpoint_bytes};
pub(crate) use forward::{apply_layer, backprop_layer, check_input};
pub use forward::{backward, backward_traced, forward, forward_traced, ForwardTrace};
pub use loss::{
    argmax_tie_low, log_softmax, loss_kl, loss_mse, loss_nll, softmax, softmax_temperature,
    ProbVector, QVector,
};
pub use params::{init_parameters, ParameterStore};
pub use rmsprop::{rmsprop_step, RmsPropState};
pub use spec::{count_parameters, ConvSpec, LayerShape, NetworkSpec};
