//! Vector-valued neural networks (V-nets) over finite-dimensional real algebras.
//!
//! An [`Algebra`] is defined by its structure constants. On top of it this
//! crate provides:
//!
//! - element arithmetic and property analysis ([`Algebra::analyze`]);
//! - matrices over the algebra and their real emulation through
//!   `M_L(A) = Σ_k A_k ⊗ P_{k:}ᵀ` ([`VMatrix`]);
//! - dense and convolutional layers with split activations, each with a
//!   direct and an emulated forward pass ([`DenseLayer`], [`ConvLayer`]);
//! - multilayer perceptrons, gradient-descent training through the emulated
//!   network and a small function-approximation demo ([`Vmlp`], [`training`]);
//! - JSON documents for algebras, matrices and models ([`io`]).
//!
//! ```
//! use vnet_core::{Algebra, BuiltinAlgebra, VElement};
//!
//! let q = Algebra::builtin(BuiltinAlgebra::Quaternion);
//! let i = VElement::basis(4, 1).unwrap();
//! let j = VElement::basis(4, 2).unwrap();
//! assert_eq!(q.multiply(&i, &j).unwrap().coords(), &[0.0, 0.0, 0.0, 1.0]);
//! ```

pub mod activation;
pub mod algebra;
pub mod conv;
pub mod dense;
pub mod element;
pub mod error;
pub mod io;
pub mod linalg;
pub mod model;
pub mod training;
pub mod vmatrix;

pub use activation::SplitActivation;
pub use algebra::{Algebra, AlgebraReport, BuiltinAlgebra, DEFAULT_TOLERANCE};
pub use conv::{split_maxpool, ConvLayer, RealFilterBank, RealImage, VImage};
pub use dense::{dense_param_counts, ComponentLayer, DenseLayer, ParamCounts};
pub use element::VElement;
pub use error::{Error, Result};
pub use model::{ModelOutput, OutputMode, OutputSpec, Vmlp};
pub use training::{
    approximation_demo, loss_and_grad, train, BatchMode, Dataset, DemoConfig, DemoInit,
    DemoOutcome, DemoTarget, FitReport, Gradients, Loss, TrainConfig,
};
pub use vmatrix::{ComponentStack, VMatrix};

pub use nalgebra::DMatrix;
