//! Stochastic cubic regularization for nonconvex optimization.
//!
//! The optimizer touches second-order information only through
//! Hessian-vector products. Each outer iteration averages a minibatch of
//! stochastic gradients, freezes a minibatch Hessian operator, approximately
//! minimizes the resulting cubic model with a gradient-descent subsolver, and
//! stops once the model predicts too little decrease, at which point a final
//! high-precision solve certifies an approximate local minimum.
//!
//! Modules:
//! - [`oracle`]: stochastic problems, oracle-call accounting, benchmark problems
//! - [`submodel`]: the cubic model and an exact dense reference solver
//! - [`subsolver`]: Cauchy-step / perturbed gradient-descent subsolver and the final solver
//! - [`scr`]: the outer loop and minibatch sizing
//! - [`baselines`]: SGD and AdaGrad under the same accounting
//! - [`harness`]: grid search, CSV output, best-configuration selection

pub mod baselines;
pub mod error;
pub mod harness;
pub mod operator;
pub mod oracle;
pub mod parallel;
pub mod point;
pub mod rng;
pub mod scr;
pub mod submodel;
pub mod subsolver;
pub mod trace;

pub use error::{Error, Result};
pub use point::Point;
