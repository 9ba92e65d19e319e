//! Bit-exact simulation of fixed-point CNN inference hardware.
//!
//! * [`fxcore`]: fixed-point words, rounding and result-width adjustment.
//! * [`engine`]: CNN layers in real and fixed-point arithmetic, with the
//!   RMULT and RMAC adjustment positions.
//! * [`model_io`]: manifests, tensors, MNIST/CIFAR-10 readers, model
//!   quantization and Norm scale calibration.
//! * [`harness`]: accuracy evaluation, configuration sweeps and reports.
//! * [`hwcost`]: published area/power figures for the rounding units.

pub mod fxcore;
pub mod engine;
pub mod model_io;
pub mod harness;
pub mod hwcost;
