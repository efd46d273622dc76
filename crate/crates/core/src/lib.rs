//! Computational color constancy: illuminant estimators, CIEDE2000 and
//! CIELAB conversions, a competitor-based psychophysical readout (CCI),
//! a perceptual training loss, model–human agreement statistics, and a
//! synthetic scene generator for cue-isolation experiments.

pub mod agreement;
pub mod cli;
pub mod colorspace;
pub mod estimators;
pub mod harness;
pub mod image;
pub mod numeric;
pub mod pbcloss;
pub mod psychophys;
pub mod scenegen;
