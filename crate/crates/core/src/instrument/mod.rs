// SPDX-License-Identifier: Apache-2.0

//! The apparatus: pulse timelines switched through AOMs, the photon detection
//! chain, and Monte Carlo generation of time-tagged photon streams.

mod aom;
mod detector;
mod experiment;
mod rng;
mod sampler;
mod stream;
mod timeline;

pub use aom::{envelope, AomModel, RampShape};
pub use detector::DetectorModel;
pub use experiment::{expected_rate, run_experiment, Experiment, ExperimentRun, InitialState, RateModel};
pub use rng::{derive_seed, ShotRng};
pub use sampler::{simulate_shot, thin_into, BoundedWindow};
pub use stream::{TimeTag, TimeTagStream};
pub use timeline::{Channel, Cooling, Protocol, ProtocolTiming, PulseSegment, PulseTimeline, Window};
