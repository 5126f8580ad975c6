//! Contactless physiological signals from thermal facial video.
//!
//! The extraction path runs frames and landmarks through ROI tracking and
//! spatial aggregation into per-region traces, resamples them to the
//! processing rate, and derives a 1 Hz EDA-like trend, heart rate and
//! breathing rate. The evaluation path scores estimates against contact
//! references and sweeps the ROI × method grid over many sessions.
//!
//! Sample buffers are generic over [`Real`] (`f32` or `f64`). Times, rates
//! and filter coefficients are always `f64`.
//!
//! ```
//! use thermosig::{extract_eda_trend, synth, to_processing_rate, EdaMethod, PipelineConfig};
//!
//! let session = synth::gen_session(&synth::SyntheticSpec::default()).unwrap();
//! let traces = to_processing_rate(&session.traces, &PipelineConfig::default()).unwrap();
//! let trend = extract_eda_trend(&traces[0], &EdaMethod::BUTTERWORTH).unwrap();
//! assert_eq!(trend.rate_hz, 1.0);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aggregate;
pub mod cardio;
pub mod config;
pub mod dsp;
pub mod eda;
pub mod error;
pub mod io;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod resample;
pub mod roi;
pub mod scalar;
pub mod sweep;
pub mod synth;

pub use aggregate::{aggregate_patch, AggregationKind};
pub use cardio::{estimate_br, estimate_hr, omit_fuse, RateEstimatorConfig, RateOutput};
pub use config::RunConfig;
pub use eda::{enumerate_methods, extract_eda_trend, EdaMethod};
pub use error::{Error, Result};
pub use metrics::{eda_agreement, rate_agreement, AgreementReport, Polarity, RateAgreement};
pub use model::{
    BiosignalEstimate, BiosignalKind, LandmarkFrame, LandmarkTrack, ReferenceSignal, RoiKind, RoiTrace, SessionMeta,
    ThermalFrameSequence,
};
pub use pipeline::{extract_roi_traces, to_processing_rate, PipelineConfig};
pub use resample::ResampleMethod;
pub use scalar::Real;
pub use sweep::{run_sweep, SessionData, SweepConfig, SweepResult};

/// Library version, recorded in run provenance.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type Trace = RoiTrace<f64>;
pub type Trace32 = RoiTrace<f32>;
pub type Estimate = BiosignalEstimate<f64>;
pub type Estimate32 = BiosignalEstimate<f32>;
