//! Numerical kernels shared by the trend and rate chains.

pub mod hilbert;
pub mod iir;
pub mod savgol;
pub mod smooth;
pub mod spectral;
pub mod wavelet;
pub mod xcorr;

pub use hilbert::hilbert_envelope;
pub use iir::{design_iir, filtfilt, FilterBand, FilterDesign, FilterFamily, IirFilter};
pub use savgol::{odd_window, savgol};
pub use smooth::{ema, median_filter, moving_average};
pub use spectral::{parabolic_peak, welch_psd, Peak, Spectrum, Welch};
pub use wavelet::dwt_approx;
pub use xcorr::{xcorr_normalized, CrossCorrelation};
