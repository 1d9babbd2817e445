//! Spectral band features from multi-channel EEG recordings, and the online
//! min-max normalizer that maps them into the unit cube.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ClassId;

/// Electrode names of the 14-channel headset, in feature order.
pub const CHANNELS_14: [&str; 14] = [
    "AF3", "AF4", "F3", "F4", "F7", "F8", "FC5", "FC6", "T7", "T8", "P7", "P8", "O1", "O2",
];

pub const FEATURES_PER_CHANNEL: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Delta,
    Theta,
    Alpha,
    Beta,
    Gamma,
}

impl Band {
    pub const ALL: [Band; 5] = [Band::Delta, Band::Theta, Band::Alpha, Band::Beta, Band::Gamma];

    pub fn name(self) -> &'static str {
        match self {
            Band::Delta => "delta",
            Band::Theta => "theta",
            Band::Alpha => "alpha",
            Band::Beta => "beta",
            Band::Gamma => "gamma",
        }
    }

    pub fn parse(s: &str) -> Option<Band> {
        Band::ALL.into_iter().find(|b| b.name().eq_ignore_ascii_case(s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    Max,
    Mean,
}

impl Statistic {
    pub fn name(self) -> &'static str {
        match self {
            Statistic::Max => "max",
            Statistic::Mean => "mean",
        }
    }

    pub fn parse(s: &str) -> Option<Statistic> {
        [Statistic::Max, Statistic::Mean]
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s))
    }
}

/// Frequency range of a band in Hz. The upper edge is exclusive unless
/// `closed` is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandRange {
    pub band: Band,
    pub lo: f64,
    pub hi: f64,
    pub closed: bool,
}

impl BandRange {
    pub fn contains(&self, f: f64) -> bool {
        f >= self.lo && (f < self.hi || (self.closed && f == self.hi))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandTable {
    pub bands: Vec<BandRange>,
}

impl Default for BandTable {
    /// Delta 1-4, Theta 4-8, Alpha 8-13, Beta 13-30, Gamma 30-64 Hz.
    fn default() -> Self {
        let edges = [1.0, 4.0, 8.0, 13.0, 30.0, 64.0];
        let bands = Band::ALL
            .iter()
            .enumerate()
            .map(|(i, &band)| BandRange {
                band,
                lo: edges[i],
                hi: edges[i + 1],
                closed: band == Band::Gamma,
            })
            .collect();
        BandTable { bands }
    }
}

impl BandTable {
    pub fn band_of(&self, f: f64) -> Option<Band> {
        self.bands.iter().find(|r| r.contains(f)).map(|r| r.band)
    }
}

/// A multi-channel recording carrying one weak label for all its windows.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub subject: String,
    pub game: String,
    pub label: ClassId,
    pub sample_rate: f64,
    pub channel_names: Vec<String>,
    /// One series per channel, all of equal length.
    pub channels: Vec<Vec<f64>>,
}

impl Recording {
    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return Err(Error::Invalid(format!("sample rate {} must be positive", self.sample_rate)));
        }
        if self.channels.len() != self.channel_names.len() {
            return Err(Error::Invalid("channel names do not match channel data".into()));
        }
        let n = self.len();
        if self.channels.iter().any(|c| c.len() != n) {
            return Err(Error::Invalid("channels differ in length".into()));
        }
        Ok(())
    }

    /// Keeps only the named channels, in the given order.
    pub fn select_channels(&self, names: &[String]) -> Result<Recording> {
        let mut channels = Vec::with_capacity(names.len());
        let mut channel_names = Vec::with_capacity(names.len());
        for name in names {
            let i = self
                .channel_names
                .iter()
                .position(|c| c.eq_ignore_ascii_case(name))
                .ok_or_else(|| Error::MissingChannel(name.clone()))?;
            channels.push(self.channels[i].clone());
            channel_names.push(self.channel_names[i].clone());
        }
        Ok(Recording {
            channels,
            channel_names,
            ..self.clone()
        })
    }
}

/// Back-to-back non-overlapping windows of fixed length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub length_seconds: f64,
}

impl WindowSpec {
    pub fn samples(&self, rate: f64) -> Result<usize> {
        if self.length_seconds.is_nan() || self.length_seconds <= 0.0 {
            return Err(Error::Invalid(format!("window length {} must be positive", self.length_seconds)));
        }
        let n = (self.length_seconds * rate).round() as usize;
        if n < 2 {
            return Err(Error::WindowTooShort(n));
        }
        Ok(n)
    }
}

/// Sample ranges of the windows; a trailing partial window is dropped.
pub fn segment(len: usize, window: usize) -> Result<Vec<std::ops::Range<usize>>> {
    if window < 2 {
        return Err(Error::WindowTooShort(window));
    }
    if window > len {
        return Err(Error::WindowTooLong {
            window,
            available: len,
        });
    }
    Ok((0..len / window).map(|k| k * window..(k + 1) * window).collect())
}

/// Single-sided amplitude spectrum. Bin `k` sits at `k * resolution` Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub resolution: f64,
    pub magnitudes: Vec<f64>,
}

impl Spectrum {
    pub fn frequency(&self, k: usize) -> f64 {
        k as f64 * self.resolution
    }
}

/// Reusable FFT plans for spectra of a fixed window length.
pub struct SpectrumAnalyzer {
    planner: FftPlanner<f64>,
}

impl Default for SpectrumAnalyzer {
    fn default() -> Self {
        SpectrumAnalyzer {
            planner: FftPlanner::new(),
        }
    }
}

impl SpectrumAnalyzer {
    /// Amplitude spectrum of `samples` with the mean removed and no taper.
    /// A sinusoid of amplitude `A` on a bin shows up with magnitude `A`.
    pub fn magnitude_spectrum(&mut self, samples: &[f64], rate: f64) -> Result<Spectrum> {
        let n = samples.len();
        if n < 2 {
            return Err(Error::WindowTooShort(n));
        }
        if let Some((index, &value)) = samples.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let mut buf: Vec<Complex<f64>> = samples.iter().map(|&s| Complex::new(s - mean, 0.0)).collect();
        self.planner.plan_fft_forward(n).process(&mut buf);

        let half = n / 2;
        let scale = 1.0 / n as f64;
        let magnitudes = (0..=half)
            .map(|k| {
                let m = buf[k].norm() * scale;
                if k == 0 || (n.is_multiple_of(2) && k == half) {
                    m
                } else {
                    2.0 * m
                }
            })
            .collect();
        Ok(Spectrum {
            resolution: rate / n as f64,
            magnitudes,
        })
    }
}

pub fn magnitude_spectrum(samples: &[f64], rate: f64) -> Result<Spectrum> {
    SpectrumAnalyzer::default().magnitude_spectrum(samples, rate)
}

/// `(max, mean)` magnitude per band, in table order.
pub fn band_features(spectrum: &Spectrum, bands: &BandTable) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * bands.bands.len());
    for range in &bands.bands {
        let mut max = f64::NEG_INFINITY;
        let mut sum = 0.0;
        let mut count = 0usize;
        for (k, &m) in spectrum.magnitudes.iter().enumerate() {
            if range.contains(spectrum.frequency(k)) {
                max = max.max(m);
                sum += m;
                count += 1;
            }
        }
        if count == 0 {
            return Err(Error::EmptyBand {
                band: range.band.name(),
            });
        }
        out.push(max);
        out.push(sum / count as f64);
    }
    Ok(out)
}

/// Name of feature `(channel, band, statistic)`, e.g. `AF3_alpha_max`.
pub fn feature_name(channel: &str, band: Band, stat: Statistic) -> String {
    format!("{channel}_{}_{}", band.name(), stat.name())
}

/// Column names of a feature vector, channel-major.
pub fn feature_names(channels: &[String], bands: &BandTable) -> Vec<String> {
    channels
        .iter()
        .flat_map(|c| {
            bands.bands.iter().flat_map(move |r| {
                [Statistic::Max, Statistic::Mean]
                    .into_iter()
                    .map(move |s| feature_name(c, r.band, s))
            })
        })
        .collect()
}

/// One feature row per window of a recording.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowFeatures {
    pub subject: String,
    pub game: String,
    pub window: usize,
    pub label: ClassId,
    pub values: Vec<f64>,
}

/// Splits a recording into windows and extracts band features per channel.
pub fn extract_recording(recording: &Recording, spec: WindowSpec, bands: &BandTable) -> Result<Vec<WindowFeatures>> {
    recording.validate()?;
    let window = spec.samples(recording.sample_rate)?;
    let ranges = segment(recording.len(), window)?;
    let mut analyzer = SpectrumAnalyzer::default();
    let mut rows = Vec::with_capacity(ranges.len());
    for (w, range) in ranges.into_iter().enumerate() {
        let mut values = Vec::with_capacity(recording.channels.len() * 2 * bands.bands.len());
        for channel in &recording.channels {
            let spectrum = analyzer.magnitude_spectrum(&channel[range.clone()], recording.sample_rate)?;
            values.extend(band_features(&spectrum, bands)?);
        }
        rows.push(WindowFeatures {
            subject: recording.subject.clone(),
            game: recording.game.clone(),
            window: w,
            label: recording.label,
            values,
        });
    }
    Ok(rows)
}

/// Running per-feature min and max; maps values into `[0, 1]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Normalizer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Widens the running range with `x`, then rescales `x` into it.
    /// Features whose range is still degenerate map to 0.5.
    pub fn normalize(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        if let Some((index, &value)) = x.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        if self.min.is_empty() {
            self.min = x.to_vec();
            self.max = x.to_vec();
        } else if self.min.len() != x.len() {
            return Err(Error::DimensionMismatch {
                expected: self.min.len(),
                actual: x.len(),
            });
        }
        Ok(x.iter()
            .enumerate()
            .map(|(j, &v)| {
                self.min[j] = self.min[j].min(v);
                self.max[j] = self.max[j].max(v);
                let range = self.max[j] - self.min[j];
                if range > 0.0 {
                    ((v - self.min[j]) / range).clamp(0.0, 1.0)
                } else {
                    0.5
                }
            })
            .collect())
    }
}
