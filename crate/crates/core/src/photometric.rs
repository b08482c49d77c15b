//! Whole-frame brightness baselines: constant reduction and uniform
//! brightness jitter. Application probability lives in the pipeline policy.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::ImageBuffer;
use crate::shadow::{scale_channel, ShadowFactor};

#[derive(Debug, Error, PartialEq)]
#[error("brightness range [{low}, {high}] must satisfy 0 < low <= high <= 1")]
pub struct JitterRangeError {
    pub low: f64,
    pub high: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RangeFields", into = "RangeFields")]
pub struct BrightnessJitterRange {
    low: f64,
    high: f64,
}

#[derive(Serialize, Deserialize)]
struct RangeFields {
    low: f64,
    high: f64,
}

impl TryFrom<RangeFields> for BrightnessJitterRange {
    type Error = JitterRangeError;

    fn try_from(f: RangeFields) -> Result<Self, Self::Error> {
        Self::new(f.low, f.high)
    }
}

impl From<BrightnessJitterRange> for RangeFields {
    fn from(r: BrightnessJitterRange) -> Self {
        RangeFields {
            low: r.low,
            high: r.high,
        }
    }
}

impl BrightnessJitterRange {
    pub fn new(low: f64, high: f64) -> Result<Self, JitterRangeError> {
        if low > 0.0 && low <= high && high <= 1.0 {
            Ok(Self { low, high })
        } else {
            Err(JitterRangeError { low, high })
        }
    }

    pub fn low(&self) -> f64 {
        self.low
    }

    pub fn high(&self) -> f64 {
        self.high
    }

    /// Map a uniform deviate in `[0, 1)` onto the range. Deviates outside
    /// that interval are clamped.
    pub fn factor_for(&self, draw: f64) -> ShadowFactor {
        let draw = draw.clamp(0.0, 1.0);
        let f = (self.low + draw * (self.high - self.low)).clamp(self.low, self.high);
        ShadowFactor::new(f).expect("range bounds lie in (0, 1]")
    }
}

pub fn reduce_brightness(img: &ImageBuffer, factor: ShadowFactor) -> ImageBuffer {
    let mut out = img.clone();
    if factor.get() == 1.0 {
        return out;
    }
    for px in out.pixels_mut() {
        for c in px {
            *c = scale_channel(*c, factor.get());
        }
    }
    out
}

pub fn jitter_brightness(img: &ImageBuffer, range: &BrightnessJitterRange, draw: f64) -> ImageBuffer {
    reduce_brightness(img, range.factor_for(draw))
}
