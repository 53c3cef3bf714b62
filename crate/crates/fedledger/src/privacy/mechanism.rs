use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fl::ParameterVector;

use super::PrivacyError;

/// Noise multiplier for the Gaussian mechanism,
/// sigma = sqrt(2 ln(1.25/delta)) / epsilon.
///
/// This is the classical calibration; it is only a proven bound for
/// epsilon <= 1 but is accepted for any positive epsilon here. The standard
/// deviation actually added to a release with sensitivity S is S * sigma.
pub fn calibrate_sigma(epsilon: f64, delta: f64) -> Result<f64, PrivacyError> {
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(PrivacyError::InvalidEpsilon(epsilon));
    }
    if !delta.is_finite() || delta <= 0.0 || delta >= 1.0 {
        return Err(PrivacyError::InvalidDelta(delta));
    }
    Ok((2.0 * (1.25 / delta).ln()).sqrt() / epsilon)
}

/// Absolute slack on the clipping threshold. Accepting norms this close to
/// the bound makes `clip` idempotent bit for bit: a rescaled vector whose
/// recomputed norm lands an ulp past the bound is not rescaled again.
const CLIP_NORM_SLACK: f64 = 1e-12;

/// Scales `v` down to `clip_norm` when its L2 norm exceeds it; otherwise
/// returns it untouched. The output norm is at most `clip_norm` plus
/// [`CLIP_NORM_SLACK`].
pub fn clip(v: &ParameterVector, clip_norm: f64) -> Result<ParameterVector, PrivacyError> {
    if !clip_norm.is_finite() || clip_norm <= 0.0 {
        return Err(PrivacyError::InvalidClipNorm(clip_norm));
    }
    v.check_finite().map_err(|_| PrivacyError::NonFinite { context: "clip input".into() })?;
    let norm = v.l2_norm();
    if norm <= clip_norm + CLIP_NORM_SLACK {
        return Ok(v.clone());
    }
    let scale = clip_norm / norm;
    let mut out = v.clone();
    for w in &mut out.values {
        *w *= scale;
    }
    Ok(out)
}

/// One standard normal draw by the Box-Muller transform, cosine branch.
/// Consumes exactly two uniforms; the first is reflected to (0, 1] so the
/// logarithm is always finite.
pub(crate) fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1 = 1.0 - rng.random::<f64>();
    let u2 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Adds independent N(0, noise_std^2) noise to every component, drawn from a
/// ChaCha8 generator seeded with `seed`. A zero `noise_std` returns the
/// input bit for bit.
pub fn add_gaussian_noise(
    v: &ParameterVector,
    noise_std: f64,
    seed: u64,
) -> Result<ParameterVector, PrivacyError> {
    if !noise_std.is_finite() || noise_std < 0.0 {
        return Err(PrivacyError::InvalidNoiseStd(noise_std));
    }
    v.check_finite().map_err(|_| PrivacyError::NonFinite { context: "noise input".into() })?;
    if noise_std == 0.0 {
        return Ok(v.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = v.clone();
    for w in &mut out.values {
        *w += noise_std * standard_normal(&mut rng);
    }
    Ok(out)
}
