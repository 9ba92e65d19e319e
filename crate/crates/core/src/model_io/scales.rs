use serde::{Deserialize, Serialize};

use super::{preprocess_real, Dataset, ModelError, ModelManifest};
use crate::engine::{ExecContext, MacPosition, RealMac, Tensor, DEFAULT_NORM_OVERFLOW_BITS};
use crate::fxcore::RngStream;

/// Images used for activation statistics, at most.
pub const CALIBRATION_IMAGES: usize = 512;

/// Power-of-two scales of one weighted layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerScale {
    /// Index of the layer in the manifest.
    pub layer: usize,
    /// Inputs are held as `x * 2^input_exp`.
    pub input_exp: i32,
    /// Weights are stored as `w * 2^weight_exp`.
    pub weight_exp: i32,
    /// Norm shift: the output window sits this many bits above the natural
    /// FR position. May be negative.
    pub shift: i32,
}

/// Per-layer scaling for the Norm method, for one integer width and one
/// adjustment position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScalePlan {
    pub int_bits: u32,
    pub position: MacPosition,
    /// Overflow bits the shifts leave room for; the datapath adds the
    /// configured Norm overflow bits back on top of each shift.
    pub overflow_reserve: u32,
    pub layers: Vec<LayerScale>,
    /// Exponent of the final logits.
    pub output_exp: i32,
}

impl ScalePlan {
    pub fn layer(&self, index: usize) -> Option<&LayerScale> {
        self.layers.iter().find(|s| s.layer == index)
    }

    pub fn input_exp(&self) -> i32 {
        self.layers.first().map_or(0, |s| s.input_exp)
    }
}

/// Largest magnitudes seen in the real-valued model.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationProfile {
    /// Weighted layer index, max |weight|, max |input| over the sample.
    pub layers: Vec<(usize, f64, f64)>,
    /// Max |logit| over the sample.
    pub output_max: f64,
    pub images: usize,
}

/// Exponent `e` that puts `max * 2^e` in `[2^(int_bits-2), 2^(int_bits-1))`,
/// so the top integer bit below the sign is used. `max` must be positive.
pub fn scale_exponent(max: f64, int_bits: u32) -> i32 {
    debug_assert!(max > 0.0 && max.is_finite());
    // max = m * 2^ex with m in [0.5, 1)
    let mut ex = max.log2().floor() as i32 + 1;
    while (ex as f64 - 1.0).exp2() > max {
        ex -= 1;
    }
    while (ex as f64).exp2() <= max {
        ex += 1;
    }
    int_bits as i32 - 1 - ex
}

/// Run the real model over up to [`CALIBRATION_IMAGES`] samples and record
/// weight and activation maxima for every weighted layer.
pub fn profile_activations(model: &ModelManifest, samples: &Dataset) -> Result<ActivationProfile, ModelError> {
    let n = samples.len().min(CALIBRATION_IMAGES);
    if n == 0 {
        return Err(ModelError::EmptySample);
    }
    let weighted = model.weighted_layers();
    let mut weight_max = Vec::with_capacity(weighted.len());
    for &i in &weighted {
        let t = model.layers[i].tensors.as_ref().expect("weighted");
        let m = t.weights.iter().fold(0f64, |m, &w| m.max((w as f64).abs()));
        if m == 0.0 {
            return Err(ModelError::ZeroTensor { layer: i });
        }
        weight_max.push(m);
    }
    let net = model.build_network(|_, t| {
        Ok((RealMac, t.weights.iter().map(|&v| v as f64).collect(), t.bias.iter().map(|&v| v as f64).collect()))
    })?;
    let mut input_max = vec![0f64; weighted.len()];
    let mut output_max = 0f64;
    let mut ctx = ExecContext::new(RngStream::new(0));
    let shape = samples.shape().to_vec();
    for i in 0..n {
        let mut x: Tensor<f64> = preprocess_real(samples.image(i), &shape)?;
        for (li, layer) in net.layers().iter().enumerate() {
            if let Some(k) = weighted.iter().position(|&w| w == li) {
                input_max[k] = x.data().iter().fold(input_max[k], |m, v| m.max(v.abs()));
            }
            x = layer.forward(x, &mut ctx)?;
        }
        output_max = x.data().iter().fold(output_max, |m, v| m.max(v.abs()));
    }
    Ok(ActivationProfile {
        layers: weighted.into_iter().zip(weight_max).zip(input_max).map(|((l, w), x)| (l, w, x)).collect(),
        output_max,
        images: n,
    })
}

fn activation_exp(max: f64, int_bits: u32) -> i32 {
    if max > 0.0 {
        scale_exponent(max, int_bits)
    } else {
        0
    }
}

/// Derive a plan from measured maxima.
///
/// Layer k holds inputs at `2^ex(k)` and weights at `2^ew(k)`, so its exact
/// sum carries `2^(ex(k) + ew(k))`. The shift brings that to the next layer's
/// input scale `ex(k+1)`, less the reserved overflow bits under RMAC:
/// `shift = ex(k) + ew(k) - ex(k+1) - reserve`.
pub fn plan_from_profile(profile: &ActivationProfile, int_bits: u32, position: MacPosition) -> ScalePlan {
    let reserve = match position {
        MacPosition::Rmac => DEFAULT_NORM_OVERFLOW_BITS,
        MacPosition::Rmult => 0,
    };
    let input_exps: Vec<i32> = profile.layers.iter().map(|&(_, _, x)| activation_exp(x, int_bits)).collect();
    let output_exp = activation_exp(profile.output_max, int_bits);
    let layers = profile
        .layers
        .iter()
        .enumerate()
        .map(|(k, &(layer, w, _))| {
            let weight_exp = scale_exponent(w, int_bits);
            let next = input_exps.get(k + 1).copied().unwrap_or(output_exp);
            LayerScale {
                layer,
                input_exp: input_exps[k],
                weight_exp,
                shift: input_exps[k] + weight_exp - next - reserve as i32,
            }
        })
        .collect();
    ScalePlan { int_bits, position, overflow_reserve: reserve, layers, output_exp }
}

/// Calibrate Norm scales for `int_bits` and `position` from sample images.
pub fn calibrate_norm_scales(
    model: &ModelManifest,
    int_bits: u32,
    position: MacPosition,
    samples: &Dataset,
) -> Result<ScalePlan, ModelError> {
    Ok(plan_from_profile(&profile_activations(model, samples)?, int_bits, position))
}
