use super::{ModelError, ModelManifest, ScalePlan};
use crate::engine::{
    ExecContext, FixedMac, FxConfig, Inference, MacPosition, Network, NormShiftPolicy, RealMac, Tensor,
};
use crate::fxcore::{quantize_raw, AdjustMethod, RngStream};

/// Stream index for weight quantization, kept apart from per-image streams.
const WEIGHT_STREAM: u64 = u64::MAX;

/// Pixels divided by 255, as binary64.
pub fn preprocess_real(image: &[u8], shape: &[usize]) -> Result<Tensor<f64>, ModelError> {
    Ok(Tensor::new(shape.to_vec(), image.iter().map(|&p| p as f64 / 255.0).collect())?)
}

/// Pixels divided by 255, scaled by `2^input_exp`, rounded with
/// `cfg.rounding` and saturated into `cfg.format`. Returns raw words.
pub fn preprocess(
    image: &[u8],
    shape: &[usize],
    cfg: &FxConfig,
    input_exp: i32,
    rng: &mut RngStream,
) -> Result<Tensor<i32>, ModelError> {
    let scale = (input_exp as f64).exp2();
    let (fr, n) = (cfg.format.frac_bits(), cfg.format.total_bits());
    let data = image
        .iter()
        .map(|&p| quantize_raw(p as f64 / 255.0 * scale, fr, n, cfg.rounding, rng).map(|r| r as i32))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Tensor::new(shape.to_vec(), data)?)
}

/// The reference model in binary64.
#[derive(Debug, Clone)]
pub struct RealModel {
    net: Network<RealMac>,
}

impl RealModel {
    pub fn new(model: &ModelManifest) -> Result<Self, ModelError> {
        let net = model.build_network(|_, t| {
            Ok((RealMac, t.weights.iter().map(|&v| v as f64).collect(), t.bias.iter().map(|&v| v as f64).collect()))
        })?;
        Ok(Self { net })
    }

    pub fn network(&self) -> &Network<RealMac> {
        &self.net
    }

    pub fn infer(&self, image: &[u8]) -> Result<Inference<f64>, ModelError> {
        let x = preprocess_real(image, self.net.input_shape())?;
        Ok(self.net.infer(x, &mut ExecContext::new(RngStream::new(0)))?)
    }
}

/// A model with every tensor quantized for one configuration.
#[derive(Debug, Clone)]
pub struct FixedModel {
    cfg: FxConfig,
    net: Network<FixedMac>,
    input_exp: i32,
    output_exp: i32,
}

/// Outcome of one fixed-point inference.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedInference {
    pub class: usize,
    /// Logits in real units (raw words descaled).
    pub logits: Vec<f64>,
    pub overflow_events: u64,
}

impl FixedModel {
    pub fn config(&self) -> &FxConfig {
        &self.cfg
    }

    pub fn network(&self) -> &Network<FixedMac> {
        &self.net
    }

    pub fn input_exp(&self) -> i32 {
        self.input_exp
    }

    /// Classify `image`, the `index`-th item of its dataset. Rounding draws
    /// come from the stream derived from the configuration's seed and
    /// `index`, so results do not depend on evaluation order.
    pub fn infer(&self, image: &[u8], index: u64) -> Result<FixedInference, ModelError> {
        let mut rng = RngStream::derive(self.cfg.seed, index);
        let x = preprocess(image, self.net.input_shape(), &self.cfg, self.input_exp, &mut rng)?;
        let mut ctx = ExecContext::new(rng);
        let out: Inference<i32> = self.net.infer(x, &mut ctx)?;
        let unit = self.cfg.format.epsilon() * (-(self.output_exp as f64)).exp2();
        Ok(FixedInference {
            class: out.class,
            logits: out.logits.iter().map(|&r| r as f64 * unit).collect(),
            overflow_events: ctx.overflow_events,
        })
    }
}

/// Quantize every weight and bias of `model` for `cfg`.
///
/// NBC and BC, and Norm with a fixed shift, use the weights as they are.
/// Norm with the calibrated policy needs `plan` (built for the same integer
/// width and position) and scales inputs, weights and biases by its exponents.
/// Under RMAC biases go straight into the wide accumulator format (2FR
/// fraction bits); under RMULT they are N-bit words at the output scale.
pub fn quantize_model(model: &ModelManifest, cfg: &FxConfig, plan: Option<&ScalePlan>) -> Result<FixedModel, ModelError> {
    cfg.validate()?;
    let plan = match (cfg.adjust, cfg.norm_policy) {
        (AdjustMethod::Norm { .. }, NormShiftPolicy::Calibrated) => {
            let p = plan.ok_or(ModelError::MissingPlan)?;
            if p.int_bits != cfg.format.int_bits() || p.position != cfg.position {
                return Err(ModelError::PlanMismatch(format!(
                    "plan is for {} integer bits at {}, configuration is {} at {}",
                    p.int_bits,
                    p.position,
                    cfg.format.int_bits(),
                    cfg.position
                )));
            }
            Some(p)
        }
        _ => None,
    };
    let fixed_shift = match cfg.adjust {
        AdjustMethod::Norm { shift } => shift as i32,
        _ => 0,
    };
    let fmt = cfg.format;
    let acc_bits = fmt.accumulator(cfg.guard_bits)?.total_bits();
    let mut rng = RngStream::derive(cfg.seed, WEIGHT_STREAM);
    let net = model.build_network(|layer, t| {
        let (ex, ew, shift) = match plan {
            Some(p) => {
                let s = p.layer(layer).ok_or_else(|| ModelError::PlanMismatch(format!("no scales for layer {layer}")))?;
                (s.input_exp, s.weight_exp, s.shift)
            }
            None => (0, 0, fixed_shift),
        };
        let unit = FixedMac::new(cfg, shift)?;
        let wscale = (ew as f64).exp2();
        let weights = t
            .weights
            .iter()
            .map(|&w| quantize_raw(w as f64 * wscale, fmt.frac_bits(), fmt.total_bits(), cfg.rounding, &mut rng).map(|r| r as i32))
            .collect::<Result<Vec<_>, _>>()?;
        let (bexp, bfr, bbits) = match cfg.position {
            MacPosition::Rmult => (ex + ew - shift, fmt.frac_bits(), fmt.total_bits()),
            MacPosition::Rmac => (ex + ew, 2 * fmt.frac_bits(), acc_bits),
        };
        let bscale = (bexp as f64).exp2();
        let bias = t
            .bias
            .iter()
            .map(|&b| quantize_raw(b as f64 * bscale, bfr, bbits, cfg.rounding, &mut rng))
            .collect::<Result<Vec<_>, _>>()?;
        Ok((unit, weights, bias))
    })?;
    Ok(FixedModel {
        cfg: *cfg,
        net,
        input_exp: plan.map_or(0, |p| p.input_exp()),
        output_exp: plan.map_or(0, |p| p.output_exp),
    })
}
