//! Tree-structured Parzen Estimator over mixed uniform / log-uniform /
//! integer spaces, and its use for tuning VAD parameters.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::stats;
use crate::vad::{self, FrameEnergies, VadParams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParamKind {
    Uniform,
    LogUniform,
    Integer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub kind: ParamKind,
    pub low: f64,
    pub high: f64,
}

impl ParamSpec {
    pub fn new(name: impl Into<String>, kind: ParamKind, low: f64, high: f64) -> Result<Self> {
        let spec = ParamSpec {
            name: name.into(),
            kind,
            low,
            high,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.low.is_finite() && self.high.is_finite() && self.low < self.high) {
            return Err(Error::invalid(format!(
                "{}: need finite low < high",
                self.name
            )));
        }
        match self.kind {
            ParamKind::LogUniform if !(self.low > 0.0) => Err(Error::invalid(format!(
                "{}: log-uniform needs low > 0",
                self.name
            ))),
            ParamKind::Integer if self.low.fract() != 0.0 || self.high.fract() != 0.0 => {
                Err(Error::invalid(format!(
                    "{}: integer bounds must be whole numbers",
                    self.name
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.low && x <= self.high && (self.kind != ParamKind::Integer || x.fract() == 0.0)
    }

    /// Bounds of the space the kernels live in.
    fn internal_bounds(&self) -> (f64, f64) {
        match self.kind {
            ParamKind::Uniform => (self.low, self.high),
            ParamKind::LogUniform => (self.low.ln(), self.high.ln()),
            ParamKind::Integer => (self.low - 0.5, self.high + 0.5),
        }
    }

    fn to_internal(&self, x: f64) -> f64 {
        match self.kind {
            ParamKind::LogUniform => x.ln(),
            _ => x,
        }
    }

    fn to_external(&self, u: f64) -> f64 {
        let x = match self.kind {
            ParamKind::Uniform => u,
            ParamKind::LogUniform => u.exp(),
            ParamKind::Integer => u.round(),
        };
        x.clamp(self.low, self.high)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpace {
    params: Vec<ParamSpec>,
}

impl ParamSpace {
    pub fn new(params: Vec<ParamSpec>) -> Result<Self> {
        if params.is_empty() {
            return Err(Error::invalid("parameter space is empty"));
        }
        for (i, p) in params.iter().enumerate() {
            p.validate()?;
            if params[..i].iter().any(|q| q.name == p.name) {
                return Err(Error::invalid(format!("duplicate parameter `{}`", p.name)));
            }
        }
        Ok(ParamSpace { params })
    }

    pub fn params(&self) -> &[ParamSpec] {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p.name == name)
    }

    pub fn contains(&self, values: &[f64]) -> bool {
        values.len() == self.params.len()
            && self.params.iter().zip(values).all(|(p, v)| p.contains(*v))
    }

    /// The four VAD parameters over their full ranges, all uniform.
    pub fn vad() -> Self {
        let params = VadParams::NAMES
            .iter()
            .zip(VadParams::RANGES)
            .map(|(name, (lo, hi))| ParamSpec {
                name: (*name).into(),
                kind: ParamKind::Uniform,
                low: lo,
                high: hi,
            })
            .collect();
        ParamSpace { params }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: usize,
    /// Aligned with [`ParamSpace::params`].
    pub params: Vec<f64>,
    /// Minimised; non-finite evaluations are stored as `+inf`.
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TpeSettings {
    pub gamma: f64,
    pub n_startup: usize,
    pub n_candidates: usize,
    pub seed: u64,
}

impl Default for TpeSettings {
    fn default() -> Self {
        TpeSettings {
            gamma: 0.25,
            n_startup: 10,
            n_candidates: 24,
            seed: 0,
        }
    }
}

impl TpeSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::invalid("tpe gamma must lie in (0, 1)"));
        }
        if self.n_startup == 0 || self.n_candidates == 0 {
            return Err(Error::invalid(
                "tpe n_startup and n_candidates must be >= 1",
            ));
        }
        Ok(())
    }
}

/// Size of the good set for `n` observations.
pub fn good_count(n: usize, gamma: f64) -> usize {
    ((gamma * n as f64).ceil() as usize).max(1).min(n)
}

/// Indices of the good and bad sets: history sorted by `(objective, index)`,
/// the first [`good_count`] form the good set, except that `+inf` trials are
/// always bad.
pub fn split(history: &[TrialRecord], gamma: f64) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..history.len()).collect();
    order.sort_by(|&a, &b| {
        history[a]
            .objective
            .total_cmp(&history[b].objective)
            .then(history[a].index.cmp(&history[b].index))
    });
    let n_good = good_count(history.len(), gamma);
    let mut good = Vec::with_capacity(n_good);
    let mut bad = Vec::new();
    for (rank, i) in order.into_iter().enumerate() {
        if rank < n_good && history[i].objective.is_finite() {
            good.push(i);
        } else {
            bad.push(i);
        }
    }
    (good, bad)
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + libm::erf(z / core::f64::consts::SQRT_2))
}

/// Standard deviation of the equal-weight mixture of point masses at
/// `centres` and the uniform distribution on `[lo, hi]`.
fn mixture_spread(centres: &[f64], lo: f64, hi: f64) -> f64 {
    let w = 1.0 / (centres.len() + 1) as f64;
    let mid = 0.5 * (lo + hi);
    let mean = w * (stats::sum(centres.iter().copied()) + mid);
    let points = stats::sum(centres.iter().map(|c| (c - mean) * (c - mean)));
    let prior = (hi - lo) * (hi - lo) / 12.0 + (mid - mean) * (mid - mean);
    (w * (points + prior)).sqrt()
}

/// One-dimensional Parzen mixture: truncated Gaussians at the observations
/// plus the uniform prior, all weighted `1 / (n + 1)`.
#[derive(Debug)]
struct Parzen<'a> {
    spec: &'a ParamSpec,
    lo: f64,
    hi: f64,
    centres: Vec<f64>,
    sigma: f64,
    /// Truncation normaliser per centre.
    mass: Vec<f64>,
}

impl<'a> Parzen<'a> {
    fn fit(spec: &'a ParamSpec, observations: impl Iterator<Item = f64>) -> Self {
        let (lo, hi) = spec.internal_bounds();
        let range = hi - lo;
        let centres: Vec<f64> = observations.map(|x| spec.to_internal(x)).collect();
        let n = centres.len().max(1) as f64;
        let sigma =
            (1.06 * mixture_spread(&centres, lo, hi) * n.powf(-0.2)).clamp(0.01 * range, range);
        let mass = centres
            .iter()
            .map(|c| {
                (normal_cdf((hi - c) / sigma) - normal_cdf((lo - c) / sigma)).max(f64::MIN_POSITIVE)
            })
            .collect();
        Parzen {
            spec,
            lo,
            hi,
            centres,
            sigma,
            mass,
        }
    }

    fn weight(&self) -> f64 {
        1.0 / (self.centres.len() + 1) as f64
    }

    fn log_density(&self, x: f64) -> f64 {
        let w = self.weight();
        let u = self.spec.to_internal(x);
        let mut total = 0.0;
        if self.spec.kind == ParamKind::Integer {
            let cells = self.hi - self.lo;
            total += w / cells;
            for (c, m) in self.centres.iter().zip(&self.mass) {
                let p =
                    normal_cdf((u + 0.5 - c) / self.sigma) - normal_cdf((u - 0.5 - c) / self.sigma);
                total += w * p / m;
            }
        } else {
            total += w / (self.hi - self.lo);
            let norm = 1.0 / (self.sigma * (2.0 * core::f64::consts::PI).sqrt());
            for (c, m) in self.centres.iter().zip(&self.mass) {
                let z = (u - c) / self.sigma;
                total += w * norm * (-0.5 * z * z).exp() / m;
            }
        }
        total.max(f64::MIN_POSITIVE).ln()
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        let k = rng.random_range(0..=self.centres.len());
        let u = if k == self.centres.len() {
            rng.random_range(self.lo..self.hi)
        } else {
            let c = self.centres[k];
            let mut draw = c;
            for _ in 0..64 {
                let z: f64 = rng.sample(rand_distr::StandardNormal);
                let v = c + self.sigma * z;
                if v >= self.lo && v <= self.hi {
                    draw = v;
                    break;
                }
            }
            draw
        };
        self.spec.to_external(u)
    }
}

fn sample_prior(spec: &ParamSpec, rng: &mut ChaCha8Rng) -> f64 {
    match spec.kind {
        ParamKind::Integer => rng.random_range(spec.low as i64..=spec.high as i64) as f64,
        _ => {
            let (lo, hi) = spec.internal_bounds();
            spec.to_external(rng.random_range(lo..hi))
        }
    }
}

/// Next point to evaluate. Depends only on the inputs: the random stream is
/// selected by the history length.
pub fn suggest(
    space: &ParamSpace,
    history: &[TrialRecord],
    settings: &TpeSettings,
) -> Result<Vec<f64>> {
    settings.validate()?;
    if space.is_empty() {
        return Err(Error::invalid("parameter space is empty"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    rng.set_stream(history.len() as u64);
    if history.len() < settings.n_startup {
        return Ok(space
            .params
            .iter()
            .map(|p| sample_prior(p, &mut rng))
            .collect());
    }
    let (good, bad) = split(history, settings.gamma);
    let models: Vec<(Parzen<'_>, Parzen<'_>)> = space
        .params
        .iter()
        .enumerate()
        .map(|(d, spec)| {
            let l = Parzen::fit(spec, good.iter().map(|&i| history[i].params[d]));
            let g = Parzen::fit(spec, bad.iter().map(|&i| history[i].params[d]));
            (l, g)
        })
        .collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..settings.n_candidates {
        let candidate: Vec<f64> = models.iter().map(|(l, _)| l.sample(&mut rng)).collect();
        let score: f64 = models
            .iter()
            .zip(&candidate)
            .map(|((l, g), x)| l.log_density(*x) - g.log_density(*x))
            .sum();
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, candidate));
        }
    }
    Ok(best.map(|(_, c)| c).unwrap_or_default())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimized {
    pub best: TrialRecord,
    pub history: Vec<TrialRecord>,
}

/// Sequential suggest/evaluate loop. The best trial is the lowest objective,
/// earliest on ties.
pub fn optimize<F>(
    space: &ParamSpace,
    mut objective: F,
    budget: usize,
    settings: &TpeSettings,
) -> Result<Optimized>
where
    F: FnMut(&[f64]) -> f64,
{
    if budget == 0 {
        return Err(Error::invalid("optimisation budget must be >= 1"));
    }
    let mut history: Vec<TrialRecord> = Vec::with_capacity(budget);
    for index in 0..budget {
        let params = suggest(space, &history, settings)?;
        let value = objective(&params);
        let objective = if value.is_finite() {
            value
        } else {
            f64::INFINITY
        };
        history.push(TrialRecord {
            index,
            params,
            objective,
        });
    }
    let best = history
        .iter()
        .min_by(|a, b| {
            a.objective
                .total_cmp(&b.objective)
                .then(a.index.cmp(&b.index))
        })
        .cloned()
        .expect("budget >= 1");
    Ok(Optimized { best, history })
}

/// Pre-analysed audio of one utterance and its word-derived reference mask.
#[derive(Debug, Clone)]
pub struct VadTask {
    pub energies: FrameEnergies,
    pub reference: Vec<bool>,
}

impl VadTask {
    pub fn new(samples: &[f64], sample_rate: u32, words: &[crate::sidecar::WordStamp]) -> Self {
        let energies = FrameEnergies::compute(samples, sample_rate);
        let reference = vad::word_mask(&energies, words);
        VadTask {
            energies,
            reference,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TunedVad {
    pub params: VadParams,
    pub f1: f64,
    pub history: Vec<TrialRecord>,
}

/// Parameters named in `space` override the defaults; the rest stay at
/// [`VadParams::default`].
pub fn vad_params_from(space: &ParamSpace, values: &[f64]) -> Result<VadParams> {
    let mut out = VadParams::default().values();
    for (spec, v) in space.params.iter().zip(values) {
        let idx = VadParams::NAMES
            .iter()
            .position(|n| *n == spec.name)
            .ok_or_else(|| Error::invalid(format!("`{}` is not a VAD parameter", spec.name)))?;
        out[idx] = *v;
    }
    VadParams::from_values(out)
}

/// Pooled frame F1 of `params` over all tasks.
pub fn vad_f1(tasks: &[VadTask], params: &VadParams) -> f64 {
    let detected: Vec<Vec<bool>> = tasks
        .iter()
        .map(|t| vad::segment_mask(&t.energies, &t.energies.detect(params)))
        .collect();
    vad::frame_f1(
        detected
            .iter()
            .zip(tasks)
            .map(|(d, t)| (d.as_slice(), t.reference.as_slice())),
    )
}

/// Minimises `1 - F1` over the utterances of one speech-rate class.
pub fn tune_vad(
    tasks: &[VadTask],
    space: &ParamSpace,
    budget: usize,
    settings: &TpeSettings,
) -> Result<TunedVad> {
    if tasks.is_empty() {
        return Err(Error::invalid("no utterances in the speech-rate class"));
    }
    // Reject spaces naming unknown or out-of-range parameters up front.
    for spec in &space.params {
        let idx = VadParams::NAMES
            .iter()
            .position(|n| *n == spec.name)
            .ok_or_else(|| Error::invalid(format!("`{}` is not a VAD parameter", spec.name)))?;
        let (lo, hi) = VadParams::RANGES[idx];
        if spec.low < lo || spec.high > hi {
            return Err(Error::invalid(format!(
                "`{}` search range exceeds [{lo}, {hi}]",
                spec.name
            )));
        }
    }
    let run = optimize(
        space,
        |x| match vad_params_from(space, x) {
            Ok(p) => 1.0 - vad_f1(tasks, &p),
            Err(_) => f64::INFINITY,
        },
        budget,
        settings,
    )?;
    let params = vad_params_from(space, &run.best.params)?;
    Ok(TunedVad {
        params,
        f1: 1.0 - run.best.objective,
        history: run.history,
    })
}
