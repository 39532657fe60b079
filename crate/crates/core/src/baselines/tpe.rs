//! Tree-structured Parzen estimator over one search space. Observations are
//! split at the gamma-quantile of the objective (maximizing, so the good set
//! is the top fraction); per-dimension Parzen mixtures model the good set
//! l(x) and the bad set g(x); the proposal is the candidate drawn from l
//! that maximizes l(x)/g(x).
//!
//! Density conventions (relied on by the equivalence oracle):
//! - numeric dimensions are modeled in transformed space (log10 for
//!   log-scaled continuous parameters, the raw value otherwise, integers as
//!   reals), bounded by the transformed domain [low, high];
//! - the mixture is `(uniform_prior + sum_i kernel_i(x)) / (n + 1)`, summed
//!   in observation order, where `uniform_prior = 1 / (high - low)` and
//!   `kernel_i` is a Gaussian centered at observation i truncated to
//!   [low, high];
//! - the bandwidth of kernel i is `max(adjacent_gap_i, (high - low) /
//!   min(100, n))`, where `adjacent_gap_i` is the larger distance from
//!   center i to the nearest distinct center value on either side (0 for a
//!   lone center value);
//! - categorical dimensions use add-one smoothing: `p(choice) = (count + 1)
//!   / (n + n_choices)`;
//! - a configuration's density is the product of its per-dimension densities
//!   in space order, and ties in l/g keep the earliest-drawn candidate.

use rand::Rng;

use crate::space::{Configuration, ParamDomain, ParamValue, Scale, SearchSpace};
use crate::stats::{truncated_norm_pdf, truncated_norm_sample};

/// TPE constants; the defaults are conventional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TpeParams {
    /// Fraction of observations forming the good set.
    pub gamma: f64,
    /// Observations required before model-based proposals start.
    pub n_startup: usize,
    /// Candidates drawn from l(x) per proposal.
    pub n_candidates: usize,
}

impl Default for TpeParams {
    fn default() -> Self {
        TpeParams {
            gamma: 0.25,
            n_startup: 5,
            n_candidates: 24,
        }
    }
}

/// Observation store for one search space.
#[derive(Debug, Clone, PartialEq)]
pub struct TpeState {
    observations: Vec<(Configuration, f64)>,
    params: TpeParams,
}

impl TpeState {
    pub fn new(params: TpeParams) -> Self {
        TpeState {
            observations: Vec::new(),
            params,
        }
    }

    pub fn observe(&mut self, config: Configuration, objective: f64) {
        self.observations.push((config, objective));
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn observations(&self) -> &[(Configuration, f64)] {
        &self.observations
    }

    pub fn params(&self) -> &TpeParams {
        &self.params
    }

    /// Whether enough observations exist for model-based proposals.
    pub fn ready(&self) -> bool {
        self.observations.len() >= self.params.n_startup
    }

    pub fn best_objective(&self) -> Option<f64> {
        self.observations
            .iter()
            .map(|(_, y)| *y)
            .fold(None, |acc, y| Some(acc.map_or(y, |a: f64| a.max(y))))
    }

    /// Indices of the good and bad sets. Observations are ranked by
    /// objective descending with index order breaking ties; the top
    /// `ceil(gamma * n)` are good. Both lists come back in observation
    /// order.
    pub fn split(&self) -> (Vec<usize>, Vec<usize>) {
        let n = self.observations.len();
        let mut ranked: Vec<usize> = (0..n).collect();
        ranked.sort_by(|&a, &b| {
            self.observations[b]
                .1
                .partial_cmp(&self.observations[a].1)
                .unwrap()
                .then(a.cmp(&b))
        });
        let n_good = ((self.params.gamma * n as f64).ceil() as usize).min(n);
        let mut good = ranked[..n_good].to_vec();
        let mut bad = ranked[n_good..].to_vec();
        good.sort_unstable();
        bad.sort_unstable();
        (good, bad)
    }

    /// The gamma-quantile objective threshold: the smallest objective in the
    /// good set. None before any observation.
    pub fn y_star(&self) -> Option<f64> {
        let (good, _) = self.split();
        good.iter()
            .map(|&i| self.observations[i].1)
            .fold(None, |acc, y| Some(acc.map_or(y, |a: f64| a.min(y))))
    }
}

/// Transformed-space coordinate of a numeric value.
fn transform(domain: &ParamDomain, value: &ParamValue) -> f64 {
    match (domain, value) {
        (ParamDomain::Continuous { scale, .. }, ParamValue::Real(v)) => match scale {
            Scale::Linear => *v,
            Scale::Log10 => v.log10(),
        },
        (ParamDomain::Integer { .. }, ParamValue::Int(v)) => *v as f64,
        _ => panic!("numeric transform on a non-numeric value"),
    }
}

/// Transformed-space bounds of a numeric domain.
fn transformed_bounds(domain: &ParamDomain) -> (f64, f64) {
    match domain {
        ParamDomain::Continuous { low, high, scale } => match scale {
            Scale::Linear => (*low, *high),
            Scale::Log10 => (low.log10(), high.log10()),
        },
        ParamDomain::Integer { low, high } => (*low as f64, *high as f64),
        ParamDomain::Categorical { .. } => panic!("categorical domains have no numeric bounds"),
    }
}

/// Parzen mixture over one numeric dimension.
struct NumericParzen {
    low: f64,
    high: f64,
    centers: Vec<f64>,
    bandwidths: Vec<f64>,
}

impl NumericParzen {
    fn fit(low: f64, high: f64, centers: Vec<f64>) -> Self {
        let n = centers.len();
        let floor = (high - low) / 100.0_f64.min(n.max(1) as f64);
        let mut distinct = centers.clone();
        distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
        distinct.dedup();
        let bandwidths = centers
            .iter()
            .map(|&c| {
                let pos = distinct.partition_point(|&v| v < c);
                let mut gap: f64 = 0.0;
                if pos > 0 {
                    gap = gap.max(c - distinct[pos - 1]);
                }
                if pos + 1 < distinct.len() {
                    gap = gap.max(distinct[pos + 1] - c);
                }
                gap.max(floor)
            })
            .collect();
        NumericParzen {
            low,
            high,
            centers,
            bandwidths,
        }
    }

    fn pdf(&self, x: f64) -> f64 {
        let mut total = 1.0 / (self.high - self.low);
        for (center, bw) in self.centers.iter().zip(&self.bandwidths) {
            total += truncated_norm_pdf(x, *center, *bw, self.low, self.high);
        }
        total / (self.centers.len() as f64 + 1.0)
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let component = rng.gen_range(0..=self.centers.len());
        if component == 0 {
            rng.gen_range(self.low..self.high)
        } else {
            let i = component - 1;
            truncated_norm_sample(
                rng.gen_range(0.0..1.0),
                self.centers[i],
                self.bandwidths[i],
                self.low,
                self.high,
            )
        }
    }
}

/// Add-one-smoothed categorical distribution.
struct CategoricalParzen {
    probs: Vec<f64>,
}

impl CategoricalParzen {
    fn fit(n_choices: usize, observed: &[usize]) -> Self {
        let mut counts = vec![0usize; n_choices];
        for &c in observed {
            counts[c] += 1;
        }
        let denom = (observed.len() + n_choices) as f64;
        CategoricalParzen {
            probs: counts.iter().map(|&c| (c as f64 + 1.0) / denom).collect(),
        }
    }

    fn pdf(&self, choice: usize) -> f64 {
        self.probs[choice]
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen_range(0.0..1.0);
        let mut cum = 0.0;
        for (i, p) in self.probs.iter().enumerate() {
            cum += p;
            if u < cum {
                return i;
            }
        }
        self.probs.len() - 1
    }
}

enum DimModel {
    Numeric(NumericParzen),
    Categorical(CategoricalParzen),
}

impl DimModel {
    fn fit(domain: &ParamDomain, name: &str, members: &[&Configuration]) -> DimModel {
        match domain {
            ParamDomain::Categorical { choices } => {
                let observed: Vec<usize> = members
                    .iter()
                    .map(|c| {
                        let text = c.text(name).expect("validated categorical value");
                        choices.iter().position(|ch| ch == text).expect("in domain")
                    })
                    .collect();
                DimModel::Categorical(CategoricalParzen::fit(choices.len(), &observed))
            }
            _ => {
                let (low, high) = transformed_bounds(domain);
                let centers: Vec<f64> = members
                    .iter()
                    .map(|c| transform(domain, c.get(name).expect("validated value")))
                    .collect();
                DimModel::Numeric(NumericParzen::fit(low, high, centers))
            }
        }
    }

    fn pdf(&self, domain: &ParamDomain, value: &ParamValue) -> f64 {
        match (self, domain) {
            (DimModel::Categorical(m), ParamDomain::Categorical { choices }) => {
                let text = value.as_str().expect("categorical value");
                let idx = choices.iter().position(|c| c == text).expect("in domain");
                m.pdf(idx)
            }
            (DimModel::Numeric(m), _) => m.pdf(transform(domain, value)),
            _ => unreachable!("model kind always matches domain kind"),
        }
    }
}

/// Per-dimension density estimator for one observation subset.
struct ParzenModel<'a> {
    space: &'a SearchSpace,
    dims: Vec<DimModel>,
}

impl<'a> ParzenModel<'a> {
    fn fit(space: &'a SearchSpace, members: &[&Configuration]) -> Self {
        let dims = space
            .params()
            .iter()
            .map(|(name, domain)| DimModel::fit(domain, name, members))
            .collect();
        ParzenModel { space, dims }
    }

    /// Joint density: product of per-dimension densities in space order.
    fn density(&self, config: &Configuration) -> f64 {
        let mut product = 1.0;
        for ((name, domain), dim) in self.space.params().iter().zip(&self.dims) {
            let value = config.get(name).expect("validated configuration");
            product *= dim.pdf(domain, value);
        }
        product
    }

    /// Draw one configuration from the mixture, dimension by dimension in
    /// space order.
    fn sample<R: Rng>(&self, rng: &mut R) -> Configuration {
        let values = self
            .space
            .params()
            .iter()
            .zip(&self.dims)
            .map(|((name, domain), dim)| {
                let value = match (dim, domain) {
                    (DimModel::Categorical(m), ParamDomain::Categorical { choices }) => {
                        ParamValue::Text(choices[m.sample(rng)].clone())
                    }
                    (DimModel::Numeric(m), ParamDomain::Integer { low, high }) => {
                        let x = m.sample(rng);
                        ParamValue::Int((x.round() as i64).clamp(*low, *high))
                    }
                    (DimModel::Numeric(m), ParamDomain::Continuous { low, high, scale }) => {
                        let x = m.sample(rng);
                        let v = match scale {
                            Scale::Linear => x,
                            Scale::Log10 => 10f64.powf(x),
                        };
                        ParamValue::Real(v.clamp(*low, *high))
                    }
                    _ => unreachable!("model kind always matches domain kind"),
                };
                (name.clone(), value)
            })
            .collect();
        Configuration::new(self.space.family(), values)
    }
}

fn member_configs<'a>(state: &'a TpeState, indices: &[usize]) -> Vec<&'a Configuration> {
    indices
        .iter()
        .map(|&i| &state.observations()[i].0)
        .collect()
}

/// Draw `n_candidates` configurations from the good-set estimator l(x).
pub fn tpe_candidates<R: Rng>(
    state: &TpeState,
    space: &SearchSpace,
    rng: &mut R,
) -> Vec<Configuration> {
    let (good, _) = state.split();
    let l = ParzenModel::fit(space, &member_configs(state, &good));
    (0..state.params().n_candidates)
        .map(|_| l.sample(rng))
        .collect()
}

/// Score candidates by l(x)/g(x) and return the argmax, first drawn on ties.
pub fn tpe_select(
    state: &TpeState,
    space: &SearchSpace,
    candidates: &[Configuration],
) -> Configuration {
    let (good, bad) = state.split();
    let l = ParzenModel::fit(space, &member_configs(state, &good));
    let g = ParzenModel::fit(space, &member_configs(state, &bad));
    let mut best_idx = 0;
    let mut best_ratio = f64::NEG_INFINITY;
    for (i, candidate) in candidates.iter().enumerate() {
        let ratio = l.density(candidate) / g.density(candidate);
        if ratio > best_ratio {
            best_ratio = ratio;
            best_idx = i;
        }
    }
    candidates[best_idx].clone()
}

/// One model-based proposal: candidates from l(x), ranked by l/g.
pub fn tpe_propose<R: Rng>(state: &TpeState, space: &SearchSpace, rng: &mut R) -> Configuration {
    let candidates = tpe_candidates(state, space, rng);
    tpe_select(state, space, &candidates)
}

/// Density of the bad-set estimator, exposed so the gamma-to-one invariant
/// (bad set empty means g equals the prior) is directly checkable.
pub fn bad_set_density(state: &TpeState, space: &SearchSpace, config: &Configuration) -> f64 {
    let (_, bad) = state.split();
    let g = ParzenModel::fit(space, &member_configs(state, &bad));
    g.density(config)
}

/// Prior-only density over a space: the product of uniform prior components,
/// what g(x) degenerates to when the bad set is empty.
pub fn prior_density(space: &SearchSpace, config: &Configuration) -> f64 {
    let empty = ParzenModel::fit(space, &[]);
    empty.density(config)
}
