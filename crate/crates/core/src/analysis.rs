//! Statistics over annealing runs: success probabilities, histograms,
//! correlations, and catalogs of the local minima reached mid-anneal.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::{IsingInstance, SpinConfig};
use crate::oracle::is_ground;
use crate::schedule::AnnealSchedule;
use crate::seeds::derive_seed;
use crate::svmc::{
    anneal_until, greedy_descent, round_to_spins_banded, InitialState, ModelParams, RunRecord,
};

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;
pub const DEFAULT_BINS: usize = 20;
pub const MIN_BIMODALITY_INSTANCES: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessEstimate {
    pub instance_id: String,
    pub n_runs: u64,
    pub n_success: u64,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// Wilson score interval for `successes` out of `trials` at quantile `z`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = p + z2 / (2.0 * n);
    let spread = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = ((center - spread) / denom).max(0.0);
    let hi = ((center + spread) / denom).min(1.0);
    // keep lo <= p_hat <= hi under rounding at the extremes
    (lo.min(p), hi.max(p))
}

impl SuccessEstimate {
    pub fn from_counts(
        instance_id: impl Into<String>,
        n_runs: u64,
        n_success: u64,
    ) -> Result<Self> {
        if n_runs == 0 {
            return Err(Error::Param("need at least one run".into()));
        }
        if n_success > n_runs {
            return Err(Error::Param(format!(
                "{n_success} successes out of {n_runs} runs"
            )));
        }
        let (ci_lo, ci_hi) = wilson_interval(n_success, n_runs, Z_95);
        Ok(SuccessEstimate {
            instance_id: instance_id.into(),
            n_runs,
            n_success,
            p_hat: n_success as f64 / n_runs as f64,
            ci_lo,
            ci_hi,
        })
    }
}

/// Fraction of runs whose final configuration attains `ground_energy`.
pub fn success_probability(
    inst: &IsingInstance,
    records: &[RunRecord],
    ground_energy: f64,
) -> Result<SuccessEstimate> {
    if records.is_empty() {
        return Err(Error::Param("empty record list".into()));
    }
    let mut hits = 0u64;
    for rec in records {
        if is_ground(&rec.final_config, inst, ground_energy)? {
            hits += 1;
        }
    }
    SuccessEstimate::from_counts(inst.id(), records.len() as u64, hits)
}

/// Counts on `n_bins` uniform bins over `[0, 1]`; the last bin is closed.
/// Values outside `[0, 1]` are clamped into the end bins.
pub fn histogram(p_hats: &[f64], n_bins: usize) -> Result<Vec<usize>> {
    if n_bins < 2 {
        return Err(Error::Param(format!("need at least 2 bins, got {n_bins}")));
    }
    let mut counts = vec![0usize; n_bins];
    for &p in p_hats {
        let bin = ((p * n_bins as f64).floor().max(0.0) as usize).min(n_bins - 1);
        counts[bin] += 1;
    }
    Ok(counts)
}

/// `(bin_lo, bin_hi)` edges matching [`histogram`].
pub fn bin_edges(n_bins: usize) -> Vec<(f64, f64)> {
    (0..n_bins)
        .map(|b| (b as f64 / n_bins as f64, (b + 1) as f64 / n_bins as f64))
        .collect()
}

/// Mass near the extremes (`p < 0.1` or `p > 0.9`) minus mass in the
/// middle (`0.4 <= p <= 0.6`). Positive values signal a bimodal histogram.
pub fn bimodality_score(p_hats: &[f64]) -> Result<f64> {
    if p_hats.len() < MIN_BIMODALITY_INSTANCES {
        return Err(Error::Param(format!(
            "bimodality needs at least {MIN_BIMODALITY_INSTANCES} instances, got {}",
            p_hats.len()
        )));
    }
    let n = p_hats.len() as f64;
    let extreme = p_hats
        .iter()
        .filter(|&&p| !(0.1..=0.9).contains(&p))
        .count() as f64;
    let middle = p_hats.iter().filter(|&&p| (0.4..=0.6).contains(&p)).count() as f64;
    Ok((extreme - middle) / n)
}

/// Pearson product-moment correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::Param("pearson needs at least two points".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate(
            "pearson correlation undefined: zero variance".into(),
        ));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// The lexicographically smaller of `config` and its global flip, with
/// `-1 < +1`. Broken-site sentinels are ignored by the comparison.
pub fn canonicalize(config: &SpinConfig) -> SpinConfig {
    match config.spins().iter().find(|&&z| z != 0) {
        Some(&z) if z > 0 => config.flipped(),
        _ => config.clone(),
    }
}

/// Sites where the two minima disagree, taking whichever relative
/// orientation of `b` gives the smaller set (ties keep `b` as given).
pub fn branching_diff(a: &SpinConfig, b: &SpinConfig) -> Result<Vec<usize>> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let mut same = Vec::new();
    let mut flipped = Vec::new();
    for (site, (&za, &zb)) in a.spins().iter().zip(b.spins()).enumerate() {
        if za == 0 || zb == 0 {
            continue;
        }
        if za != zb {
            same.push(site);
        } else {
            flipped.push(site);
        }
    }
    Ok(if flipped.len() < same.len() {
        flipped
    } else {
        same
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinimumEntry {
    pub config: SpinConfig,
    pub hits: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimaCatalog {
    pub s_star: f64,
    /// Sorted by hit count (descending), then by configuration.
    pub entries: Vec<MinimumEntry>,
    pub total_runs: u64,
}

impl MinimaCatalog {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Tallies canonicalized configurations.
    pub fn from_configs(s_star: f64, configs: impl IntoIterator<Item = SpinConfig>) -> Self {
        let mut tally: BTreeMap<SpinConfig, u64> = BTreeMap::new();
        let mut total = 0;
        for c in configs {
            *tally.entry(canonicalize(&c)).or_default() += 1;
            total += 1;
        }
        let mut entries: Vec<MinimumEntry> = tally
            .into_iter()
            .map(|(config, hits)| MinimumEntry { config, hits })
            .collect();
        entries.sort_by(|x, y| y.hits.cmp(&x.hits).then_with(|| x.config.cmp(&y.config)));
        MinimaCatalog {
            s_star,
            entries,
            total_runs: total,
        }
    }
}

/// How a probe's frozen state is turned into a discrete minimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimaOptions {
    /// Greedy-descent convergence threshold, radians.
    pub descent_tol: f64,
    /// `|cos theta|` at or below this rounds as a tie (to +1).
    pub zero_band: f64,
    pub init: InitialState,
}

impl Default for MinimaOptions {
    fn default() -> Self {
        MinimaOptions {
            descent_tol: 1e-10,
            zero_band: 1e-6,
            init: InitialState::Transverse,
        }
    }
}

/// Runs `n_probes` independent anneals up to `s_star`, relaxes each frozen
/// state under `H(s_star)`, rounds it to spins and tallies the canonical
/// forms. Probe `k` uses seed `derive_seed(seed, inst.id(), k)`.
pub fn minima_catalog(
    inst: &IsingInstance,
    sched: &AnnealSchedule,
    params: &ModelParams,
    s_star: f64,
    n_probes: usize,
    seed: u64,
    opts: &MinimaOptions,
) -> Result<MinimaCatalog> {
    if !(s_star > 0.0 && s_star <= 1.0) {
        return Err(Error::FractionOutOfRange(s_star));
    }
    if n_probes == 0 {
        return Err(Error::Param("n_probes must be >= 1".into()));
    }
    params.validate()?;
    let (a, b) = sched.evaluate(s_star)?;
    let configs = (0..n_probes as u64)
        .into_par_iter()
        .map(|k| {
            let probe_seed = derive_seed(seed, inst.id(), k);
            let frozen = anneal_until(inst, sched, params, opts.init, probe_seed, s_star)?;
            let relaxed = greedy_descent(&frozen, a, b, inst, opts.descent_tol)?;
            Ok(round_to_spins_banded(&relaxed, opts.zero_band))
        })
        .collect::<Result<Vec<SpinConfig>>>()?;
    Ok(MinimaCatalog::from_configs(s_star, configs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{build_chimera, random_instance, ChimeraSpec, CouplingModel};
    use crate::oracle::exhaustive_ground;
    use crate::svmc::{round_to_spins, RotorState};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn wilson_examples() {
        let all = SuccessEstimate::from_counts("a", 10, 10).unwrap();
        assert_eq!(all.p_hat, 1.0);
        assert_eq!(all.ci_hi, 1.0);
        let none = SuccessEstimate::from_counts("a", 100, 0).unwrap();
        assert_eq!(none.p_hat, 0.0);
        assert_eq!(none.ci_lo, 0.0);
        // upper end at p = 0 reduces to z^2 / (n + z^2)
        let expected = Z_95 * Z_95 / (100.0 + Z_95 * Z_95);
        assert!((none.ci_hi - expected).abs() < 1e-12);
        assert!((none.ci_hi - 0.037).abs() < 1e-3);
        let half = SuccessEstimate::from_counts("a", 100, 50).unwrap();
        assert_eq!(half.p_hat, 0.5);
        assert!(half.ci_lo < 0.5 && half.ci_hi > 0.5);
        assert!((half.ci_lo + half.ci_hi - 1.0).abs() < 1e-12);
        assert!(SuccessEstimate::from_counts("a", 0, 0).is_err());
    }

    #[test]
    fn success_probability_of_replicated_minimizer() {
        let adj = build_chimera(&ChimeraSpec::new(1, 1, 4)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let inst = random_instance(&adj, &mut rng, CouplingModel::Pm1, "x").unwrap();
        let g = exhaustive_ground(&inst).unwrap();
        let mut theta = vec![0.0; 8];
        for (t, &z) in theta.iter_mut().zip(g.config.spins()) {
            *t = if z > 0 { 0.0 } else { std::f64::consts::PI };
        }
        let st = RotorState::from_angles(&inst, theta).unwrap();
        let rec = RunRecord {
            seed: 0,
            final_config: round_to_spins(&st),
            final_theta: st,
            final_energy: g.energy,
            success: true,
            snapshots: vec![],
            accepted: 0,
            proposals: 0,
        };
        let est = success_probability(&inst, &vec![rec; 7], g.energy).unwrap();
        assert_eq!(est.p_hat, 1.0);
        assert_eq!(est.n_runs, 7);
        assert!(success_probability(&inst, &[], g.energy).is_err());
    }

    #[test]
    fn histogram_examples() {
        assert_eq!(histogram(&[0.0, 1.0], 2).unwrap(), vec![1, 1]);
        let h = histogram(&[0.5; 13], 20).unwrap();
        assert_eq!(h[10], 13);
        assert_eq!(h.iter().sum::<usize>(), 13);
        assert!(histogram(&[0.5], 1).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ps: Vec<f64> = (0..1000).map(|_| rng.gen::<f64>()).collect();
        let h = histogram(&ps, 20).unwrap();
        assert_eq!(h.iter().sum::<usize>(), 1000);
        assert!(*h.iter().max().unwrap() as f64 <= 2.0 * 1000.0 / 20.0);
        assert_eq!(bin_edges(4)[3], (0.75, 1.0));
    }

    #[test]
    fn bimodality_examples() {
        let split: Vec<f64> = (0..40)
            .map(|k| if k % 2 == 0 { 0.0 } else { 1.0 })
            .collect();
        assert_eq!(bimodality_score(&split).unwrap(), 1.0);
        assert_eq!(bimodality_score(&[0.5; 20]).unwrap(), -1.0);
        // evenly spread p: extremes 0.2, middle 0.2
        let grid: Vec<f64> = (0..100_000).map(|k| (k as f64 + 0.5) / 100_000.0).collect();
        assert!(bimodality_score(&grid).unwrap().abs() < 1e-3);
        assert!(bimodality_score(&[0.0; 19]).is_err());
    }

    #[test]
    fn pearson_examples() {
        let xs = [1.0, 2.0, 3.0];
        assert!((pearson(&xs, &xs).unwrap() - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert!((pearson(&xs, &neg).unwrap() + 1.0).abs() < 1e-12);
        // hand evaluation: Sxy = 5, Sxx = 2, Syy = 114/9 -> 15 / sqrt(228)
        let r = pearson(&xs, &[2.0, 4.0, 7.0]).unwrap();
        assert!((r - 15.0 / 228f64.sqrt()).abs() < 1e-12);
        assert!(matches!(pearson(&xs, &[1.0; 3]), Err(Error::Degenerate(_))));
        assert!(pearson(&xs, &[1.0, 2.0]).is_err());
        assert!(pearson(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn canonical_forms() {
        let c = SpinConfig(vec![1, -1, 0, 1]);
        assert_eq!(canonicalize(&c), canonicalize(&c.flipped()));
        assert_eq!(canonicalize(&c), SpinConfig(vec![-1, 1, 0, -1]));
        assert_eq!(canonicalize(&canonicalize(&c)), canonicalize(&c));
        assert_eq!(
            canonicalize(&SpinConfig(vec![1, 1, 1])),
            SpinConfig(vec![-1, -1, -1])
        );
        assert_eq!(
            canonicalize(&SpinConfig(vec![0, 1, -1])),
            SpinConfig(vec![0, -1, 1])
        );
    }

    #[test]
    fn branching_diff_examples() {
        let a = SpinConfig((0..32).map(|k| if k % 3 == 0 { 1 } else { -1 }).collect());
        assert!(branching_diff(&a, &a).unwrap().is_empty());
        assert!(branching_diff(&a, &a.flipped()).unwrap().is_empty());
        // flip one 8-site supernode (cell 2) out of four
        let mut b = a.clone();
        for z in &mut b.0[16..24] {
            *z = -*z;
        }
        let expected: Vec<usize> = (16..24).collect();
        assert_eq!(branching_diff(&a, &b).unwrap(), expected);
        assert_eq!(branching_diff(&a, &b.flipped()).unwrap(), expected);
        assert!(branching_diff(&a, &SpinConfig(vec![1])).is_err());
    }

    #[test]
    fn catalog_conservation_and_determinism() {
        let adj = build_chimera(&ChimeraSpec::new(1, 2, 4)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let inst = random_instance(&adj, &mut rng, CouplingModel::Pm1, "cat").unwrap();
        let sched = AnnealSchedule::default_schedule();
        let params = ModelParams::new(0.22, 2000);
        let opts = MinimaOptions::default();
        let cat = minima_catalog(&inst, &sched, &params, 0.31, 40, 7, &opts).unwrap();
        assert_eq!(cat.entries.iter().map(|e| e.hits).sum::<u64>(), 40);
        assert_eq!(cat.total_runs, 40);
        let again = minima_catalog(&inst, &sched, &params, 0.31, 40, 7, &opts).unwrap();
        assert_eq!(cat, again);
        for w in cat.entries.windows(2) {
            assert!(w[0].hits >= w[1].hits);
            assert_ne!(w[0].config, w[1].config);
        }

        let one = minima_catalog(&inst, &sched, &params, 0.31, 1, 7, &opts).unwrap();
        assert_eq!(one.len(), 1);
        let early = minima_catalog(&inst, &sched, &params, 0.04, 30, 7, &opts).unwrap();
        assert_eq!(early.len(), 1);

        assert!(minima_catalog(&inst, &sched, &params, 0.0, 5, 7, &opts).is_err());
        assert!(minima_catalog(&inst, &sched, &params, 0.3, 0, 7, &opts).is_err());
    }
}
