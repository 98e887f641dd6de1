//! Gated Monte Carlo of a heralded photon source read out by a
//! Hanbury-Brown–Twiss setup.
//!
//! Detector D1 watches the herald (idler) arm. The signal photon crosses the
//! chip with transmission `η_t` and meets a balanced splitter whose outputs
//! go to D2 and D3. Detectors are threshold detectors: a gate registers a
//! click when at least one photon arrives or a dark count fires.
//!
//! Every gate draws its randomness from its own ChaCha stream keyed by
//! `(seed, gate)`, so records do not depend on evaluation order or thread
//! count.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Geometric, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    /// Photon pairs; the idler heralds on D1.
    HeraldedPair,
    /// Single-mode thermal light, geometric photon number, no herald.
    Thermal,
    /// Coherent light, Poissonian photon number, no herald.
    Coherent,
}

impl FromStr for SourceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heralded" | "heralded_pair" => Ok(SourceKind::HeraldedPair),
            "thermal" => Ok(SourceKind::Thermal),
            "coherent" => Ok(SourceKind::Coherent),
            other => Err(Error::invalid("source", format!("unknown source kind {other:?}"))),
        }
    }
}

/// Pair-number distribution per gate for [`SourceKind::HeraldedPair`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairLaw {
    /// At most one pair, with probability `μ`.
    #[default]
    Bernoulli,
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceModel {
    pub kind: SourceKind,
    /// Mean pair (or photon) number per gate.
    pub mean: f64,
    /// Signal transmission through chip and collection optics.
    pub transmission: f64,
    /// Herald detection efficiency.
    pub herald_efficiency: f64,
    /// Dark-count probability per detector per gate.
    pub dark_count: f64,
    pub pair_law: PairLaw,
}

impl SourceModel {
    /// Lossless, noiseless source.
    pub fn ideal(kind: SourceKind, mean: f64) -> Self {
        SourceModel {
            kind,
            mean,
            transmission: 1.0,
            herald_efficiency: 1.0,
            dark_count: 0.0,
            pair_law: PairLaw::Bernoulli,
        }
    }

    pub fn with_pair_law(mut self, law: PairLaw) -> Self {
        self.pair_law = law;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mean > 0.0 && self.mean.is_finite()) {
            return Err(Error::invalid("mu", format!("must be > 0, got {}", self.mean)));
        }
        if self.kind == SourceKind::HeraldedPair && self.pair_law == PairLaw::Bernoulli && self.mean > 1.0 {
            return Err(Error::invalid(
                "mu",
                format!("Bernoulli pair probability must be <= 1, got {}", self.mean),
            ));
        }
        for (name, p) in [
            ("eta_t", self.transmission),
            ("eta_h", self.herald_efficiency),
            ("dark", self.dark_count),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(name, format!("must lie in [0, 1], got {p}")));
            }
        }
        Ok(())
    }
}

/// Click pattern of one gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub gate: u64,
    pub d1: bool,
    pub d2: bool,
    pub d3: bool,
}

impl DetectionRecord {
    /// Bit mask: D1 = 1, D2 = 2, D3 = 4.
    pub fn pattern(&self) -> usize {
        self.d1 as usize | (self.d2 as usize) << 1 | (self.d3 as usize) << 2
    }
}

struct Sampler {
    base: ChaCha8Rng,
    model: SourceModel,
    poisson: Option<Poisson<f64>>,
    geometric: Option<Geometric>,
}

impl Sampler {
    fn new(model: &SourceModel, seed: u64) -> Result<Self> {
        model.validate()?;
        let poisson = match (model.kind, model.pair_law) {
            (SourceKind::Coherent, _) | (SourceKind::HeraldedPair, PairLaw::Poisson) => Some(
                Poisson::new(model.mean).map_err(|e| Error::invalid("mu", e.to_string()))?,
            ),
            _ => None,
        };
        let geometric = match model.kind {
            SourceKind::Thermal => Some(
                Geometric::new(1.0 / (1.0 + model.mean))
                    .map_err(|e| Error::invalid("mu", e.to_string()))?,
            ),
            _ => None,
        };
        Ok(Sampler {
            base: ChaCha8Rng::seed_from_u64(seed),
            model: *model,
            poisson,
            geometric,
        })
    }

    fn gate(&self, gate: u64) -> DetectionRecord {
        let mut rng = self.base.clone();
        rng.set_stream(gate);
        let m = &self.model;
        let photons: u64 = match m.kind {
            SourceKind::HeraldedPair => match m.pair_law {
                PairLaw::Bernoulli => rng.random_bool(m.mean) as u64,
                PairLaw::Poisson => self.poisson.as_ref().map_or(0, |d| d.sample(&mut rng) as u64),
            },
            SourceKind::Coherent => self.poisson.as_ref().map_or(0, |d| d.sample(&mut rng) as u64),
            SourceKind::Thermal => self.geometric.as_ref().map_or(0, |d| d.sample(&mut rng)),
        };

        let mut d1 = false;
        if m.kind == SourceKind::HeraldedPair {
            for _ in 0..photons {
                d1 |= rng.random_bool(m.herald_efficiency);
            }
        }
        let (mut d2, mut d3) = (false, false);
        for _ in 0..photons {
            if rng.random_bool(m.transmission) {
                if rng.random_bool(0.5) {
                    d2 = true;
                } else {
                    d3 = true;
                }
            }
        }
        if m.dark_count > 0.0 {
            d1 |= rng.random_bool(m.dark_count);
            d2 |= rng.random_bool(m.dark_count);
            d3 |= rng.random_bool(m.dark_count);
        }
        DetectionRecord { gate, d1, d2, d3 }
    }
}

/// Lazily generated record stream for gates `0..n_gates`.
pub struct TrialStream {
    sampler: Sampler,
    next: u64,
    end: u64,
}

impl Iterator for TrialStream {
    type Item = DetectionRecord;

    fn next(&mut self) -> Option<DetectionRecord> {
        if self.next >= self.end {
            return None;
        }
        let r = self.sampler.gate(self.next);
        self.next += 1;
        Some(r)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = (self.end - self.next) as usize;
        (n, Some(n))
    }
}

pub fn simulate_trials(model: &SourceModel, n_gates: u64, seed: u64) -> Result<TrialStream> {
    if n_gates == 0 {
        return Err(Error::invalid("n_gates", "need at least one gate"));
    }
    Ok(TrialStream {
        sampler: Sampler::new(model, seed)?,
        next: 0,
        end: n_gates,
    })
}

/// Simulates and tallies gates in parallel; equal to counting the output of
/// [`simulate_trials`].
pub fn simulate_counts(model: &SourceModel, n_gates: u64, seed: u64) -> Result<ClickCounts> {
    if n_gates == 0 {
        return Err(Error::invalid("n_gates", "need at least one gate"));
    }
    let sampler = Sampler::new(model, seed)?;
    let patterns = (0..n_gates)
        .into_par_iter()
        .fold(
            || [0u64; 8],
            |mut acc, g| {
                acc[sampler.gate(g).pattern()] += 1;
                acc
            },
        )
        .reduce(
            || [0u64; 8],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    Ok(ClickCounts { n_gates, patterns })
}

/// Tally of the eight click patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClickCounts {
    pub n_gates: u64,
    /// Indexed by [`DetectionRecord::pattern`].
    pub patterns: [u64; 8],
}

pub const D1: usize = 1;
pub const D2: usize = 2;
pub const D3: usize = 4;

impl ClickCounts {
    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a DetectionRecord>) -> Self {
        let mut c = ClickCounts::default();
        for r in records {
            c.add(r);
        }
        c
    }

    pub fn add(&mut self, r: &DetectionRecord) {
        self.n_gates += 1;
        self.patterns[r.pattern()] += 1;
    }

    /// Gates in which every detector of `mask` clicked.
    pub fn count(&self, mask: usize) -> u64 {
        (0..8).filter(|p| p & mask == mask).map(|p| self.patterns[p]).sum()
    }

    pub fn probability(&self, mask: usize) -> f64 {
        self.count(mask) as f64 / self.n_gates as f64
    }

    pub fn n1(&self) -> u64 {
        self.count(D1)
    }
    pub fn n2(&self) -> u64 {
        self.count(D2)
    }
    pub fn n3(&self) -> u64 {
        self.count(D3)
    }
    pub fn n12(&self) -> u64 {
        self.count(D1 | D2)
    }
    pub fn n13(&self) -> u64 {
        self.count(D1 | D3)
    }
    pub fn n23(&self) -> u64 {
        self.count(D2 | D3)
    }
    pub fn n123(&self) -> u64 {
        self.count(D1 | D2 | D3)
    }
}

/// Plug-in single and coincidence probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probabilities {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub p12: f64,
    pub p13: f64,
    pub p123: f64,
    pub counts: ClickCounts,
}

impl From<ClickCounts> for Probabilities {
    fn from(c: ClickCounts) -> Self {
        Probabilities {
            p1: c.probability(D1),
            p2: c.probability(D2),
            p3: c.probability(D3),
            p12: c.probability(D1 | D2),
            p13: c.probability(D1 | D3),
            p123: c.probability(D1 | D2 | D3),
            counts: c,
        }
    }
}

pub fn estimate_probabilities<'a>(
    records: impl IntoIterator<Item = &'a DetectionRecord>,
) -> Result<Probabilities> {
    let counts = ClickCounts::from_records(records);
    if counts.n_gates == 0 {
        return Err(Error::EmptyRecords);
    }
    Ok(counts.into())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationEstimate {
    pub value: f64,
    /// Delta-method standard error.
    pub std_error: f64,
    pub counts: ClickCounts,
}

/// The correlation functions computed from click statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    /// Heralded anti-correlation `p1·p123 / (p12·p13)`.
    G2Zero,
    /// Signal–idler cross-correlation `(p12 + p13) / (p1·(p2 + p3))`.
    CrossCorrelation,
    /// Unheralded signal-arm autocorrelation `p23 / (p2·p3)`.
    SignalAutocorrelation,
}

impl Estimator {
    pub fn name(&self) -> &'static str {
        match self {
            Estimator::G2Zero => "g2_zero",
            Estimator::CrossCorrelation => "g_si",
            Estimator::SignalAutocorrelation => "g2_signal",
        }
    }

    /// Event masks the estimator depends on, and its value and gradient with
    /// respect to their probabilities.
    fn evaluate(&self, c: &ClickCounts) -> Result<(Vec<usize>, f64, Vec<f64>)> {
        let p = |m| c.probability(m);
        match self {
            Estimator::G2Zero => {
                let (p1, p123, p12, p13) = (p(D1), p(D1 | D2 | D3), p(D1 | D2), p(D1 | D3));
                if p12 == 0.0 || p13 == 0.0 {
                    return Err(Error::InsufficientCoincidences {
                        n12: c.n12(),
                        n13: c.n13(),
                        n_gates: c.n_gates,
                    });
                }
                let g = p1 * p123 / (p12 * p13);
                let grad = vec![p123 / (p12 * p13), p1 / (p12 * p13), -g / p12, -g / p13];
                Ok((vec![D1, D1 | D2 | D3, D1 | D2, D1 | D3], g, grad))
            }
            Estimator::CrossCorrelation => {
                let (p12, p13, p1, p2, p3) = (p(D1 | D2), p(D1 | D3), p(D1), p(D2), p(D3));
                let s = p2 + p3;
                if p1 == 0.0 || s == 0.0 {
                    return Err(Error::InsufficientSingles {
                        n1: c.n1(),
                        n23_sum: c.n2() + c.n3(),
                        n_gates: c.n_gates,
                    });
                }
                let g = (p12 + p13) / (p1 * s);
                let d = 1.0 / (p1 * s);
                let grad = vec![d, d, -g / p1, -g / s, -g / s];
                Ok((vec![D1 | D2, D1 | D3, D1, D2, D3], g, grad))
            }
            Estimator::SignalAutocorrelation => {
                let (p23, p2, p3) = (p(D2 | D3), p(D2), p(D3));
                if p2 == 0.0 || p3 == 0.0 {
                    return Err(Error::InsufficientSingles {
                        n1: c.n2().min(c.n3()),
                        n23_sum: c.n2() + c.n3(),
                        n_gates: c.n_gates,
                    });
                }
                let g = p23 / (p2 * p3);
                let grad = vec![1.0 / (p2 * p3), -g / p2, -g / p3];
                Ok((vec![D2 | D3, D2, D3], g, grad))
            }
        }
    }

    /// Value with a delta-method standard error. Each probability is the mean
    /// of an event indicator, so `Cov(p̂_a, p̂_b) = (p_{a∧b} − p_a·p_b)/n`.
    pub fn estimate(&self, counts: &ClickCounts) -> Result<CorrelationEstimate> {
        if counts.n_gates == 0 {
            return Err(Error::EmptyRecords);
        }
        let (masks, value, grad) = self.evaluate(counts)?;
        let n = counts.n_gates as f64;
        let mut var = 0.0;
        for (a, &ma) in masks.iter().enumerate() {
            for (b, &mb) in masks.iter().enumerate() {
                let cov = (counts.probability(ma | mb) - counts.probability(ma) * counts.probability(mb)) / n;
                var += grad[a] * grad[b] * cov;
            }
        }
        Ok(CorrelationEstimate {
            value,
            std_error: var.max(0.0).sqrt(),
            counts: *counts,
        })
    }

    /// Bootstrap standard error from `resamples` multinomial redraws of the
    /// pattern counts. Resamples where the estimator is undefined are skipped.
    pub fn bootstrap_std_error(&self, counts: &ClickCounts, resamples: usize, seed: u64) -> Result<f64> {
        if counts.n_gates == 0 {
            return Err(Error::EmptyRecords);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut values = Vec::with_capacity(resamples);
        for _ in 0..resamples {
            let mut remaining = counts.n_gates;
            let mut mass = 1.0;
            let mut patterns = [0u64; 8];
            for (k, slot) in patterns.iter_mut().enumerate() {
                let pk = counts.patterns[k] as f64 / counts.n_gates as f64;
                *slot = if k == 7 || mass <= 0.0 {
                    remaining
                } else {
                    let q = (pk / mass).clamp(0.0, 1.0);
                    Binomial::new(remaining, q)
                        .map_err(|e| Error::invalid("bootstrap", e.to_string()))?
                        .sample(&mut rng)
                };
                remaining -= *slot;
                mass -= pk;
            }
            let resampled = ClickCounts {
                n_gates: counts.n_gates,
                patterns,
            };
            if let Ok((_, v, _)) = self.evaluate(&resampled) {
                values.push(v);
            }
        }
        if values.len() < 2 {
            return Err(Error::invalid("bootstrap", "estimator undefined on almost every resample"));
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64;
        Ok(var.sqrt())
    }
}

pub fn g2_zero(p: &Probabilities) -> Result<CorrelationEstimate> {
    Estimator::G2Zero.estimate(&p.counts)
}

pub fn g_si(p: &Probabilities) -> Result<CorrelationEstimate> {
    Estimator::CrossCorrelation.estimate(&p.counts)
}

pub fn signal_g2(p: &Probabilities) -> Result<CorrelationEstimate> {
    Estimator::SignalAutocorrelation.estimate(&p.counts)
}

/// Writes `gate,d1,d2,d3` rows with 0/1 flags.
pub fn write_records_csv(
    records: impl IntoIterator<Item = DetectionRecord>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "gate,d1,d2,d3")?;
    for r in records {
        writeln!(w, "{},{},{},{}", r.gate, r.d1 as u8, r.d2 as u8, r.d3 as u8)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records_csv(path: impl AsRef<Path>) -> Result<Vec<DetectionRecord>> {
    let path = path.as_ref();
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.display().to_string(),
        line,
        message,
    };
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = k + 1;
        if k == 0 {
            if line.trim() != "gate,d1,d2,d3" {
                return Err(parse_err(1, format!("expected header gate,d1,d2,d3, got {line:?}")));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 4 {
            return Err(parse_err(lineno, format!("expected 4 columns, got {}", cols.len())));
        }
        let gate = cols[0]
            .parse()
            .map_err(|e| parse_err(lineno, format!("column gate: {e}")))?;
        let flag = |name: &str, s: &str| match s {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(parse_err(lineno, format!("column {name}: expected 0 or 1, got {other:?}"))),
        };
        out.push(DetectionRecord {
            gate,
            d1: flag("d1", cols[1])?,
            d2: flag("d2", cols[2])?,
            d3: flag("d3", cols[3])?,
        });
    }
    Ok(out)
}

/// Writes `estimator,value,stderr,n_gates` rows.
pub fn write_estimates_csv(
    estimates: &[(Estimator, CorrelationEstimate)],
    path: impl AsRef<Path>,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "estimator,value,stderr,n_gates")?;
    for (est, e) in estimates {
        writeln!(
            w,
            "{},{:.16e},{:.16e},{}",
            est.name(),
            e.value,
            e.std_error,
            e.counts.n_gates
        )?;
    }
    w.flush()?;
    Ok(())
}
