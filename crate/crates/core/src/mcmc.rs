//! Single-vertex Gibbs chain on `G_n`.
//!
//! Each step picks a vertex and replaces it with a uniform draw from its move
//! region. The region is symmetric in the old and new positions, so every
//! proposal is accepted. Configurations the region construction does not
//! define leave the state unchanged.

use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{move_region, sample_region, Point};
use crate::homotopy::cyclic_word_of;
use crate::loops::{validate_state, GnParams, PLLoop};
use crate::ratefn::RadialRate;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum SweepMode {
    /// One unit of work is a single step at a uniformly chosen index.
    UniformIndex,
    /// One unit of work visits every index once in a fresh random order.
    RandomPermutation,
}

#[derive(Clone, Debug)]
pub struct SamplerConfig {
    pub params: GnParams,
    pub eps: f64,
    pub sweep_mode: SweepMode,
    pub iterations: u64,
    pub thin: u64,
    pub burnin: u64,
    pub seed: u64,
    /// Recompute the cyclic word every this many single steps; 0 checks
    /// only at save points.
    pub check_word_every: u64,
}

impl SamplerConfig {
    pub fn new(params: GnParams) -> Self {
        let eps = params.edge_bound();
        SamplerConfig {
            params,
            eps,
            sweep_mode: SweepMode::RandomPermutation,
            iterations: 1000,
            thin: 100,
            burnin: 0,
            seed: 0,
            check_word_every: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bound = self.params.edge_bound();
        if !(self.eps > 0.0 && self.eps <= bound) {
            return Err(Error::InvalidInput(format!(
                "eps = {} must lie in (0, R/(n+1) = {bound}]",
                self.eps
            )));
        }
        if self.eps >= self.params.punctures.reach() {
            return Err(Error::InvalidInput(format!(
                "eps = {} must be below reach(Z) = {}",
                self.eps,
                self.params.punctures.reach()
            )));
        }
        if self.iterations < 1 || self.thin < 1 {
            return Err(Error::InvalidInput(
                "iterations and thin must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Number of loops `run` saves.
    pub fn save_count(&self) -> u64 {
        self.iterations / self.thin
    }
}

/// Outcome of one attempted single-vertex move.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    Moved,
    /// The move region was degenerate; nothing changed.
    Degenerate,
    /// Rejection sampling exhausted its budget; nothing changed.
    SamplingFailed,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StepCounters {
    pub steps: u64,
    pub degenerate: u64,
    pub sampling_failures: u64,
}

impl StepCounters {
    pub fn no_ops(&self) -> u64 {
        self.degenerate + self.sampling_failures
    }
}

/// A running chain: the current loop, its generator, and counters.
pub struct Chain<'a> {
    cfg: &'a SamplerConfig,
    state: PLLoop,
    rng: ChaCha8Rng,
    counters: StepCounters,
    order: Vec<usize>,
}

impl<'a> Chain<'a> {
    /// Starts from `initial`, which must be a valid state of `G_n`.
    pub fn new(cfg: &'a SamplerConfig, initial: PLLoop) -> Result<Self> {
        cfg.validate()?;
        let report = validate_state(&initial, &cfg.params);
        if !report.is_valid() {
            return Err(Error::InvalidInput(format!(
                "initial state is not in G_n: long edges {:?}, puncture hits {:?}, class match {}{}",
                report.long_edges,
                report.puncture_hits,
                report.class_match,
                report.diagnostic.map(|d| format!(" ({d})")).unwrap_or_default()
            )));
        }
        let order = (0..initial.len()).collect();
        Ok(Chain {
            cfg,
            state: initial,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            counters: StepCounters::default(),
            order,
        })
    }

    pub fn state(&self) -> &PLLoop {
        &self.state
    }

    pub fn counters(&self) -> StepCounters {
        self.counters
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Resample vertex `k` uniformly from its move region.
    pub fn step(&mut self, k: usize) -> Result<StepOutcome> {
        let m = self.state.len();
        if k >= m {
            return Err(Error::InvalidInput(format!(
                "vertex index {k} out of range 0..{m}"
            )));
        }
        let v = self.state.vertices();
        let (prev, cur, next) = (v[(k + m - 1) % m], v[k], v[(k + 1) % m]);
        self.counters.steps += 1;
        let outcome = match move_region(prev, cur, next, self.cfg.eps, &self.cfg.params.punctures) {
            Ok(region) => match sample_region(&region, &mut self.rng) {
                Ok(p) => {
                    self.state.vertices_mut()[k] = p;
                    StepOutcome::Moved
                }
                Err(Error::SamplingFailure { .. }) => {
                    self.counters.sampling_failures += 1;
                    log::debug!(
                        "sampling failure at step {} vertex {k}",
                        self.counters.steps
                    );
                    StepOutcome::SamplingFailed
                }
                Err(e) => return Err(e),
            },
            Err(Error::DegenerateGeometry(reason)) => {
                self.counters.degenerate += 1;
                log::debug!("no-op at step {} vertex {k}: {reason}", self.counters.steps);
                StepOutcome::Degenerate
            }
            Err(e) => return Err(e),
        };
        let every = self.cfg.check_word_every;
        if every > 0 && self.counters.steps % every == 0 {
            self.check_word()?;
        }
        Ok(outcome)
    }

    /// One step at a uniformly chosen index.
    pub fn random_step(&mut self) -> Result<StepOutcome> {
        let k = self.rng.random_range(0..self.state.len());
        self.step(k)
    }

    /// Visit every index once in a fresh uniform random order.
    pub fn sweep(&mut self) -> Result<()> {
        self.order.shuffle(&mut self.rng);
        for i in 0..self.order.len() {
            let k = self.order[i];
            self.step(k)?;
        }
        Ok(())
    }

    /// One unit of work for the configured sweep mode.
    pub fn advance(&mut self) -> Result<()> {
        match self.cfg.sweep_mode {
            SweepMode::UniformIndex => self.random_step().map(|_| ()),
            SweepMode::RandomPermutation => self.sweep(),
        }
    }

    fn check_word(&self) -> Result<()> {
        let word =
            cyclic_word_of(self.state.vertices(), &self.cfg.params.structure).map_err(|e| {
                Error::Integrity(format!(
                    "word extraction failed after step {}: {e}",
                    self.counters.steps
                ))
            })?;
        if &word != self.cfg.params.class.target() {
            return Err(Error::Integrity(format!(
                "class changed after step {}: {word} != {}",
                self.counters.steps,
                self.cfg.params.class.target()
            )));
        }
        Ok(())
    }

    /// Full `G_n` revalidation of the current state.
    pub fn check_state(&self) -> Result<()> {
        let report = validate_state(&self.state, &self.cfg.params);
        if report.is_valid() {
            return Ok(());
        }
        Err(Error::Integrity(format!(
            "invalid state after step {}: long edges {:?}, puncture hits {:?}, class match {}{}",
            self.counters.steps,
            report.long_edges,
            report.puncture_hits,
            report.class_match,
            report
                .diagnostic
                .map(|d| format!(" ({d})"))
                .unwrap_or_default()
        )))
    }
}

/// One saved loop. `rate` is written as `null` when infinite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaveRecord {
    pub step: u64,
    pub length: f64,
    #[serde(with = "nullable_rate")]
    pub rate: f64,
    pub vertices: Vec<Point>,
}

mod nullable_rate {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ChainTrace {
    pub records: Vec<SaveRecord>,
    pub counters: StepCounters,
}

impl ChainTrace {
    pub fn from_records(records: Vec<SaveRecord>) -> Self {
        ChainTrace {
            records,
            counters: StepCounters::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.length).collect()
    }

    pub fn loops(&self) -> Result<Vec<PLLoop>> {
        self.records
            .iter()
            .map(|r| PLLoop::new(r.vertices.clone()))
            .collect()
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self> {
        let mut records = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let r: SaveRecord = serde_json::from_str(&line)
                .map_err(|e| Error::InvalidInput(format!("trace line {}: {e}", i + 1)))?;
            records.push(r);
        }
        Ok(ChainTrace::from_records(records))
    }
}

/// Run `burnin + iterations` units of work from `initial`, saving after
/// every `thin`-th unit past burn-in. Every saved state is revalidated.
pub fn run(cfg: &SamplerConfig, initial: PLLoop) -> Result<ChainTrace> {
    let rate = RadialRate::new(cfg.params.radius)?;
    let mut chain = Chain::new(cfg, initial)?;
    for _ in 0..cfg.burnin {
        chain.advance()?;
    }
    let mut records = Vec::with_capacity(cfg.save_count() as usize);
    for unit in 1..=cfg.iterations {
        chain.advance()?;
        if unit % cfg.thin == 0 {
            chain.check_state()?;
            let lp = chain.state();
            records.push(SaveRecord {
                step: cfg.burnin + unit,
                length: lp.length(),
                rate: rate.loop_rate(lp.vertices()),
                vertices: lp.vertices().to_vec(),
            });
        }
    }
    Ok(ChainTrace {
        records,
        counters: chain.counters(),
    })
}

/// Run several configurations, optionally on separate threads. Results keep
/// the input order.
pub fn run_many(
    cfgs: &[SamplerConfig],
    initial: &PLLoop,
    parallel: bool,
) -> Vec<Result<ChainTrace>> {
    if !parallel {
        return cfgs.iter().map(|c| run(c, initial.clone())).collect();
    }
    std::thread::scope(|s| {
        let handles: Vec<_> = cfgs
            .iter()
            .map(|c| s.spawn(move || run(c, initial.clone())))
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(Error::Invariant("chain thread panicked".into())))
            })
            .collect()
    })
}
