//! Structure learning: islands, bridging, stacking and the level-by-level loop.

mod bridge;
mod islands;
mod mi;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use bridge::{bridge_islands, hard_assign, stack_models};
pub use islands::{build_islands, one_island, ud_test, Dimensionality};
pub use mi::{mi_matrix, mi_pair, MIMatrix};
pub(crate) use mi::mi_from_joint;

use crate::corpus::BinaryDataset;
use crate::error::{Error, Result};
use crate::estimation::{em, stochastic_em, EmOptions, FreeParameterSet};
use crate::ltm::LatentTreeModel;
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct HltaOptions {
    /// The loop stops once a pass yields fewer islands than this.
    pub tau: usize,
    /// UD-test threshold.
    pub delta: f64,
    /// EM steps on the final model.
    pub kappa: usize,
    /// Settings for the sub-model EM runs.
    pub em: EmOptions,
    pub max_levels: Option<u32>,
    /// With more than one batch, structure is learned on the first batch and
    /// the final pass is a stochastic EM sweep over all batches.
    pub batches: usize,
    pub seed: u64,
}

impl Default for HltaOptions {
    fn default() -> Self {
        HltaOptions { tau: 30, delta: 3.0, kappa: 50, em: EmOptions::default(), max_levels: None, batches: 1, seed: 0 }
    }
}

impl HltaOptions {
    pub(crate) fn em_stream(&self, label: &str, index: u64) -> EmOptions {
        EmOptions { seed: seed::derive_seed(self.seed, label, index), ..self.em.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassReport {
    pub level: u32,
    /// Variables grouped in this pass.
    pub variables: usize,
    pub islands: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnReport {
    pub passes: Vec<PassReport>,
    pub levels: u32,
    pub latents_per_level: Vec<usize>,
    pub final_em_seconds: f64,
    /// EM iterations, or one update per batch for the stochastic pass.
    pub final_updates: usize,
    pub final_loglik: f64,
}

#[derive(Debug, Clone)]
pub struct HltaOutcome {
    pub model: LatentTreeModel,
    pub report: LearnReport,
}

/// Learn a hierarchical latent tree model from binary document data.
pub fn pem_hlta(data: &BinaryDataset, opts: &HltaOptions) -> Result<HltaOutcome> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    if opts.tau == 0 || opts.batches == 0 {
        return Err(Error::precondition("tau and batches must be at least 1"));
    }
    if opts.max_levels == Some(0) {
        return Err(Error::precondition("max_levels must be at least 1"));
    }
    let batches = if opts.batches > 1 { data.partition_batches(opts.batches, opts.seed)? } else { Vec::new() };
    let base = batches.first().unwrap_or(data);

    let mut model: Option<LatentTreeModel> = None;
    let mut passes = Vec::new();
    let mut level_data = base.clone();
    let mut level = 1u32;
    loop {
        let start = Instant::now();
        let islands = build_islands(&level_data, level, opts)?;
        let reduced = islands.len() < level_data.num_variables();
        if !reduced && model.is_some() {
            break;
        }
        let upper = bridge_islands(&islands, &level_data, &opts.em_stream("bridge", u64::from(level)))?;
        model = Some(match model {
            None => upper,
            Some(lower) => stack_models(&upper, &lower)?,
        });
        passes.push(PassReport {
            level,
            variables: level_data.num_variables(),
            islands: islands.len(),
            seconds: start.elapsed().as_secs_f64(),
        });
        if islands.len() < opts.tau || !reduced || opts.max_levels == Some(level) {
            break;
        }
        level_data = hard_assign(model.as_ref().unwrap(), base)?;
        level += 1;
    }
    let model = model.unwrap();

    let start = Instant::now();
    let (model, final_updates, final_loglik) = if opts.batches > 1 {
        let out = stochastic_em(&model, &batches, opts.em.smoothing)?;
        let ll = crate::inference::log_likelihood(&out.model, data)?;
        (out.model, out.updates, ll)
    } else if opts.kappa > 0 {
        let final_opts = EmOptions {
            max_iterations: opts.kappa,
            restarts: 1,
            loglik_tolerance: f64::MIN_POSITIVE,
            ..opts.em_stream("final-em", 0)
        };
        let out = em(&model, data, &final_opts, &FreeParameterSet::All)?;
        (out.model, out.iterations, out.loglik)
    } else {
        let ll = crate::inference::log_likelihood(&model, data)?;
        (model, 0, ll)
    };
    let levels = model.top_level();
    let latents_per_level = (1..=levels).map(|l| model.latents_at_level(l).len()).collect();
    Ok(HltaOutcome {
        report: LearnReport {
            passes,
            levels,
            latents_per_level,
            final_em_seconds: start.elapsed().as_secs_f64(),
            final_updates,
            final_loglik,
        },
        model,
    })
}
