//! End-to-end estimation: exposure, sample, both stages, effects.

use serde::{Deserialize, Serialize};

use crate::effects::{effects_table, EffectsTable};
use crate::error::Result;
use crate::panel::{compute_exposure, EstimationSample, ExposureSpec, Panel};
use crate::stage1::{estimate_stage1, transform, Stage1Result, TransformedSample};
use crate::stage2::{fit_stage2, FitOptions, SieveSpec, Stage2Result};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PipelineSpec {
    pub exposure: ExposureSpec,
    pub sieve: SieveSpec,
    pub fit: FitOptions,
}

#[derive(Debug, Clone)]
pub struct Estimates {
    pub spec: PipelineSpec,
    pub sample: EstimationSample,
    pub stage1: Stage1Result,
    pub data: TransformedSample,
    pub stage2: Stage2Result,
    pub effects: EffectsTable,
}

impl Estimates {
    /// Recovered `omega + alpha_0` per lag-aligned row.
    pub fn omega(&self) -> &[f64] {
        &self.stage2.omega_plus_const
    }

    /// Current-period export status per lag-aligned row.
    pub fn exporter_now(&self) -> Vec<bool> {
        self.sample
            .pairs
            .iter()
            .map(|p| self.sample.obs[p.current].x > 0.0)
            .collect()
    }
}

pub fn run_pipeline(panel: &Panel, spec: &PipelineSpec) -> Result<Estimates> {
    let exposure = compute_exposure(panel, spec.exposure);
    let sample = EstimationSample::build(panel, &exposure)?;
    estimate_sample(sample, spec)
}

/// Both stages on an already assembled sample.
pub fn estimate_sample(sample: EstimationSample, spec: &PipelineSpec) -> Result<Estimates> {
    let stage1 = estimate_stage1(&sample)?;
    let data = transform(&sample, &stage1);
    let stage2 = fit_stage2(&data, spec.sieve, &spec.fit)?;
    let effects = effects_table(&stage2, &data);
    Ok(Estimates {
        spec: spec.clone(),
        sample,
        stage1,
        data,
        stage2,
        effects,
    })
}
