use serde::{Deserialize, Serialize};

/// Per-round cost model of the learning task.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Workload {
    pub n_parameters: u64,
    #[serde(default = "default_fpps")]
    pub flops_per_param_sample: f64,
    pub samples_per_round: u64,
    #[serde(default = "default_bpp")]
    pub bytes_per_parameter: u64,
    #[serde(default = "default_agg")]
    pub agg_flops_per_param_per_model: f64,
}

fn default_fpps() -> f64 {
    6.0
}

fn default_bpp() -> u64 {
    4
}

fn default_agg() -> f64 {
    2.0
}

impl Workload {
    /// Multilayer perceptron of 199,210 parameters, 100 samples per round.
    pub fn mlp() -> Self {
        Workload {
            n_parameters: 199_210,
            flops_per_param_sample: 6.0,
            samples_per_round: 100,
            bytes_per_parameter: 4,
            agg_flops_per_param_per_model: 2.0,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if self.n_parameters == 0
            || self.samples_per_round == 0
            || self.bytes_per_parameter == 0
            || !positive(self.flops_per_param_sample)
            || !positive(self.agg_flops_per_param_per_model)
        {
            return Err("workload values must all be strictly positive".into());
        }
        Ok(())
    }

    pub fn training_flops(&self) -> f64 {
        self.n_parameters as f64 * self.flops_per_param_sample * self.samples_per_round as f64
    }

    pub fn aggregation_flops(&self, n_models: usize) -> f64 {
        self.n_parameters as f64 * self.agg_flops_per_param_per_model * n_models as f64
    }

    pub fn model_bytes(&self) -> u64 {
        self.n_parameters * self.bytes_per_parameter
    }
}
