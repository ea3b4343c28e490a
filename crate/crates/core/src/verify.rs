//! Randomized check of the closed-form update against the numerical oracle.
//!
//! Instance `i` draws its problem from stream 0 of seed `seed + i`:
//! `μ_β` and `g` with standard normal entries, `φ ~ U[0.5, 2]`,
//! `δ − log Z ~ U[0.5, 3]` and `log Z ~ U[−2, 2]`. Dimensions and norm orders
//! cycle so that every (dim, p) pair is covered once the instance count
//! reaches the product of the list lengths.

use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::align::{
    closed_form_update, constraint_radius, cosine, kkt_check, oracle_maximize, p_norm, ConstraintSpec, KktReport,
    OracleOptions,
};
use crate::rng::stream_rng;
use crate::{Error, Logits, Result};

/// Deliberate solver bugs for exercising the failure path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    /// Take a step 10% longer than the constraint allows.
    InflateRadius,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyConfig {
    pub instances: usize,
    pub dims: Vec<usize>,
    pub ps: Vec<f64>,
    /// Relative radius tolerance and absolute KKT tolerance.
    pub tol: f64,
    pub min_cosine: f64,
    pub seed: u64,
    pub fault: Option<Fault>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            instances: 200,
            dims: vec![3, 8, 16, 64],
            ps: vec![1.5, 2.0, 3.0, 4.0],
            tol: 1e-6,
            min_cosine: 0.999,
            seed: 0,
            fault: None,
        }
    }
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.instances == 0 {
            return Err(Error::Config("instances must be at least 1".into()));
        }
        if self.dims.is_empty() || self.dims.contains(&0) {
            return Err(Error::Config("dims must be a non-empty list of positive sizes".into()));
        }
        if self.ps.is_empty() {
            return Err(Error::Config("p list must not be empty".into()));
        }
        for &p in &self.ps {
            crate::align::check_norm_order(p)?;
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.min_cosine > -1.0 && self.min_cosine <= 1.0) {
            return Err(Error::Config(format!(
                "min_cosine must lie in (-1, 1], got {}",
                self.min_cosine
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceResult {
    pub index: usize,
    pub seed: u64,
    pub dim: usize,
    pub p: f64,
    pub cosine: f64,
    /// `|‖μ* − μ_β‖_p − r| / r` of the closed form.
    pub radius_residual: f64,
    /// Same quantity for the oracle.
    pub oracle_radius_residual: f64,
    pub kkt: KktReport,
    /// Set when the oracle itself failed.
    pub error: Option<String>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub config: VerifyConfig,
    pub results: Vec<InstanceResult>,
    pub min_cosine: f64,
    pub max_radius_residual: f64,
    pub max_stationarity_residual: f64,
    pub elapsed: Duration,
}

impl VerifyReport {
    pub fn failures(&self) -> impl Iterator<Item = &InstanceResult> {
        self.results.iter().filter(|r| !r.passed)
    }

    pub fn passed(&self) -> bool {
        self.failures().next().is_none()
    }

    pub fn summary(&self) -> String {
        let failed = self.failures().count();
        let mut out = format!(
            "{} instances, {} failed, min cosine {:.12}, max radius residual {:.3e}, \
max stationarity residual {:.3e}, {:.3}s\n",
            self.results.len(),
            failed,
            self.min_cosine,
            self.max_radius_residual,
            self.max_stationarity_residual,
            self.elapsed.as_secs_f64()
        );
        for r in self.failures() {
            out.push_str(&format!(
                "FAIL instance {} seed {} dim {} p {}: cosine {:.9}, radius residual {:.3e}, \
oracle radius residual {:.3e}, kkt {:?}{}\n",
                r.index,
                r.seed,
                r.dim,
                r.p,
                r.cosine,
                r.radius_residual,
                r.oracle_radius_residual,
                r.kkt,
                r.error.as_deref().map(|e| format!(", error: {e}")).unwrap_or_default()
            ));
        }
        out
    }
}

/// A random problem and its seed.
#[derive(Debug, Clone)]
pub struct Instance {
    pub seed: u64,
    pub mu_beta: Logits,
    pub grad: Logits,
    pub spec: ConstraintSpec,
}

impl Instance {
    pub fn generate(seed: u64, dim: usize, p: f64) -> Result<Self> {
        let mut rng = stream_rng(seed, 0);
        let mut normal = |n: usize| -> Result<Logits> {
            Logits::new((0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
        };
        let mu_beta = normal(dim)?;
        let grad = normal(dim)?;
        let phi = rng.random_range(0.5..2.0);
        let gap = rng.random_range(0.5..3.0);
        let log_z = rng.random_range(-2.0..2.0);
        let spec = ConstraintSpec::new(p, phi, log_z + gap, log_z)?;
        Ok(Self {
            seed,
            mu_beta,
            grad,
            spec,
        })
    }
}

fn check_instance(index: usize, cfg: &VerifyConfig) -> Result<InstanceResult> {
    let dim = cfg.dims[index % cfg.dims.len()];
    let p = cfg.ps[(index / cfg.dims.len()) % cfg.ps.len()];
    let seed = cfg.seed.wrapping_add(index as u64);
    let inst = Instance::generate(seed, dim, p)?;
    let r = constraint_radius(&inst.spec)?;

    let mut sol = closed_form_update(&inst.mu_beta, &inst.grad, &inst.spec)?;
    if cfg.fault == Some(Fault::InflateRadius) {
        let stretched = sol
            .mu_star
            .iter()
            .zip(inst.mu_beta.iter())
            .map(|(s, m)| m + 1.1 * (s - m));
        sol.mu_star = Logits::new(stretched.collect())?;
    }
    let step: Vec<f64> = sol
        .mu_star
        .iter()
        .zip(inst.mu_beta.iter())
        .map(|(s, m)| s - m)
        .collect();
    let radius_residual = (p_norm(&step, p) - r).abs() / r;
    let kkt = kkt_check(&sol, &inst.mu_beta, &inst.grad, &inst.spec, cfg.tol);

    let (cosine, oracle_radius_residual, error) =
        match oracle_maximize(&inst.mu_beta, &inst.grad, p, r, OracleOptions::default()) {
            Ok(o) => {
                let o_step: Vec<f64> = o.iter().zip(inst.mu_beta.iter()).map(|(a, m)| a - m).collect();
                (cosine(&step, &o_step), (p_norm(&o_step, p) - r).abs() / r, None)
            }
            Err(e) => (f64::NAN, f64::NAN, Some(e.to_string())),
        };

    let passed = error.is_none()
        && cosine >= cfg.min_cosine
        && radius_residual <= cfg.tol
        && oracle_radius_residual <= cfg.tol
        && kkt.passed();
    Ok(InstanceResult {
        index,
        seed,
        dim,
        p,
        cosine,
        radius_residual,
        oracle_radius_residual,
        kkt,
        error,
        passed,
    })
}

/// Run every instance. Instances are independent and run in parallel.
pub fn run_verification(cfg: &VerifyConfig) -> Result<VerifyReport> {
    cfg.validate()?;
    let started = Instant::now();
    let results = (0..cfg.instances)
        .into_par_iter()
        .map(|i| check_instance(i, cfg))
        .collect::<Result<Vec<_>>>()?;
    let elapsed = started.elapsed();

    let min_cosine = results.iter().map(|r| r.cosine).fold(f64::INFINITY, f64::min);
    let max_radius_residual = results.iter().map(|r| r.radius_residual).fold(0.0, f64::max);
    let max_stationarity_residual = results.iter().map(|r| r.kkt.stationarity_residual).fold(0.0, f64::max);
    Ok(VerifyReport {
        config: cfg.clone(),
        results,
        min_cosine,
        max_radius_residual,
        max_stationarity_residual,
        elapsed,
    })
}
