use crate::error::{Error, Result};
use crate::models::{solve_h, ErrorDist, ModelKind, ModelSpec, ParamVector, SpatialDesign, SpatialField};
use crate::rng::{self, Purpose, StreamRng};
use crate::weights::WeightMatrix;

pub const DEFAULT_MAX_REJECTIONS: usize = 100;

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub spec: ModelSpec,
    pub params: ParamVector,
    pub design: SpatialDesign,
    pub seed: u64,
    pub max_rejections: usize,
}

impl SimConfig {
    pub fn new(
        spec: ModelSpec,
        params: ParamVector,
        w1_star: WeightMatrix,
        w2_star: WeightMatrix,
        seed: u64,
    ) -> Result<Self> {
        Ok(SimConfig {
            spec,
            params,
            design: SpatialDesign::new(w1_star, w2_star)?,
            seed,
            max_rejections: DEFAULT_MAX_REJECTIONS,
        })
    }

    pub fn with_max_rejections(mut self, max_rejections: usize) -> Result<Self> {
        if max_rejections == 0 {
            return Err(Error::InvalidInput("max_rejections must be at least 1".into()));
        }
        self.max_rejections = max_rejections;
        Ok(self)
    }

    fn check(&self) -> Result<()> {
        if self.max_rejections == 0 {
            return Err(Error::InvalidInput("max_rejections must be at least 1".into()));
        }
        if self.spec.kind == ModelKind::Spgarch
            && !self.design.is_triangular()
            && self.spec.error_dist == ErrorDist::StandardNormal
        {
            return Err(Error::Precondition(
                "spGARCH on weights without a triangular order needs truncated_normal errors".into(),
            ));
        }
        Ok(())
    }
}

/// Draws one field from `rng`. Draws whose `h` is not strictly positive are
/// rejected and redrawn, at most `max_rejections` times in total.
pub fn simulate_with_rng(cfg: &SimConfig, rng: &mut StreamRng) -> Result<SpatialField> {
    cfg.check()?;
    let n = cfg.design.n();
    for _ in 0..cfg.max_rejections {
        let eps = rng::draw_innovations(n, &cfg.spec.error_dist, rng);
        match solve_h(&eps, &cfg.params, &cfg.design, &cfg.spec) {
            Ok(h) => {
                let y = h.iter().zip(&eps).map(|(h, e)| h.sqrt() * e).collect();
                let mut field = SpatialField::from_observations(y);
                field.h = Some(h);
                field.eps = Some(eps);
                return Ok(field);
            }
            Err(Error::NonPositiveH { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::RejectionBudgetExhausted {
        attempts: cfg.max_rejections,
    })
}

/// Replication `rep` of the configuration; pure in `(cfg, rep)`.
pub fn simulate_replication(cfg: &SimConfig, rep: u64) -> Result<SpatialField> {
    let mut rng = rng::stream(cfg.seed, Purpose::Simulation, cfg.spec.kind.code(), rep);
    simulate_with_rng(cfg, &mut rng)
}

pub fn simulate_field(cfg: &SimConfig) -> Result<SpatialField> {
    simulate_replication(cfg, 0)
}
