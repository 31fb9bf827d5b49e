use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{GeneticsError, LifecycleEvent};
use crate::geometry::Point2;
use crate::network::{Network, PartnerId};

/// Brownian jiggle of partners in a viscous environment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkParams {
    pub viscosity: f64,
    /// Diffusion before damping by viscosity.
    pub diffusion: f64,
    pub dt: f64,
}

impl Default for WalkParams {
    fn default() -> Self {
        WalkParams {
            viscosity: 1.0,
            diffusion: 0.01,
            dt: 1.0,
        }
    }
}

impl WalkParams {
    pub fn effective_diffusion(&self) -> f64 {
        self.diffusion / self.viscosity
    }

    /// Per-axis variance of a single step.
    pub fn step_variance(&self) -> f64 {
        2.0 * self.effective_diffusion() * self.dt
    }

    pub fn validate(&self) -> Result<(), GeneticsError> {
        let ok = self.viscosity > 0.0
            && self.viscosity.is_finite()
            && self.diffusion >= 0.0
            && self.diffusion.is_finite()
            && self.dt > 0.0
            && self.dt.is_finite();
        if ok {
            Ok(())
        } else {
            Err(GeneticsError::InvalidConfig(
                "walk needs viscosity > 0, diffusion >= 0 and dt > 0".into(),
            ))
        }
    }
}

/// Displaces every free partner by an independent Gaussian step through the
/// kinetic move, so collisions truncate a step rather than break topology.
/// The anchor and segment endpoints stay put; every partner still draws its
/// two normals so the stream does not depend on which partners move.
pub fn random_walk_step<R: Rng + ?Sized>(
    net: &mut Network,
    params: &WalkParams,
    rng: &mut R,
) -> Result<Vec<LifecycleEvent>, GeneticsError> {
    params.validate()?;
    let sigma = params.step_variance().sqrt();
    let universe = net.universe();
    let margin = 1e-6 * universe.width().min(universe.height());
    let ids: Vec<PartnerId> = net.partners.keys().copied().collect();
    let mut events = Vec::new();
    for id in ids {
        let dx: f64 = rng.sample(StandardNormal);
        let dy: f64 = rng.sample(StandardNormal);
        if sigma == 0.0 || net.anchor == Some(id) || net.is_locked(id) {
            continue;
        }
        let from = net.position(id)?;
        let target = universe.clamp_inside(Point2::new(from.x + sigma * dx, from.y + sigma * dy), margin);
        net.move_partner(id, target)?;
        events.push(LifecycleEvent::Walk {
            partner: id,
            from,
            to: net.position(id)?,
        });
    }
    Ok(events)
}
