//! End-to-end estimators: build the objective, initialize, run the alternating solver.

use std::fmt;
use std::str::FromStr;

use crate::amm::{solve_amm_from, AmmConfig, AmmResult};
use crate::error::PoseError;
use crate::gec::{build_gec_form, RayCorrespondence};
use crate::geometry::{Pose, Translation};
use crate::gpnp::{build_gpnp_form, PointRayCorrespondence};
use crate::init::{init_absolute_linear, init_identity, init_relative_17pt};
use crate::upnp::build_upnp_form;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SolverKind {
    /// Generalized epipolar constraint, relative pose.
    AmmGec,
    /// Point-to-ray distance, absolute pose.
    AmmGpnp,
    /// Depth-eliminated ray residual, absolute pose.
    AmmUpnp,
}

impl SolverKind {
    pub const ALL: [SolverKind; 3] = [SolverKind::AmmGec, SolverKind::AmmGpnp, SolverKind::AmmUpnp];

    pub fn name(&self) -> &'static str {
        match self {
            SolverKind::AmmGec => "amm-gec",
            SolverKind::AmmGpnp => "amm-gpnp",
            SolverKind::AmmUpnp => "amm-upnp",
        }
    }

    pub fn is_relative(&self) -> bool {
        matches!(self, SolverKind::AmmGec)
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown solver '{s}' (expected amm-gec, amm-gpnp or amm-upnp)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitKind {
    /// 17-point linear estimate (relative) or linear stationary point (absolute).
    #[default]
    Linear,
    Identity,
}

impl FromStr for InitKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" => Ok(InitKind::Linear),
            "identity" => Ok(InitKind::Identity),
            _ => Err(format!("unknown initializer '{s}' (expected linear or identity)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Correspondences {
    Absolute(Vec<PointRayCorrespondence>),
    Relative(Vec<RayCorrespondence>),
}

impl Correspondences {
    pub fn len(&self) -> usize {
        match self {
            Correspondences::Absolute(c) => c.len(),
            Correspondences::Relative(c) => c.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_relative(&self) -> bool {
        matches!(self, Correspondences::Relative(_))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolveError {
    #[error("solver {solver} cannot be used with {kind} correspondences")]
    KindMismatch { solver: SolverKind, kind: &'static str },
    #[error(transparent)]
    Pose(#[from] PoseError),
}

/// Runs `solver` on `data`. `t0` overrides the initializer's translation.
pub fn estimate_pose(
    solver: SolverKind,
    data: &Correspondences,
    init: InitKind,
    t0: Option<Translation>,
    config: &AmmConfig,
) -> Result<AmmResult, SolveError> {
    let mismatch = |kind| SolveError::KindMismatch { solver, kind };
    let with_t0 = |mut p: Pose| {
        if let Some(t) = t0 {
            p.translation = t;
        }
        p
    };
    match (solver, data) {
        (SolverKind::AmmGec, Correspondences::Relative(corrs)) => {
            let form = build_gec_form(corrs)?;
            let start = match init {
                InitKind::Linear => init_relative_17pt(corrs)?,
                InitKind::Identity => init_identity(),
            };
            Ok(solve_amm_from(&form, &with_t0(start), config)?)
        }
        (SolverKind::AmmGpnp, Correspondences::Absolute(corrs)) => {
            let form = build_gpnp_form(corrs)?.form;
            let start = match init {
                InitKind::Linear => init_absolute_linear(&form)?,
                InitKind::Identity => init_identity(),
            };
            Ok(solve_amm_from(&form, &with_t0(start), config)?)
        }
        (SolverKind::AmmUpnp, Correspondences::Absolute(corrs)) => {
            let form = build_upnp_form(corrs)?;
            let start = match init {
                InitKind::Linear => init_absolute_linear(&form)?,
                InitKind::Identity => init_identity(),
            };
            Ok(solve_amm_from(&form, &with_t0(start), config)?)
        }
        (_, Correspondences::Absolute(_)) => Err(mismatch("absolute")),
        (_, Correspondences::Relative(_)) => Err(mismatch("relative")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solver_names_round_trip() {
        for k in SolverKind::ALL {
            assert_eq!(k.name().parse::<SolverKind>().unwrap(), k);
        }
        assert!("amm-foo".parse::<SolverKind>().is_err());
    }

    #[test]
    fn kind_mismatch_is_reported() {
        let data = Correspondences::Absolute(vec![]);
        let err = estimate_pose(SolverKind::AmmGec, &data, InitKind::Linear, None, &AmmConfig::default());
        assert!(matches!(err, Err(SolveError::KindMismatch { .. })));
    }
}
