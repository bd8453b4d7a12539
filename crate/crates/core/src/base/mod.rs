//! The base system `(Y, m, R)`: the lazy walk and the circle rotation, their integer
//! cocycle `f` with Birkhoff sums `f_n`, and exact level distributions of `f_n`.

mod circle;
mod distribution;
mod point;

pub use circle::{CirclePoint, StepFunction};
pub use distribution::{
    level_distribution, llt_deviation, parity_mass, parity_mass_exact, w_mass, walk_exact_distribution, ExactPowers,
    LevelDistribution, Precision, StepLaw, EXACT_LIMIT, FLOAT_LIMIT,
};
pub use point::{sample_point, BasePoint, CHECKPOINT_SPACING};

use std::fmt;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BaseError {
    #[error("invalid step function: {0}")]
    InvalidStepFunction(String),
    #[error("invalid step law: {0}")]
    InvalidStepLaw(String),
    #[error("requested times must be strictly increasing")]
    TimesNotIncreasing,
    #[error("n = {n} exceeds the supported bound {limit} for this computation")]
    TooLarge { n: u64, limit: u64 },
    #[error("n must be >= 1")]
    ZeroTime,
    #[error("cannot parse base kind {0:?}")]
    Parse(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BaseKind {
    /// I.i.d. steps drawn from `law`; the shift on the path space.
    Walk(StepLaw),
    /// `y ↦ y + alpha` with cocycle `step`.
    Rotation { alpha: CirclePoint, step: StepFunction },
}

impl BaseKind {
    pub fn canonical_walk() -> Self {
        BaseKind::Walk(StepLaw::canonical())
    }

    pub fn golden_rotation() -> Self {
        BaseKind::Rotation { alpha: CirclePoint::golden(), step: StepFunction::half_and_half() }
    }

    /// Only the walk has a local limit theorem behind it; rotation runs are exploratory.
    pub fn llt_guaranteed(&self) -> bool {
        matches!(self, BaseKind::Walk(_))
    }

    pub fn is_canonical(&self) -> bool {
        matches!(self, BaseKind::Walk(l) if *l == StepLaw::canonical())
    }

    pub fn into_arc(self) -> Arc<BaseKind> {
        Arc::new(self)
    }
}

impl fmt::Display for BaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaseKind::Walk(l) if *l == StepLaw::canonical() => f.write_str("walk"),
            BaseKind::Walk(l) => write!(f, "walk:{l}"),
            BaseKind::Rotation { alpha, step } if *alpha == CirclePoint::golden() => write!(f, "rotation:{step}"),
            BaseKind::Rotation { alpha, step } => write!(f, "rotation@{:x}:{step}", alpha.0),
        }
    }
}

impl std::str::FromStr for BaseKind {
    type Err = BaseError;

    /// `walk`, `walk:<law>`, `rotation`, `rotation:<step fn>` or `rotation@<hex alpha>:<step fn>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s {
            "walk" => return Ok(BaseKind::canonical_walk()),
            "rotation" => return Ok(BaseKind::golden_rotation()),
            _ => {}
        }
        if let Some(law) = s.strip_prefix("walk:") {
            return Ok(BaseKind::Walk(law.parse()?));
        }
        if let Some(rest) = s.strip_prefix("rotation:") {
            return Ok(BaseKind::Rotation { alpha: CirclePoint::golden(), step: rest.parse()? });
        }
        if let Some(rest) = s.strip_prefix("rotation@") {
            let (hex, step) = rest.split_once(':').ok_or_else(|| BaseError::Parse(s.into()))?;
            let alpha = u128::from_str_radix(hex, 16).map_err(|_| BaseError::Parse(s.into()))?;
            return Ok(BaseKind::Rotation { alpha: CirclePoint(alpha), step: step.parse()? });
        }
        Err(BaseError::Parse(s.into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_round_trip() {
        for k in [
            BaseKind::canonical_walk(),
            BaseKind::golden_rotation(),
            "walk:-2:1,0:6,2:1".parse().unwrap(),
            "rotation@1234:0:1,1/2:-1".parse().unwrap(),
        ] {
            assert_eq!(k.to_string().parse::<BaseKind>().unwrap(), k);
        }
        assert!("walk:-1:1,1:1".parse::<BaseKind>().is_err()); // no mass at 0
        assert!("spiral".parse::<BaseKind>().is_err());
    }
}
