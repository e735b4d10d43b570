use serde::{Deserialize, Serialize};

use crate::Vec2;

use super::BcKind;

/// Boundary-condition type of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BcType {
    Dirichlet,
    Mixed,
}

impl BcType {
    pub fn label(&self) -> &'static str {
        match self {
            BcType::Dirichlet => "dirichlet",
            BcType::Mixed => "mixed",
        }
    }
}

/// Splits Γ into Γ_D and Γ_N.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundarySpec {
    AllDirichlet,
    /// Γ_D = Γ ∩ {x ≤ 0} when `inclusive`, Γ ∩ {x < 0} otherwise.
    Mixed {
        inclusive: bool,
    },
}

impl BoundarySpec {
    /// Region predicate used for `domain`: the leaf takes the strict
    /// inequality, the other domains the closed one.
    pub fn for_domain(bc: BcType, domain: &str) -> Self {
        match bc {
            BcType::Dirichlet => BoundarySpec::AllDirichlet,
            BcType::Mixed => BoundarySpec::Mixed {
                inclusive: domain != "leaf",
            },
        }
    }

    pub fn kind_at(&self, p: Vec2) -> BcKind {
        match *self {
            BoundarySpec::AllDirichlet => BcKind::Dirichlet,
            BoundarySpec::Mixed { inclusive } => {
                if p.x < 0.0 || (inclusive && p.x == 0.0) {
                    BcKind::Dirichlet
                } else {
                    BcKind::Neumann
                }
            }
        }
    }

    /// Abscissa where the boundary type changes, if any.
    pub fn split_x(&self) -> Option<f64> {
        match self {
            BoundarySpec::AllDirichlet => None,
            BoundarySpec::Mixed { .. } => Some(0.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixed_predicates() {
        let closed = BoundarySpec::for_domain(BcType::Mixed, "circle");
        let open = BoundarySpec::for_domain(BcType::Mixed, "leaf");
        let on_axis = Vec2::new(0.0, 0.3);
        assert_eq!(closed.kind_at(on_axis), BcKind::Dirichlet);
        assert_eq!(open.kind_at(on_axis), BcKind::Neumann);
        assert_eq!(closed.kind_at(Vec2::new(-0.1, 0.0)), BcKind::Dirichlet);
        assert_eq!(closed.kind_at(Vec2::new(0.1, 0.0)), BcKind::Neumann);
        assert_eq!(
            BoundarySpec::for_domain(BcType::Dirichlet, "leaf").kind_at(Vec2::new(0.5, 0.0)),
            BcKind::Dirichlet
        );
    }
}
