//! Model fixtures shared by the benchmarks.

use gremphase_core::{DistributionFn, FieldLaw, HierarchicalOverlap, Longitudinal, ModelSpec};

pub fn sk_magnetic(h: f64, gamma: f64) -> ModelSpec {
    ModelSpec::new(
        DistributionFn::Sk,
        Longitudinal::Hierarchical {
            overlap: HierarchicalOverlap::MagneticEta { h },
        },
        FieldLaw::point(gamma),
    )
}

pub fn three_level(law: FieldLaw, gamma: f64) -> ModelSpec {
    ModelSpec::new(
        DistributionFn::Step {
            points: vec![0.25, 0.6, 1.0],
            increments: vec![0.5, 0.3, 0.2],
        },
        Longitudinal::Iid { law },
        FieldLaw::point(gamma),
    )
}

pub fn gaussian_field(std: f64) -> FieldLaw {
    FieldLaw::Gaussian {
        mean: 0.0,
        std,
        nodes: 64,
    }
}
