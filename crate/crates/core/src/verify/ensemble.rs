//! Seeded random trace fields.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::mesh::TraceGrid;
use crate::traces::TraceField;

const JACOBI_DAMPING: f64 = 2.0 / 3.0;

/// Family of random fields on the free surface.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Ensemble {
    /// Nodal white noise in [−1, 1] followed by `sweeps` damped Jacobi sweeps
    /// of the component Laplacian. Roughness depends on the mesh.
    Jacobi { sweeps: usize },
    /// A random constant per component plus cosine and sine modes with 1/m
    /// decay, `modes` of them per length π so that the largest wavenumber
    /// is the same on every component. Mesh-independent, used for
    /// refinement studies.
    Continuum { modes: usize },
}

/// Independent stream for sample `index` of the ensemble seeded by `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Damped Jacobi sweeps of the P1 Laplacian with natural ends, per component.
pub fn jacobi_smooth(grid: &TraceGrid, f: &TraceField, sweeps: usize) -> TraceField {
    let mut v = f.values().to_vec();
    for _ in 0..sweeps {
        let old = v.clone();
        for (j, c) in grid.components.iter().enumerate() {
            let r = grid.range(j);
            let n = c.len();
            if n < 2 {
                continue;
            }
            let u = &old[r.clone()];
            for k in 0..n {
                let (mut num, mut den) = (0.0, 0.0);
                if k > 0 {
                    let w = 1.0 / (c.x[k] - c.x[k - 1]);
                    num += w * u[k - 1];
                    den += w;
                }
                if k + 1 < n {
                    let w = 1.0 / (c.x[k + 1] - c.x[k]);
                    num += w * u[k + 1];
                    den += w;
                }
                v[r.start + k] = (1.0 - JACOBI_DAMPING) * u[k] + JACOBI_DAMPING * num / den;
            }
        }
    }
    TraceField::new(v)
}

impl Ensemble {
    /// Sample `index`; the same `(seed, index)` always gives the same field.
    pub fn sample(&self, grid: &TraceGrid, seed: u64, index: u64) -> TraceField {
        let mut rng = sample_rng(seed, index);
        match *self {
            Ensemble::Jacobi { sweeps } => {
                let noise = TraceField::new((0..grid.len()).map(|_| rng.random_range(-1.0..=1.0)).collect());
                jacobi_smooth(grid, &noise, sweeps)
            }
            Ensemble::Continuum { modes } => {
                let coeffs: Vec<(f64, Vec<(f64, f64)>)> = grid
                    .components
                    .iter()
                    .map(|comp| {
                        let c = rng.random_range(-1.0..=1.0);
                        let count = ((modes as f64 * comp.interval.len() / std::f64::consts::PI) as usize).max(1);
                        let m = (0..count)
                            .map(|_| (rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)))
                            .collect();
                        (c, m)
                    })
                    .collect();
                TraceField::from_component_fn(grid, |j, x| {
                    let iv = &grid.components[j].interval;
                    let s = std::f64::consts::PI * (x - iv.a) / (iv.b - iv.a);
                    let (c, m) = &coeffs[j];
                    c + m
                        .iter()
                        .enumerate()
                        .map(|(k, (a, b))| {
                            let k = (k + 1) as f64;
                            (a * (k * s).cos() + b * (k * s).sin()) / k
                        })
                        .sum::<f64>()
                })
            }
        }
    }

    /// The first `count` samples.
    pub fn samples(&self, grid: &TraceGrid, seed: u64, count: usize) -> Vec<TraceField> {
        (0..count as u64).map(|i| self.sample(grid, seed, i)).collect()
    }

    pub fn label(&self) -> String {
        match self {
            Ensemble::Jacobi { sweeps } => format!("jacobi{sweeps}"),
            Ensemble::Continuum { modes } => format!("continuum{modes}"),
        }
    }
}

/// The rough-to-smooth ensembles m ∈ {0, 2, 8}.
pub const JACOBI_SWEEPS: [usize; 3] = [0, 2, 8];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traces::tests::two_component_grid;

    fn grid() -> TraceGrid {
        let a: Vec<f64> = (0..=20).map(|k| k as f64 / 20.0).collect();
        let b: Vec<f64> = (0..=10).map(|k| 2.0 + k as f64 / 10.0).collect();
        two_component_grid(&a, &b)
    }

    #[test]
    fn deterministic_per_index() {
        let g = grid();
        for e in [Ensemble::Jacobi { sweeps: 2 }, Ensemble::Continuum { modes: 4 }] {
            assert_eq!(e.sample(&g, 7, 3), e.sample(&g, 7, 3));
            assert_ne!(e.sample(&g, 7, 3), e.sample(&g, 7, 4));
            assert_ne!(e.sample(&g, 7, 3), e.sample(&g, 8, 3));
        }
    }

    #[test]
    fn jacobi_keeps_constants_and_smooths() {
        let g = grid();
        let c = jacobi_smooth(&g, &TraceField::constant(g.len(), 2.5), 5);
        assert!(c.values().iter().all(|v| (v - 2.5).abs() < 1e-14));
        let rough = Ensemble::Jacobi { sweeps: 0 }.sample(&g, 1, 0);
        let smooth = jacobi_smooth(&g, &rough, 8);
        let tv = |f: &TraceField| f.values().windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>();
        assert!(tv(&smooth) < 0.5 * tv(&rough));
        assert!(smooth.max_abs() <= rough.max_abs() + 1e-15);
    }
}
