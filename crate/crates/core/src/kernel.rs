//! The mollified singular kernel K_h and its gradient, sampled on the grid.
//!
//! K_h(z) = 1/(ρ(r) + h ψ(r))² with r the geodesic length of z. Inside
//! r < 1/2 this is exactly 1/(r+h)²; on [1/2, 2/3] the pieces ρ, ψ blend with
//! C² (quintic smoothstep) joins; from r = 2/3 on the kernel is a positive
//! constant independent of h.

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::GridSpec;

/// Inner radius below which K_h is exactly 1/(r+h)².
pub const INNER_RADIUS: f64 = 0.5;
/// Radius from which K_h no longer depends on h (and is constant).
pub const OUTER_RADIUS: f64 = 2.0 / 3.0;
/// Plateau value of ρ, reached at r = 2/3 with C² flatness.
const RHO_PLATEAU: f64 = 7.0 / 12.0;

/// Kernel parameters; the dimension is fixed to 2.
#[derive(Debug, Clone, Copy)]
pub struct KernelSpec {
    h: f64,
}

impl KernelSpec {
    /// Requires 0 < h ≤ 1/2.
    pub fn new(h: f64) -> Result<Self> {
        if !(h > 0.0 && h <= 0.5) {
            return Err(Error::Domain(format!(
                "kernel scale h must lie in (0, 1/2], got {h}"
            )));
        }
        Ok(KernelSpec { h })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// K_h as a function of the geodesic radius.
    pub fn value(&self, r: f64) -> f64 {
        let denom = rho(r) + self.h * psi(r);
        1.0 / (denom * denom)
    }

    /// dK_h/dr.
    pub fn radial_derivative(&self, r: f64) -> f64 {
        let denom = rho(r) + self.h * psi(r);
        -2.0 * (rho_prime(r) + self.h * psi_prime(r)) / (denom * denom * denom)
    }
}

// quintic smoothstep: s(0)=0, s(1)=1, s'=s''=0 at both ends
fn smoothstep5(t: f64) -> f64 {
    t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
}

fn smoothstep5_prime(t: f64) -> f64 {
    30.0 * t * t * (t - 1.0) * (t - 1.0)
}

// ∫₀ᵗ s₅ = t⁴(5/2 − 3t + t²)
fn smoothstep5_integral(t: f64) -> f64 {
    t * t * t * t * (2.5 + t * (-3.0 + t))
}

const TRANSITION_SCALE: f64 = 6.0; // 1/(2/3 − 1/2)

fn rho(r: f64) -> f64 {
    if r <= INNER_RADIUS {
        r
    } else if r < OUTER_RADIUS {
        let t = (r - INNER_RADIUS) * TRANSITION_SCALE;
        r - smoothstep5_integral(t) / TRANSITION_SCALE
    } else {
        RHO_PLATEAU
    }
}

fn rho_prime(r: f64) -> f64 {
    if r <= INNER_RADIUS {
        1.0
    } else if r < OUTER_RADIUS {
        1.0 - smoothstep5((r - INNER_RADIUS) * TRANSITION_SCALE)
    } else {
        0.0
    }
}

fn psi(r: f64) -> f64 {
    if r <= INNER_RADIUS {
        1.0
    } else if r < OUTER_RADIUS {
        1.0 - smoothstep5((r - INNER_RADIUS) * TRANSITION_SCALE)
    } else {
        0.0
    }
}

fn psi_prime(r: f64) -> f64 {
    if r <= INNER_RADIUS || r >= OUTER_RADIUS {
        0.0
    } else {
        -smoothstep5_prime((r - INNER_RADIUS) * TRANSITION_SCALE) * TRANSITION_SCALE
    }
}

/// K_h and ∇K_h sampled at every lattice displacement.
#[derive(Debug, Clone)]
pub struct KernelGrid {
    spec: KernelSpec,
    grid: GridSpec,
    values: Vec<f64>,
    grad1: Vec<f64>,
    grad2: Vec<f64>,
}

impl KernelGrid {
    pub fn build(spec: KernelSpec, grid: GridSpec) -> Self {
        let n = grid.n();
        let mut values = vec![0.0; grid.len()];
        let mut grad1 = vec![0.0; grid.len()];
        let mut grad2 = vec![0.0; grid.len()];
        for a in 0..n {
            for b in 0..n {
                let idx = grid.idx(a, b);
                let z = grid.shift_vector(a, b);
                let r = z[0].hypot(z[1]);
                values[idx] = spec.value(r);
                if r > 0.0 {
                    let slope = spec.radial_derivative(r);
                    grad1[idx] = slope * z[0] / r;
                    grad2[idx] = slope * z[1] / r;
                }
            }
        }
        // enforce exact antisymmetry of the gradient; this zeroes the seam
        // bins where the geodesic representative is ambiguous
        for a in 0..n {
            for b in 0..n {
                let idx = grid.idx(a, b);
                let mirror = grid.idx((n - a) % n, (n - b) % n);
                if mirror > idx {
                    let g1 = 0.5 * (grad1[idx] - grad1[mirror]);
                    grad1[idx] = g1;
                    grad1[mirror] = -g1;
                    let g2 = 0.5 * (grad2[idx] - grad2[mirror]);
                    grad2[idx] = g2;
                    grad2[mirror] = -g2;
                } else if mirror == idx {
                    grad1[idx] = 0.0;
                    grad2[idx] = 0.0;
                }
            }
        }
        KernelGrid {
            spec,
            grid,
            values,
            grad1,
            grad2,
        }
    }

    pub fn spec(&self) -> KernelSpec {
        self.spec
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    /// K_h at lattice displacement (a, b).
    pub fn value(&self, a: usize, b: usize) -> f64 {
        self.values[self.grid.idx(a, b)]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Component of ∇K_h at lattice displacement (a, b).
    pub fn gradient(&self, axis: usize, a: usize, b: usize) -> f64 {
        let idx = self.grid.idx(a, b);
        if axis == 0 {
            self.grad1[idx]
        } else {
            self.grad2[idx]
        }
    }

    pub fn gradient_values(&self, axis: usize) -> &[f64] {
        if axis == 0 {
            &self.grad1
        } else {
            &self.grad2
        }
    }

    /// The sampled kernel as a scalar field (useful for dumps and plots).
    pub fn as_field(&self) -> ScalarField {
        ScalarField::from_values(self.grid, self.values.clone()).expect("kernel values are finite")
    }
}

/// Convenience wrapper matching the operation name used by callers.
pub fn build_kernel(spec: KernelSpec, grid: GridSpec) -> KernelGrid {
    KernelGrid::build(spec, grid)
}
