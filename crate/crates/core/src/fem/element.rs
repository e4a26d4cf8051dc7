//! Linear triangle geometry and quadrature.

use crate::mesh::Geometry;
use crate::real::Real;

/// Barycentric coordinates of the interior 3-point rule (degree 2).
const QP_BARY: [[f64; 3]; 3] = [
    [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
    [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
    [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
];

pub const N_QP: usize = 3;

/// One quadrature point of a triangle.
#[derive(Debug, Clone, Copy)]
pub struct QuadPoint<T> {
    /// Shape function values.
    pub shape: [T; 3],
    /// Physical coordinates `(r, z)`.
    pub x: [T; 2],
    /// Integration weight including the measure (`2 pi r` for axisymmetric).
    pub weight: T,
}

#[derive(Debug, Clone, Copy)]
pub struct Triangle<T> {
    pub x: [[T; 2]; 3],
    pub area: T,
    /// Constant shape function gradients `dN_i/d(r, z)`.
    pub grad: [[T; 2]; 3],
    pub geometry: Geometry,
}

impl<T: Real> Triangle<T> {
    pub fn new(x: [[T; 2]; 3], geometry: Geometry) -> Self {
        let [a, b, c] = x;
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        let inv = T::one() / det;
        let grad = [
            [(b[1] - c[1]) * inv, (c[0] - b[0]) * inv],
            [(c[1] - a[1]) * inv, (a[0] - c[0]) * inv],
            [(a[1] - b[1]) * inv, (b[0] - a[0]) * inv],
        ];
        Triangle {
            x,
            area: T::lit(0.5) * det,
            grad,
            geometry,
        }
    }

    pub fn quad_points(&self) -> [QuadPoint<T>; N_QP] {
        let w = self.area / T::lit(3.0);
        QP_BARY.map(|bary| {
            let shape = bary.map(T::lit);
            let mut x = [T::zero(); 2];
            for (k, s) in shape.iter().enumerate() {
                x[0] = x[0] + *s * self.x[k][0];
                x[1] = x[1] + *s * self.x[k][1];
            }
            let weight = match self.geometry {
                Geometry::Planar => w,
                Geometry::Axisymmetric => w * T::lit(2.0) * T::PI() * x[0],
            };
            QuadPoint { shape, x, weight }
        })
    }

    pub fn centroid(&self) -> [T; 2] {
        let third = T::lit(1.0 / 3.0);
        [
            (self.x[0][0] + self.x[1][0] + self.x[2][0]) * third,
            (self.x[0][1] + self.x[1][1] + self.x[2][1]) * third,
        ]
    }

    pub fn volume(&self) -> T {
        self.quad_points().iter().map(|q| q.weight).sum()
    }

    /// Gradient of a linear field with nodal values `v`.
    pub fn gradient(&self, v: [T; 3]) -> [T; 2] {
        let mut g = [T::zero(); 2];
        for k in 0..3 {
            g[0] = g[0] + self.grad[k][0] * v[k];
            g[1] = g[1] + self.grad[k][1] * v[k];
        }
        g
    }
}

pub fn interpolate<T: Real>(shape: &[T; 3], v: [T; 3]) -> T {
    shape[0] * v[0] + shape[1] * v[1] + shape[2] * v[2]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradients_reproduce_linear_field() {
        let t = Triangle::new([[0.0, 0.0], [2.0, 0.5], [0.3, 1.7]], Geometry::Planar);
        let f = |p: [f64; 2]| 1.5 - 2.0 * p[0] + 0.25 * p[1];
        let g = t.gradient([f(t.x[0]), f(t.x[1]), f(t.x[2])]);
        assert!((g[0] + 2.0).abs() < 1e-12 && (g[1] - 0.25).abs() < 1e-12);
        let sum: f64 = t.grad.iter().map(|g| g[0] + g[1]).sum();
        assert!(sum.abs() < 1e-12);
    }

    #[test]
    fn axisymmetric_volume_of_ring_element() {
        // exact: integral of 2 pi r over the triangle = 2 pi * area * r_centroid
        let t = Triangle::new([[1.0, 0.0], [2.0, 0.0], [1.0, 1.0]], Geometry::Axisymmetric);
        let exact = 2.0 * std::f64::consts::PI * 0.5 * (4.0 / 3.0);
        assert!((t.volume() - exact).abs() < 1e-12);
    }
}
