//! Small 2-D geometric value types.
//!
//! `Vec2` and `Mat2` are plain `Copy` structs used throughout the mesh and
//! finite-volume layers. They deliberately carry no reference to any linear
//! algebra backend: cell-level geometry is hot-path code and the operations
//! needed (dot, perp, outer, 2x2 solve) are trivial to state directly.

use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

/// 2-D vector with `f64` components.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3-D cross product of the two embedded vectors.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    /// Counter-clockwise rotation by 90 degrees.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        Vec2::new(self.x / n, self.y / n)
    }

    pub fn outer(self, other: Vec2) -> Mat2 {
        Mat2 {
            xx: self.x * other.x,
            xy: self.x * other.y,
            yx: self.y * other.x,
            yy: self.y * other.y,
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, rhs: Vec2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl SubAssign for Vec2 {
    fn sub_assign(&mut self, rhs: Vec2) {
        self.x -= rhs.x;
        self.y -= rhs.y;
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, rhs: Vec2) -> Vec2 {
        rhs * self
    }
}

impl MulAssign<f64> for Vec2 {
    fn mul_assign(&mut self, rhs: f64) {
        self.x *= rhs;
        self.y *= rhs;
    }
}

impl Div<f64> for Vec2 {
    type Output = Vec2;
    fn div(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x / rhs, self.y / rhs)
    }
}

impl DivAssign<f64> for Vec2 {
    fn div_assign(&mut self, rhs: f64) {
        self.x /= rhs;
        self.y /= rhs;
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// 2x2 matrix, row-major naming: `xy` is row x, column y.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat2 {
    pub xx: f64,
    pub xy: f64,
    pub yx: f64,
    pub yy: f64,
}

impl Mat2 {
    pub const ZERO: Mat2 = Mat2 {
        xx: 0.0,
        xy: 0.0,
        yx: 0.0,
        yy: 0.0,
    };

    pub const IDENTITY: Mat2 = Mat2 {
        xx: 1.0,
        xy: 0.0,
        yx: 0.0,
        yy: 1.0,
    };

    pub fn transpose(self) -> Mat2 {
        Mat2 {
            xx: self.xx,
            xy: self.yx,
            yx: self.xy,
            yy: self.yy,
        }
    }

    pub fn trace(self) -> f64 {
        self.xx + self.yy
    }

    pub fn det(self) -> f64 {
        self.xx * self.yy - self.xy * self.yx
    }

    /// Row of a matrix as a vector: row x is `(xx, xy)`.
    pub fn row_x(self) -> Vec2 {
        Vec2::new(self.xx, self.xy)
    }

    pub fn row_y(self) -> Vec2 {
        Vec2::new(self.yx, self.yy)
    }

    /// Matrix-vector product.
    pub fn mul_vec(self, v: Vec2) -> Vec2 {
        Vec2::new(self.xx * v.x + self.xy * v.y, self.yx * v.x + self.yy * v.y)
    }

    /// Solves `self * x = b` by Cramer's rule. Caller guarantees non-singularity.
    pub fn solve(self, b: Vec2) -> Vec2 {
        let d = self.det();
        Vec2::new(
            (b.x * self.yy - b.y * self.xy) / d,
            (self.xx * b.y - self.yx * b.x) / d,
        )
    }

    pub fn is_finite(self) -> bool {
        self.xx.is_finite() && self.xy.is_finite() && self.yx.is_finite() && self.yy.is_finite()
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, rhs: Mat2) -> Mat2 {
        Mat2 {
            xx: self.xx + rhs.xx,
            xy: self.xy + rhs.xy,
            yx: self.yx + rhs.yx,
            yy: self.yy + rhs.yy,
        }
    }
}

impl AddAssign for Mat2 {
    fn add_assign(&mut self, rhs: Mat2) {
        self.xx += rhs.xx;
        self.xy += rhs.xy;
        self.yx += rhs.yx;
        self.yy += rhs.yy;
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, rhs: Mat2) -> Mat2 {
        Mat2 {
            xx: self.xx - rhs.xx,
            xy: self.xy - rhs.xy,
            yx: self.yx - rhs.yx,
            yy: self.yy - rhs.yy,
        }
    }
}

impl Mul<f64> for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: f64) -> Mat2 {
        Mat2 {
            xx: self.xx * rhs,
            xy: self.xy * rhs,
            yx: self.yx * rhs,
            yy: self.yy * rhs,
        }
    }
}

impl Mul<Mat2> for f64 {
    type Output = Mat2;
    fn mul(self, rhs: Mat2) -> Mat2 {
        rhs * self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn vec2_arithmetic() {
        let a = Vec2::new(1.0, 2.0);
        let b = Vec2::new(3.0, -1.0);
        assert_eq!(a + b, Vec2::new(4.0, 1.0));
        assert_eq!(a - b, Vec2::new(-2.0, 3.0));
        assert_eq!(a * 2.0, Vec2::new(2.0, 4.0));
        assert_eq!(2.0 * a, a * 2.0);
        assert_relative_eq!(a.dot(b), 1.0);
        assert_relative_eq!(a.cross(b), -7.0);
        assert_relative_eq!(Vec2::new(3.0, 4.0).norm(), 5.0);
    }

    #[test]
    fn perp_rotates_ccw() {
        let e_x = Vec2::new(1.0, 0.0);
        assert_eq!(e_x.perp(), Vec2::new(0.0, 1.0));
        // perp is orthogonal and norm-preserving
        let v = Vec2::new(2.0, -3.0);
        assert_relative_eq!(v.dot(v.perp()), 0.0);
        assert_relative_eq!(v.perp().norm(), v.norm());
    }

    #[test]
    fn mat2_solve_recovers_input() {
        let m = Mat2 {
            xx: 2.0,
            xy: 1.0,
            yx: -1.0,
            yy: 3.0,
        };
        let x = Vec2::new(0.5, -2.0);
        let b = m.mul_vec(x);
        let got = m.solve(b);
        assert_relative_eq!(got.x, x.x, epsilon = 1e-14);
        assert_relative_eq!(got.y, x.y, epsilon = 1e-14);
    }

    #[test]
    fn outer_product_layout() {
        let m = Vec2::new(1.0, 2.0).outer(Vec2::new(3.0, 4.0));
        assert_eq!(m.xx, 3.0);
        assert_eq!(m.xy, 4.0);
        assert_eq!(m.yx, 6.0);
        assert_eq!(m.yy, 8.0);
        assert_eq!(m.transpose().xy, m.yx);
    }
}
