//! Hyperboloid model of H^n inside R^{n,1}, Fermi (cylinder) coordinates
//! around the geodesic gamma(t) = (cosh t, sinh t, 0, ..., 0), and loxodromic
//! isometries translating along gamma.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Constant in the radial comparison of cylinder metrics, valid for
/// comparison radii at least 2.
pub const RADIAL_COMPARISON_C0: f64 = 1.02;

const HYPERBOLOID_TOL: f64 = 1e-9;
const AXIS_TOL: f64 = 1e-12;

/// Lorentzian form <x,y> = -x0 y0 + sum xi yi.
pub fn mink_inner(x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    let mut s = -x[0] * y[0];
    for i in 1..x.len() {
        s += x[i] * y[i];
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct HPoint {
    coords: DVector<f64>,
}

impl HPoint {
    /// Validates `<x,x> = -1` (relative to the size of x) and `x0 > 0`.
    pub fn new(coords: DVector<f64>) -> Result<Self> {
        if coords.len() < 3 {
            return Err(Error::DimensionTooSmall {
                min: 2,
                got: coords.len().saturating_sub(1),
            });
        }
        if coords[0] <= 0.0 {
            return Err(Error::LowerSheet);
        }
        let q = mink_inner(&coords, &coords);
        let scale = coords[0] * coords[0];
        if (q + 1.0).abs() > HYPERBOLOID_TOL * scale.max(1.0) {
            return Err(Error::OffHyperboloid(q + 1.0));
        }
        Ok(Self { coords })
    }

    /// Rescales a timelike future vector onto the hyperboloid.
    pub fn normalized(coords: DVector<f64>) -> Result<Self> {
        let q = mink_inner(&coords, &coords);
        if !(q < 0.0) || coords[0] <= 0.0 {
            return Err(Error::LowerSheet);
        }
        Self::new(coords / (-q).sqrt())
    }

    pub fn basepoint(n: usize) -> Self {
        let mut c = DVector::zeros(n + 1);
        c[0] = 1.0;
        Self { coords: c }
    }

    /// Dimension n of the hyperbolic space.
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn into_coords(self) -> DVector<f64> {
        self.coords
    }
}

/// Geodesic distance. Uses arccosh far apart and an asinh form of the
/// chord length near the diagonal, where arccosh loses all precision.
pub fn dist(x: &HPoint, y: &HPoint) -> f64 {
    let c = -mink_inner(&x.coords, &y.coords);
    if c > 2.0 {
        return c.acosh();
    }
    let diff = &x.coords - &y.coords;
    let q = mink_inner(&diff, &diff).max(0.0);
    2.0 * (q.sqrt() / 2.0).asinh()
}

/// Fermi coordinates around the axis: distance `r`, unit normal direction
/// `theta` in R^{n-1}, axial parameter `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderCoords {
    pub r: f64,
    pub theta: DVector<f64>,
    pub t: f64,
    /// Set when the point sits on the axis; `theta` is then a placeholder.
    pub on_axis: bool,
}

impl CylinderCoords {
    pub fn new(r: f64, theta: DVector<f64>, t: f64) -> Self {
        Self {
            r,
            theta,
            t,
            on_axis: false,
        }
    }
}

pub fn cylinder_to_point(c: &CylinderCoords) -> Result<HPoint> {
    if !(c.r >= 0.0) || !c.r.is_finite() {
        return Err(Error::RadiusOutOfRange(c.r));
    }
    let m = c.theta.len();
    if m < 1 {
        return Err(Error::DimensionTooSmall { min: 2, got: m + 1 });
    }
    let norm = c.theta.norm();
    if !c.on_axis && (norm - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("direction has norm {norm}")));
    }
    let (ch, sh) = (c.r.cosh(), c.r.sinh());
    let mut x = DVector::zeros(m + 2);
    x[0] = ch * c.t.cosh();
    x[1] = ch * c.t.sinh();
    if !c.on_axis {
        for i in 0..m {
            x[i + 2] = sh * c.theta[i];
        }
    }
    HPoint::new(x)
}

pub fn point_to_cylinder(x: &HPoint) -> CylinderCoords {
    let v = &x.coords;
    let m = v.len() - 2;
    let perp = v.rows(2, m).into_owned();
    let s = perp.norm();
    let r = s.asinh();
    let ch = r.cosh();
    let t = ((v[0] + v[1]) / ch).ln();
    if s < AXIS_TOL {
        let mut theta = DVector::zeros(m);
        theta[0] = 1.0;
        return CylinderCoords {
            r: 0.0,
            theta,
            t,
            on_axis: true,
        };
    }
    CylinderCoords {
        r,
        theta: perp / s,
        t,
        on_axis: false,
    }
}

/// Angle between unit vectors, accurate for nearby arguments.
pub fn sphere_angle(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let chord = (a - b).norm();
    2.0 * (chord / 2.0).min(1.0).asin()
}

/// Geodesic distance within the cylinder of radius `r`, which is intrinsically
/// the product of a round sphere of radius sinh r with a line scaled by cosh r.
pub fn cylinder_intrinsic_dist(r: f64, a: &CylinderCoords, b: &CylinderCoords) -> Result<f64> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::RadiusOutOfRange(r));
    }
    for c in [a, b] {
        if (c.r - r).abs() > 1e-9 * r.max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "point at radius {} compared on cylinder {r}",
                c.r
            )));
        }
    }
    Ok(angular_axial_dist(r, a, b))
}

fn angular_axial_dist(r: f64, a: &CylinderCoords, b: &CylinderCoords) -> f64 {
    let ang = sphere_angle(&a.theta, &b.theta);
    let dt = a.t - b.t;
    ((r.sinh() * ang).powi(2) + (r.cosh() * dt).powi(2)).sqrt()
}

/// Intrinsic distances between the same angular/axial data on the cylinders
/// of radii `r_prime <= r`; the radius fields of `a` and `b` are ignored.
/// Returns `(d_{r'}, d_r)`; the pair satisfies
/// `d_{r'} <= C0 exp(r' - r) d_r`.
pub fn radial_comparison(r_prime: f64, r: f64, a: &CylinderCoords, b: &CylinderCoords) -> Result<(f64, f64)> {
    if r_prime < 2.0 {
        return Err(Error::ComparisonRadiusTooSmall(r_prime));
    }
    if r < r_prime || !r.is_finite() {
        return Err(Error::RadiusOutOfRange(r));
    }
    Ok((angular_axial_dist(r_prime, a, b), angular_axial_dist(r, a, b)))
}

/// Lorentz boost carrying the basepoint to `x`. Its columns 1..=n are an
/// orthonormal frame of the tangent space at `x`.
pub fn boost_to(x: &HPoint) -> DMatrix<f64> {
    let v = &x.coords;
    let n = v.len() - 1;
    let x0 = v[0];
    let xs = v.rows(1, n);
    let mut b = DMatrix::zeros(n + 1, n + 1);
    b[(0, 0)] = x0;
    for i in 0..n {
        b[(0, i + 1)] = xs[i];
        b[(i + 1, 0)] = xs[i];
        for j in 0..n {
            let id = if i == j { 1.0 } else { 0.0 };
            b[(i + 1, j + 1)] = id + xs[i] * xs[j] / (1.0 + x0);
        }
    }
    b
}

/// Point at distance `s` from `x` along the geodesic with unit initial
/// direction given in the frame of [`boost_to`].
pub fn exp_frame(x: &HPoint, dir: &DVector<f64>, s: f64) -> Result<HPoint> {
    let n = x.dim();
    if dir.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: dir.len(),
        });
    }
    let b = boost_to(x);
    let mut tangent = DVector::zeros(n + 1);
    for i in 0..n {
        tangent += b.column(i + 1) * dir[i];
    }
    let y = x.coords() * s.cosh() + tangent * s.sinh();
    HPoint::normalized(y)
}

/// Loxodromic isometry: translation by `ell` along the axis composed with a
/// rotation `rot` in SO(n-1) of the normal directions.
#[derive(Debug, Clone, PartialEq)]
pub struct TubeIsometry {
    ell: f64,
    rot: DMatrix<f64>,
}

impl TubeIsometry {
    pub fn new(ell: f64, rot: DMatrix<f64>) -> Result<Self> {
        if !(ell >= 1e-9) || !ell.is_finite() {
            return Err(Error::DegenerateTranslation(ell));
        }
        let m = rot.nrows();
        if rot.ncols() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: rot.ncols(),
            });
        }
        if m < 1 {
            return Err(Error::DimensionTooSmall { min: 2, got: m + 1 });
        }
        let defect = (rot.transpose() * &rot - DMatrix::identity(m, m)).amax();
        if defect > 1e-6 {
            return Err(Error::NotOrthogonal(defect));
        }
        if rot.determinant() < 0.0 {
            return Err(Error::NotOrientationPreserving);
        }
        let rot = if defect > 1e-12 {
            polar_orthonormalize(&rot)
        } else {
            rot
        };
        Ok(Self { ell, rot })
    }

    /// Block rotation with the given plane angles; leftover coordinates are fixed.
    pub fn from_angles(n: usize, ell: f64, angles: &[f64]) -> Result<Self> {
        if n < 2 {
            return Err(Error::DimensionTooSmall { min: 2, got: n });
        }
        let m = n - 1;
        if 2 * angles.len() > m {
            return Err(Error::InvalidParameter(format!(
                "{} rotation planes do not fit in dimension {m}",
                angles.len()
            )));
        }
        let mut rot = DMatrix::identity(m, m);
        for (j, &a) in angles.iter().enumerate() {
            let (s, c) = a.sin_cos();
            let i = 2 * j;
            rot[(i, i)] = c;
            rot[(i, i + 1)] = -s;
            rot[(i + 1, i)] = s;
            rot[(i + 1, i + 1)] = c;
        }
        Self::new(ell, rot)
    }

    /// Same isometry type with rotation `q rot q^T`.
    pub fn conjugated(&self, q: &DMatrix<f64>) -> Result<Self> {
        Self::new(self.ell, q * &self.rot * q.transpose())
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn rot(&self) -> &DMatrix<f64> {
        &self.rot
    }

    /// Dimension n of the hyperbolic space acted on.
    pub fn dim(&self) -> usize {
        self.rot.nrows() + 1
    }

    pub fn rot_power(&self, k: i64) -> DMatrix<f64> {
        let m = self.rot.nrows();
        let mut base = if k < 0 { self.rot.transpose() } else { self.rot.clone() };
        let mut e = k.unsigned_abs();
        let mut acc = DMatrix::identity(m, m);
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    /// Full Lorentz matrix of the k-th power.
    pub fn lorentz_matrix(&self, k: i64) -> DMatrix<f64> {
        let n = self.dim();
        let s = k as f64 * self.ell;
        let mut m = DMatrix::zeros(n + 1, n + 1);
        m[(0, 0)] = s.cosh();
        m[(0, 1)] = s.sinh();
        m[(1, 0)] = s.sinh();
        m[(1, 1)] = s.cosh();
        m.view_mut((2, 2), (n - 1, n - 1)).copy_from(&self.rot_power(k));
        m
    }

    pub fn apply(&self, x: &HPoint, k: i64) -> Result<HPoint> {
        let n = self.dim();
        if x.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.dim(),
            });
        }
        let v = x.coords();
        let s = k as f64 * self.ell;
        let (ch, sh) = (s.cosh(), s.sinh());
        let perp = self.rot_power(k) * v.rows(2, n - 1);
        let mut y = DVector::zeros(n + 1);
        y[0] = ch * v[0] + sh * v[1];
        y[1] = sh * v[0] + ch * v[1];
        y.rows_mut(2, n - 1).copy_from(&perp);
        HPoint::new(y)
    }
}

/// Nearest orthogonal matrix in Frobenius norm.
pub fn polar_orthonormalize(a: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = a.clone().svd(true, true);
    let (u, vt) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
    u * vt
}

/// Displacement of `x` under the k-th power in closed form, stable for
/// small translations: sinh(d/2)^2 = cosh^2 r sinh^2(k ell/2) + sinh^2 r |theta - A^k theta|^2 / 4.
pub fn displacement_closed_form(r: f64, chord: f64, k_ell: f64) -> f64 {
    let a = r.cosh() * (k_ell / 2.0).sinh();
    let b = r.sinh() * chord / 2.0;
    2.0 * a.hypot(b).asinh()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn axis_distance_is_parameter_difference() {
        let a = cylinder_to_point(&CylinderCoords::new(0.0, DVector::from_vec(vec![1.0, 0.0]), 0.3)).unwrap();
        let b = cylinder_to_point(&CylinderCoords::new(0.0, DVector::from_vec(vec![0.0, 1.0]), 1.7)).unwrap();
        assert_relative_eq!(dist(&a, &b), 1.4, epsilon = 1e-14);
    }

    #[test]
    fn rejects_bad_points() {
        assert!(matches!(
            HPoint::new(DVector::from_vec(vec![1.0, 1.0, 0.0])),
            Err(Error::OffHyperboloid(_))
        ));
        assert!(matches!(
            HPoint::new(DVector::from_vec(vec![-1.0, 0.0, 0.0])),
            Err(Error::LowerSheet)
        ));
    }

    #[test]
    fn radial_comparison_rejects_small_radius() {
        let c = CylinderCoords::new(0.0, DVector::from_vec(vec![1.0, 0.0]), 0.0);
        assert!(matches!(
            radial_comparison(1.9, 3.0, &c, &c),
            Err(Error::ComparisonRadiusTooSmall(_))
        ));
    }

    #[test]
    fn lorentz_matrix_preserves_form() {
        let phi = TubeIsometry::from_angles(5, 0.3, &[0.7, 2.1]).unwrap();
        let l = phi.lorentz_matrix(3);
        let mut j = DMatrix::identity(6, 6);
        j[(0, 0)] = -1.0;
        let defect = (l.transpose() * &j * &l - j).amax();
        assert!(defect < 1e-12);
    }

    #[test]
    fn rejects_reflection_and_skew() {
        let mut r = DMatrix::identity(3, 3);
        r[(0, 0)] = -1.0;
        assert!(matches!(
            TubeIsometry::new(0.1, r),
            Err(Error::NotOrientationPreserving)
        ));
        let mut r = DMatrix::identity(3, 3);
        r[(0, 1)] = 0.01;
        assert!(matches!(TubeIsometry::new(0.1, r), Err(Error::NotOrthogonal(_))));
        assert!(TubeIsometry::new(1e-10, DMatrix::identity(3, 3)).is_err());
    }

    #[test]
    fn slight_drift_is_repaired() {
        let mut r = DMatrix::identity(3, 3);
        r[(0, 1)] = 1e-8;
        let phi = TubeIsometry::new(0.1, r).unwrap();
        let d = (phi.rot().transpose() * phi.rot() - DMatrix::identity(3, 3)).amax();
        assert!(d < 1e-14);
    }
}
