//! Homographies and reprojection distances.

use crate::scalar::Scalar;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum GeometryError {
    #[error("expected 9 numbers, found {0}")]
    WrongTokenCount(usize),
    #[error("token {0:?} is not a number")]
    NonNumericToken(String),
    #[error("homography is singular")]
    SingularMatrix,
    #[error("point maps to infinity")]
    PointAtInfinity,
}

const NORMALIZE_EPS: f64 = 1e-12;
const SINGULAR_EPS: f64 = 1e-12;
const INFINITY_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Self) -> T {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Projective map of the plane, stored row-major with `m[2][2] = 1` whenever
/// that entry is not numerically zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography<T> {
    m: [[T; 3]; 3],
}

impl<T: Scalar> Homography<T> {
    /// Normalizes and validates a raw matrix.
    pub fn from_matrix(mut m: [[T; 3]; 3]) -> Result<Self, GeometryError> {
        if m.iter().flatten().any(|v| !v.is_finite()) {
            return Err(GeometryError::SingularMatrix);
        }
        let s = m[2][2];
        if s.abs() > T::of(NORMALIZE_EPS) {
            for v in m.iter_mut().flatten() {
                *v = *v / s;
            }
        }
        let h = Self { m };
        if h.determinant().abs() <= T::of(SINGULAR_EPS) {
            return Err(GeometryError::SingularMatrix);
        }
        Ok(h)
    }

    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self {
            m: [[o, z, z], [z, o, z], [z, z, o]],
        }
    }

    pub fn translation(tx: T, ty: T) -> Self {
        let (o, z) = (T::one(), T::zero());
        Self {
            m: [[o, z, tx], [z, o, ty], [z, z, o]],
        }
    }

    /// Parses nine whitespace-separated numbers, row-major.
    pub fn parse(text: &str) -> Result<Self, GeometryError> {
        let tokens: Vec<&str> = text.split_whitespace().collect();
        if tokens.len() != 9 {
            return Err(GeometryError::WrongTokenCount(tokens.len()));
        }
        let mut m = [[T::zero(); 3]; 3];
        for (i, tok) in tokens.iter().enumerate() {
            let v: f64 = tok
                .parse()
                .map_err(|_| GeometryError::NonNumericToken((*tok).to_string()))?;
            if !v.is_finite() {
                return Err(GeometryError::NonNumericToken((*tok).to_string()));
            }
            m[i / 3][i % 3] = T::of(v);
        }
        Self::from_matrix(m)
    }

    pub fn matrix(&self) -> &[[T; 3]; 3] {
        &self.m
    }

    pub fn determinant(&self) -> T {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn project(&self, p: Point<T>) -> Result<Point<T>, GeometryError> {
        let m = &self.m;
        let w = m[2][0] * p.x + m[2][1] * p.y + m[2][2];
        if w.abs() <= T::of(INFINITY_EPS) {
            return Err(GeometryError::PointAtInfinity);
        }
        Ok(Point::new(
            (m[0][0] * p.x + m[0][1] * p.y + m[0][2]) / w,
            (m[1][0] * p.x + m[1][1] * p.y + m[1][2]) / w,
        ))
    }

    /// `self` applied after `first`.
    pub fn compose(&self, first: &Self) -> Result<Self, GeometryError> {
        let mut out = [[T::zero(); 3]; 3];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = (0..3).fold(T::zero(), |acc, k| acc + self.m[r][k] * first.m[k][c]);
            }
        }
        Self::from_matrix(out)
    }

    pub fn inverse(&self) -> Result<Self, GeometryError> {
        let m = &self.m;
        let cof = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
        let adj = [
            [cof(1, 2, 1, 2), -cof(0, 2, 1, 2), cof(0, 1, 1, 2)],
            [-cof(1, 2, 0, 2), cof(0, 2, 0, 2), -cof(0, 1, 0, 2)],
            [cof(1, 2, 0, 1), -cof(0, 2, 0, 1), cof(0, 1, 0, 1)],
        ];
        let det = self.determinant();
        let mut inv = adj;
        for v in inv.iter_mut().flatten() {
            *v = *v / det;
        }
        Self::from_matrix(inv)
    }

    /// Largest absolute entrywise difference from the identity.
    pub fn distance_from_identity(&self) -> T {
        let id = Self::identity();
        self.m
            .iter()
            .flatten()
            .zip(id.m.iter().flatten())
            .fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs()))
    }
}

/// Euclidean distance between `H x` and `x_prime`.
pub fn reproj_dist<T: Scalar>(h: &Homography<T>, x: Point<T>, x_prime: Point<T>) -> Result<T, GeometryError> {
    Ok(h.project(x)?.distance(x_prime))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    type H = Homography<f64>;
    type P = Point<f64>;

    #[test]
    fn parse_examples() {
        assert_eq!(H::parse("1 0 0 0 1 0 0 0 1").unwrap(), H::identity());
        let s = H::parse("2 0 0\n0 2 0\n0 0 1\n").unwrap();
        assert_eq!(s.project(P::new(10.0, 20.0)).unwrap(), P::new(20.0, 40.0));
        let n = H::parse("1 0 0 0 1 0 0 0 2").unwrap();
        assert_eq!(n.matrix(), &[[0.5, 0.0, 0.0], [0.0, 0.5, 0.0], [0.0, 0.0, 1.0]]);
    }

    #[test]
    fn parse_errors() {
        assert_eq!(H::parse("1 0 0 0 1 0 0 0"), Err(GeometryError::WrongTokenCount(8)));
        assert_eq!(H::parse("1 0 0 0 1 0 0 0 1 1"), Err(GeometryError::WrongTokenCount(10)));
        assert_eq!(
            H::parse("1 0 0 0 x 0 0 0 1"),
            Err(GeometryError::NonNumericToken("x".into()))
        );
        assert_eq!(H::parse("1 2 3 2 4 6 0 0 1"), Err(GeometryError::SingularMatrix));
        assert!(H::parse("1.5e0 0 -3.25 0 1 0 0 0 1").is_ok());
    }

    #[test]
    fn identity_and_compose() {
        let id = H::identity();
        assert_eq!(id.project(P::new(10.0, 20.0)).unwrap(), P::new(10.0, 20.0));
        assert_eq!(id.project(P::new(0.0, 0.0)).unwrap(), P::new(0.0, 0.0));
        let h = H::parse("1.1 0.02 3 -0.01 0.9 -4 0.0001 0.0002 1").unwrap();
        assert_eq!(id.compose(&h).unwrap(), h);
    }

    #[test]
    fn project_examples() {
        let t = H::translation(5.0, -3.0);
        assert_eq!(t.project(P::new(10.0, 20.0)).unwrap(), P::new(15.0, 17.0));
        let h = H::from_matrix([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.001, 0.0, 1.0]]).unwrap();
        let p = h.project(P::new(100.0, 50.0)).unwrap();
        assert_relative_eq!(p.x, 90.909_090_9, epsilon = 1e-6);
        assert_relative_eq!(p.y, 45.454_545_4, epsilon = 1e-6);
        let inf = H::from_matrix([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [-0.01, 0.0, 1.0]]).unwrap();
        assert_eq!(inf.project(P::new(100.0, 3.0)), Err(GeometryError::PointAtInfinity));
    }

    #[test]
    fn reproj_examples() {
        let id = H::identity();
        assert_eq!(reproj_dist(&id, P::new(4.0, 4.0), P::new(4.0, 4.0)).unwrap(), 0.0);
        assert_eq!(reproj_dist(&id, P::new(0.0, 0.0), P::new(3.0, 4.0)).unwrap(), 5.0);
        let s = H::parse("2 0 0 0 2 0 0 0 1").unwrap();
        assert_eq!(reproj_dist(&s, P::new(1.0, 1.0), P::new(2.0, 2.0)).unwrap(), 0.0);
    }

    #[test]
    fn f32_instantiation() {
        let h = Homography::<f32>::parse("2 0 1 0 2 1 0 0 1").unwrap();
        assert_eq!(h.project(Point::new(1.0f32, 2.0)).unwrap(), Point::new(3.0, 5.0));
    }

    fn well_conditioned() -> impl Strategy<Value = H> {
        (
            0.7f64..1.3,
            -0.2f64..0.2,
            -50.0f64..50.0,
            -0.2f64..0.2,
            0.7f64..1.3,
            -50.0f64..50.0,
            -2e-4f64..2e-4,
            -2e-4f64..2e-4,
        )
            .prop_map(|(a, b, c, d, e, f, g, h)| H::from_matrix([[a, b, c], [d, e, f], [g, h, 1.0]]).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn inverse_roundtrip(h in well_conditioned(), x in 0.0f64..1000.0, y in 0.0f64..800.0) {
            let p = P::new(x, y);
            let back = h.project(h.inverse().unwrap().project(p).unwrap()).unwrap();
            prop_assert!(back.distance(p) < 1e-6);
        }

        #[test]
        fn normalization_preserves_projection(h in well_conditioned(), scale in 0.01f64..100.0,
                                              x in 0.0f64..1000.0, y in 0.0f64..800.0) {
            let m = h.matrix();
            let mut raw = *m;
            for v in raw.iter_mut().flatten() { *v *= scale; }
            // direct projection with the unnormalized matrix
            let w = raw[2][0] * x + raw[2][1] * y + raw[2][2];
            let direct = P::new((raw[0][0] * x + raw[0][1] * y + raw[0][2]) / w,
                                (raw[1][0] * x + raw[1][1] * y + raw[1][2]) / w);
            let normalized = H::from_matrix(raw).unwrap().project(P::new(x, y)).unwrap();
            prop_assert!(direct.distance(normalized) < 1e-9);
        }

        #[test]
        fn reproj_dist_through_identity(h in well_conditioned(), x in 0.0f64..500.0, y in 0.0f64..500.0,
                                        u in 0.0f64..500.0, v in 0.0f64..500.0) {
            let (p, q) = (P::new(x, y), P::new(u, v));
            let direct = reproj_dist(&h, p, q).unwrap();
            let via = reproj_dist(&H::identity(), h.project(p).unwrap(), q).unwrap();
            prop_assert_eq!(direct, via);
        }
    }
}
