use super::{CoordVector, Domain, GeometryError, JacobianMatrix, Point};
use crate::linalg::{Matrix, Vector};

/// Radial profile `r -> rho(r)` of a [`ChartFamily::PolarStretch`].
#[derive(Clone, Debug, PartialEq)]
pub enum RadialProfile {
    /// `rho = scale * r^exponent`.
    Power { scale: f64, exponent: f64 },
}

impl RadialProfile {
    fn value(&self, r: f64) -> f64 {
        match *self {
            RadialProfile::Power { scale, exponent } => scale * r.powf(exponent),
        }
    }

    fn derivative(&self, r: f64) -> f64 {
        match *self {
            RadialProfile::Power { scale, exponent } => scale * exponent * r.powf(exponent - 1.0),
        }
    }

    fn inverse(&self, rho: f64) -> f64 {
        match *self {
            RadialProfile::Power { scale, exponent } => (rho / scale).powf(1.0 / exponent),
        }
    }
}

/// The closed set of map families a chart can be built from.
#[derive(Clone, Debug, PartialEq)]
pub enum ChartFamily {
    Identity,
    /// `x -> A x + b`.
    Affine { matrix: Matrix, offset: Vector },
    AxisScaling { factors: Vec<f64> },
    /// Orthogonal rotation; `angle` is kept for labelling.
    Rotation { matrix: Matrix, angle: f64 },
    PolarStretch { center: Vector, profile: RadialProfile },
    /// Radial map `R = b - a (b - a) / r` of the exterior `r >= a` onto the
    /// ring `a <= R < b`; infinity lands on the circle `R = b`.
    KelvinShell { center: Vector, inner: f64, outer: f64 },
    /// `Composite([g, f]) = g ∘ f`: the last member is applied first.
    Composite(Vec<ChartMap>),
    /// The first member whose domain contains the point is used. Members
    /// must agree on shared boundaries for the result to be continuous.
    Piecewise(Vec<ChartMap>),
}

/// An invertible map between coordinate patches, valid on `domain`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChartMap {
    family: ChartFamily,
    domain: Domain,
}

fn invalid(msg: impl Into<String>) -> GeometryError {
    GeometryError::InvalidChart(msg.into())
}

impl ChartMap {
    pub fn new(family: ChartFamily, domain: Domain) -> Self {
        ChartMap { family, domain }
    }

    pub fn identity() -> Self {
        ChartMap::new(ChartFamily::Identity, Domain::Everywhere)
    }

    pub fn affine(matrix: Matrix, offset: &[f64]) -> Result<Self, GeometryError> {
        if !matrix.is_square() || matrix.nrows() != offset.len() {
            return Err(invalid("affine map needs a square matrix matching the offset length"));
        }
        let det = matrix.determinant();
        if !(det.abs() > 1e-300) || !det.is_finite() {
            return Err(GeometryError::SingularJacobian { det });
        }
        Ok(ChartMap::new(
            ChartFamily::Affine { matrix, offset: Vector::from_column_slice(offset) },
            Domain::Everywhere,
        ))
    }

    pub fn translation(offset: &[f64]) -> Self {
        let n = offset.len();
        ChartMap::affine(Matrix::identity(n, n), offset).expect("identity is invertible")
    }

    pub fn axis_scaling(factors: &[f64]) -> Result<Self, GeometryError> {
        if factors.is_empty() || factors.iter().any(|f| *f == 0.0 || !f.is_finite()) {
            return Err(invalid("axis scaling factors must be finite and nonzero"));
        }
        Ok(ChartMap::new(ChartFamily::AxisScaling { factors: factors.to_vec() }, Domain::Everywhere))
    }

    pub fn rotation2(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let matrix = Matrix::from_row_slice(2, 2, &[c, -s, s, c]);
        ChartMap::new(ChartFamily::Rotation { matrix, angle }, Domain::Everywhere)
    }

    /// Rotation by `angle` about `axis` (Rodrigues formula).
    pub fn rotation3(axis: [f64; 3], angle: f64) -> Result<Self, GeometryError> {
        let k = Vector::from_column_slice(&axis);
        let norm = k.norm();
        if !(norm > 0.0) {
            return Err(invalid("rotation axis must be nonzero"));
        }
        let k = k / norm;
        let cross = Matrix::from_row_slice(3, 3, &[0.0, -k[2], k[1], k[2], 0.0, -k[0], -k[1], k[0], 0.0]);
        let (s, c) = angle.sin_cos();
        let matrix = Matrix::identity(3, 3) * c + cross * s + (&k * k.transpose()) * (1.0 - c);
        Ok(ChartMap::new(ChartFamily::Rotation { matrix, angle }, Domain::Everywhere))
    }

    pub fn polar_stretch(center: &[f64], scale: f64, exponent: f64) -> Result<Self, GeometryError> {
        if !(scale > 0.0) || !(exponent > 0.0) {
            return Err(invalid("polar stretch needs positive scale and exponent"));
        }
        Ok(ChartMap::new(
            ChartFamily::PolarStretch {
                center: Vector::from_column_slice(center),
                profile: RadialProfile::Power { scale, exponent },
            },
            Domain::Everywhere,
        ))
    }

    /// Shell map bringing the exterior of the radius-`inner` ball to the
    /// ring between `inner` and `outer`. With `inner = 1, outer = 2` this is
    /// `R = 2 - 1/r`.
    pub fn kelvin_shell(center: &[f64], inner: f64, outer: f64) -> Result<Self, GeometryError> {
        if !(inner > 0.0 && outer > inner && outer.is_finite()) {
            return Err(invalid(format!("kelvin shell needs 0 < a < b, got a={inner}, b={outer}")));
        }
        Ok(ChartMap::new(
            ChartFamily::KelvinShell { center: Vector::from_column_slice(center), inner, outer },
            Domain::exterior(center, inner),
        ))
    }

    /// `outer ∘ inner`.
    pub fn compose(outer: ChartMap, inner: ChartMap) -> Self {
        ChartMap::new(ChartFamily::Composite(vec![outer, inner]), Domain::Everywhere)
    }

    /// Maps applied in the given order: `chain([f, g])` is `g ∘ f`.
    pub fn chain(mut maps: Vec<ChartMap>) -> Self {
        maps.reverse();
        ChartMap::new(ChartFamily::Composite(maps), Domain::Everywhere)
    }

    pub fn piecewise(pieces: Vec<ChartMap>) -> Result<Self, GeometryError> {
        if pieces.is_empty() {
            return Err(invalid("piecewise chart needs at least one piece"));
        }
        Ok(ChartMap::new(ChartFamily::Piecewise(pieces), Domain::Everywhere))
    }

    /// Continuous, monotone piecewise-linear map of one coordinate axis with
    /// `values[k]` at `knots[k]`; other axes are untouched. The outer
    /// segments extend linearly to infinity.
    pub fn piecewise_linear_axis(
        dim: usize,
        axis: usize,
        knots: &[f64],
        values: &[f64],
    ) -> Result<Self, GeometryError> {
        if axis >= dim || knots.len() < 2 || knots.len() != values.len() {
            return Err(invalid("piecewise-linear axis map needs >= 2 knots with matching values"));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) || values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("knots and values must be strictly increasing"));
        }
        let segments = knots.len() - 1;
        let mut pieces = Vec::with_capacity(segments);
        for k in 0..segments {
            let slope = (values[k + 1] - values[k]) / (knots[k + 1] - knots[k]);
            let mut matrix = Matrix::identity(dim, dim);
            matrix[(axis, axis)] = slope;
            let mut offset = vec![0.0; dim];
            offset[axis] = values[k] - slope * knots[k];
            let mut min = vec![f64::NEG_INFINITY; dim];
            let mut max = vec![f64::INFINITY; dim];
            if k > 0 {
                min[axis] = knots[k];
            }
            if k + 1 < segments {
                max[axis] = knots[k + 1];
            }
            pieces.push(ChartMap::affine(matrix, &offset)?.with_domain(Domain::Box { min, max }));
        }
        ChartMap::piecewise(pieces)
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn family(&self) -> &ChartFamily {
        &self.family
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Fixed dimension of the map, `None` for dimension-agnostic families.
    pub fn dim(&self) -> Option<usize> {
        match &self.family {
            ChartFamily::Identity => None,
            ChartFamily::Affine { offset, .. } => Some(offset.len()),
            ChartFamily::AxisScaling { factors } => Some(factors.len()),
            ChartFamily::Rotation { matrix, .. } => Some(matrix.nrows()),
            ChartFamily::PolarStretch { center, .. } | ChartFamily::KelvinShell { center, .. } => Some(center.len()),
            ChartFamily::Composite(members) | ChartFamily::Piecewise(members) => members.iter().find_map(ChartMap::dim),
        }
    }

    pub fn label(&self) -> String {
        match &self.family {
            ChartFamily::Identity => "identity".into(),
            ChartFamily::Affine { .. } => "affine".into(),
            ChartFamily::AxisScaling { factors } => format!("axis_scaling{factors:?}"),
            ChartFamily::Rotation { angle, .. } => format!("rotation({angle})"),
            ChartFamily::PolarStretch { profile, .. } => format!("polar_stretch({profile:?})"),
            ChartFamily::KelvinShell { inner, outer, .. } => format!("kelvin_shell(a={inner}, b={outer})"),
            ChartFamily::Composite(m) => {
                format!("composite[{}]", m.iter().map(ChartMap::label).collect::<Vec<_>>().join(" ∘ "))
            }
            ChartFamily::Piecewise(m) => {
                format!("piecewise[{}]", m.iter().map(ChartMap::label).collect::<Vec<_>>().join(", "))
            }
        }
    }

    pub fn is_affine(&self) -> bool {
        match &self.family {
            ChartFamily::Identity
            | ChartFamily::Affine { .. }
            | ChartFamily::AxisScaling { .. }
            | ChartFamily::Rotation { .. } => true,
            ChartFamily::Composite(m) => m.iter().all(ChartMap::is_affine),
            ChartFamily::Piecewise(m) => m.len() == 1 && m[0].is_affine(),
            ChartFamily::PolarStretch { profile, .. } => {
                matches!(profile, RadialProfile::Power { exponent, .. } if *exponent == 1.0)
            }
            ChartFamily::KelvinShell { .. } => false,
        }
    }

    /// Affine on each piece. Elements of a mesh aligned with the piece
    /// boundaries then map to straight simplices exactly.
    pub fn is_piecewise_affine(&self) -> bool {
        match &self.family {
            ChartFamily::Composite(m) | ChartFamily::Piecewise(m) => m.iter().all(ChartMap::is_piecewise_affine),
            _ => self.is_affine(),
        }
    }

    fn outside_domain(&self, x: &Point) -> GeometryError {
        GeometryError::PointOutsideDomain { chart: self.label(), point: x.to_vec() }
    }

    fn outside_image(&self, y: &Point) -> GeometryError {
        GeometryError::PointOutsideImage { chart: self.label(), point: y.to_vec() }
    }

    fn check_point(&self, x: &Point) -> Result<(), GeometryError> {
        if let Some(n) = self.dim() {
            x.check_dim(n)?;
        }
        if !self.domain.contains(x) {
            return Err(self.outside_domain(x));
        }
        Ok(())
    }

    fn radial_parts(&self, x: &Point, center: &Vector) -> Result<(f64, Vector), GeometryError> {
        let d = x.coords() - center;
        let r = d.norm();
        if !(r > 0.0) {
            return Err(self.outside_domain(x));
        }
        Ok((r, d / r))
    }

    pub fn forward(&self, x: &Point) -> Result<Point, GeometryError> {
        self.check_point(x)?;
        let y = match &self.family {
            ChartFamily::Identity => x.clone(),
            ChartFamily::Affine { matrix, offset } => Point::from(matrix * x.coords() + offset),
            ChartFamily::AxisScaling { factors } => {
                Point::from(x.coords().component_mul(&Vector::from_column_slice(factors)))
            }
            ChartFamily::Rotation { matrix, .. } => Point::from(matrix * x.coords()),
            ChartFamily::PolarStretch { center, profile } => {
                let (r, unit) = self.radial_parts(x, center)?;
                Point::from(center + unit * profile.value(r))
            }
            ChartFamily::KelvinShell { center, inner, outer } => {
                let (r, unit) = self.radial_parts(x, center)?;
                Point::from(center + unit * shell_radius(r, *inner, *outer))
            }
            ChartFamily::Composite(members) => {
                let mut p = x.clone();
                for m in members.iter().rev() {
                    p = m.forward(&p)?;
                }
                p
            }
            ChartFamily::Piecewise(pieces) => {
                let piece = pieces.iter().find(|p| p.domain.contains(x)).ok_or_else(|| self.outside_domain(x))?;
                piece.forward(x)?
            }
        };
        Ok(y)
    }

    pub fn inverse(&self, y: &Point) -> Result<Point, GeometryError> {
        if let Some(n) = self.dim() {
            y.check_dim(n)?;
        }
        let x = match &self.family {
            ChartFamily::Identity => y.clone(),
            ChartFamily::Affine { matrix, offset } => {
                let lu = matrix.clone().lu();
                Point::from(lu.solve(&(y.coords() - offset)).ok_or_else(|| self.outside_image(y))?)
            }
            ChartFamily::AxisScaling { factors } => {
                Point::from(y.coords().component_div(&Vector::from_column_slice(factors)))
            }
            ChartFamily::Rotation { matrix, .. } => Point::from(matrix.transpose() * y.coords()),
            ChartFamily::PolarStretch { center, profile } => {
                let d = y.coords() - center;
                let rho = d.norm();
                if !(rho > 0.0) {
                    return Err(self.outside_image(y));
                }
                Point::from(center + &d * (profile.inverse(rho) / rho))
            }
            ChartFamily::KelvinShell { center, inner, outer } => {
                let d = y.coords() - center;
                let rho = d.norm();
                let tol = 1e-12 * (1.0 + inner);
                if !(rho >= inner - tol && rho < *outer) {
                    return Err(self.outside_image(y));
                }
                let rho = rho.max(*inner);
                let r = inner * (outer - inner) / (outer - rho);
                Point::from(center + &d * (r / d.norm()))
            }
            ChartFamily::Composite(members) => {
                let mut p = y.clone();
                for m in members {
                    p = m.inverse(&p)?;
                }
                p
            }
            ChartFamily::Piecewise(pieces) => pieces
                .iter()
                .find_map(|piece| piece.inverse(y).ok().filter(|x| piece.domain.contains(x)))
                .ok_or_else(|| self.outside_image(y))?,
        };
        if !self.domain.contains(&x) {
            return Err(self.outside_image(y));
        }
        Ok(x)
    }

    fn jacobian_entries(&self, x: &Point) -> Result<Matrix, GeometryError> {
        self.check_point(x)?;
        let n = x.dim();
        let j = match &self.family {
            ChartFamily::Identity => Matrix::identity(n, n),
            ChartFamily::Affine { matrix, .. } | ChartFamily::Rotation { matrix, .. } => matrix.clone(),
            ChartFamily::AxisScaling { factors } => Matrix::from_diagonal(&Vector::from_column_slice(factors)),
            ChartFamily::PolarStretch { center, profile } => {
                let (r, unit) = self.radial_parts(x, center)?;
                radial_jacobian(&unit, profile.value(r) / r, profile.derivative(r))
            }
            ChartFamily::KelvinShell { center, inner, outer } => {
                let (r, unit) = self.radial_parts(x, center)?;
                let slope = inner * (outer - inner) / (r * r);
                radial_jacobian(&unit, shell_radius(r, *inner, *outer) / r, slope)
            }
            ChartFamily::Composite(members) => {
                let mut p = x.clone();
                let mut j = Matrix::identity(n, n);
                for m in members.iter().rev() {
                    j = m.jacobian_entries(&p)? * j;
                    p = m.forward(&p)?;
                }
                j
            }
            ChartFamily::Piecewise(pieces) => {
                let piece = pieces.iter().find(|p| p.domain.contains(x)).ok_or_else(|| self.outside_domain(x))?;
                piece.jacobian_entries(x)?
            }
        };
        Ok(j)
    }

    /// Analytic Jacobian of the forward map at `x`.
    pub fn jacobian(&self, x: &Point) -> Result<JacobianMatrix, GeometryError> {
        let entries = self.jacobian_entries(x)?;
        let image = self.forward(x)?;
        Ok(JacobianMatrix { entries, at: x.clone(), image })
    }

    /// Pushes `v` forward to the image of its base point.
    pub fn push_forward(&self, v: &CoordVector) -> Result<CoordVector, GeometryError> {
        super::push_forward(&self.jacobian(&v.base)?, v)
    }

    /// Radius of the image of `x` from the map's center, for radial families.
    pub fn radial_center(&self) -> Option<&[f64]> {
        match &self.family {
            ChartFamily::PolarStretch { center, .. } | ChartFamily::KelvinShell { center, .. } => Some(center.as_slice()),
            _ => None,
        }
    }
}

fn shell_radius(r: f64, a: f64, b: f64) -> f64 {
    b - a * (b - a) / r
}

/// `J = (rho/r) I + (rho' - rho/r) x̂ x̂ᵀ` for a radial map.
fn radial_jacobian(unit: &Vector, tangential: f64, radial: f64) -> Matrix {
    let n = unit.len();
    Matrix::identity(n, n) * tangential + (unit * unit.transpose()) * (radial - tangential)
}
