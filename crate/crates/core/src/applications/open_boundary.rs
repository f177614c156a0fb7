use super::reparam::euclidean_equivalent_material;
use super::ApplicationError;
use crate::fem::{solve_bvp, AssemblyOptions, BoundaryValue, BvpSpec, DirichletCondition, QuadratureRule};
use crate::geometry::{ChartMap, Domain, Point};
use crate::mesh::{annulus_with_radii, BoundaryTag, RegionTag, ANNULUS_INNER, ANNULUS_OUTER};
use crate::solver::SolverConfig;
use crate::triplet::{MaterialField, Triplet};

/// Shell truncation of an unbounded exterior: everything outside radius
/// `inner` is squeezed into the annulus `inner <= R < outer`, and the
/// circle `R = outer` is the image of infinity.
#[derive(Clone, Debug, PartialEq)]
pub struct OpenBoundarySpec {
    pub center: Vec<f64>,
    pub inner: f64,
    pub outer: f64,
    /// Part of the base chart that must stay untouched.
    pub interior: Domain,
    /// Regions living outside radius `inner`.
    pub exterior_regions: Vec<RegionTag>,
}

impl OpenBoundarySpec {
    pub fn new(
        center: &[f64],
        inner: f64,
        outer: f64,
        interior: Domain,
        exterior_regions: Vec<RegionTag>,
    ) -> Result<Self, ApplicationError> {
        let ob = OpenBoundarySpec { center: center.to_vec(), inner, outer, interior, exterior_regions };
        ob.validate()?;
        Ok(ob)
    }

    pub fn validate(&self) -> Result<(), ApplicationError> {
        if !(self.inner > 0.0 && self.outer > self.inner && self.outer.is_finite()) {
            return Err(ApplicationError::InvalidShell { inner: self.inner, outer: self.outer });
        }
        if !self.interior.within_ball(&self.center, self.inner) {
            return Err(ApplicationError::RegionNotContained { radius: self.inner });
        }
        Ok(())
    }
}

/// Identity inside radius `inner`, shell map `R = b − a(b−a)/r` outside.
pub fn shell_chart(ob: &OpenBoundarySpec) -> Result<ChartMap, ApplicationError> {
    let inside = ChartMap::identity().with_domain(Domain::disc(&ob.center, ob.inner));
    let shell = ChartMap::kelvin_shell(&ob.center, ob.inner, ob.outer)?;
    Ok(ChartMap::piecewise(vec![inside, shell])?)
}

/// Triplet whose chart additionally applies the shell map. Exterior
/// materials become the pointwise equivalent of the base ones; interior
/// regions are unchanged.
pub fn open_boundary_triplet(base: &Triplet, ob: &OpenBoundarySpec) -> Result<Triplet, ApplicationError> {
    ob.validate()?;
    let shell = ChartMap::kelvin_shell(&ob.center, ob.inner, ob.outer)?;
    let mut material = MaterialField::new();
    for (region, field) in base.material.regions() {
        if ob.exterior_regions.contains(&region) {
            if !base.metric.is_euclidean_in(region) {
                return Err(ApplicationError::NonEuclideanMetric(region));
            }
            material.insert(region, euclidean_equivalent_material(field, &shell));
        } else {
            material.insert(region, field.clone());
        }
    }
    for r in &ob.exterior_regions {
        if !base.material.contains(*r) {
            return Err(ApplicationError::UnknownRegion(*r));
        }
    }
    let chart = ChartMap::compose(shell_chart(ob)?, base.chart.clone());
    Ok(Triplet::new(format!("{} with open boundary", base.label), chart, base.metric.clone(), material))
}

/// `u = 0` on the image of infinity.
pub fn infinity_condition(tag: BoundaryTag) -> DirichletCondition {
    DirichletCondition::boundary(tag, BoundaryValue::Constant(0.0))
}

pub const DIPOLE_INTERIOR: RegionTag = 1;
pub const DIPOLE_SHELL: RegionTag = 2;

/// 2D exterior dipole `u = cos θ / r` on `r >= r0` with `u(r0) = cos θ / r0`
/// and `u(∞) = 0`. The ring `r0 <= r <= a` (empty when `r0 = a`) stays in
/// the standard chart, the rest goes through the shell map.
#[derive(Clone, Debug, PartialEq)]
pub struct DipoleConfig {
    pub r0: f64,
    pub inner: f64,
    pub outer: f64,
    pub n_theta: usize,
    pub n_interior: usize,
    pub n_shell: usize,
}

impl DipoleConfig {
    pub fn new(n_theta: usize, n_shell: usize) -> Self {
        DipoleConfig { r0: 1.0, inner: 1.0, outer: 2.0, n_theta, n_interior: 0, n_shell }
    }

    pub fn with_interior_ring(mut self, r0: f64, n_interior: usize) -> Self {
        self.r0 = r0;
        self.n_interior = n_interior;
        self
    }

    /// Halves the mesh size in both directions.
    pub fn refined(&self) -> Self {
        DipoleConfig { n_theta: 2 * self.n_theta, n_interior: 2 * self.n_interior, n_shell: 2 * self.n_shell, ..self.clone() }
    }

    pub fn element_count(&self) -> usize {
        2 * self.n_theta * (self.n_interior + self.n_shell)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DipoleResult {
    pub elements: usize,
    /// `‖u_h − u‖ / ‖u‖` in the L2 norm of the mesh chart.
    pub l2_relative_error: f64,
    /// Largest nodal error on the circle `r = a` (0 without interior ring).
    pub interface_max_error: f64,
    pub energy: f64,
    /// `π / r0²`, the exact `∫ |∇u|²` over `r >= r0`.
    pub exact_energy: f64,
    pub iterations: usize,
}

/// Analytic dipole potential at mesh-chart point `y`.
fn dipole_exact(y: &Point, a: f64, b: f64) -> f64 {
    let big_r = y.norm();
    let r = if big_r <= a { big_r } else { a * (b - a) / (b - big_r) };
    y[0] / big_r / r
}

pub fn exterior_dipole(
    cfg: &DipoleConfig,
    opts: &AssemblyOptions,
    solver: &SolverConfig,
) -> Result<DipoleResult, ApplicationError> {
    let (a, b, r0) = (cfg.inner, cfg.outer, cfg.r0);
    if !(r0 > 0.0 && r0 <= a) || (r0 < a) != (cfg.n_interior > 0) || cfg.n_shell == 0 {
        return Err(ApplicationError::InvalidConfig(
            "dipole needs 0 < r0 <= a, interior divisions exactly when r0 < a, and at least one shell division".into(),
        ));
    }
    let mut radii: Vec<f64> = (0..cfg.n_interior).map(|i| r0 + (a - r0) * i as f64 / cfg.n_interior as f64).collect();
    radii.extend((0..=cfg.n_shell).map(|i| if i == cfg.n_shell { b } else { a + (b - a) * i as f64 / cfg.n_shell as f64 }));
    let mesh = annulus_with_radii([0.0, 0.0], &radii, cfg.n_theta, |r| if r < a { DIPOLE_INTERIOR } else { DIPOLE_SHELL })?;

    let mut material = MaterialField::new().scalar(DIPOLE_SHELL, 2, 1.0);
    if cfg.n_interior > 0 {
        material = material.scalar(DIPOLE_INTERIOR, 2, 1.0);
    }
    let base = Triplet::standard(2, material);
    let ob = OpenBoundarySpec::new(&[0.0, 0.0], a, b, Domain::disc(&[0.0, 0.0], a), vec![DIPOLE_SHELL])?;
    let triplet = open_boundary_triplet(&base, &ob)?;
    let bc = vec![
        DirichletCondition::boundary(ANNULUS_INNER, BoundaryValue::function(move |p| p[0] / (r0 * r0))),
        infinity_condition(ANNULUS_OUTER),
    ];
    let spec = BvpSpec::new(mesh, triplet, bc)?;
    let sol = solve_bvp(&spec, opts, solver)?;

    let rule = QuadratureRule::high_order(2);
    let (mut err2, mut norm2) = (0.0, 0.0);
    for e in 0..spec.mesh.element_count() {
        let pts = spec.mesh.element_points(e);
        let vol = spec.mesh.signed_volume(e);
        let nodes = &spec.mesh.elements()[e].nodes;
        let qpts = rule.points(&pts);
        for ((lambda, w), q) in rule.barycentric.iter().zip(&rule.weights).zip(&qpts) {
            let uh: f64 = lambda.iter().zip(nodes).map(|(l, &k)| l * sol.potential[k]).sum();
            let u = dipole_exact(q, a, b);
            err2 += w * vol * (uh - u) * (uh - u);
            norm2 += w * vol * u * u;
        }
    }
    let mut interface_max_error: f64 = 0.0;
    if cfg.n_interior > 0 {
        for (k, p) in spec.mesh.nodes().iter().enumerate() {
            if (p.norm() - a).abs() <= 1e-12 * a {
                interface_max_error = interface_max_error.max((sol.potential[k] - p[0] / p.norm() / a).abs());
            }
        }
    }
    Ok(DipoleResult {
        elements: spec.mesh.element_count(),
        l2_relative_error: (err2 / norm2).sqrt(),
        interface_max_error,
        energy: sol.energy,
        exact_energy: std::f64::consts::PI / (r0 * r0),
        iterations: sol.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::triplet::verify_material_equivalence_by_region;

    fn ob() -> OpenBoundarySpec {
        OpenBoundarySpec::new(&[0.0, 0.0], 1.0, 2.0, Domain::disc(&[0.0, 0.0], 0.8), vec![2]).unwrap()
    }

    #[test]
    fn shell_chart_values() {
        let c = shell_chart(&ob()).unwrap();
        assert_eq!(c.forward(&Point::xy(4.0, 0.0)).unwrap(), Point::xy(1.75, 0.0));
        assert_eq!(c.forward(&Point::xy(0.5, 0.0)).unwrap(), Point::xy(0.5, 0.0));
    }

    #[test]
    fn containment_and_radii_checked() {
        let r = OpenBoundarySpec::new(&[0.0, 0.0], 1.0, 2.0, Domain::disc(&[0.0, 0.0], 1.5), vec![2]);
        assert!(matches!(r, Err(ApplicationError::RegionNotContained { .. })));
        let r = OpenBoundarySpec::new(&[0.0, 0.0], 2.0, 1.0, Domain::disc(&[0.0, 0.0], 0.5), vec![2]);
        assert!(matches!(r, Err(ApplicationError::InvalidShell { .. })));
    }

    #[test]
    fn triplet_is_equivalent_and_interior_unchanged() {
        let base = Triplet::standard(2, MaterialField::new().scalar(1, 2, 3.0).scalar(2, 2, 1.5));
        let t = open_boundary_triplet(&base, &ob()).unwrap();
        let p = Point::xy(0.3, -0.2);
        assert_eq!(t.material.at(1, &p).unwrap(), Matrix::identity(2, 2) * 3.0);
        let outside: Vec<Point> = (0..10).map(|k| Point::xy(1.2 + k as f64, 0.3 * k as f64)).collect();
        let inside = vec![p];
        let rep = verify_material_equivalence_by_region(&base, &t, &[(1, &inside), (2, &outside)]).unwrap();
        assert!(rep.max_relative_deviation <= 1e-12, "{rep:?}");
    }

    #[test]
    fn coarse_dipole_is_reasonable() {
        let r = exterior_dipole(&DipoleConfig::new(32, 8), &AssemblyOptions::default(), &SolverConfig::default()).unwrap();
        assert!(r.l2_relative_error < 0.1, "{r:?}");
        assert!((r.energy - r.exact_energy).abs() / r.exact_energy < 0.1);
    }
}
