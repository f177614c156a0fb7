//! Reference problems with known answers.

use super::motion::{MotionMode, MotionSweep};
use super::reparam::euclidean_equivalent_material;
use super::ApplicationError;
use crate::fem::{BoundaryValue, BvpSpec, DirichletCondition};
use crate::geometry::{ChartMap, MatrixField, Point};
use crate::linalg::Matrix;
use crate::mesh::{check_quality, generate_structured, side_tag, tensor_grid, Mesh, MeshError, RegionTag, Shape};
use crate::triplet::{MaterialField, Triplet};

/// Unit square, `ε = 1`, `u = 0` on the left and `u = 1` on the right side,
/// so the exact solution is `u = x` and `W = 1`.
pub fn unit_square_spec(n: usize) -> Result<BvpSpec, ApplicationError> {
    let mesh = generate_structured(&Shape::Box { min: vec![0.0, 0.0], max: vec![1.0, 1.0] }, &[n, n])?;
    let triplet = Triplet::standard(2, MaterialField::new().scalar(1, 2, 1.0));
    let bc = vec![
        DirichletCondition::boundary(side_tag(0, false), BoundaryValue::Constant(0.0)),
        DirichletCondition::boundary(side_tag(0, true), BoundaryValue::Constant(1.0)),
    ];
    Ok(BvpSpec::new(mesh, triplet, bc)?)
}

pub const GAP_REGION: RegionTag = 1;
pub const PLATE_REGION: RegionTag = 2;

fn lines(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| if i == n { hi } else { lo + (hi - lo) * i as f64 / n as f64 }).collect()
}

/// Parallel-plate capacitor without fringing: the gap `0 <= y <= gap` over
/// `0 <= x <= width`, the grounded electrode is the bottom side and the
/// upper electrode is a conducting slab `gap <= y <= gap + plate_thickness`
/// held at `voltage`. The side walls are natural (zero flux) boundaries, so
/// the field in the gap is uniform.
#[derive(Clone, Debug, PartialEq)]
pub struct ParallelPlate {
    pub width: f64,
    pub gap: f64,
    pub plate_thickness: f64,
    pub permittivity: f64,
    pub voltage: f64,
    pub nx: usize,
    pub ny_gap: usize,
    pub ny_plate: usize,
}

impl Default for ParallelPlate {
    fn default() -> Self {
        ParallelPlate {
            width: 1.0,
            gap: 1.0,
            plate_thickness: 0.25,
            permittivity: 1.0,
            voltage: 1.0,
            nx: 8,
            ny_gap: 16,
            ny_plate: 4,
        }
    }
}

impl ParallelPlate {
    pub fn mesh(&self) -> Result<Mesh, MeshError> {
        let mut ys = lines(0.0, self.gap, self.ny_gap);
        ys.extend(lines(self.gap, self.gap + self.plate_thickness, self.ny_plate).into_iter().skip(1));
        let gap = self.gap;
        tensor_grid(&[lines(0.0, self.width, self.nx), ys], |c| if c[1] < gap { GAP_REGION } else { PLATE_REGION })
    }

    pub fn base_spec(&self) -> Result<BvpSpec, ApplicationError> {
        let material = MaterialField::new()
            .scalar(GAP_REGION, 2, self.permittivity)
            .scalar(PLATE_REGION, 2, self.permittivity);
        let bc = vec![
            DirichletCondition::boundary(side_tag(1, false), BoundaryValue::Constant(0.0)),
            DirichletCondition::region(PLATE_REGION, BoundaryValue::Constant(self.voltage)),
        ];
        Ok(BvpSpec::new(self.mesh()?, Triplet::standard(2, material), bc)?)
    }

    /// Gap stretched by `factor`, plate translated rigidly on top of it.
    pub fn step_map(&self, factor: f64) -> Result<ChartMap, ApplicationError> {
        let (g, t) = (self.gap, self.plate_thickness);
        Ok(ChartMap::piecewise_linear_axis(2, 1, &[0.0, g, g + t], &[0.0, factor * g, factor * g + t])?)
    }

    pub fn sweep(&self, factors: &[f64], mode: MotionMode) -> Result<MotionSweep, ApplicationError> {
        let steps = factors.iter().map(|&d| self.step_map(d)).collect::<Result<Vec<_>, _>>()?;
        MotionSweep::new(self.base_spec()?, vec![GAP_REGION], steps, mode)
    }

    /// `W = ε V² width / (factor · gap)` (no factor ½).
    pub fn analytic_energy(&self, factor: f64) -> f64 {
        self.permittivity * self.voltage * self.voltage * self.width / (factor * self.gap)
    }
}

/// Strip `[0, length] × [0, height]` with `length / height` huge and
/// `ε(x, y) = (1 + x/length)(1 + y/height)`; `u = 0` at the bottom, `u = 1`
/// at the top, natural elsewhere.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaleStress {
    pub length: f64,
    pub height: f64,
    pub nx: usize,
    pub ny: usize,
    /// Aspect ratios above this count as degenerate elements.
    pub max_aspect_ratio: f64,
}

impl Default for ScaleStress {
    fn default() -> Self {
        ScaleStress { length: 1e5, height: 1.0, nx: 32, ny: 32, max_aspect_ratio: 1e3 }
    }
}

impl ScaleStress {
    fn shape(&self) -> Shape {
        Shape::Box { min: vec![0.0, 0.0], max: vec![self.length, self.height] }
    }

    fn permittivity(&self) -> MatrixField {
        let (l, h) = (self.length, self.height);
        MatrixField::pointwise(move |p: &Point| Matrix::identity(2, 2) * ((1.0 + p[0] / l) * (1.0 + p[1] / h)))
    }

    fn conditions() -> Vec<DirichletCondition> {
        vec![
            DirichletCondition::boundary(side_tag(1, false), BoundaryValue::Constant(0.0)),
            DirichletCondition::boundary(side_tag(1, true), BoundaryValue::Constant(1.0)),
        ]
    }

    /// Structured mesh in the standard parameterization, passed through the
    /// quality gate (fails for extreme ratios).
    pub fn standard_mesh(&self) -> Result<Mesh, MeshError> {
        let mesh = generate_structured(&self.shape(), &[self.nx, self.ny])?;
        check_quality(&mesh, self.max_aspect_ratio)?;
        Ok(mesh)
    }

    /// Maps the strip onto the unit square.
    pub fn compressing_chart(&self) -> Result<ChartMap, ApplicationError> {
        Ok(ChartMap::axis_scaling(&[1.0 / self.length, 1.0 / self.height])?)
    }

    /// The same problem in the compressed chart, Euclidean metric there and
    /// pointwise equivalent materials.
    pub fn compressed_spec(&self) -> Result<BvpSpec, ApplicationError> {
        let chart = self.compressing_chart()?;
        let mesh = generate_structured(&Shape::Box { min: vec![0.0, 0.0], max: vec![1.0, 1.0] }, &[self.nx, self.ny])?;
        check_quality(&mesh, self.max_aspect_ratio)?;
        let material = MaterialField::new().with_region(1, euclidean_equivalent_material(&self.permittivity(), &chart));
        let triplet = Triplet::new("compressed", chart, crate::geometry::MetricField::euclidean(2), material);
        Ok(BvpSpec::new(mesh, triplet, Self::conditions())?)
    }

    /// Energy of the separable problem reduced to one dimension:
    /// `W = ∫ a(x) dx / ∫ dy / b(y)` for `ε = a(x) b(y)`, integrated with
    /// composite Simpson rules.
    pub fn reference_energy(&self) -> f64 {
        let simpson = |f: &dyn Fn(f64) -> f64, lo: f64, hi: f64| {
            let n = 2000;
            let h = (hi - lo) / n as f64;
            let mut s = f(lo) + f(hi);
            for i in 1..n {
                s += f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            s * h / 3.0
        };
        let (l, h) = (self.length, self.height);
        let along = simpson(&|x| 1.0 + x / l, 0.0, l);
        let across = simpson(&|y| 1.0 / (1.0 + y / h), 0.0, h);
        along / across
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capacitor_mesh_regions() {
        let p = ParallelPlate::default();
        let m = p.mesh().unwrap();
        assert_eq!(m.element_count(), 2 * p.nx * (p.ny_gap + p.ny_plate));
        assert_eq!(m.region_tags().into_iter().collect::<Vec<_>>(), vec![GAP_REGION, PLATE_REGION]);
        let phi = p.step_map(2.0).unwrap();
        assert_eq!(phi.forward(&Point::xy(0.3, 1.1)).unwrap(), Point::xy(0.3, 2.1));
    }

    #[test]
    fn scale_stress_reference_energy() {
        let s = ScaleStress::default();
        let exact = 1.5 * s.length / std::f64::consts::LN_2;
        assert!((s.reference_energy() - exact).abs() / exact < 1e-10);
        assert!(matches!(s.standard_mesh(), Err(MeshError::PoorQuality { .. })));
    }
}
