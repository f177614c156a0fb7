use crate::geometry::Point;
use crate::linalg::Vector;

/// How assembly picks a rule per element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum QuadratureChoice {
    /// Centroid rule where both metric and material are constant on the
    /// element, the higher-order rule otherwise.
    #[default]
    Auto,
    Centroid,
    HighOrder,
}

impl std::str::FromStr for QuadratureChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(QuadratureChoice::Auto),
            "centroid" => Ok(QuadratureChoice::Centroid),
            "high" | "high-order" => Ok(QuadratureChoice::HighOrder),
            other => Err(format!("unknown quadrature '{other}' (expected auto, centroid or high)")),
        }
    }
}

/// Rule on the reference simplex in barycentric coordinates; weights sum to 1
/// and are multiplied by the element volume.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    pub barycentric: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn centroid(dim: usize) -> Self {
        QuadratureRule { barycentric: vec![vec![1.0 / (dim + 1) as f64; dim + 1]], weights: vec![1.0] }
    }

    /// Degree-2 rules: 3 points in 2D, 4 points in 3D.
    pub fn high_order(dim: usize) -> Self {
        let (a, b) = match dim {
            2 => (2.0 / 3.0, 1.0 / 6.0),
            _ => (0.585_410_196_624_968_5, 0.138_196_601_125_010_5),
        };
        let barycentric = (0..=dim)
            .map(|k| (0..=dim).map(|i| if i == k { a } else { b }).collect())
            .collect();
        QuadratureRule { barycentric, weights: vec![1.0 / (dim + 1) as f64; dim + 1] }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Physical quadrature points of the simplex with vertices `points`.
    pub fn points(&self, points: &[&Point]) -> Vec<Point> {
        self.barycentric
            .iter()
            .map(|lambda| {
                let mut x = Vector::zeros(points[0].dim());
                for (l, p) in lambda.iter().zip(points) {
                    x += p.coords() * *l;
                }
                Point::from_vector(x)
            })
            .collect()
    }
}
