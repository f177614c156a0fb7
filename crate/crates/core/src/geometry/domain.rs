use super::Point;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

const BAND: f64 = 1e-12;

fn band(bound: f64) -> f64 {
    BAND * (1.0 + bound.abs())
}

/// Region of a chart's coordinate space on which a map is valid.
///
/// Membership is tested with a relative tolerance band of `1e-12` so that
/// nodes lying exactly on a boundary belong to both neighbouring pieces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Everywhere,
    Box { min: Vec<f64>, max: Vec<f64> },
    /// `inner <= |x - center| <= outer`; `outer` may be infinite.
    Annulus { center: Vec<f64>, inner: f64, outer: f64 },
    /// `x[axis] >= bound` when `upper`, else `x[axis] <= bound`.
    HalfSpace { axis: usize, bound: f64, upper: bool },
}

impl Domain {
    pub fn disc(center: &[f64], radius: f64) -> Self {
        Domain::Annulus { center: center.to_vec(), inner: 0.0, outer: radius }
    }

    pub fn exterior(center: &[f64], radius: f64) -> Self {
        Domain::Annulus { center: center.to_vec(), inner: radius, outer: f64::INFINITY }
    }

    pub fn contains(&self, p: &Point) -> bool {
        match self {
            Domain::Everywhere => p.is_finite(),
            Domain::Box { min, max } => {
                p.dim() == min.len()
                    && (0..p.dim()).all(|i| p[i] >= min[i] - band(min[i]) && p[i] <= max[i] + band(max[i]))
            }
            Domain::Annulus { center, inner, outer } => {
                if p.dim() != center.len() {
                    return false;
                }
                let r = radius(p, center);
                r >= inner - band(*inner) && (outer.is_infinite() || r <= outer + band(*outer))
            }
            Domain::HalfSpace { axis, bound, upper } => {
                if *axis >= p.dim() {
                    return false;
                }
                if *upper {
                    p[*axis] >= bound - band(*bound)
                } else {
                    p[*axis] <= bound + band(*bound)
                }
            }
        }
    }

    /// Conservative containment test of `self` inside the ball
    /// `|x - center| <= radius` (boxes by their corners, annuli by their
    /// outer circle; half-spaces and `Everywhere` are unbounded).
    pub fn within_ball(&self, center: &[f64], radius: f64) -> bool {
        let tol = band(radius);
        match self {
            Domain::Everywhere | Domain::HalfSpace { .. } => false,
            Domain::Box { min, max } => {
                let n = min.len();
                if n != center.len() {
                    return false;
                }
                (0..(1usize << n)).all(|mask| {
                    let corner: Vec<f64> =
                        (0..n).map(|i| if mask & (1 << i) != 0 { max[i] } else { min[i] }).collect();
                    radius_slice(&corner, center) <= radius + tol
                })
            }
            Domain::Annulus { center: c, outer, .. } => {
                outer.is_finite() && c.len() == center.len() && radius_slice(c, center) + outer <= radius + tol
            }
        }
    }
}

pub(crate) fn radius(p: &Point, center: &[f64]) -> f64 {
    radius_slice(p.as_slice(), center)
}

fn radius_slice(p: &[f64], center: &[f64]) -> f64 {
    p.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_band_includes_boundary_roundoff() {
        let d = Domain::Box { min: vec![0.0, 0.0], max: vec![1.0, 1.0] };
        assert!(d.contains(&Point::xy(1.0 + 1e-13, 0.5)));
        assert!(!d.contains(&Point::xy(1.0 + 1e-9, 0.5)));
        assert!(!d.contains(&Point::xyz(0.5, 0.5, 0.5)));
    }

    #[test]
    fn annulus_and_halfspace() {
        let ext = Domain::exterior(&[0.0, 0.0], 1.0);
        assert!(ext.contains(&Point::xy(1e6, 0.0)));
        assert!(ext.contains(&Point::xy(1.0, 0.0)));
        assert!(!ext.contains(&Point::xy(0.5, 0.0)));
        let h = Domain::HalfSpace { axis: 1, bound: 2.0, upper: false };
        assert!(h.contains(&Point::xy(100.0, 2.0)));
        assert!(!h.contains(&Point::xy(0.0, 2.1)));
    }

    #[test]
    fn ball_containment() {
        let b = Domain::Box { min: vec![-0.5, -0.5], max: vec![0.5, 0.5] };
        assert!(b.within_ball(&[0.0, 0.0], 0.75));
        assert!(!b.within_ball(&[0.0, 0.0], 0.7));
        assert!(Domain::disc(&[0.0, 0.0], 1.0).within_ball(&[0.0, 0.0], 1.0));
        assert!(!Domain::Everywhere.within_ball(&[0.0, 0.0], 1e9));
    }
}
