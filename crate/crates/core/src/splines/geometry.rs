use std::f64::consts::FRAC_1_SQRT_2;

use super::knots::KnotVector;
use super::patch::NurbsPatch;
use super::SplineError;

/// Exact geometries available as single patches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GeometryKind {
    /// `[0, L]^2`.
    UnitSquare { length: f64 },
    /// Axis-aligned rectangle with lower-left corner `origin`.
    Rectangle { origin: [f64; 2], size: [f64; 2] },
    /// Disk of radius `R` centred at the origin (single patch, nine-point net at degree 2).
    Disk { radius: f64 },
    /// Quarter annulus in the first quadrant; `u` is radial, `v` angular.
    QuarterAnnulus { inner: f64, outer: f64 },
    /// Segment `(0, L)`.
    Rod { length: f64 },
}

fn bernstein_grid(p: usize, origin: [f64; 2], size: [f64; 2]) -> NurbsPatch {
    let kv = KnotVector::bezier(p);
    let mut pts = Vec::with_capacity((p + 1) * (p + 1));
    for j in 0..=p {
        for i in 0..=p {
            pts.push([
                origin[0] + size[0] * i as f64 / p as f64,
                origin[1] + size[1] * j as f64 / p as f64,
            ]);
        }
    }
    let n = pts.len();
    NurbsPatch::new(vec![kv.clone(), kv], pts, vec![1.0; n]).expect("valid Bernstein grid")
}

fn elevate_to(mut patch: NurbsPatch, p: usize) -> Result<NurbsPatch, SplineError> {
    for dir in 0..patch.dim() {
        while patch.degree(dir) < p {
            patch = patch.elevate_bezier(dir)?;
        }
    }
    Ok(patch)
}

pub fn make_geometry(kind: GeometryKind, p: usize) -> Result<NurbsPatch, SplineError> {
    if p == 0 || p > 5 {
        return Err(SplineError::Construction(format!("degree {p} outside 1..=5")));
    }
    let positive = |v: f64| v.is_finite() && v > 0.0;
    match kind {
        GeometryKind::UnitSquare { length } => {
            if !positive(length) {
                return Err(SplineError::Construction("length must be positive".into()));
            }
            Ok(bernstein_grid(p, [0.0, 0.0], [length, length]))
        }
        GeometryKind::Rectangle { origin, size } => {
            if !positive(size[0]) || !positive(size[1]) {
                return Err(SplineError::Construction("rectangle sides must be positive".into()));
            }
            Ok(bernstein_grid(p, origin, size))
        }
        GeometryKind::Rod { length } => {
            if !positive(length) {
                return Err(SplineError::Construction("length must be positive".into()));
            }
            let pts = (0..=p).map(|i| [length * i as f64 / p as f64, 0.0]).collect();
            NurbsPatch::new(vec![KnotVector::bezier(p)], pts, vec![1.0; p + 1])
        }
        GeometryKind::Disk { radius } => {
            if !positive(radius) {
                return Err(SplineError::Construction("radius must be positive".into()));
            }
            if p < 2 {
                return Err(SplineError::Construction("the disk needs degree >= 2".into()));
            }
            let r = radius;
            let c = r * FRAC_1_SQRT_2;
            let m = r * std::f64::consts::SQRT_2;
            let pts = vec![
                [-c, -c],
                [0.0, -m],
                [c, -c],
                [-m, 0.0],
                [0.0, 0.0],
                [m, 0.0],
                [-c, c],
                [0.0, m],
                [c, c],
            ];
            let h = FRAC_1_SQRT_2;
            let wts = vec![1.0, h, 1.0, h, 1.0, h, 1.0, h, 1.0];
            let kv = KnotVector::bezier(2);
            elevate_to(NurbsPatch::new(vec![kv.clone(), kv], pts, wts)?, p)
        }
        GeometryKind::QuarterAnnulus { inner, outer } => {
            if !positive(inner) || !(outer > inner) {
                return Err(SplineError::Construction("need 0 < inner < outer".into()));
            }
            let h = FRAC_1_SQRT_2;
            let mut pts = Vec::new();
            let mut wts = Vec::new();
            for (ang, w) in [([1.0, 0.0], 1.0), ([1.0, 1.0], h), ([0.0, 1.0], 1.0)] {
                for rad in [inner, outer] {
                    pts.push([rad * ang[0], rad * ang[1]]);
                    wts.push(w);
                }
            }
            let patch = NurbsPatch::new(vec![KnotVector::bezier(1), KnotVector::bezier(2)], pts, wts)?;
            elevate_to(patch, p)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_grid_has_unit_weights() {
        let s = make_geometry(GeometryKind::UnitSquare { length: 20.0 }, 2).unwrap();
        assert_eq!(s.shape(), (3, 3));
        assert!(s.weights().iter().all(|&w| w == 1.0));
        assert_eq!(s.control_points()[8], [20.0, 20.0]);
    }

    #[test]
    fn square_map_is_scaled_identity() {
        let s = make_geometry(GeometryKind::UnitSquare { length: 1.0 }, 3).unwrap();
        let e = s.eval(0.3, 0.7).unwrap();
        assert!((e.point[0] - 0.3).abs() < 1e-15 && (e.point[1] - 0.7).abs() < 1e-15);
        assert!((e.jacobian[0][0] - 1.0).abs() < 1e-14 && e.jacobian[0][1].abs() < 1e-14);
        assert!((e.det - 1.0).abs() < 1e-14);
    }

    #[test]
    fn disk_edges_lie_on_circle() {
        for p in 2..=5 {
            let d = make_geometry(GeometryKind::Disk { radius: 10.0 }, p).unwrap();
            for k in 0..=20 {
                let t = k as f64 / 20.0;
                for (u, v) in [(t, 0.0), (t, 1.0), (0.0, t), (1.0, t)] {
                    let x = d.point(u, v).unwrap();
                    assert!((x[0].hypot(x[1]) - 10.0).abs() < 1e-12, "p={p} ({u},{v})");
                }
            }
        }
    }

    #[test]
    fn elevated_disk_matches_quadratic() {
        let d2 = make_geometry(GeometryKind::Disk { radius: 1.0 }, 2).unwrap();
        let d5 = make_geometry(GeometryKind::Disk { radius: 1.0 }, 5).unwrap();
        for (u, v) in [(0.1, 0.2), (0.5, 0.5), (0.93, 0.41)] {
            let a = d2.point(u, v).unwrap();
            let b = d5.point(u, v).unwrap();
            assert!((a[0] - b[0]).abs() < 1e-13 && (a[1] - b[1]).abs() < 1e-13);
        }
    }

    #[test]
    fn disk_needs_quadratic() {
        assert!(make_geometry(GeometryKind::Disk { radius: 1.0 }, 1).is_err());
        assert!(make_geometry(GeometryKind::UnitSquare { length: -1.0 }, 2).is_err());
    }

    #[test]
    fn quarter_annulus_arcs() {
        let a = make_geometry(GeometryKind::QuarterAnnulus { inner: 1.0, outer: 2.0 }, 3).unwrap();
        for k in 0..=20 {
            let t = k as f64 / 20.0;
            let x = a.point(0.0, t).unwrap();
            let y = a.point(1.0, t).unwrap();
            assert!((x[0].hypot(x[1]) - 1.0).abs() < 1e-12);
            assert!((y[0].hypot(y[1]) - 2.0).abs() < 1e-12);
        }
        assert!(a.eval(0.5, 0.5).unwrap().det > 0.0);
    }

    #[test]
    fn middle_arc_weight() {
        let a = make_geometry(GeometryKind::QuarterAnnulus { inner: 1.0, outer: 2.0 }, 2).unwrap();
        assert!((a.weights()[a.index(0, 1)] - 0.5f64.sqrt()).abs() < 1e-15);
    }
}
