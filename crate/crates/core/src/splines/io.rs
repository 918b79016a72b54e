//! Plain-text patch format.
//!
//! ```text
//! nurbs-patch
//! degrees 2 2
//! knots 0 0 0 1 1 1
//! knots 0 0 0 1 1 1
//! grid 3 3
//! weights
//! 1 0.7071067811865476 1
//! ...
//! points
//! x0 y0 x1 y1 x2 y2
//! ...
//! ```
//! Grid rows run along the first parametric direction; one row per line.

use std::fmt::Write as _;

use super::knots::KnotVector;
use super::patch::NurbsPatch;
use super::SplineError;

pub fn patch_to_text(patch: &NurbsPatch) -> String {
    let mut s = String::from("nurbs-patch\n");
    let degrees: Vec<String> = patch.all_knots().iter().map(|k| k.degree().to_string()).collect();
    writeln!(s, "degrees {}", degrees.join(" ")).unwrap();
    for k in patch.all_knots() {
        let vals: Vec<String> = k.values().iter().map(|v| format!("{v:?}")).collect();
        writeln!(s, "knots {}", vals.join(" ")).unwrap();
    }
    let (nu, nv) = patch.shape();
    if patch.dim() == 2 {
        writeln!(s, "grid {nu} {nv}").unwrap();
    } else {
        writeln!(s, "grid {nu}").unwrap();
    }
    s.push_str("weights\n");
    for j in 0..nv {
        let row: Vec<String> = (0..nu).map(|i| format!("{:?}", patch.weights()[i + nu * j])).collect();
        writeln!(s, "{}", row.join(" ")).unwrap();
    }
    s.push_str("points\n");
    for j in 0..nv {
        let row: Vec<String> = (0..nu)
            .map(|i| {
                let c = patch.control_points()[i + nu * j];
                format!("{:?} {:?}", c[0], c[1])
            })
            .collect();
        writeln!(s, "{}", row.join(" ")).unwrap();
    }
    s
}

struct Lines<'a> {
    inner: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<(usize, &'a str), SplineError> {
        loop {
            match self.inner.next() {
                Some((n, l)) => {
                    let l = l.split('#').next().unwrap().trim();
                    if !l.is_empty() {
                        return Ok((n + 1, l));
                    }
                }
                None => return Err(SplineError::Parse { line: 0, msg: "unexpected end of input".into() }),
            }
        }
    }

    fn keyword(&mut self, key: &str) -> Result<(usize, Vec<&'a str>), SplineError> {
        let (n, l) = self.next()?;
        let mut parts = l.split_whitespace();
        if parts.next() != Some(key) {
            return Err(SplineError::Parse { line: n, msg: format!("expected `{key}`") });
        }
        Ok((n, parts.collect()))
    }
}

fn parse_all<T: std::str::FromStr>(line: usize, words: &[&str]) -> Result<Vec<T>, SplineError> {
    words
        .iter()
        .map(|w| {
            w.parse::<T>()
                .map_err(|_| SplineError::Parse { line, msg: format!("cannot parse `{w}`") })
        })
        .collect()
}

pub fn patch_from_text(text: &str) -> Result<NurbsPatch, SplineError> {
    let mut lines = Lines { inner: text.lines().enumerate().peekable() };
    let (n, l) = lines.next()?;
    if l != "nurbs-patch" {
        return Err(SplineError::Parse { line: n, msg: "missing `nurbs-patch` header".into() });
    }
    let (n, words) = lines.keyword("degrees")?;
    let degrees: Vec<usize> = parse_all(n, &words)?;
    if degrees.is_empty() || degrees.len() > 2 {
        return Err(SplineError::Parse { line: n, msg: "one or two degrees expected".into() });
    }
    let mut knots = Vec::new();
    for &p in &degrees {
        let (n, words) = lines.keyword("knots")?;
        let vals: Vec<f64> = parse_all(n, &words)?;
        knots.push(KnotVector::new(vals, p).map_err(|e| SplineError::Parse { line: n, msg: e.to_string() })?);
    }
    let (n, words) = lines.keyword("grid")?;
    let grid: Vec<usize> = parse_all(n, &words)?;
    let expected: Vec<usize> = knots.iter().map(|k| k.num_basis()).collect();
    if grid != expected {
        return Err(SplineError::Parse {
            line: n,
            msg: format!("grid {grid:?} does not match basis counts {expected:?}"),
        });
    }
    let nu = grid[0];
    let nv = grid.get(1).copied().unwrap_or(1);
    lines.keyword("weights")?;
    let mut weights = Vec::with_capacity(nu * nv);
    for _ in 0..nv {
        let (n, l) = lines.next()?;
        let row: Vec<f64> = parse_all(n, &l.split_whitespace().collect::<Vec<_>>())?;
        if row.len() != nu {
            return Err(SplineError::Parse { line: n, msg: format!("expected {nu} weights") });
        }
        weights.extend(row);
    }
    lines.keyword("points")?;
    let mut points = Vec::with_capacity(nu * nv);
    for _ in 0..nv {
        let (n, l) = lines.next()?;
        let row: Vec<f64> = parse_all(n, &l.split_whitespace().collect::<Vec<_>>())?;
        if row.len() != 2 * nu {
            return Err(SplineError::Parse { line: n, msg: format!("expected {} coordinates", 2 * nu) });
        }
        points.extend(row.chunks(2).map(|c| [c[0], c[1]]));
    }
    NurbsPatch::new(knots, points, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splines::{make_geometry, GeometryKind};

    #[test]
    fn round_trip_is_exact() {
        let d = make_geometry(GeometryKind::Disk { radius: 10.0 }, 3).unwrap().refined(3).unwrap();
        let text = patch_to_text(&d);
        assert_eq!(patch_from_text(&text).unwrap(), d);
        let rod = make_geometry(GeometryKind::Rod { length: 1.0 }, 2).unwrap().refined(4).unwrap();
        assert_eq!(patch_from_text(&patch_to_text(&rod)).unwrap(), rod);
    }

    #[test]
    fn malformed_input_reports_line() {
        let text = "nurbs-patch\ndegrees 1 1\nknots 0 0 1 1\nknots 0 0 1 1\ngrid 2 2\nweights\n1 1\n1 x\n";
        match patch_from_text(text) {
            Err(SplineError::Parse { line, .. }) => assert_eq!(line, 8),
            other => panic!("unexpected {other:?}"),
        }
    }
}
