use super::ClosedCurve;
use crate::specfun::Point;

const COLLINEAR_EPS: f64 = 1e-14;

/// Sign of the orientation of `c` relative to the directed line `a -> b`:
/// `1`, `-1`, or `0` when the points are collinear to within a relative
/// tolerance.
fn orientation(a: Point, b: Point, c: Point) -> i8 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ac = [c[0] - a[0], c[1] - a[1]];
    let det = ab[0] * ac[1] - ab[1] * ac[0];
    let scale = (ab[0].abs() + ab[1].abs()) * (ac[0].abs() + ac[1].abs());
    if det.abs() <= COLLINEAR_EPS * scale {
        0
    } else if det > 0.0 {
        1
    } else {
        -1
    }
}

fn on_segment_box(a: Point, b: Point, c: Point) -> bool {
    c[0] >= a[0].min(b[0]) && c[0] <= a[0].max(b[0]) && c[1] >= a[1].min(b[1]) && c[1] <= a[1].max(b[1])
}

/// Closed-segment intersection test; touching and collinear overlap count as
/// intersecting.
pub fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let o1 = orientation(p1, p2, q1);
    let o2 = orientation(p1, p2, q2);
    let o3 = orientation(q1, q2, p1);
    let o4 = orientation(q1, q2, p2);
    if o1 * o2 < 0 && o3 * o4 < 0 {
        return true;
    }
    (o1 == 0 && on_segment_box(p1, p2, q1))
        || (o2 == 0 && on_segment_box(p1, p2, q2))
        || (o3 == 0 && on_segment_box(q1, q2, p1))
        || (o4 == 0 && on_segment_box(q1, q2, p2))
}

/// True when the polygon through `ns` equispaced samples of the curve has no
/// intersecting pair of non-adjacent edges. Plain pairwise test.
pub fn is_simple(curve: &ClosedCurve, ns: usize) -> bool {
    let ns = ns.max(2 * curve.bandwidth() + 2);
    let ns = ns + (ns & 1);
    let pts = match curve.points(ns) {
        Ok(p) => p,
        Err(_) => return false,
    };
    polygon_is_simple(&pts)
}

pub(crate) fn polygon_is_simple(pts: &[Point]) -> bool {
    let n = pts.len();
    if n < 3 {
        return false;
    }
    let boxes: Vec<[f64; 4]> = (0..n)
        .map(|i| {
            let a = pts[i];
            let b = pts[(i + 1) % n];
            [a[0].min(b[0]), a[0].max(b[0]), a[1].min(b[1]), a[1].max(b[1])]
        })
        .collect();
    for i in 0..n {
        let bi = boxes[i];
        let (a1, a2) = (pts[i], pts[(i + 1) % n]);
        // edges i and i+1 share a vertex, as do edges 0 and n-1
        let last = if i == 0 { n - 1 } else { n };
        for j in (i + 2)..last {
            let bj = &boxes[j];
            if bj[0] > bi[1] || bj[1] < bi[0] || bj[2] > bi[3] || bj[3] < bi[2] {
                continue;
            }
            if segments_intersect(a1, a2, pts[j], pts[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}
