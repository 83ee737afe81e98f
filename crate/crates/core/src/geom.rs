//! Planar geometry on pixel coordinates.
//!
//! Pixel coordinates are `[col, row]` with pixel centers at integer values;
//! rows grow southward. Azimuths are degrees clockwise from grid north.

/// A polyline vertex in pixel coordinates, `[col, row]`.
pub type Vertex = [f64; 2];

pub fn distance(a: Vertex, b: Vertex) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}

/// Undirected azimuth of the segment `a -> b`, in `[0, 180)`.
pub fn segment_azimuth(a: Vertex, b: Vertex) -> f64 {
    let east = b[0] - a[0];
    let north = -(b[1] - a[1]);
    axial(east.atan2(north).to_degrees())
}

/// Folds any angle in degrees into `[0, 180)`.
pub fn axial(deg: f64) -> f64 {
    let r = deg.rem_euclid(180.0);
    if r >= 180.0 {
        0.0
    } else {
        r
    }
}

/// Smallest difference between two undirected azimuths, in `[0, 90]`.
pub fn axial_difference(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(180.0);
    d.min(180.0 - d)
}

/// Weighted mean of undirected azimuths using doubled angles.
///
/// Returns `None` when the weights cancel or sum to zero.
pub fn axial_mean(items: impl IntoIterator<Item = (f64, f64)>) -> Option<f64> {
    let (mut s, mut c, mut w_total) = (0.0, 0.0, 0.0);
    for (az, w) in items {
        let t = (2.0 * az).to_radians();
        s += w * t.sin();
        c += w * t.cos();
        w_total += w;
    }
    if w_total <= 0.0 || s.hypot(c) <= 1e-12 * w_total {
        return None;
    }
    Some(axial(0.5 * s.atan2(c).to_degrees()))
}

pub fn point_segment_distance(p: Vertex, a: Vertex, b: Vertex) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return distance(p, a);
    }
    let t = (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0);
    distance(p, [a[0] + t * dx, a[1] + t * dy])
}

/// Perpendicular distance from `p` to the infinite line through `a` and `b`.
pub fn point_line_distance(p: Vertex, a: Vertex, b: Vertex) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len = dx.hypot(dy);
    if len == 0.0 {
        return distance(p, a);
    }
    ((p[0] - a[0]) * dy - (p[1] - a[1]) * dx).abs() / len
}

/// Length of the part of segment `a -> b` inside the closed disk.
pub fn segment_disk_length(a: Vertex, b: Vertex, center: Vertex, radius: f64) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return 0.0;
    }
    let (fx, fy) = (a[0] - center[0], a[1] - center[1]);
    // |a + t d - c|^2 = r^2  =>  len2 t^2 + 2 (f.d) t + |f|^2 - r^2 = 0
    let half_b = fx * dx + fy * dy;
    let c = fx * fx + fy * fy - radius * radius;
    let disc = half_b * half_b - len2 * c;
    if disc <= 0.0 {
        return 0.0;
    }
    let root = disc.sqrt();
    let t0 = ((-half_b - root) / len2).max(0.0);
    let t1 = ((-half_b + root) / len2).min(1.0);
    if t1 <= t0 {
        0.0
    } else {
        (t1 - t0) * len2.sqrt()
    }
}

/// Samples a polyline at `step` spacing and calls `f(midpoint, piece_length)`
/// for each piece. Every segment is cut into `ceil(len / step)` equal pieces.
pub fn sample_polyline(vertices: &[Vertex], step: f64, mut f: impl FnMut(Vertex, f64)) {
    for w in vertices.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = distance(a, b);
        if len == 0.0 {
            continue;
        }
        let n = (len / step).ceil().max(1.0) as usize;
        let piece = len / n as f64;
        for i in 0..n {
            let t = (i as f64 + 0.5) / n as f64;
            f([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])], piece);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn compass_convention() {
        // east, north, south-east in pixel coordinates
        assert_abs_diff_eq!(segment_azimuth([0.0, 0.0], [1.0, 0.0]), 90.0);
        assert_abs_diff_eq!(segment_azimuth([0.0, 0.0], [0.0, -1.0]), 0.0);
        assert_abs_diff_eq!(segment_azimuth([0.0, 0.0], [0.0, 1.0]), 0.0);
        assert_abs_diff_eq!(segment_azimuth([0.0, 0.0], [1.0, 1.0]), 135.0, epsilon = 1e-12);
        assert_abs_diff_eq!(segment_azimuth([1.0, 1.0], [0.0, 0.0]), 135.0, epsilon = 1e-12);
    }

    #[test]
    fn axial_mean_wraps() {
        let m = axial_mean([(175.0, 1.0), (5.0, 1.0)]).unwrap();
        assert!(axial_difference(m, 0.0) < 1e-9);
        assert!(axial_mean([(0.0, 1.0), (90.0, 1.0)]).is_none());
    }

    #[test]
    fn disk_clip() {
        // horizontal chord through the center
        assert_abs_diff_eq!(
            segment_disk_length([-10.0, 0.0], [10.0, 0.0], [0.0, 0.0], 3.0),
            6.0,
            epsilon = 1e-12
        );
        // fully inside
        assert_abs_diff_eq!(
            segment_disk_length([0.0, 0.0], [1.0, 1.0], [0.0, 0.0], 3.0),
            2f64.sqrt(),
            epsilon = 1e-12
        );
        // outside
        assert_eq!(segment_disk_length([5.0, 5.0], [6.0, 5.0], [0.0, 0.0], 3.0), 0.0);
    }

    #[test]
    fn sampling_covers_length() {
        let mut total = 0.0;
        sample_polyline(&[[0.0, 0.0], [3.3, 0.0], [3.3, 2.0]], 0.5, |_, l| total += l);
        assert_abs_diff_eq!(total, 5.3, epsilon = 1e-12);
    }
}
