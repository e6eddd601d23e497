//! Supersampled scanline rasterizer (non-zero winding) for glyph outlines
//! already transformed into pixel space (y down).

use super::font::{Outline, Point, Segment};

/// Sub-samples per pixel along each axis.
pub const SUBSAMPLES: usize = 16;

const QUAD_STEPS: usize = 12;

struct Edge {
    x0: f32,
    y0: f32,
    x1: f32,
    y1: f32,
}

fn flatten(outline: &Outline) -> Vec<Edge> {
    let mut edges = Vec::new();
    let mut push = |a: Point, b: Point| {
        if a.y != b.y {
            edges.push(Edge { x0: a.x, y0: a.y, x1: b.x, y1: b.y });
        }
    };
    for seg in &outline.segments {
        match *seg {
            Segment::Line(a, b) => push(a, b),
            Segment::Quad(a, c, b) => {
                let mut prev = a;
                for i in 1..=QUAD_STEPS {
                    let t = i as f32 / QUAD_STEPS as f32;
                    let u = 1.0 - t;
                    let p = Point::new(
                        u * u * a.x + 2.0 * u * t * c.x + t * t * b.x,
                        u * u * a.y + 2.0 * u * t * c.y + t * t * b.y,
                    );
                    push(prev, p);
                    prev = p;
                }
            }
        }
    }
    edges
}

/// Per-pixel ink coverage in `[0, 1]`, row-major `width × height`.
pub fn rasterize(outline: &Outline, width: usize, height: usize) -> Vec<f32> {
    let edges = flatten(outline);
    let s = SUBSAMPLES;
    let weight = 1.0 / (s * s) as f32;
    let mut coverage = vec![0.0f32; width * height];
    let mut crossings: Vec<(f32, i32)> = Vec::new();
    for sy in 0..height * s {
        let yc = (sy as f32 + 0.5) / s as f32;
        crossings.clear();
        for e in &edges {
            let (lo, hi, dir) = if e.y0 < e.y1 { (e.y0, e.y1, 1) } else { (e.y1, e.y0, -1) };
            if yc >= lo && yc < hi {
                let t = (yc - e.y0) / (e.y1 - e.y0);
                crossings.push((e.x0 + t * (e.x1 - e.x0), dir));
            }
        }
        if crossings.is_empty() {
            continue;
        }
        crossings.sort_by(|a, b| a.0.total_cmp(&b.0));
        let row = (sy / s) * width;
        let mut winding = 0;
        let mut next = 0;
        for sx in 0..width * s {
            let xc = (sx as f32 + 0.5) / s as f32;
            while next < crossings.len() && crossings[next].0 < xc {
                winding += crossings[next].1;
                next += 1;
            }
            if winding != 0 {
                coverage[row + sx / s] += weight;
            }
        }
    }
    for c in &mut coverage {
        *c = c.min(1.0);
    }
    coverage
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(x0: f32, y0: f32, x1: f32, y1: f32) -> Outline {
        let p = Point::new;
        Outline {
            segments: vec![
                Segment::Line(p(x0, y0), p(x1, y0)),
                Segment::Line(p(x1, y0), p(x1, y1)),
                Segment::Line(p(x1, y1), p(x0, y1)),
                Segment::Line(p(x0, y1), p(x0, y0)),
            ],
        }
    }

    #[test]
    fn axis_aligned_rectangle() {
        let cov = rasterize(&rect(1.0, 1.0, 3.0, 2.5), 4, 4);
        assert_eq!(cov[4 + 1], 1.0);
        assert_eq!(cov[4 + 2], 1.0);
        assert!((cov[2 * 4 + 1] - 0.5).abs() < 1e-6);
        assert_eq!(cov[0], 0.0);
        let total: f32 = cov.iter().sum();
        assert!((total - 3.0).abs() < 1e-4);
    }

    #[test]
    fn winding_direction_does_not_matter() {
        let mut r = rect(0.5, 0.5, 3.5, 3.5);
        let a = rasterize(&r, 4, 4);
        r.segments.reverse();
        for s in &mut r.segments {
            if let Segment::Line(a, b) = s {
                std::mem::swap(a, b);
            }
        }
        assert_eq!(a, rasterize(&r, 4, 4));
    }
}
