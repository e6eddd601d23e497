//! Reader for TrueType (`glyf`-flavoured) font files: enough of `head`,
//! `maxp`, `cmap` (formats 4 and 12), `loca` and `glyf` (simple and
//! composite glyphs) to extract quadratic outlines.

use std::path::Path;

use crate::{Error, Result};

/// 2-D point in font units (y up) or pixels (y down), depending on context.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub x: f32,
    pub y: f32,
}

impl Point {
    pub fn new(x: f32, y: f32) -> Self {
        Self { x, y }
    }

    fn mid(a: Point, b: Point) -> Point {
        Point::new((a.x + b.x) * 0.5, (a.y + b.y) * 0.5)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Segment {
    Line(Point, Point),
    Quad(Point, Point, Point),
}

/// Closed quadratic contours of one glyph.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Outline {
    pub segments: Vec<Segment>,
}

/// Axis-aligned bounding box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bounds {
    pub min: Point,
    pub max: Point,
}

impl Bounds {
    pub fn width(&self) -> f32 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f32 {
        self.max.y - self.min.y
    }
}

impl Outline {
    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Bounds of all on- and off-curve points (the control hull, which is
    /// what the `glyf` header box records).
    pub fn bounds(&self) -> Option<Bounds> {
        let mut pts = self.segments.iter().flat_map(|s| match *s {
            Segment::Line(a, b) => vec![a, b],
            Segment::Quad(a, c, b) => vec![a, c, b],
        });
        let first = pts.next()?;
        let mut b = Bounds { min: first, max: first };
        for p in pts {
            b.min.x = b.min.x.min(p.x);
            b.min.y = b.min.y.min(p.y);
            b.max.x = b.max.x.max(p.x);
            b.max.y = b.max.y.max(p.y);
        }
        Some(b)
    }

    /// Applies `p -> (a*p.x + b*p.y + dx, c*p.x + d*p.y + dy)`.
    pub fn transformed(&self, m: [f32; 6]) -> Outline {
        let [a, b, c, d, dx, dy] = m;
        let t = |p: Point| Point::new(a * p.x + b * p.y + dx, c * p.x + d * p.y + dy);
        Outline {
            segments: self
                .segments
                .iter()
                .map(|s| match *s {
                    Segment::Line(p, q) => Segment::Line(t(p), t(q)),
                    Segment::Quad(p, c, q) => Segment::Quad(t(p), t(c), t(q)),
                })
                .collect(),
        }
    }
}

/// A parsed TrueType font.
#[derive(Clone, Debug)]
pub struct Font {
    data: Vec<u8>,
    units_per_em: u16,
    num_glyphs: u16,
    loca_long: bool,
    loca: (usize, usize),
    glyf: (usize, usize),
    cmap: CmapSubtable,
}

#[derive(Clone, Copy, Debug)]
enum CmapSubtable {
    Format4(usize),
    Format12(usize),
}

fn rd_u16(d: &[u8], off: usize) -> Option<u16> {
    d.get(off..off + 2).map(|b| u16::from_be_bytes([b[0], b[1]]))
}

fn rd_i16(d: &[u8], off: usize) -> Option<i16> {
    rd_u16(d, off).map(|v| v as i16)
}

fn rd_u32(d: &[u8], off: usize) -> Option<u32> {
    d.get(off..off + 4).map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
}

/// F2Dot14 fixed point.
fn rd_f2dot14(d: &[u8], off: usize) -> Option<f32> {
    rd_i16(d, off).map(|v| v as f32 / 16384.0)
}

const ON_CURVE: u8 = 0x01;
const X_SHORT: u8 = 0x02;
const Y_SHORT: u8 = 0x04;
const REPEAT: u8 = 0x08;
const X_SAME_OR_POS: u8 = 0x10;
const Y_SAME_OR_POS: u8 = 0x20;

const ARG_WORDS: u16 = 0x0001;
const ARGS_ARE_XY: u16 = 0x0002;
const HAVE_SCALE: u16 = 0x0008;
const MORE_COMPONENTS: u16 = 0x0020;
const HAVE_XY_SCALE: u16 = 0x0040;
const HAVE_2X2: u16 = 0x0080;

const MAX_COMPOSITE_DEPTH: usize = 8;

impl Font {
    pub fn load(path: &Path) -> Result<Self> {
        let data = std::fs::read(path).map_err(|e| Error::FontLoad { path: path.into(), reason: e.to_string() })?;
        Self::from_bytes(data).map_err(|reason| Error::FontLoad { path: path.into(), reason })
    }

    pub fn from_bytes(data: Vec<u8>) -> std::result::Result<Self, String> {
        let short = || "truncated table directory".to_string();
        let version = rd_u32(&data, 0).ok_or_else(short)?;
        match version {
            0x0001_0000 | 0x7472_7565 => {}
            0x4f54_544f => return Err("CFF-flavoured OpenType outlines are not supported".into()),
            v => return Err(format!("not a TrueType font (version tag {v:08x})")),
        }
        let num_tables = rd_u16(&data, 4).ok_or_else(short)? as usize;
        let find = |tag: &[u8; 4]| -> Option<(usize, usize)> {
            (0..num_tables).find_map(|i| {
                let rec = 12 + 16 * i;
                if data.get(rec..rec + 4)? == tag {
                    let off = rd_u32(&data, rec + 8)? as usize;
                    let len = rd_u32(&data, rec + 12)? as usize;
                    (off.checked_add(len)? <= data.len()).then_some((off, len))
                } else {
                    None
                }
            })
        };
        let head = find(b"head").ok_or("missing head table")?;
        let maxp = find(b"maxp").ok_or("missing maxp table")?;
        let cmap = find(b"cmap").ok_or("missing cmap table")?;
        let loca = find(b"loca").ok_or("missing loca table (no TrueType outlines)")?;
        let glyf = find(b"glyf").ok_or("missing glyf table")?;

        let units_per_em = rd_u16(&data, head.0 + 18).ok_or("truncated head")?;
        if units_per_em == 0 {
            return Err("unitsPerEm is zero".into());
        }
        let loca_long = rd_i16(&data, head.0 + 50).ok_or("truncated head")? != 0;
        let num_glyphs = rd_u16(&data, maxp.0 + 4).ok_or("truncated maxp")?;
        let cmap = Self::pick_cmap(&data, cmap.0).ok_or("no usable Unicode cmap subtable")?;
        Ok(Self { data, units_per_em, num_glyphs, loca_long, loca, glyf, cmap })
    }

    fn pick_cmap(d: &[u8], base: usize) -> Option<CmapSubtable> {
        let n = rd_u16(d, base + 2)? as usize;
        let mut best: Option<(u8, CmapSubtable)> = None;
        for i in 0..n {
            let rec = base + 4 + 8 * i;
            let platform = rd_u16(d, rec)?;
            let encoding = rd_u16(d, rec + 2)?;
            let off = base + rd_u32(d, rec + 4)? as usize;
            let unicode = platform == 0 || (platform == 3 && (encoding == 1 || encoding == 10));
            if !unicode {
                continue;
            }
            let (rank, sub) = match rd_u16(d, off)? {
                12 => (2, CmapSubtable::Format12(off)),
                4 => (1, CmapSubtable::Format4(off)),
                _ => continue,
            };
            if best.is_none_or(|(r, _)| rank > r) {
                best = Some((rank, sub));
            }
        }
        best.map(|(_, s)| s)
    }

    pub fn units_per_em(&self) -> u16 {
        self.units_per_em
    }

    /// Glyph id for a character, or `None` when the font lacks it.
    pub fn glyph_index(&self, ch: char) -> Option<u16> {
        let c = ch as u32;
        let d = &self.data;
        let gid = match self.cmap {
            CmapSubtable::Format4(off) => {
                if c > 0xffff {
                    return None;
                }
                let seg_x2 = rd_u16(d, off + 6)? as usize;
                let ends = off + 14;
                let starts = ends + seg_x2 + 2;
                let deltas = starts + seg_x2;
                let ranges = deltas + seg_x2;
                let seg = (0..seg_x2 / 2).find(|&i| rd_u16(d, ends + 2 * i).is_some_and(|e| e as u32 >= c))?;
                let start = rd_u16(d, starts + 2 * seg)? as u32;
                if c < start {
                    return None;
                }
                let delta = rd_u16(d, deltas + 2 * seg)?;
                let range_off = rd_u16(d, ranges + 2 * seg)? as usize;
                if range_off == 0 {
                    (c as u16).wrapping_add(delta)
                } else {
                    let addr = ranges + 2 * seg + range_off + 2 * (c - start) as usize;
                    let g = rd_u16(d, addr)?;
                    if g == 0 {
                        0
                    } else {
                        g.wrapping_add(delta)
                    }
                }
            }
            CmapSubtable::Format12(off) => {
                let groups = rd_u32(d, off + 12)? as usize;
                (0..groups).find_map(|i| {
                    let g = off + 16 + 12 * i;
                    let (s, e, first) = (rd_u32(d, g)?, rd_u32(d, g + 4)?, rd_u32(d, g + 8)?);
                    (s..=e).contains(&c).then(|| (first + (c - s)) as u16)
                })?
            }
        };
        (gid != 0 && gid < self.num_glyphs).then_some(gid)
    }

    fn glyph_range(&self, gid: u16) -> Option<(usize, usize)> {
        let (loca, _) = self.loca;
        let i = gid as usize;
        let (a, b) = if self.loca_long {
            (rd_u32(&self.data, loca + 4 * i)? as usize, rd_u32(&self.data, loca + 4 * i + 4)? as usize)
        } else {
            (rd_u16(&self.data, loca + 2 * i)? as usize * 2, rd_u16(&self.data, loca + 2 * i + 2)? as usize * 2)
        };
        let (glyf, glyf_len) = self.glyf;
        (a <= b && b <= glyf_len).then_some((glyf + a, glyf + b))
    }

    /// Outline of a glyph in font units. Empty glyphs yield an empty outline.
    pub fn outline(&self, gid: u16) -> std::result::Result<Outline, String> {
        let mut out = Outline::default();
        self.append_outline(gid, [1.0, 0.0, 0.0, 1.0, 0.0, 0.0], 0, &mut out)?;
        Ok(out)
    }

    fn append_outline(
        &self,
        gid: u16,
        m: [f32; 6],
        depth: usize,
        out: &mut Outline,
    ) -> std::result::Result<(), String> {
        if depth > MAX_COMPOSITE_DEPTH {
            return Err("composite glyph nesting too deep".into());
        }
        let (start, end) = self.glyph_range(gid).ok_or_else(|| format!("bad loca entry for glyph {gid}"))?;
        if start == end {
            return Ok(());
        }
        let d = &self.data[start..end];
        let bad = || format!("truncated glyph {gid}");
        let n_contours = rd_i16(d, 0).ok_or_else(bad)?;
        if n_contours >= 0 {
            let simple = parse_simple(d, n_contours as usize).ok_or_else(bad)?;
            out.segments.extend(simple.transformed(m).segments);
            return Ok(());
        }
        let mut off = 10;
        loop {
            let flags = rd_u16(d, off).ok_or_else(bad)?;
            let child = rd_u16(d, off + 2).ok_or_else(bad)?;
            off += 4;
            let (a1, a2) = if flags & ARG_WORDS != 0 {
                let v = (rd_i16(d, off).ok_or_else(bad)?, rd_i16(d, off + 2).ok_or_else(bad)?);
                off += 4;
                (v.0 as f32, v.1 as f32)
            } else {
                let v = (*d.get(off).ok_or_else(bad)? as i8, *d.get(off + 1).ok_or_else(bad)? as i8);
                off += 2;
                (v.0 as f32, v.1 as f32)
            };
            if flags & ARGS_ARE_XY == 0 {
                return Err("point-matched composite glyphs are not supported".into());
            }
            let (mut a, mut b, mut c, mut dd) = (1.0, 0.0, 0.0, 1.0);
            if flags & HAVE_SCALE != 0 {
                a = rd_f2dot14(d, off).ok_or_else(bad)?;
                dd = a;
                off += 2;
            } else if flags & HAVE_XY_SCALE != 0 {
                a = rd_f2dot14(d, off).ok_or_else(bad)?;
                dd = rd_f2dot14(d, off + 2).ok_or_else(bad)?;
                off += 4;
            } else if flags & HAVE_2X2 != 0 {
                a = rd_f2dot14(d, off).ok_or_else(bad)?;
                c = rd_f2dot14(d, off + 2).ok_or_else(bad)?;
                b = rd_f2dot14(d, off + 4).ok_or_else(bad)?;
                dd = rd_f2dot14(d, off + 6).ok_or_else(bad)?;
                off += 8;
            }
            // child transform (component space -> parent space), then parent m.
            let child_m = [a, b, c, dd, a1, a2];
            let composed = [
                m[0] * child_m[0] + m[1] * child_m[2],
                m[0] * child_m[1] + m[1] * child_m[3],
                m[2] * child_m[0] + m[3] * child_m[2],
                m[2] * child_m[1] + m[3] * child_m[3],
                m[0] * child_m[4] + m[1] * child_m[5] + m[4],
                m[2] * child_m[4] + m[3] * child_m[5] + m[5],
            ];
            self.append_outline(child, composed, depth + 1, out)?;
            if flags & MORE_COMPONENTS == 0 {
                break;
            }
        }
        Ok(())
    }
}

fn parse_simple(d: &[u8], n_contours: usize) -> Option<Outline> {
    let mut end_pts = Vec::with_capacity(n_contours);
    for i in 0..n_contours {
        end_pts.push(rd_u16(d, 10 + 2 * i)? as usize);
    }
    let n_points = end_pts.last().map_or(0, |&e| e + 1);
    let instr_len = rd_u16(d, 10 + 2 * n_contours)? as usize;
    let mut off = 12 + 2 * n_contours + instr_len;

    let mut flags = Vec::with_capacity(n_points);
    while flags.len() < n_points {
        let f = *d.get(off)?;
        off += 1;
        flags.push(f);
        if f & REPEAT != 0 {
            let n = *d.get(off)?;
            off += 1;
            for _ in 0..n {
                flags.push(f);
            }
        }
    }
    flags.truncate(n_points);

    let mut read_coords = |short: u8, same_or_pos: u8| -> Option<Vec<f32>> {
        let mut v = 0i32;
        let mut out = Vec::with_capacity(n_points);
        for &f in &flags {
            if f & short != 0 {
                let dv = *d.get(off)? as i32;
                off += 1;
                v += if f & same_or_pos != 0 { dv } else { -dv };
            } else if f & same_or_pos == 0 {
                v += rd_i16(d, off)? as i32;
                off += 2;
            }
            out.push(v as f32);
        }
        Some(out)
    };
    let xs = read_coords(X_SHORT, X_SAME_OR_POS)?;
    let ys = read_coords(Y_SHORT, Y_SAME_OR_POS)?;

    let mut outline = Outline::default();
    let mut start = 0;
    for &end in &end_pts {
        if end < start || end >= n_points {
            return None;
        }
        let pts: Vec<(Point, bool)> =
            (start..=end).map(|i| (Point::new(xs[i], ys[i]), flags[i] & ON_CURVE != 0)).collect();
        push_contour(&pts, &mut outline.segments);
        start = end + 1;
    }
    Some(outline)
}

/// Converts one TrueType contour (on/off-curve points, implied midpoints
/// between consecutive off-curve points) into closed segments.
fn push_contour(pts: &[(Point, bool)], out: &mut Vec<Segment>) {
    let n = pts.len();
    if n < 2 {
        return;
    }
    // Walk from an on-curve point back around to it; if every point is
    // off-curve, start from the implied midpoint of the last and first.
    let (start, seq): (Point, Vec<(Point, bool)>) = match pts.iter().position(|p| p.1) {
        Some(i) => (pts[i].0, (1..=n).map(|k| pts[(i + k) % n]).collect()),
        None => {
            let s = Point::mid(pts[n - 1].0, pts[0].0);
            (s, pts.iter().copied().chain(std::iter::once((s, true))).collect())
        }
    };
    let mut cur = start;
    let mut ctrl: Option<Point> = None;
    for (p, on) in seq {
        match (on, ctrl) {
            (true, None) => {
                out.push(Segment::Line(cur, p));
                cur = p;
            }
            (true, Some(c)) => {
                out.push(Segment::Quad(cur, c, p));
                cur = p;
                ctrl = None;
            }
            (false, None) => ctrl = Some(p),
            (false, Some(c)) => {
                let m = Point::mid(c, p);
                out.push(Segment::Quad(cur, c, m));
                cur = m;
                ctrl = Some(p);
            }
        }
    }
}
