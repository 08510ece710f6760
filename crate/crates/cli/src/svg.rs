//! Top-down SVG figures.
//!
//! World to page: `x_page = MARGIN + (x - ws.min.x) * SCALE` and
//! `y_page = MARGIN + (ws.max.y - y) * SCALE`, with `ws` the scenario
//! workspace, `SCALE` = 100 px/m and `MARGIN` = 20 px. Elements are written
//! in a fixed order so identical inputs give identical bytes.

use std::fmt::Write;

use realize_core::geometry::ConvexPolygon;
use realize_core::sim::TraceRecord;
use realize_core::{ParamKind, Rect, Scenario, Vec2};

pub const SCALE: f64 = 100.0;
pub const MARGIN: f64 = 20.0;

const FAILED: &str = "#f28e2b";
const FEASIBLE: &str = "#4e79a7";
const BEST: &str = "#1b2f5e";
const REGION: &str = "#59a14f";
const OBSTACLE: &str = "#8c8c8c";
const RAMP: &str = "#c7b299";

fn num(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

pub struct Canvas {
    ws: Rect,
    body: String,
}

impl Canvas {
    pub fn new(ws: Rect) -> Self {
        Self { ws, body: String::new() }
    }

    fn page(&self, p: Vec2) -> (f64, f64) {
        (MARGIN + (p.x - self.ws.min.x) * SCALE, MARGIN + (self.ws.max.y - p.y) * SCALE)
    }

    fn px(&self, p: Vec2) -> (String, String) {
        let (x, y) = self.page(p);
        (num(x), num(y))
    }

    fn points(&self, pts: &[Vec2]) -> String {
        pts.iter()
            .map(|&p| {
                let (x, y) = self.px(p);
                format!("{x},{y}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn open_group(&mut self, id: &str, attrs: &str) {
        let _ = writeln!(self.body, "<g id=\"{id}\" {attrs}>");
    }

    pub fn close_group(&mut self) {
        self.body.push_str("</g>\n");
    }

    pub fn polygon(&mut self, pts: &[Vec2], attrs: &str) {
        let _ = writeln!(self.body, "<polygon points=\"{}\" {attrs}/>", self.points(pts));
    }

    pub fn polyline(&mut self, pts: &[Vec2], attrs: &str) {
        let _ = writeln!(self.body, "<polyline points=\"{}\" fill=\"none\" {attrs}/>", self.points(pts));
    }

    pub fn path(&mut self, d: &str, attrs: &str) {
        let _ = writeln!(self.body, "<path d=\"{d}\" {attrs}/>");
    }

    pub fn cross(&mut self, p: Vec2, attrs: &str) {
        let (x, y) = self.page(p);
        let d = format!(
            "M{} {} L{} {} M{} {} L{} {}",
            num(x - 3.0),
            num(y - 3.0),
            num(x + 3.0),
            num(y + 3.0),
            num(x - 3.0),
            num(y + 3.0),
            num(x + 3.0),
            num(y - 3.0)
        );
        self.path(&d, attrs);
    }

    pub fn text(&mut self, p: Vec2, s: &str) {
        let (x, y) = self.px(p);
        let _ = writeln!(self.body, "<text x=\"{x}\" y=\"{y}\" font-size=\"11\" font-family=\"sans-serif\">{s}</text>");
    }

    pub fn finish(self) -> String {
        let w = num(self.ws.size().x * SCALE + 2.0 * MARGIN);
        let h = num(self.ws.size().y * SCALE + 2.0 * MARGIN);
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
             <rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n{}</svg>\n",
            self.body
        )
    }

    /// Outline of `poly` grown by `pad`: offset edges joined by arcs.
    fn padded_outline(&self, poly: &ConvexPolygon, pad: f64) -> String {
        let v = poly.vertices();
        let n = v.len();
        let normal = |i: usize| {
            let e = v[(i + 1) % n] - v[i];
            Vec2::new(e.y, -e.x) / e.norm()
        };
        let r = num(pad * SCALE);
        let mut d = String::new();
        for i in 0..n {
            let (a, b) = (v[i], v[(i + 1) % n]);
            let (ni, nj) = (normal(i), normal((i + 1) % n));
            let (ax, ay) = self.px(a + ni * pad);
            let (bx, by) = self.px(b + ni * pad);
            let (cx, cy) = self.px(b + nj * pad);
            if i == 0 {
                let _ = write!(d, "M{ax} {ay} ");
            }
            // convex corner arcs bend away from the obstacle on the flipped page
            let _ = write!(d, "L{bx} {by} A{r} {r} 0 0 0 {cx} {cy} ");
        }
        d.push('Z');
        d
    }
}

/// Parameter regions, obstacles with their padded outline, the goal region
/// and initial object footprints.
pub fn draw_world(c: &mut Canvas, sc: &Scenario) {
    c.open_group("regions", &format!("fill=\"{REGION}\" fill-opacity=\"0.15\" stroke=\"{REGION}\" stroke-width=\"0.5\""));
    for spec in &sc.params {
        match spec.kind {
            ParamKind::Annulus { center, r_inner, r_outer } => {
                let ring = |r: f64| {
                    let (x0, y0) = c.px(center + Vec2::new(r, 0.0));
                    let (x1, y1) = c.px(center - Vec2::new(r, 0.0));
                    let rr = num(r * SCALE);
                    format!("M{x0} {y0} A{rr} {rr} 0 1 0 {x1} {y1} A{rr} {rr} 0 1 0 {x0} {y0} Z")
                };
                let d = format!("{} {}", ring(r_outer), ring(r_inner));
                c.path(&d, "fill-rule=\"evenodd\"");
            }
            ParamKind::Rect2 { center, size } => {
                c.polygon(ConvexPolygon::rectangle(center, size).vertices(), "");
            }
            ParamKind::Box3Yaw { center, size, .. } => {
                c.polygon(ConvexPolygon::rectangle(center.xy(), size.xy()).vertices(), "");
            }
            ParamKind::Yaw { .. } => {}
        }
    }
    c.close_group();

    c.open_group("obstacles", "stroke=\"#555555\" stroke-width=\"1\"");
    for s in &sc.shapes {
        let fill = if s.is_ramp() { RAMP } else { OBSTACLE };
        c.polygon(s.footprint.vertices(), &format!("fill=\"{fill}\""));
        if s.is_ramp() {
            let (_, down) = s.slope();
            let mid = s.footprint.centroid();
            c.polyline(&[mid - down * 0.15, mid + down * 0.15], "stroke=\"#333333\"");
        }
    }
    c.close_group();

    c.open_group("padding", "fill=\"none\" stroke=\"#555555\" stroke-width=\"0.8\" stroke-dasharray=\"4 3\"");
    if sc.sim.astar_padding > 0.0 {
        for s in sc.shapes.iter().filter(|s| s.nav_obstacle) {
            let d = c.padded_outline(&s.footprint, sc.nav_inflation());
            c.path(&d, "");
        }
    }
    c.close_group();

    c.open_group("goal", "fill=\"none\" stroke=\"#2ca02c\" stroke-width=\"1.5\" stroke-dasharray=\"6 3\"");
    let g = &sc.goal.robot_region;
    c.polygon(ConvexPolygon::rectangle((g.min + g.max) / 2.0, g.size()).vertices(), "");
    c.close_group();

    c.open_group("objects", "fill=\"#e15759\" stroke=\"#7f2020\" stroke-width=\"0.5\"");
    for o in &sc.objects {
        let p = o.initial_position;
        c.polygon(ConvexPolygon::rectangle(p.xy(), o.half_extents.xy() * 2.0).vertices(), "");
    }
    c.close_group();
}

/// One re-simulated sample for a history plot.
pub struct SamplePath {
    pub feasible: bool,
    pub base: Vec<Vec2>,
    /// Planar parameter values (locations and pose positions).
    pub markers: Vec<Vec2>,
}

pub fn history_svg(sc: &Scenario, title: &str, samples: &[SamplePath], best: Option<&[Vec2]>) -> String {
    let mut c = Canvas::new(sc.sim.workspace);
    draw_world(&mut c, sc);
    for (id, feasible, color) in [("failed", false, FAILED), ("feasible", true, FEASIBLE)] {
        let group: Vec<&SamplePath> = samples.iter().filter(|s| s.feasible == feasible).collect();
        if group.is_empty() {
            continue;
        }
        c.open_group(id, &format!("stroke=\"{color}\" stroke-width=\"1\" stroke-opacity=\"0.7\""));
        for s in &group {
            c.polyline(&s.base, "");
        }
        c.close_group();
        c.open_group(&format!("{id}-samples"), &format!("stroke=\"{color}\" stroke-width=\"1\" fill=\"none\""));
        for s in &group {
            for &m in &s.markers {
                c.cross(m, "");
            }
        }
        c.close_group();
    }
    if let Some(b) = best {
        c.open_group("best", &format!("stroke=\"{BEST}\" stroke-width=\"3\""));
        c.polyline(b, "");
        c.close_group();
    }
    let corner = Vec2::new(sc.sim.workspace.min.x, sc.sim.workspace.max.y) + Vec2::new(0.05, -0.15);
    c.text(corner, title);
    c.finish()
}

pub fn trace_svg(sc: &Scenario, title: &str, records: &[TraceRecord]) -> String {
    let mut c = Canvas::new(sc.sim.workspace);
    draw_world(&mut c, sc);
    let base: Vec<Vec2> = records.iter().map(|r| Vec2::new(r.base[0], r.base[1])).collect();
    c.open_group("base", &format!("stroke=\"{BEST}\" stroke-width=\"2\""));
    c.polyline(&base, "");
    c.close_group();
    c.open_group("object-paths", &format!("stroke=\"{FAILED}\" stroke-width=\"1.5\" stroke-dasharray=\"2 2\""));
    if let Some(first) = records.first() {
        for k in 0..first.objects.len() {
            let path: Vec<Vec2> = records
                .iter()
                .filter_map(|r| r.objects.get(k))
                .map(|o| Vec2::new(o.pos[0], o.pos[1]))
                .collect();
            c.polyline(&path, "");
        }
    }
    c.close_group();
    let corner = Vec2::new(sc.sim.workspace.min.x, sc.sim.workspace.max.y) + Vec2::new(0.05, -0.15);
    c.text(corner, title);
    c.finish()
}
