//! SVG rendering of collision sets, backprojection outlines, and sampled
//! predecessor points. Output bytes are deterministic for fixed inputs.

use rebar_core::lingeo::{HalfSpace, Polytope, Sense};

/// Vertices of a planar polytope clipped to the view box, ordered
/// counter-clockwise. Returns `None` for empty regions.
pub fn clipped_polygon(poly: &Polytope, view: [f64; 4]) -> Option<Vec<[f64; 2]>> {
    if poly.is_empty_marker() {
        return None;
    }
    let [x0, y0, x1, y1] = view;
    let mut rows: Vec<(f64, f64, f64)> = Vec::new(); // a, b, c for a x + b y <= c
    let mut push = |h: &HalfSpace| {
        let (a, b, c) = (h.normal[0], h.normal[1], h.offset);
        match h.sense {
            Sense::Le => rows.push((a, b, c)),
            Sense::Ge => rows.push((-a, -b, -c)),
        }
    };
    for h in &poly.halfspaces {
        push(h);
    }
    rows.push((-1.0, 0.0, -x0));
    rows.push((1.0, 0.0, x1));
    rows.push((0.0, -1.0, -y0));
    rows.push((0.0, 1.0, y1));

    let inside = |p: [f64; 2]| rows.iter().all(|&(a, b, c)| a * p[0] + b * p[1] <= c + 1e-7);
    let mut verts: Vec<[f64; 2]> = Vec::new();
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let (a1, b1, c1) = rows[i];
            let (a2, b2, c2) = rows[j];
            let det = a1 * b2 - a2 * b1;
            if det.abs() < 1e-12 {
                continue;
            }
            let px = (c1 * b2 - c2 * b1) / det;
            let py = (a1 * c2 - a2 * c1) / det;
            if !px.is_finite() || !py.is_finite() || !inside([px, py]) {
                continue;
            }
            if !verts.iter().any(|v| (v[0] - px).abs() < 1e-9 && (v[1] - py).abs() < 1e-9) {
                verts.push([px, py]);
            }
        }
    }
    if verts.len() < 3 {
        return None;
    }
    let cx = verts.iter().map(|v| v[0]).sum::<f64>() / verts.len() as f64;
    let cy = verts.iter().map(|v| v[1]).sum::<f64>() / verts.len() as f64;
    verts.sort_by(|p, q| {
        let ap = (p[1] - cy).atan2(p[0] - cx);
        let aq = (q[1] - cy).atan2(q[0] - cx);
        ap.partial_cmp(&aq).unwrap()
    });
    Some(verts)
}

pub struct PlotInput<'a> {
    pub collision: &'a Polytope,
    pub steps: &'a [Polytope],
    pub points: &'a [[f64; 2]],
    pub view: [f64; 4],
    pub title: String,
}

const STEP_COLORS: [&str; 6] = ["#1f77b4", "#2a9d8f", "#7b52ab", "#b05619", "#496a81", "#6b2d5c"];

/// Renders the overlay. Coordinates are mapped into a fixed 640x640 canvas
/// with a margin; float formatting is pinned so bytes reproduce exactly.
pub fn render_svg(input: &PlotInput<'_>) -> String {
    let [vx0, vy0, vx1, vy1] = input.view;
    let size = 640.0;
    let margin = 48.0;
    let span_x = (vx1 - vx0).max(1e-9);
    let span_y = (vy1 - vy0).max(1e-9);
    let sx = (size - 2.0 * margin) / span_x;
    let sy = (size - 2.0 * margin) / span_y;
    let map = |p: [f64; 2]| -> (f64, f64) {
        (margin + (p[0] - vx0) * sx, size - margin - (p[1] - vy0) * sy)
    };
    let fmt = |v: f64| format!("{v:.4}");

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{0}\" viewBox=\"0 0 {0} {0}\">\n",
        size as u32
    ));
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n");
    s.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-family=\"monospace\" font-size=\"14\">{}</text>\n",
        margin, input.title
    ));

    let polygon = |s: &mut String, verts: &[[f64; 2]], stroke: &str, fill: &str, width: f64, dash: &str| {
        let pts: Vec<String> = verts
            .iter()
            .map(|&v| {
                let (x, y) = map(v);
                format!("{},{}", fmt(x), fmt(y))
            })
            .collect();
        let dash_attr = if dash.is_empty() {
            String::new()
        } else {
            format!(" stroke-dasharray=\"{dash}\"")
        };
        s.push_str(&format!(
            "<polygon points=\"{}\" fill=\"{}\" stroke=\"{}\" stroke-width=\"{}\"{} />\n",
            pts.join(" "),
            fill,
            stroke,
            width,
            dash_attr
        ));
    };

    if let Some(verts) = clipped_polygon(input.collision, input.view) {
        polygon(&mut s, &verts, "#c0392b", "#f5d5d0", 2.0, "");
    }
    for (k, step) in input.steps.iter().enumerate() {
        if let Some(verts) = clipped_polygon(step, input.view) {
            let color = STEP_COLORS[k % STEP_COLORS.len()];
            polygon(&mut s, &verts, color, "none", 1.5, "6,3");
        }
    }
    for p in input.points {
        let (x, y) = map(*p);
        s.push_str(&format!(
            "<circle cx=\"{}\" cy=\"{}\" r=\"1.6\" fill=\"#1e8449\"/>\n",
            fmt(x),
            fmt(y)
        ));
    }

    // axis frame
    let (fx0, fy0) = map([vx0, vy0]);
    let (fx1, fy1) = map([vx1, vy1]);
    s.push_str(&format!(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#7f8c8d\" stroke-width=\"1\"/>\n",
        fmt(fx0.min(fx1)),
        fmt(fy1.min(fy0)),
        fmt((fx1 - fx0).abs()),
        fmt((fy0 - fy1).abs())
    ));
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\">({},{})</text>\n",
        fmt(fx0),
        fmt(fy0 + 16.0),
        fmt(vx0),
        fmt(vy0)
    ));
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"end\">({},{})</text>\n",
        fmt(fx1),
        fmt(fy1 - 6.0),
        fmt(vx1),
        fmt(vy1)
    ));
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use rebar_core::lingeo::IntervalBox;

    fn square(r: f64) -> Polytope {
        Polytope::from_box(&IntervalBox::new(vec![-r, -r], vec![r, r]).unwrap()).unwrap()
    }

    #[test]
    fn square_clips_to_four_vertices() {
        let verts = clipped_polygon(&square(1.0), [-2.0, -2.0, 2.0, 2.0]).unwrap();
        assert_eq!(verts.len(), 4);
        for v in &verts {
            assert!((v[0].abs() - 1.0).abs() < 1e-9);
            assert!((v[1].abs() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn full_space_clips_to_view_box() {
        let verts = clipped_polygon(&Polytope::full(2), [0.0, 0.0, 1.0, 2.0]).unwrap();
        assert_eq!(verts.len(), 4);
    }

    #[test]
    fn empty_marker_renders_nothing() {
        assert!(clipped_polygon(&Polytope::empty(2), [-1.0, -1.0, 1.0, 1.0]).is_none());
    }

    #[test]
    fn svg_bytes_are_deterministic() {
        let collision = square(1.0);
        let steps = vec![square(1.2), square(1.4)];
        let points = vec![[0.3, -0.2], [0.9, 0.9]];
        let input = PlotInput {
            collision: &collision,
            steps: &steps,
            points: &points,
            view: [-2.0, -2.0, 2.0, 2.0],
            title: "demo".into(),
        };
        let a = render_svg(&input);
        let b = render_svg(&input);
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.contains("<circle"));
    }
}
