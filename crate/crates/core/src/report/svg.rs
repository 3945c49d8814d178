//! Self-contained SVG heatmap for a correlation matrix.

use super::format::fixed;
use crate::stats::CorrelationMatrix;

const CELL: usize = 64;
const MARGIN: usize = 96;

/// Diverging fill: blue for -1, white for 0, red for +1, grey when missing.
fn fill(rho: Option<f64>) -> String {
    let Some(r) = rho else {
        return "#cccccc".into();
    };
    let t = r.clamp(-1.0, 1.0);
    let fade = |v: f64| (255.0 * (1.0 - v.abs())).round() as u8;
    let (red, green, blue) = if t >= 0.0 {
        (255, fade(t), fade(t))
    } else {
        (fade(t), fade(t), 255)
    };
    format!("#{red:02x}{green:02x}{blue:02x}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn heatmap_svg(m: &CorrelationMatrix, dataset: &str) -> String {
    let k = m.labels.len();
    let size = MARGIN + k * CELL + 8;
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size}\" height=\"{}\" font-family=\"sans-serif\" font-size=\"12\">\n",
        size + 24
    );
    out.push_str(&format!(
        "<text x=\"8\" y=\"16\">{} ({})</text>\n",
        escape(&m.source),
        escape(dataset)
    ));
    for (i, label) in m.labels.iter().enumerate() {
        let centre = MARGIN + i * CELL + CELL / 2;
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
            MARGIN - 6,
            24 + centre + 4,
            label.display_name()
        ));
        out.push_str(&format!(
            "<text x=\"{centre}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            24 + MARGIN - 8,
            label.display_name()
        ));
    }
    for i in 0..k {
        for j in 0..k {
            let (x, y) = (MARGIN + j * CELL, 24 + MARGIN + i * CELL);
            let rho = m.rho[i][j];
            out.push_str(&format!(
                "<rect x=\"{x}\" y=\"{y}\" width=\"{CELL}\" height=\"{CELL}\" fill=\"{}\" stroke=\"#ffffff\"/>\n",
                fill(rho)
            ));
            let text = rho.map_or("—".to_string(), |r| fixed(r, 2));
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{text}</text>\n",
                x + CELL / 2,
                y + CELL / 2 + 4
            ));
        }
    }
    out.push_str("</svg>\n");
    out
}
