//! Log-log line charts rendered from CSV text alone.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub struct Chart<'a> {
    pub title: &'a str,
    pub x: &'a str,
    pub y: &'a [&'a str],
    /// Column splitting rows into one series per distinct value.
    pub group: Option<&'a str>,
    /// Dashed reference line of this log-log slope through the first point.
    pub reference: Option<f64>,
}

fn table(csv: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), String> {
    let mut lines = csv.lines();
    let head: Vec<String> = lines.next().ok_or("empty csv")?.split(',').map(str::to_string).collect();
    let rows = lines
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').map(|v| v.parse::<f64>().map_err(|_| format!("non-numeric cell '{v}'"))).collect())
        .collect::<Result<Vec<Vec<f64>>, String>>()?;
    Ok((head, rows))
}

fn col(head: &[String], name: &str) -> Result<usize, String> {
    head.iter().position(|h| h == name).ok_or_else(|| format!("missing column {name}"))
}

pub fn render(csv: &str, chart: &Chart) -> Result<String, String> {
    let (head, rows) = table(csv)?;
    let xi = col(&head, chart.x)?;
    let gi = chart.group.map(|g| col(&head, g)).transpose()?;
    let mut series: Vec<(String, Vec<(f64, f64)>)> = vec![];
    for name in chart.y {
        let yi = col(&head, name)?;
        for r in &rows {
            if !(r[xi] > 0.0 && r[yi] > 0.0) {
                continue;
            }
            let label = match gi {
                Some(g) => format!("{name} {}={}", chart.group.unwrap(), r[g]),
                None => name.to_string(),
            };
            match series.iter_mut().find(|s| s.0 == label) {
                Some(s) => s.1.push((r[xi].log10(), r[yi].log10())),
                None => series.push((label, vec![(r[xi].log10(), r[yi].log10())])),
            }
        }
    }
    if series.is_empty() {
        return Err("no positive data to plot".into());
    }
    let pts = series.iter().flat_map(|s| s.1.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let reference = chart.reference.map(|m| {
        let (ax, ay) = series[0].1[0];
        [(x0, ay + m * (x0 - ax)), (x1, ay + m * (x1 - ax))]
    });
    if let Some(r) = reference {
        for (_, y) in r {
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{}</text>"#, W / 2.0, chart.title);
    let _ = writeln!(
        s,
        r#"<path d="M{PAD} {PAD} V{} H{}" fill="none" stroke="black"/>"#,
        H - PAD,
        W - PAD
    );
    for d in (x0.floor() as i32)..=(x1.ceil() as i32) {
        let x = d as f64;
        if x < x0 || x > x1 {
            continue;
        }
        let _ = writeln!(s, r#"<text x="{:.1}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="11">1e{d}</text>"#, sx(x), H - PAD + 16.0);
    }
    for d in (y0.floor() as i32)..=(y1.ceil() as i32) {
        let y = d as f64;
        if y < y0 || y > y1 {
            continue;
        }
        let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end" font-family="sans-serif" font-size="11">1e{d}</text>"#, PAD - 6.0, sy(y) + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#, W / 2.0, H - 16.0, chart.x);
    for (i, (label, p)) in series.iter().enumerate() {
        let c = COLORS[i % COLORS.len()];
        let d: Vec<String> = p.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="1.5"/>"#, d.join(" "));
        for &(x, y) in p {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{c}"/>"#, sx(x), sy(y));
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" fill="{c}">{label}</text>"#, W - PAD + 4.0 - 120.0, PAD + 14.0 * i as f64);
    }
    if let (Some(r), Some(m)) = (reference, chart.reference) {
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="5,4"/>"#,
            sx(r[0].0),
            sy(r[0].1),
            sx(r[1].0),
            sy(r[1].1)
        );
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" fill="gray">slope {m}</text>"#, PAD + 8.0, PAD + 14.0);
    }
    s.push_str("</svg>\n");
    Ok(s)
}
