//! ASCII PLY vertex I/O (`x y z` plus optional `red green blue`).

use std::fmt::Write as _;
use std::path::Path;

use super::SceneError;
use crate::geometry::Vec3;

pub type Rgb = [u8; 3];

#[derive(Debug)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

#[derive(Debug)]
struct Property {
    name: String,
    is_list: bool,
}

fn err(line: usize, message: impl Into<String>) -> SceneError {
    SceneError::Ply {
        line,
        message: message.into(),
    }
}

const SCALAR_TYPES: &[&str] = &[
    "char", "uchar", "short", "ushort", "int", "uint", "float", "double", "int8", "uint8",
    "int16", "uint16", "int32", "uint32", "float32", "float64",
];

/// Parses an ASCII PLY document into vertex positions and optional colors.
/// Elements other than `vertex` are skipped.
pub fn parse_ply(text: &str) -> Result<(Vec<Vec3>, Option<Vec<Rgb>>), SceneError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, "ply")) => {}
        _ => return Err(err(1, "missing 'ply' magic")),
    }

    let mut elements: Vec<Element> = Vec::new();
    let mut saw_format = false;
    loop {
        let (ln, line) = lines.next().ok_or_else(|| err(0, "unterminated header"))?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            [] => {}
            ["comment", ..] | ["obj_info", ..] => {}
            ["format", "ascii", _] => saw_format = true,
            ["format", other, ..] => {
                return Err(err(ln, format!("unsupported format '{other}', only ascii")))
            }
            ["element", name, count] => {
                let count = count
                    .parse()
                    .map_err(|_| err(ln, format!("bad element count '{count}'")))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            ["property", "list", count_ty, item_ty, name] => {
                if !SCALAR_TYPES.contains(count_ty) || !SCALAR_TYPES.contains(item_ty) {
                    return Err(err(ln, "unknown list property type"));
                }
                let el = elements
                    .last_mut()
                    .ok_or_else(|| err(ln, "property before element"))?;
                el.properties.push(Property {
                    name: name.to_string(),
                    is_list: true,
                });
            }
            ["property", ty, name] => {
                if !SCALAR_TYPES.contains(ty) {
                    return Err(err(ln, format!("unknown property type '{ty}'")));
                }
                let el = elements
                    .last_mut()
                    .ok_or_else(|| err(ln, "property before element"))?;
                el.properties.push(Property {
                    name: name.to_string(),
                    is_list: false,
                });
            }
            ["end_header"] => break,
            _ => return Err(err(ln, format!("unrecognized header line '{line}'"))),
        }
    }
    if !saw_format {
        return Err(err(0, "missing format line"));
    }

    let mut points = Vec::new();
    let mut colors: Option<Vec<Rgb>> = None;
    let mut saw_vertex = false;
    for el in &elements {
        if el.name != "vertex" {
            for _ in 0..el.count {
                lines
                    .next()
                    .ok_or_else(|| err(0, format!("truncated '{}' element", el.name)))?;
            }
            continue;
        }
        saw_vertex = true;
        let pos = |name: &str| el.properties.iter().position(|p| p.name == name);
        let (xi, yi, zi) = match (pos("x"), pos("y"), pos("z")) {
            (Some(x), Some(y), Some(z)) => (x, y, z),
            _ => return Err(err(0, "vertex element lacks x/y/z")),
        };
        if el.properties.iter().any(|p| p.is_list) {
            return Err(err(0, "list properties on vertices are not supported"));
        }
        let rgb = match (pos("red"), pos("green"), pos("blue")) {
            (Some(r), Some(g), Some(b)) => Some([r, g, b]),
            (None, None, None) => None,
            _ => return Err(err(0, "partial color properties")),
        };
        points.reserve(el.count);
        let mut cols = rgb.map(|_| Vec::with_capacity(el.count));
        for _ in 0..el.count {
            let (ln, line) = lines.next().ok_or_else(|| err(0, "truncated vertex data"))?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != el.properties.len() {
                return Err(err(
                    ln,
                    format!("expected {} values, got {}", el.properties.len(), fields.len()),
                ));
            }
            let num = |i: usize| -> Result<f64, SceneError> {
                let v: f64 = fields[i]
                    .parse()
                    .map_err(|_| err(ln, format!("bad number '{}'", fields[i])))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(err(ln, "non-finite coordinate"))
                }
            };
            points.push(Vec3::new(num(xi)?, num(yi)?, num(zi)?));
            if let (Some(idx), Some(cols)) = (rgb, cols.as_mut()) {
                let mut c = [0u8; 3];
                for (k, &i) in idx.iter().enumerate() {
                    c[k] = fields[i]
                        .parse()
                        .map_err(|_| err(ln, format!("bad color '{}'", fields[i])))?;
                }
                cols.push(c);
            }
        }
        colors = cols;
    }
    if !saw_vertex {
        return Err(err(0, "no vertex element"));
    }
    Ok((points, colors))
}

pub fn read_ply(path: &Path) -> Result<(Vec<Vec3>, Option<Vec<Rgb>>), SceneError> {
    let text = std::fs::read_to_string(path).map_err(|e| SceneError::io(path, e))?;
    parse_ply(&text)
}

/// Serializes vertices as ASCII PLY. Coordinates are written with the
/// shortest representation that parses back to the same `f64`.
pub fn format_ply(points: &[Vec3], colors: Option<&[Rgb]>) -> String {
    let mut out = String::with_capacity(points.len() * 32 + 128);
    out.push_str("ply\nformat ascii 1.0\n");
    let _ = writeln!(out, "element vertex {}", points.len());
    out.push_str("property float x\nproperty float y\nproperty float z\n");
    if colors.is_some() {
        out.push_str("property uchar red\nproperty uchar green\nproperty uchar blue\n");
    }
    out.push_str("end_header\n");
    for (i, p) in points.iter().enumerate() {
        let _ = write!(out, "{} {} {}", p.x, p.y, p.z);
        if let Some(c) = colors.map(|c| c[i]) {
            let _ = write!(out, " {} {} {}", c[0], c[1], c[2]);
        }
        out.push('\n');
    }
    out
}

pub fn write_ply(path: &Path, points: &[Vec3], colors: Option<&[Rgb]>) -> Result<(), SceneError> {
    std::fs::write(path, format_ply(points, colors)).map_err(|e| SceneError::io(path, e))
}
