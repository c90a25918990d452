//! Coastline and evaluation-point CSV files.
//!
//! Coastline grammar: header `x,y` (landscape) or `y,x` (portrait), then one
//! row per primary index `<integer>,<decimal>`. A missed index is written
//! `<integer>,` with an empty second field. Indices must strictly increase;
//! indices that are not listed at all are read as missed.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{CoastlinePath, EvaluationPoint, Orientation};
use crate::error::{Error, Result};

fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Parse a coastline CSV.
///
/// `dims` is the `(width, height)` of the image the path belongs to; when
/// given, coordinates are range-checked and the path is padded with missed
/// entries up to the full primary axis.
pub fn parse_coastline_csv(text: &str, dims: Option<(usize, usize)>) -> Result<CoastlinePath> {
    let mut it = lines(text);
    let (_, header) = it
        .next()
        .ok_or_else(|| parse_err(1, "empty coastline file"))?;
    let orientation = match header.trim() {
        "x,y" => Orientation::Landscape,
        "y,x" => Orientation::Portrait,
        other => return Err(parse_err(1, format!("unknown header {other:?}"))),
    };

    let mut entries: Vec<(usize, Option<f64>)> = Vec::new();
    for (line, row) in it {
        let (a, b) = row
            .split_once(',')
            .ok_or_else(|| parse_err(line, "expected two comma-separated fields"))?;
        let index: usize = a
            .trim()
            .parse()
            .map_err(|_| parse_err(line, format!("bad index {a:?}")))?;
        let coord = match b.trim() {
            "" => None,
            s => {
                let v: f64 = s
                    .parse()
                    .map_err(|_| parse_err(line, format!("bad coordinate {s:?}")))?;
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::CoordinateOutOfRange(format!(
                        "line {line}: coordinate {v}"
                    )));
                }
                Some(v)
            }
        };
        if let Some(&(prev, _)) = entries.last() {
            if index <= prev {
                return Err(Error::NonMonotonePath { line, index });
            }
        }
        entries.push((index, coord));
    }

    let last = entries
        .last()
        .map(|&(i, _)| i + 1)
        .ok_or_else(|| parse_err(2, "coastline file has no rows"))?;
    let len = match dims {
        Some((w, h)) => {
            let (primary, _) = orientation.axes(w, h);
            if last > primary {
                return Err(Error::CoordinateOutOfRange(format!(
                    "index {} outside primary axis of length {primary}",
                    last - 1
                )));
            }
            primary
        }
        None => last,
    };
    let mut coords = vec![None; len];
    for (i, c) in entries {
        coords[i] = c;
    }
    let path = CoastlinePath::new(orientation, coords)?;
    if let Some((w, h)) = dims {
        path.check_bounds(w, h)?;
    }
    Ok(path)
}

pub fn format_coastline_csv(path: &CoastlinePath) -> String {
    let mut out = String::with_capacity(path.len() * 12);
    out.push_str(match path.orientation() {
        Orientation::Landscape => "x,y\n",
        Orientation::Portrait => "y,x\n",
    });
    for (i, c) in path.coords().iter().enumerate() {
        match c {
            // `{:?}` is the shortest representation that round-trips and keeps a decimal point.
            Some(v) => writeln!(out, "{i},{v:?}").unwrap(),
            None => writeln!(out, "{i},").unwrap(),
        }
    }
    out
}

pub fn read_coastline_csv(
    path: impl AsRef<Path>,
    dims: Option<(usize, usize)>,
) -> Result<CoastlinePath> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_coastline_csv(&text, dims)
}

pub fn write_coastline_csv(p: &CoastlinePath, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_coastline_csv(p)).map_err(|e| Error::io(path, e))
}

pub fn parse_points_csv(text: &str) -> Result<Vec<EvaluationPoint>> {
    let mut it = lines(text);
    match it.next() {
        Some((_, h)) if h.trim() == "x,y" => {}
        Some((l, h)) => return Err(parse_err(l, format!("expected header \"x,y\", got {h:?}"))),
        None => return Err(parse_err(1, "empty points file")),
    }
    it.map(|(line, row)| {
        let (a, b) = row
            .split_once(',')
            .ok_or_else(|| parse_err(line, "expected two comma-separated fields"))?;
        let x: f64 = a
            .trim()
            .parse()
            .map_err(|_| parse_err(line, format!("bad x {a:?}")))?;
        let y: f64 = b
            .trim()
            .parse()
            .map_err(|_| parse_err(line, format!("bad y {b:?}")))?;
        if !x.is_finite() || !y.is_finite() {
            return Err(parse_err(line, "non-finite coordinate"));
        }
        Ok(EvaluationPoint::new(x, y))
    })
    .collect()
}

pub fn read_points_csv(path: impl AsRef<Path>) -> Result<Vec<EvaluationPoint>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_points_csv(&text)
}

pub fn write_points_csv(points: &[EvaluationPoint], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("x,y\n");
    for p in points {
        writeln!(out, "{:?},{:?}", p.x, p.y).unwrap();
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_landscape_rows() {
        let p = parse_coastline_csv("x,y\n0,10.0\n1,11.5\n", None).unwrap();
        assert_eq!(p.orientation(), Orientation::Landscape);
        assert_eq!(p.coords(), &[Some(10.0), Some(11.5)]);
        assert_eq!(format_coastline_csv(&p), "x,y\n0,10.0\n1,11.5\n");
    }

    #[test]
    fn non_monotone_rows_rejected() {
        assert!(matches!(
            parse_coastline_csv("x,y\n1,3.0\n0,2.0\n", None),
            Err(Error::NonMonotonePath { line: 3, index: 0 })
        ));
        assert!(matches!(
            parse_coastline_csv("x,y\n1,3.0\n1,2.0\n", None),
            Err(Error::NonMonotonePath { .. })
        ));
    }

    #[test]
    fn empty_second_field_is_a_miss() {
        let p = parse_coastline_csv("x,y\n0,4.0\n1,\n2,5.0\n", None).unwrap();
        assert_eq!(p.coords(), &[Some(4.0), None, Some(5.0)]);
        assert_eq!(format_coastline_csv(&p), "x,y\n0,4.0\n1,\n2,5.0\n");
    }

    #[test]
    fn portrait_header_and_padding_to_dims() {
        let p = parse_coastline_csv("y,x\n1,2.25\n", Some((5, 3))).unwrap();
        assert_eq!(p.orientation(), Orientation::Portrait);
        assert_eq!(p.coords(), &[None, Some(2.25), None]);
    }

    #[test]
    fn out_of_range_coordinates_rejected() {
        assert!(matches!(
            parse_coastline_csv("x,y\n0,-1.0\n", None),
            Err(Error::CoordinateOutOfRange(_))
        ));
        assert!(matches!(
            parse_coastline_csv("x,y\n0,4.0\n", Some((2, 4))),
            Err(Error::CoordinateOutOfRange(_))
        ));
        assert!(matches!(
            parse_coastline_csv("x,y\n3,1.0\n", Some((2, 4))),
            Err(Error::CoordinateOutOfRange(_))
        ));
    }

    #[test]
    fn points_round_trip() {
        let pts = parse_points_csv("x,y\n10,5\n3.5,0.25\n").unwrap();
        assert_eq!(
            pts,
            vec![
                EvaluationPoint::new(10.0, 5.0),
                EvaluationPoint::new(3.5, 0.25)
            ]
        );
        assert!(parse_points_csv("a,b\n1,2\n").is_err());
    }
}
