//! Gnuplot-compatible data files with a plain-text caption sidecar.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::{usage, write_file, CliError};

/// One named curve.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

/// File stem, labels and axis hints for a plot-data file.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub stem: String,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
}

/// Writes `<stem>.dat` (whitespace-separated, one gnuplot index per series)
/// and `<stem>.caption`.
pub fn emit_plotdata(series: &[PlotSeries], spec: &PlotSpec, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    if series.iter().all(|s| s.points.is_empty()) {
        return Err(usage(format!("plot data {}: empty table", spec.stem)));
    }
    let mut dat = String::new();
    let _ = writeln!(dat, "# {}", spec.title);
    let _ = writeln!(dat, "# {} {}", spec.x_label, spec.y_label);
    let mut caption = String::new();
    let _ = writeln!(caption, "title: {}", spec.title);
    let _ = writeln!(caption, "x: {}", spec.x_label);
    let _ = writeln!(caption, "y: {}", spec.y_label);
    if spec.log_x {
        let _ = writeln!(caption, "logscale: x");
    }
    let mut index = 0;
    for s in series.iter().filter(|s| !s.points.is_empty()) {
        if index > 0 {
            dat.push_str("\n\n");
        }
        let _ = writeln!(dat, "# series {index}: {}", s.name);
        for &(x, y) in &s.points {
            let _ = writeln!(dat, "{x:e} {y:e}");
        }
        let _ = writeln!(caption, "index {index}: {}", s.name);
        index += 1;
    }
    Ok(vec![
        write_file(&dir.join(format!("{}.dat", spec.stem)), &dat)?,
        write_file(&dir.join(format!("{}.caption", spec.stem)), &caption)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(log_x: bool) -> PlotSpec {
        PlotSpec {
            stem: "t".into(),
            title: "demo".into(),
            x_label: "t".into(),
            y_label: "I".into(),
            log_x,
        }
    }

    #[test]
    fn writes_series_and_caption() {
        let dir = std::env::temp_dir().join(format!("isoperim-plot-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let series = vec![
            PlotSeries {
                name: "a".into(),
                points: vec![(0.1, 0.1), (0.5, 0.5)],
            },
            PlotSeries {
                name: "b".into(),
                points: vec![(0.2, 1.0)],
            },
        ];
        let files = emit_plotdata(&series, &spec(true), &dir).unwrap();
        let dat = std::fs::read_to_string(&files[0]).unwrap();
        assert_eq!(dat.matches("# series").count(), 2);
        assert!(dat.contains("\n\n\n# series 1: b"));
        let caption = std::fs::read_to_string(&files[1]).unwrap();
        assert!(caption.contains("logscale: x"));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn empty_table_is_a_usage_error() {
        let dir = std::env::temp_dir();
        let err = emit_plotdata(&[], &spec(false), &dir).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        let empty = [PlotSeries {
            name: "x".into(),
            points: vec![],
        }];
        assert!(emit_plotdata(&empty, &spec(false), &dir).is_err());
    }
}
