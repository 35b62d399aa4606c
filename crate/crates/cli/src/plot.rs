//! gnuplot scripts rendering the CSV tables. Each script writes a PNG next to
//! itself: `gnuplot sos.gp` produces `sos.png`.

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("unknown figure kind `{0}` (expected one of: sos, heatmap, spectrum, concurrence, series)")]
    UnknownFigureKind(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureKind {
    /// Stroboscopic scatter of (x, p).
    Sos,
    /// P(j, t) map.
    Heatmap,
    /// Smoothed density with the spectral lines as impulses.
    Spectrum,
    /// One line per concurrence column against t.
    Concurrence,
    /// Columns 2.. of a table against column 1.
    Series,
}

impl FigureKind {
    pub const NAMES: [&'static str; 5] = ["sos", "heatmap", "spectrum", "concurrence", "series"];
}

impl FromStr for FigureKind {
    type Err = PlotError;

    fn from_str(s: &str) -> Result<Self, PlotError> {
        match s {
            "sos" => Ok(Self::Sos),
            "heatmap" => Ok(Self::Heatmap),
            "spectrum" => Ok(Self::Spectrum),
            "concurrence" => Ok(Self::Concurrence),
            "series" => Ok(Self::Series),
            other => Err(PlotError::UnknownFigureKind(other.to_string())),
        }
    }
}

impl fmt::Display for FigureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = [Self::Sos, Self::Heatmap, Self::Spectrum, Self::Concurrence, Self::Series]
            .iter()
            .position(|k| k == self)
            .unwrap();
        f.write_str(Self::NAMES[i])
    }
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Script text for `kind`. `data` holds the CSV files, main table first;
/// `columns` are the header names of the main table.
pub fn plot_script(kind: FigureKind, stem: &str, data: &[PathBuf], columns: &[String]) -> String {
    let main = data.first().map(|p| file_name(p)).unwrap_or_default();
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str("set datafile commentschars '#'\n");
    s.push_str("set key autotitle columnhead\n");
    s.push_str("set terminal pngcairo size 900,700\n");
    s.push_str(&format!("set output '{stem}.png'\n"));
    match kind {
        FigureKind::Sos => {
            s.push_str("set xlabel 'x (site)'\nset ylabel 'p'\nunset key\n");
            s.push_str("set yrange [-pi:pi]\n");
            s.push_str(&format!("plot '{main}' using 3:4:1 with dots lc variable\n"));
        }
        FigureKind::Heatmap => {
            s.push_str("set xlabel 'j'\nset ylabel 't'\nset cblabel 'P(j,t)'\n");
            s.push_str("set view map\nset palette rgbformulae 22,13,-31\n");
            s.push_str(&format!("plot '{main}' using 2:1:3 with image\n"));
        }
        FigureKind::Spectrum => {
            s.push_str("set xlabel 'quasienergy'\nset ylabel 'weight'\nset xrange [-pi:pi]\n");
            let mut parts = vec![format!("'{main}' using 1:2 with lines title 'smoothed'")];
            if let Some(lines) = data.get(1) {
                parts.push(format!(
                    "'{}' using 2:($4 > 0 ? $3 : 1/0) with impulses title 'lines'",
                    file_name(lines)
                ));
            }
            s.push_str(&format!("plot {}\n", parts.join(", \\\n     ")));
        }
        FigureKind::Concurrence | FigureKind::Series => {
            let x = columns.first().map(String::as_str).unwrap_or("x");
            s.push_str(&format!("set xlabel '{x}'\n"));
            if kind == FigureKind::Concurrence {
                s.push_str("set ylabel 'C'\nset yrange [0:1]\n");
            }
            let parts: Vec<String> = columns
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, name)| format!("'{main}' using 1:{} with lines title '{name}'", k + 1))
                .collect();
            s.push_str(&format!("plot {}\n", parts.join(", \\\n     ")));
        }
    }
    s
}

/// Writes `<stem>.gp` into `dir`.
pub fn emit_plot_script(
    dir: &Path,
    stem: &str,
    kind: &str,
    data: &[PathBuf],
    columns: &[String],
) -> Result<PathBuf, PlotError> {
    let kind: FigureKind = kind.parse()?;
    let path = dir.join(format!("{stem}.gp"));
    fs::write(&path, plot_script(kind, stem, data, columns))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_round_trip() {
        for name in FigureKind::NAMES {
            assert_eq!(name.parse::<FigureKind>().unwrap().to_string(), name);
        }
        assert!(matches!("pie".parse::<FigureKind>(), Err(PlotError::UnknownFigureKind(k)) if k == "pie"));
    }

    #[test]
    fn sos_script_references_csv() {
        let s = plot_script(FigureKind::Sos, "sos", &[PathBuf::from("/tmp/run/sos.csv")], &[]);
        assert!(s.contains("plot 'sos.csv'"));
        assert!(s.contains("with dots"));
        assert!(s.contains("set output 'sos.png'"));
    }

    #[test]
    fn heatmap_script_is_matrix_style() {
        let s = plot_script(FigureKind::Heatmap, "evolve", &[PathBuf::from("evolve_density.csv")], &[]);
        assert!(s.contains("with image"));
        assert!(s.contains("set view map"));
    }

    #[test]
    fn series_has_one_line_per_column() {
        let cols: Vec<String> = ["t", "C_25_26", "C_50_51"].iter().map(|c| c.to_string()).collect();
        let s = plot_script(FigureKind::Concurrence, "c", &[PathBuf::from("c.csv")], &cols);
        assert!(s.contains("using 1:2 with lines title 'C_25_26'"));
        assert!(s.contains("using 1:3 with lines title 'C_50_51'"));
    }

    #[test]
    fn unknown_kind_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let e = emit_plot_script(dir.path(), "x", "histogram", &[], &[]).unwrap_err();
        assert!(matches!(e, PlotError::UnknownFigureKind(_)));
        assert!(!dir.path().join("x.gp").exists());
    }
}
