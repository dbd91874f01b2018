//! Files written by an experiment: one CSV per series, the run record and a
//! gnuplot script. Every file goes through a temporary name and a rename.

use std::io::Write;
use std::path::{Path, PathBuf};

use fraclab_core::NormSeries;

use crate::record::RunRecord;

pub const RECORD_FILE: &str = "record.toml";
pub const PLOT_FILE: &str = "plot.gp";

#[derive(Debug, thiserror::Error)]
#[error("{path}: {source}")]
pub struct OutputError {
    pub path: PathBuf,
    #[source]
    pub source: std::io::Error,
}

fn io_context(path: &Path) -> impl FnOnce(std::io::Error) -> OutputError + '_ {
    move |source| OutputError {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `bytes` to `path` via a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), OutputError> {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    let mut f = std::fs::File::create(&tmp).map_err(io_context(&tmp))?;
    f.write_all(bytes).map_err(io_context(&tmp))?;
    f.sync_all().map_err(io_context(&tmp))?;
    drop(f);
    std::fs::rename(&tmp, path).map_err(io_context(path))
}

/// `t,value` rows with shortest round-trip float formatting.
pub fn series_csv(series: &NormSeries) -> String {
    let mut out = String::from("t,value\n");
    for (t, v) in series.times().iter().zip(series.values()) {
        out.push_str(&format!("{t:e},{v:e}\n"));
    }
    out
}

pub fn parse_series_csv(text: &str) -> Option<Vec<(f64, f64)>> {
    let mut lines = text.lines();
    if lines.next()? != "t,value" {
        return None;
    }
    lines
        .map(|l| {
            let (t, v) = l.split_once(',')?;
            Some((t.parse().ok()?, v.parse().ok()?))
        })
        .collect()
}

pub fn series_file_name(series: &NormSeries) -> String {
    format!("{}.csv", series.descriptor.label)
}

/// A reference line for the plot: `exp(intercept) (1 + t)^slope`.
#[derive(Clone, Debug, PartialEq)]
pub struct Reference {
    pub series_file: String,
    pub slope: f64,
    pub intercept: f64,
}

pub fn plot_script(series_files: &[String], references: &[Reference], title: &str) -> String {
    let mut s = String::new();
    s.push_str("# gnuplot script: gnuplot plot.gp\n");
    s.push_str("set terminal pngcairo size 900,640\n");
    s.push_str("set output 'decay.png'\n");
    s.push_str(&format!("set title '{}'\n", title.replace('\'', "")));
    s.push_str("set datafile separator ','\n");
    s.push_str("set logscale xy\n");
    s.push_str("set xlabel 't'\nset ylabel 'norm'\nset key outside\n");
    let mut items: Vec<String> = series_files
        .iter()
        .map(|f| {
            format!(
                "'{f}' using 1:2 skip 1 with linespoints title '{}'",
                f.trim_end_matches(".csv")
            )
        })
        .collect();
    for r in references {
        items.push(format!(
            "exp({:e})*(1+x)**({:e}) with lines dashtype 2 title 'theory {:.4} ({})'",
            r.intercept,
            r.slope,
            r.slope,
            r.series_file.trim_end_matches(".csv")
        ));
    }
    if items.is_empty() {
        s.push_str("# no series recorded\n");
    } else {
        s.push_str("plot ");
        s.push_str(&items.join(", \\\n     "));
        s.push('\n');
    }
    s
}

/// Writes series CSVs, the plot script and the record into `dir`; returns
/// the CSV names in series order.
pub fn emit_outputs(
    dir: &Path,
    record: &RunRecord,
    series: &[NormSeries],
    references: &[Reference],
) -> Result<Vec<String>, OutputError> {
    std::fs::create_dir_all(dir).map_err(io_context(dir))?;
    let mut names = Vec::with_capacity(series.len());
    for s in series {
        let name = series_file_name(s);
        write_atomic(&dir.join(&name), series_csv(s).as_bytes())?;
        names.push(name);
    }
    if !series.is_empty() {
        write_atomic(
            &dir.join(PLOT_FILE),
            plot_script(&names, references, record.kind.name()).as_bytes(),
        )?;
    }
    write_atomic(&dir.join(RECORD_FILE), record.to_toml().as_bytes())?;
    Ok(names)
}

#[cfg(test)]
mod tests {
    use super::*;
    use fraclab_core::decay::{NormKind, SeriesDescriptor};
    use fraclab_core::Exponent;

    fn series(values: &[f64]) -> NormSeries {
        let times = (1..=values.len()).map(|i| i as f64 * 0.1).collect();
        NormSeries::new(
            times,
            values.to_vec(),
            SeriesDescriptor {
                label: "l2".into(),
                norm: NormKind::Lebesgue {
                    p: Exponent::new(2.0).unwrap(),
                },
                source: "test".into(),
            },
        )
        .unwrap()
    }

    #[test]
    fn csv_has_header_and_exact_floats() {
        let s = series(&[1.0, 1.0 / 3.0, 2e-300]);
        let text = series_csv(&s);
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("t,value\n"));
        let rows = parse_series_csv(&text).unwrap();
        assert_eq!(rows[1], (0.2, 1.0 / 3.0));
        assert_eq!(rows[2].1, 2e-300);
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn plot_script_draws_series_and_reference() {
        let s = plot_script(
            &["a.csv".into()],
            &[Reference {
                series_file: "a.csv".into(),
                slope: -1.0,
                intercept: 0.5,
            }],
            "sqg",
        );
        assert!(s.contains("set logscale xy"));
        assert!(s.contains("'a.csv' using 1:2"));
        assert!(s.contains("(1+x)**(-1e0)"));
    }
}
