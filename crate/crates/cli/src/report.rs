//! Gnuplot scripts and whitespace-separated data files from trace and sweep CSVs.
//!
//! Each input `name.csv` becomes `name.dat` holding the same fields verbatim,
//! comment lines included, so the conversion loses nothing.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use contact_split::driver::Trace;

use crate::commands::SWEEP_HEADER;
use crate::{write_file, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Trace,
    Sweep,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub path: PathBuf,
    pub kind: Kind,
    pub comments: Vec<String>,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn column(&self, name: &str) -> usize {
        self.headers.iter().position(|h| h == name).expect("column checked on read")
    }
}

fn columns(header: &str) -> Vec<&str> {
    header.split(',').collect()
}

pub fn read_table(path: &Path) -> Result<Table, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let comments = text
        .lines()
        .filter(|l| l.starts_with('#'))
        .map(|l| l.trim_start_matches('#').trim().to_string())
        .collect();
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let bad = |msg: String| CliError::Input(format!("{}: {msg}", path.display()));
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| bad(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers.iter().all(String::is_empty) {
        return Err(bad("empty file".into()));
    }
    let kind = if headers.iter().any(|h| h == "iter") { Kind::Trace } else { Kind::Sweep };
    let expected = columns(if kind == Kind::Trace { Trace::CSV_HEADER } else { SWEEP_HEADER });
    let missing: Vec<&str> = expected.iter().copied().filter(|c| !headers.iter().any(|h| h == c)).collect();
    if !missing.is_empty() {
        let what = if kind == Kind::Trace { "trace" } else { "sweep" };
        return Err(bad(format!("missing {what} column(s): {}", missing.join(", "))));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        rows.push(rec.iter().map(|f| f.trim().to_string()).collect());
    }
    if rows.is_empty() {
        return Err(bad("no data rows".into()));
    }
    Ok(Table {
        path: path.to_path_buf(),
        kind,
        comments,
        headers,
        rows,
    })
}

/// Comment lines, column names and rows of a `.dat` file.
pub type DatContents = (Vec<String>, Vec<String>, Vec<Vec<String>>);

/// Inverse of the `.dat` layout, for round-trip checks.
pub fn read_dat(path: &Path) -> Result<DatContents, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let mut comments = Vec::new();
    let mut headers = None;
    let mut rows = Vec::new();
    for line in text.lines() {
        if let Some(c) = line.strip_prefix("# columns: ") {
            headers = Some(c.split(' ').map(str::to_string).collect());
        } else if let Some(c) = line.strip_prefix("# ") {
            comments.push(c.to_string());
        } else if !line.is_empty() {
            rows.push(line.split(' ').map(str::to_string).collect());
        }
    }
    let headers = headers.ok_or_else(|| CliError::Input(format!("{}: no column line", path.display())))?;
    Ok((comments, headers, rows))
}

fn dat_text(t: &Table) -> Result<String, CliError> {
    let mut s = String::new();
    for c in &t.comments {
        let _ = writeln!(s, "# {c}");
    }
    let _ = writeln!(s, "# columns: {}", t.headers.join(" "));
    for r in &t.rows {
        if r.iter().any(|f| f.is_empty() || f.contains(char::is_whitespace)) {
            return Err(CliError::Input(format!("{}: field with whitespace in row {r:?}", t.path.display())));
        }
        let _ = writeln!(s, "{}", r.join(" "));
    }
    Ok(s)
}

fn quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', "''"))
}

fn preamble(out: &str, xlabel: &str, ylabel: &str) -> String {
    format!(
        "set terminal pngcairo size 900,600\nset output {}\nset xlabel {}\nset ylabel {}\nset key outside right\nset grid\n",
        quote(out),
        quote(xlabel),
        quote(ylabel)
    )
}

fn plot(curves: &[(String, usize, usize, String)], style: &str) -> String {
    let parts: Vec<String> = curves
        .iter()
        .map(|(file, x, y, title)| format!("{} using {x}:{y} with {style} title {} noenhanced", quote(file), quote(title)))
        .collect();
    format!("plot {}\n", parts.join(", \\\n     "))
}

fn unique_stems(paths: &[PathBuf]) -> Vec<String> {
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    paths
        .iter()
        .map(|p| {
            let stem = p.file_stem().map_or("table".into(), |s| s.to_string_lossy().into_owned());
            let n = seen.entry(stem.clone()).or_insert(0);
            *n += 1;
            if *n == 1 {
                stem
            } else {
                format!("{stem}_{n}")
            }
        })
        .collect()
}

/// Write data files and scripts for `inputs` into `out`; returns the files written.
pub fn report(inputs: &[PathBuf], out: &Path) -> Result<Vec<PathBuf>, CliError> {
    if inputs.is_empty() {
        return Err(CliError::Input("report needs at least one CSV file".into()));
    }
    let tables = inputs.iter().map(|p| read_table(p)).collect::<Result<Vec<_>, _>>()?;
    let stems = unique_stems(inputs);
    let mut written = Vec::new();
    let mut emit = |name: String, text: String| -> Result<(), CliError> {
        let path = out.join(name);
        write_file(&path, text)?;
        written.push(path);
        Ok(())
    };

    let mut traces = Vec::new();
    for (t, stem) in tables.iter().zip(&stems) {
        emit(format!("{stem}.dat"), dat_text(t)?)?;
        match t.kind {
            Kind::Trace => traces.push((t, stem)),
            Kind::Sweep => {
                for (name, text) in sweep_scripts(t, stem) {
                    emit(name, text)?;
                }
            }
        }
    }

    if !traces.is_empty() {
        let curves = |col: &str| -> Vec<(String, usize, usize, String)> {
            traces
                .iter()
                .map(|(t, stem)| (format!("{stem}.dat"), t.column("iter") + 1, t.column(col) + 1, stem.to_string()))
                .collect()
        };
        let mut s = preamble("residual.png", "iteration", "convergence criterion r");
        s.push_str("set logscale y\nset format y '10^{%L}'\n");
        s.push_str(&plot(&curves("r"), "lines"));
        emit("residual.gp".into(), s)?;

        let mut s = preamble("effective_gap.png", "iteration", "effective gap");
        s.push_str("set logscale y\nset format y '10^{%L}'\n");
        s.push_str(&plot(&curves("effective_gap"), "lines"));
        emit("effective_gap.gp".into(), s)?;

        let mut dat = String::from("# columns: trace iterations\n");
        for (t, stem) in &traces {
            let iter = &t.rows.last().expect("non-empty")[t.column("iter")];
            let _ = writeln!(dat, "\"{stem}\" {iter}");
        }
        emit("iterations.dat".into(), dat)?;
        let mut s = preamble("iterations.png", "", "iterations");
        s.push_str("set style data histograms\nset style fill solid 0.6 border -1\nset xtics rotate by -30\n");
        s.push_str("plot 'iterations.dat' using 2:xtic(1) title 'iterations'\n");
        emit("iterations.gp".into(), s)?;
    }
    Ok(written)
}

/// One curve per (method, accel, placement): iterations and contact-force error against the parameter.
fn sweep_scripts(t: &Table, stem: &str) -> Vec<(String, String)> {
    let (cm, ca, cp) = (t.column("method"), t.column("accel"), t.column("placement"));
    let (cx, ci, ce, cs) = (t.column("parameter"), t.column("iterations"), t.column("e_force"), t.column("status"));
    let mut groups: Vec<(String, Vec<&Vec<String>>)> = Vec::new();
    for r in &t.rows {
        let key = format!("{}_{}_{}", r[cm], r[ca], r[cp]);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    let mut files = Vec::new();
    let mut iter_curves = Vec::new();
    let mut err_curves = Vec::new();
    for (key, rows) in &groups {
        let name = format!("{stem}_{key}.dat");
        let mut s = String::from("# columns: parameter iterations e_force status\n");
        for r in rows {
            let _ = writeln!(s, "{} {} {} {}", r[cx], r[ci], r[ce], r[cs]);
        }
        files.push((name.clone(), s));
        iter_curves.push((name.clone(), 1, 2, key.clone()));
        err_curves.push((name, 1, 3, key.clone()));
    }
    let mut s = preamble(&format!("{stem}_iterations.png"), "parameter", "iterations");
    s.push_str("set logscale x\nset format x '10^{%L}'\n");
    s.push_str(&plot(&iter_curves, "linespoints"));
    files.push((format!("{stem}_iterations.gp"), s));
    let mut s = preamble(&format!("{stem}_e_force.png"), "parameter", "relative contact force error");
    s.push_str("set logscale xy\nset format x '10^{%L}'\nset format y '10^{%L}'\n");
    s.push_str(&plot(&err_curves, "linespoints"));
    files.push((format!("{stem}_e_force.gp"), s));
    files
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn trace_round_trips_through_dat() {
        let dir = tempfile::tempdir().unwrap();
        let csv = "# seed=42\niter,r,effective_gap,complementarity,active_count,beta,elapsed_s\n1,1e0,0e0,0e0,0,0e0,1.5e-3\n2,2.5e-1,1e-4,3e-9,4,3e-1,2e-3\n";
        let p = write(dir.path(), "a.csv", csv);
        let files = report(std::slice::from_ref(&p), &dir.path().join("out")).unwrap();
        assert!(files.iter().any(|f| f.ends_with("residual.gp")));
        let t = read_table(&p).unwrap();
        let (comments, headers, rows) = read_dat(&dir.path().join("out/a.dat")).unwrap();
        assert_eq!(comments, vec!["seed=42"]);
        assert_eq!(headers, t.headers);
        assert_eq!(rows, t.rows);
        let gp = std::fs::read_to_string(dir.path().join("out/residual.gp")).unwrap();
        assert!(gp.contains("'a.dat' using 1:2 with lines title 'a' noenhanced"));
        assert!(gp.contains("set logscale y"));
    }

    #[test]
    fn diagnostics() {
        let dir = tempfile::tempdir().unwrap();
        let empty = write(dir.path(), "e.csv", "");
        assert!(matches!(read_table(&empty), Err(CliError::Input(_))));
        let header_only = write(dir.path(), "h.csv", &format!("{}\n", Trace::CSV_HEADER));
        assert!(read_table(&header_only).unwrap_err().to_string().contains("no data rows"));
        let short = write(dir.path(), "s.csv", "iter,r\n1,1e0\n");
        let msg = read_table(&short).unwrap_err().to_string();
        assert!(msg.contains("effective_gap") && msg.contains("elapsed_s"), "{msg}");
    }

    #[test]
    fn duplicate_stems_are_disambiguated() {
        let s = unique_stems(&[PathBuf::from("x/trace.csv"), PathBuf::from("y/trace.csv")]);
        assert_eq!(s, vec!["trace", "trace_2"]);
    }
}
