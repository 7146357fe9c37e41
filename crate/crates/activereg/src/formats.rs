//! CSV and JSON-lines file formats.
//!
//! * measure: header `x,p`, one support point per row, `Σp = 1` within 1e-9.
//! * custom basis: header `x,p,b1,..,bd`; the `p` column defines the measure.
//! * noise table: header `x,g`, covering every support point of `D`.
//! * weights export: `x,weight,alpha`, one row per sampled point.
//! * density export: `x,density,mass`.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use activereg_core::sampler_bss::StepTrace;
use activereg_core::{CustomTable, Measure, WeightedSampleSet, C64};
use anyhow::{bail, ensure, Context, Result};

fn open(path: &Path) -> Result<File> {
    File::open(path).with_context(|| format!("cannot open {}", path.display()))
}

/// Numeric rows tagged with their 1-based source line.
type Rows = Vec<(u64, Vec<f64>)>;

fn records<R: Read>(reader: R, expected_prefix: &[&str], what: &str) -> Result<(Vec<String>, Rows)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    ensure!(
        header.len() >= expected_prefix.len() && header.iter().zip(expected_prefix).all(|(h, e)| h == e),
        "{what}: header must start with `{}`, found `{}`",
        expected_prefix.join(","),
        header.join(",")
    );
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.with_context(|| format!("{what}: malformed row"))?;
        let line = rec.position().map_or(0, |p| p.line());
        let values = rec
            .iter()
            .enumerate()
            .map(|(col, field)| {
                field.parse::<f64>().map_err(|_| {
                    anyhow::anyhow!("{what}: line {line}, column `{}`: `{field}` is not a number", header[col])
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        ensure!(values.iter().all(|v| v.is_finite()), "{what}: line {line} has a non-finite value");
        rows.push((line, values));
    }
    ensure!(!rows.is_empty(), "{what}: no data rows");
    Ok((header, rows))
}

fn measure_from_rows(rows: &[(u64, Vec<f64>)], what: &str) -> Result<Measure> {
    let mut pairs: Vec<(f64, f64)> = rows.iter().map(|(_, r)| (r[0], r[1])).collect();
    if let Some((line, _)) = rows.iter().find(|(_, r)| r[1] < 0.0) {
        bail!("{what}: line {line} has a negative mass");
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (support, mass): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    Measure::new(support, mass, what.to_string()).with_context(|| format!("{what}: invalid measure"))
}

pub fn parse_measure<R: Read>(reader: R) -> Result<Measure> {
    let (_, rows) = records(reader, &["x", "p"], "measure")?;
    if let Some((line, r)) = rows.iter().find(|(_, r)| r.len() != 2) {
        bail!("measure: line {line} has {} fields, expected 2", r.len());
    }
    measure_from_rows(&rows, "measure")
}

pub fn read_measure(path: &Path) -> Result<Measure> {
    parse_measure(open(path)?).with_context(|| format!("reading {}", path.display()))
}

pub fn write_measure<W: Write>(writer: W, measure: &Measure) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["x", "p"])?;
    for (x, p) in measure.support().iter().zip(measure.masses()) {
        w.write_record([x.to_string(), p.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Measure and basis table from a `x,p,b1,..,bd` file.
pub fn parse_custom_basis<R: Read>(reader: R) -> Result<(Measure, CustomTable)> {
    let (header, rows) = records(reader, &["x", "p"], "custom basis")?;
    let d = header.len() - 2;
    ensure!(d >= 1, "custom basis: needs at least one basis column after x,p");
    let measure = measure_from_rows(&rows, "custom basis")?;
    let points = rows.iter().map(|(_, r)| r[0]).collect();
    let table_rows = rows.iter().map(|(_, r)| r[2..].iter().map(|&v| C64::new(v, 0.0)).collect()).collect();
    let table = CustomTable::new(points, table_rows).context("custom basis")?;
    Ok((measure, table))
}

pub fn read_custom_basis(path: &Path) -> Result<(Measure, CustomTable)> {
    parse_custom_basis(open(path)?).with_context(|| format!("reading {}", path.display()))
}

/// Tolerance for matching a table abscissa to a support point.
pub const SUPPORT_MATCH_TOLERANCE: f64 = 1e-9;

fn nearest_support(d: &Measure, x: f64) -> Option<usize> {
    let s = d.support();
    let i = s.partition_point(|&p| p < x);
    [i.checked_sub(1), (i < s.len()).then_some(i)]
        .into_iter()
        .flatten()
        .min_by(|&a, &b| (s[a] - x).abs().total_cmp(&(s[b] - x).abs()))
        .filter(|&j| (s[j] - x).abs() <= SUPPORT_MATCH_TOLERANCE * s[j].abs().max(1.0))
}

/// `g` on the support of `d`, by support index. Abscissas match support
/// points up to [`SUPPORT_MATCH_TOLERANCE`].
pub fn parse_noise_table<R: Read>(reader: R, d: &Measure) -> Result<Vec<f64>> {
    let (_, rows) = records(reader, &["x", "g"], "noise table")?;
    let mut g = vec![None; d.len()];
    for (line, r) in &rows {
        let i = nearest_support(d, r[0])
            .with_context(|| format!("noise table: line {line}: x = {} is not in the support", r[0]))?;
        g[i] = Some(r[1]);
    }
    g.iter()
        .enumerate()
        .map(|(i, v)| v.with_context(|| format!("noise table: no value for x = {}", d.support()[i])))
        .collect()
}

pub fn read_noise_table(path: &Path, d: &Measure) -> Result<Vec<f64>> {
    parse_noise_table(open(path)?, d).with_context(|| format!("reading {}", path.display()))
}

pub fn write_weights<W: Write>(writer: W, sample: &WeightedSampleSet) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["x", "weight", "alpha"])?;
    for ((x, wt), a) in sample.points.iter().zip(&sample.weights).zip(&sample.alphas) {
        w.write_record([x.to_string(), wt.to_string(), a.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `(x, density, mass)` rows.
pub fn write_density<W: Write>(writer: W, rows: impl IntoIterator<Item = (f64, f64, f64)>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["x", "density", "mass"])?;
    for (x, dens, mass) in rows {
        w.write_record([x.to_string(), dens.to_string(), mass.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// One JSON object per BSS round: `{"j","u","l","phi","x","s"}`.
pub fn write_trace<W: Write>(mut writer: W, trace: &[StepTrace]) -> Result<()> {
    for t in trace {
        let line = serde_json::json!({
            "j": t.round, "u": t.upper, "l": t.lower, "phi": t.phi, "x": t.point, "s": t.scale,
        });
        writeln!(writer, "{line}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measure_round_trip() {
        let m = Measure::chebyshev_grid(11).unwrap();
        let mut buf = Vec::new();
        write_measure(&mut buf, &m).unwrap();
        let back = parse_measure(buf.as_slice()).unwrap();
        assert_eq!(back.support(), m.support());
        assert_eq!(back.masses(), m.masses());
    }

    #[test]
    fn measure_errors_name_the_line() {
        let err = parse_measure("x,p\n0,0.5\n1,abc\n".as_bytes()).unwrap_err();
        assert!(format!("{err:#}").contains("line 3"), "{err:#}");
        assert!(parse_measure("x,p\n0,0.5\n1,0.4\n".as_bytes()).is_err());
        assert!(parse_measure("x,q\n0,1\n".as_bytes()).is_err());
        assert!(parse_measure("x,p\n0,1.5\n1,-0.5\n".as_bytes()).is_err());
    }

    #[test]
    fn custom_basis_parses() {
        let text = "x,p,b1,b2\n1,0.25,1,0\n-1,0.75,1,1\n";
        let (m, t) = parse_custom_basis(text.as_bytes()).unwrap();
        assert_eq!(m.support(), &[-1.0, 1.0]);
        assert_eq!(m.masses(), &[0.75, 0.25]);
        assert_eq!(t.dimension(), 2);
        assert!(parse_custom_basis("x,p\n0,1\n".as_bytes()).is_err());
        assert!(parse_custom_basis("x,p,b1\n0,0.5,1\n0,0.5,2\n".as_bytes()).is_err());
    }

    #[test]
    fn noise_table_must_cover_support() {
        let d = Measure::uniform_grid(3).unwrap();
        let g = parse_noise_table("x,g\n1,3\n-1,1\n0,2\n".as_bytes(), &d).unwrap();
        assert_eq!(g, vec![1.0, 2.0, 3.0]);
        assert!(parse_noise_table("x,g\n1,3\n".as_bytes(), &d).is_err());
        assert!(parse_noise_table("x,g\n0.5,3\n".as_bytes(), &d).is_err());
        let g = parse_noise_table("x,g\n0.9999999999999,3\n-1,1\n1e-14,2\n".as_bytes(), &d).unwrap();
        assert_eq!(g, vec![1.0, 2.0, 3.0]);
    }
}
