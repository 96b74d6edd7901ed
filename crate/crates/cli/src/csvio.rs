//! Plain numeric CSV panels: comma separated, one time point per row and an
//! optional header line.

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView2};
use tsfactor::TimeSeriesPanel;

use crate::error::{CliError, CliResult};

/// A parsed panel with its column names, if the input had a header.
#[derive(Debug, Clone)]
pub struct CsvPanel {
    pub header: Option<Vec<String>>,
    pub panel: TimeSeriesPanel,
}

fn parse_cell(cell: &str) -> Option<f64> {
    cell.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Reads a panel from `reader`; `name` labels error messages.
pub fn read_panel<R: Read>(reader: R, name: &str) -> CliResult<CsvPanel> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut header = None;
    let mut width = None;
    let mut values = Vec::new();
    let mut rows = 0;
    for (idx, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(idx as u64 + 1, |p| p.line());
            CliError::Parse {
                source_name: name.into(),
                line,
                column: 0,
                message: e.to_string(),
            }
        })?;
        let line = record.position().map_or(idx as u64 + 1, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        if let Some(w) = width {
            if record.len() != w {
                return Err(CliError::Parse {
                    source_name: name.into(),
                    line,
                    column: record.len().min(w) + 1,
                    message: format!("expected {w} fields, found {}", record.len()),
                });
            }
        }
        let parsed: Vec<Option<f64>> = record.iter().map(parse_cell).collect();
        if width.is_none() && header.is_none() && record.iter().any(|c| c.parse::<f64>().is_err()) {
            // a first line with any non-numeric cell is taken as the header
            header = Some(record.iter().map(str::to_string).collect());
            width = Some(record.len());
            continue;
        }
        for (col, (v, raw)) in parsed.iter().zip(record.iter()).enumerate() {
            match v {
                Some(v) => values.push(*v),
                None => {
                    return Err(CliError::Parse {
                        source_name: name.into(),
                        line,
                        column: col + 1,
                        message: format!("not a finite number: {raw:?}"),
                    })
                }
            }
        }
        width = Some(record.len());
        rows += 1;
    }
    let p = width.unwrap_or(0);
    if rows == 0 || p == 0 {
        return Err(CliError::Input(format!("{name}: no data rows")));
    }
    let data =
        Array2::from_shape_vec((rows, p), values).map_err(|e| CliError::Input(e.to_string()))?;
    Ok(CsvPanel {
        header,
        panel: TimeSeriesPanel::new(data)?,
    })
}

/// Reads a panel from a file, or from stdin when `path` is `-`.
pub fn read_panel_from(path: &Path) -> CliResult<CsvPanel> {
    let name = path.display().to_string();
    if name == "-" {
        return read_panel(io::stdin().lock(), "<stdin>");
    }
    let file = File::open(path).map_err(|e| CliError::io(&name, e))?;
    read_panel(io::BufReader::new(file), &name)
}

/// Writes `m` with 17 significant digits, so reading it back is exact.
pub fn write_matrix<W: Write>(
    out: W,
    m: ArrayView2<'_, f64>,
    header: Option<&[String]>,
) -> io::Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    if let Some(h) = header {
        wtr.write_record(h)?;
    }
    for row in m.rows() {
        wtr.write_record(row.iter().map(|v| format!("{v:.16e}")))?;
    }
    wtr.flush()
}

pub fn write_matrix_file(
    path: &Path,
    m: ArrayView2<'_, f64>,
    header: Option<&[String]>,
) -> CliResult<()> {
    let name = path.display().to_string();
    let file = File::create(path).map_err(|e| CliError::io(&name, e))?;
    write_matrix(io::BufWriter::new(file), m, header).map_err(|e| CliError::io(&name, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn parse(text: &str) -> CliResult<CsvPanel> {
        read_panel(text.as_bytes(), "test")
    }

    #[test]
    fn header_is_optional() {
        let a = parse("1,2\n3,4\n").unwrap();
        assert!(a.header.is_none());
        let b = parse("x,y\n1,2\n3,4\n").unwrap();
        assert_eq!(b.header.unwrap(), vec!["x", "y"]);
        assert_eq!(a.panel, b.panel);
    }

    #[test]
    fn locates_bad_cells() {
        match parse("1,2\n3,abc\n").unwrap_err() {
            CliError::Parse { line, column, .. } => assert_eq!((line, column), (2, 2)),
            e => panic!("{e}"),
        }
        match parse("1,2\n3,4,5\n").unwrap_err() {
            CliError::Parse { line, column, .. } => assert_eq!((line, column), (2, 3)),
            e => panic!("{e}"),
        }
        assert!(matches!(parse("").unwrap_err(), CliError::Input(_)));
        assert!(matches!(parse("a,b\n").unwrap_err(), CliError::Input(_)));
        assert!(matches!(
            parse("1,NaN\n2,3\n").unwrap_err(),
            CliError::Parse { .. }
        ));
    }

    #[test]
    fn round_trip_is_exact() {
        let m = array![
            [0.1, -1.0 / 3.0],
            [1e-300, 6.02214076e23],
            [std::f64::consts::PI, -0.0]
        ];
        let mut buf = Vec::new();
        write_matrix(&mut buf, m.view(), None).unwrap();
        let back = read_panel(buf.as_slice(), "buf").unwrap();
        assert_eq!(back.panel.data(), &m);
    }
}
