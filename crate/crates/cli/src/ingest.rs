//! CSV input: a header row followed by numeric rows.

use std::collections::HashSet;
use std::path::Path;

use nalgebra::DMatrix;

use crate::config::ColumnRange;
use crate::error::{CliError, CliResult};

/// Response vector and predictor matrix read from a CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub response_name: String,
    pub predictor_names: Vec<String>,
    pub y: Vec<f64>,
    pub x: DMatrix<f64>,
}

/// Column selection applied to every file read in one run.
#[derive(Debug, Clone, Default)]
pub struct ColumnRules<'a> {
    pub response: Option<&'a str>,
    pub ignore: &'a [String],
    pub columns: Option<ColumnRange>,
}

pub fn read_dataset(path: &Path, rules: &ColumnRules, exclude_rows: &[usize]) -> CliResult<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))?;
    parse_dataset(file, &path.display().to_string(), rules, exclude_rows)
}

/// Parses CSV text; `label` names the source in error messages.
pub fn parse_dataset<R: std::io::Read>(
    reader: R,
    label: &str,
    rules: &ColumnRules,
    exclude_rows: &[usize],
) -> CliResult<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| CliError::Data(format!("{label}: cannot read header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(CliError::Data(format!("{label}: empty header")));
    }
    let mut seen = HashSet::new();
    for h in &header {
        if !seen.insert(h.as_str()) {
            return Err(CliError::Data(format!("{label}: duplicate column name {h:?}")));
        }
    }
    for name in rules.ignore {
        if !header.contains(name) {
            return Err(CliError::Data(format!("{label}: ignored column {name:?} not found")));
        }
    }
    let kept: Vec<usize> = (0..header.len()).filter(|&i| !rules.ignore.contains(&header[i])).collect();
    let response_idx = match rules.response {
        Some(name) => *kept
            .iter()
            .find(|&&i| header[i] == name)
            .ok_or_else(|| CliError::Data(format!("{label}: response column {name:?} not found")))?,
        None => *kept.last().ok_or_else(|| CliError::Data(format!("{label}: no columns left")))?,
    };
    let mut predictors: Vec<usize> = kept.into_iter().filter(|&i| i != response_idx).collect();
    if let Some(range) = rules.columns {
        let last = range.start - 1 + (range.count - 1) * range.step;
        if last >= predictors.len() {
            return Err(CliError::Data(format!(
                "{label}: column range {range} reaches predictor {} but only {} are available",
                last + 1,
                predictors.len()
            )));
        }
        predictors = range.indices().map(|k| predictors[k]).collect();
    }
    if predictors.is_empty() {
        return Err(CliError::Data(format!("{label}: no predictor columns")));
    }

    let excluded: HashSet<usize> = exclude_rows.iter().copied().collect();
    let mut y = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut n_rows = 0;
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| CliError::Data(format!("{label} line {line}: {e}")))?;
        if rec.len() != header.len() {
            return Err(CliError::Data(format!(
                "{label} line {line}: expected {} fields, found {}",
                header.len(),
                rec.len()
            )));
        }
        n_rows += 1;
        if excluded.contains(&(k + 1)) {
            continue;
        }
        let cell = |i: usize| -> CliResult<f64> {
            let s = &rec[i];
            s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                CliError::Data(format!("{label} line {line}, column {:?}: {s:?} is not a finite number", header[i]))
            })
        };
        y.push(cell(response_idx)?);
        rows.push(predictors.iter().map(|&i| cell(i)).collect::<CliResult<_>>()?);
    }
    if let Some(&r) = exclude_rows.iter().find(|&&r| r > n_rows) {
        return Err(CliError::Data(format!("{label}: excluded row {r} but the file has {n_rows} data rows")));
    }
    if y.is_empty() {
        return Err(CliError::Data(format!("{label}: no data rows")));
    }
    let x = DMatrix::from_fn(rows.len(), predictors.len(), |i, j| rows[i][j]);
    Ok(Dataset {
        response_name: header[response_idx].clone(),
        predictor_names: predictors.iter().map(|&i| header[i].clone()).collect(),
        y,
        x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, rules: &ColumnRules, ex: &[usize]) -> CliResult<Dataset> {
        parse_dataset(text.as_bytes(), "t.csv", rules, ex)
    }

    #[test]
    fn default_response_is_last_column() {
        let d = parse("a,b,y\n1,2,3\n4,5,6\n", &ColumnRules::default(), &[]).unwrap();
        assert_eq!(d.response_name, "y");
        assert_eq!(d.y, vec![3.0, 6.0]);
        assert_eq!(d.x, DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 4.0, 5.0]));
    }

    #[test]
    fn named_response_ignore_and_exclusions() {
        let ignore = vec!["c".to_string()];
        let rules = ColumnRules { response: Some("a"), ignore: &ignore, columns: None };
        let d = parse("a,b,c,d\n1,2,3,4\n5,6,7,8\n9,10,11,12\n", &rules, &[2]).unwrap();
        assert_eq!(d.y, vec![1.0, 9.0]);
        assert_eq!(d.predictor_names, vec!["b", "d"]);
        assert_eq!(d.x, DMatrix::from_row_slice(2, 2, &[2.0, 4.0, 10.0, 12.0]));
    }

    #[test]
    fn column_range_selects_predictors() {
        let rules = ColumnRules { columns: Some("2:2:2".parse().unwrap()), ..Default::default() };
        let d = parse("p1,p2,p3,p4,p5,y\n1,2,3,4,5,0\n", &rules, &[]).unwrap();
        assert_eq!(d.predictor_names, vec!["p2", "p4"]);
        let rules = ColumnRules { columns: Some("2:2:3".parse().unwrap()), ..Default::default() };
        assert!(parse("p1,p2,p3,p4,p5,y\n1,2,3,4,5,0\n", &rules, &[]).is_err());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse("a,y\n1,2\n3\n", &ColumnRules::default(), &[]).unwrap_err().to_string();
        assert!(e.contains("line 3"), "{e}");
        let e = parse("a,y\n1,2\nx,4\n", &ColumnRules::default(), &[]).unwrap_err().to_string();
        assert!(e.contains("line 3") && e.contains("\"x\""), "{e}");
        let e = parse("a,a\n1,2\n", &ColumnRules::default(), &[]).unwrap_err().to_string();
        assert!(e.contains("duplicate"), "{e}");
        let e = parse("a,y\n1,2\n", &ColumnRules::default(), &[5]).unwrap_err().to_string();
        assert!(e.contains("excluded row 5"), "{e}");
        assert!(parse("a,y\n1,nan\n", &ColumnRules::default(), &[]).is_err());
    }
}
