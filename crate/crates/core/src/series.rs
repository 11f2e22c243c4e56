//! Price, return and volatility series and CSV ingestion.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesKind {
    Price,
    Return,
    Volatility,
    GenericPositive,
}

impl SeriesKind {
    pub fn is_positive(self) -> bool {
        matches!(self, SeriesKind::Volatility | SeriesKind::GenericPositive)
    }
}

/// Seed and recipe that produced a synthetic or surrogate series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub recipe: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    values: Vec<f64>,
    kind: SeriesKind,
    pub label: String,
    pub provenance: Option<Provenance>,
}

impl Series {
    /// Validates the kind-specific invariants: prices strictly positive,
    /// volatility and generic-positive series non-negative, everything finite.
    pub fn new(values: Vec<f64>, kind: SeriesKind, label: impl Into<String>) -> Result<Self> {
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "non-finite value at index {index}"
                )));
            }
            match kind {
                SeriesKind::Price if value <= 0.0 => {
                    return Err(Error::NonPositivePrice { row: index + 1 })
                }
                k if k.is_positive() && value < 0.0 => {
                    return Err(Error::NegativeValue { index, value })
                }
                _ => {}
            }
        }
        Ok(Self {
            values,
            kind,
            label: label.into(),
            provenance: None,
        })
    }

    /// Generic non-negative series (the usual analysis input).
    pub fn positive(values: Vec<f64>) -> Result<Self> {
        Self::new(values, SeriesKind::GenericPositive, "")
    }

    pub fn with_provenance(mut self, seed: u64, recipe: impl Into<String>) -> Self {
        self.provenance = Some(Provenance {
            seed,
            recipe: recipe.into(),
        });
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn kind(&self) -> SeriesKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Same values, different kind; re-validates the new kind's invariants.
    pub fn relabel_kind(self, kind: SeriesKind) -> Result<Self> {
        let Series {
            values,
            label,
            provenance,
            ..
        } = self;
        let mut out = Series::new(values, kind, label)?;
        out.provenance = provenance;
        Ok(out)
    }

    /// Sample mean and standard deviation.
    pub fn mean_std(&self) -> (f64, f64) {
        crate::stats::mean_std(&self.values)
    }
}

/// Column selector for CSV input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Column {
    Index(usize),
    Name(String),
}

impl std::str::FromStr for Column {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => Column::Index(i),
            Err(_) => Column::Name(s.to_string()),
        })
    }
}

impl Default for Column {
    fn default() -> Self {
        Column::Index(0)
    }
}

/// Reads one numeric column from CSV text. The first row is treated as a
/// header when the chosen column does not parse as a number there; any later
/// unparsable row is an error reporting its 1-based row number.
pub fn read_column(text: &str, column: &Column) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut index = match column {
        Column::Index(i) => Some(*i),
        Column::Name(_) => None,
    };
    let mut values = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Csv {
            row,
            message: e.to_string(),
        })?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if row == 1 {
            if let Column::Name(name) = column {
                let pos = record
                    .iter()
                    .position(|f| f == name)
                    .ok_or_else(|| Error::MissingColumn(name.clone()))?;
                index = Some(pos);
                continue;
            }
        }
        let idx = index.expect("column index resolved");
        let field = record.get(idx).ok_or_else(|| Error::Csv {
            row,
            message: format!("row has no column {idx}"),
        })?;
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            _ if row == 1 => continue,
            _ => {
                return Err(Error::Parse {
                    row,
                    value: field.to_string(),
                })
            }
        }
    }
    Ok(values)
}

fn read_file(path: &Path) -> Result<String> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
    Ok(text)
}

fn label_for(path: &Path, column: &Column) -> String {
    let name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    match column {
        Column::Index(i) => format!("{name}[{i}]"),
        Column::Name(c) => format!("{name}[{c}]"),
    }
}

/// Loads a price column. Rows keep file order; a zero or negative price is
/// reported with the row number it appeared on.
pub fn load_price_csv(path: impl AsRef<Path>, column: &Column) -> Result<Series> {
    let path = path.as_ref();
    let text = read_file(path)?;
    price_series_from_csv(&text, column).map(|s| s.with_label(label_for(path, column)))
}

pub fn price_series_from_csv(text: &str, column: &Column) -> Result<Series> {
    let values = read_column(text, column)?;
    if let Some(pos) = values.iter().position(|&p| p <= 0.0) {
        // Row numbers count the header when one was skipped.
        let header = usize::from(text_has_header(text, column));
        return Err(Error::NonPositivePrice {
            row: pos + 1 + header,
        });
    }
    Series::new(values, SeriesKind::Price, "")
}

fn text_has_header(text: &str, column: &Column) -> bool {
    match column {
        Column::Name(_) => true,
        Column::Index(i) => text
            .lines()
            .find(|l| !l.trim().is_empty())
            .and_then(|l| l.split(',').nth(*i))
            .map(|f| f.trim().parse::<f64>().is_err())
            .unwrap_or(false),
    }
}

/// Loads an arbitrary column as a series of the given kind.
pub fn load_series_csv(path: impl AsRef<Path>, column: &Column, kind: SeriesKind) -> Result<Series> {
    let path = path.as_ref();
    let text = read_file(path)?;
    if kind == SeriesKind::Price {
        return load_price_csv(path, column);
    }
    let values = read_column(&text, column)?;
    Series::new(values, kind, label_for(path, column))
}

/// `r(t) = ln P_t - ln P_{t-1}`.
pub fn log_returns(prices: &Series) -> Result<Series> {
    if prices.kind() != SeriesKind::Price {
        return Err(Error::InvalidParameter("log_returns expects a price series".into()));
    }
    if prices.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: prices.len(),
        });
    }
    let values = prices
        .values()
        .windows(2)
        .map(|w| w[1].ln() - w[0].ln())
        .collect();
    Series::new(values, SeriesKind::Return, prices.label.clone())
}

/// `v(t) = |r(t)|`.
pub fn volatility(returns: &Series) -> Series {
    let values = returns.values().iter().map(|r| r.abs()).collect();
    Series::new(values, SeriesKind::Volatility, returns.label.clone())
        .expect("absolute values are non-negative")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn three_row_file() {
        let v = read_column("10\n11\n10.5\n", &Column::Index(0)).unwrap();
        assert_eq!(v, vec![10.0, 11.0, 10.5]);
    }

    #[test]
    fn header_with_named_column() {
        let text = "date,close\n2001-01-01,1\n2001-01-02,2\n2001-01-03,3\n2001-01-04,4\n2001-01-05,5\n";
        let s = price_series_from_csv(text, &Column::Name("close".into())).unwrap();
        assert_eq!(s.values(), &[1.0, 2.0, 3.0, 4.0, 5.0]);
        let by_index = read_column(text, &Column::Index(1)).unwrap();
        assert_eq!(by_index.len(), 5);
    }

    #[test]
    fn zero_price_is_rejected_with_row() {
        let err = price_series_from_csv("10\n0\n3\n", &Column::Index(0)).unwrap_err();
        assert_eq!(err.to_string(), "non-positive price at row 2");
        let err = price_series_from_csv("close\n10\n11\n0\n", &Column::Index(0)).unwrap_err();
        assert_eq!(err.to_string(), "non-positive price at row 4");
    }

    #[test]
    fn non_numeric_body_row_reports_row_number() {
        let err = read_column("close\n1\nfoo\n3\n", &Column::Index(0)).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 3, .. }), "{err}");
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let err = load_price_csv("/definitely/not/here.csv", &Column::Index(0)).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.is_input_error());
    }

    #[test]
    fn missing_named_column() {
        let err = read_column("a,b\n1,2\n", &Column::Name("close".into())).unwrap_err();
        assert!(matches!(err, Error::MissingColumn(_)));
    }

    #[test]
    fn log_return_examples() {
        let p = Series::new(vec![1.0, E, E], SeriesKind::Price, "").unwrap();
        let r = log_returns(&p).unwrap();
        assert!((r.values()[0] - 1.0).abs() < 1e-15);
        assert_eq!(r.values()[1], 0.0);

        let p = Series::new(vec![100.0, 100.0], SeriesKind::Price, "").unwrap();
        assert_eq!(log_returns(&p).unwrap().values(), &[0.0]);

        let p = Series::new(vec![2.0, 4.0, 2.0], SeriesKind::Price, "").unwrap();
        let r = log_returns(&p).unwrap();
        let ln2 = 2f64.ln();
        assert!((r.values()[0] - ln2).abs() < 1e-15);
        assert!((r.values()[1] + ln2).abs() < 1e-15);
    }

    #[test]
    fn log_returns_needs_two_prices() {
        let p = Series::new(vec![5.0], SeriesKind::Price, "").unwrap();
        assert!(matches!(log_returns(&p), Err(Error::TooShort { .. })));
    }

    #[test]
    fn volatility_examples() {
        let r = Series::new(vec![1.0, -1.0, 0.0], SeriesKind::Return, "").unwrap();
        assert_eq!(volatility(&r).values(), &[1.0, 1.0, 0.0]);
        let r = Series::new(vec![-0.5], SeriesKind::Return, "").unwrap();
        assert_eq!(volatility(&r).values(), &[0.5]);
        let r = Series::new(vec![0.0; 4], SeriesKind::Return, "").unwrap();
        let v = volatility(&r);
        assert_eq!(v.values(), &[0.0; 4]);
        assert_eq!(v.kind(), SeriesKind::Volatility);
    }

    #[test]
    fn negative_volatility_rejected() {
        assert!(Series::new(vec![1.0, -0.1], SeriesKind::Volatility, "").is_err());
    }
}
