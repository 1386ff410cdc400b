//! CSV ingestion of daily observations (`date` column plus one value column).

use std::path::Path;

use chrono::NaiveDate;

use crate::error::{Error, Result};

pub const PRICE_COLUMN: &str = "price_eur_mwh";
pub const ENERGY_COLUMN: &str = "mwh";

/// Reads `(date, value)` rows sorted by date. Headers are mandatory and
/// dates must be ISO-8601.
pub fn read_daily_csv(path: &Path, value_column: &str) -> Result<Vec<(NaiveDate, f64)>> {
    let bad = |reason: String| Error::Input {
        path: path.to_path_buf(),
        reason,
    };
    let file = std::fs::File::open(path).map_err(|e| bad(e.to_string()))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let date_col = headers
        .iter()
        .position(|h| h == "date")
        .ok_or_else(|| bad("missing `date` column".into()))?;
    let value_col = headers
        .iter()
        .position(|h| h == value_column)
        .ok_or_else(|| bad(format!("missing `{value_column}` column")))?;

    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let row = line + 2;
        let date = NaiveDate::parse_from_str(&record[date_col], "%Y-%m-%d")
            .map_err(|e| bad(format!("row {row}: bad date `{}`: {e}", &record[date_col])))?;
        let value: f64 = record[value_col]
            .parse()
            .map_err(|e| bad(format!("row {row}: bad value `{}`: {e}", &record[value_col])))?;
        rows.push((date, value));
    }
    if rows.is_empty() {
        return Err(bad("no data rows".into()));
    }
    rows.sort_by_key(|(d, _)| *d);
    Ok(rows)
}

/// Mean value per day of year (1..=365) across all years in the series;
/// 29 February is folded into 28 February.
pub fn day_of_year_means(series: &[(NaiveDate, f64)]) -> Result<Vec<f64>> {
    use chrono::Datelike;
    let mut sum = vec![0.0; 365];
    let mut count = vec![0usize; 365];
    for (date, v) in series {
        let mut idx = date.ordinal0() as usize;
        if date.leap_year() && idx >= 59 {
            idx -= 1;
        }
        sum[idx.min(364)] += v;
        count[idx.min(364)] += 1;
    }
    if let Some(missing) = count.iter().position(|c| *c == 0) {
        return Err(Error::InsufficientData(format!(
            "no consumption observation for day {}",
            missing + 1
        )));
    }
    Ok(sum.iter().zip(&count).map(|(s, c)| s / *c as f64).collect())
}
