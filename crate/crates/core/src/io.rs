//! CSV ingestion of price data and plain-text table output.
//!
//! Input files carry a header, either `timestamp,open,high,low,close` for
//! candles or `timestamp,price` for ticks, with UTC seconds as timestamps.
//! Floats are written in the shortest form that parses back to the same
//! value.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::backtest::session::{flatten_weeks, segment_weeks, Candle, WeekSession};
use crate::error::{Error, Result};

const CANDLE_HEADER: [&str; 5] = ["timestamp", "open", "high", "low", "close"];
const TICK_HEADER: [&str; 2] = ["timestamp", "price"];

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

/// Reads and validates a candle or tick file.
pub fn read_candles(path: &Path) -> Result<Vec<Candle>> {
    let mut text = String::new();
    File::open(path).and_then(|mut f| f.read_to_string(&mut text)).map_err(io_err(path))?;
    parse_candles(&text, path)
}

pub fn parse_candles(text: &str, path: &Path) -> Result<Vec<Candle>> {
    let parse_err = |line: u64, msg: String| Error::Parse { path: PathBuf::from(path), line, msg };
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut records = rdr.records();

    let header = match records.next() {
        None => return Err(parse_err(1, "missing header".into())),
        Some(r) => r.map_err(|e| parse_err(1, e.to_string()))?,
    };
    let cols: Vec<String> = header.iter().map(|h| h.to_ascii_lowercase()).collect();
    let tick = if cols == CANDLE_HEADER {
        false
    } else if cols == TICK_HEADER {
        true
    } else {
        return Err(parse_err(
            1,
            format!("expected header '{}' or '{}', got '{}'", CANDLE_HEADER.join(","), TICK_HEADER.join(","), cols.join(",")),
        ));
    };

    let mut out: Vec<Candle> = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let want = if tick { 2 } else { 5 };
        if rec.len() != want {
            return Err(parse_err(line, format!("expected {want} fields, got {}", rec.len())));
        }
        let timestamp: i64 = rec[0].parse().map_err(|_| parse_err(line, format!("bad timestamp '{}'", &rec[0])))?;
        let num = |i: usize| -> Result<f64> {
            rec[i].parse::<f64>().map_err(|_| parse_err(line, format!("bad number '{}' in column {}", &rec[i], i + 1)))
        };
        let c = if tick {
            Candle::tick(timestamp, num(1)?)
        } else {
            Candle { timestamp, open: num(1)?, high: num(2)?, low: num(3)?, close: num(4)? }
        };
        c.check().map_err(|msg| Error::InvalidRecord { path: PathBuf::from(path), line, msg })?;
        if !(c.open > 0.0 && c.low > 0.0) {
            return Err(Error::InvalidRecord { path: PathBuf::from(path), line, msg: "prices must be positive".into() });
        }
        if out.last().is_some_and(|p| p.timestamp >= timestamp) {
            return Err(Error::NonMonotone { path: PathBuf::from(path), line, timestamp });
        }
        out.push(c);
    }
    Ok(out)
}

/// Reads a price file and groups it into trading weeks.
pub fn ingest(path: &Path) -> Result<Vec<WeekSession>> {
    segment_weeks(&read_candles(path)?)
}

pub fn candles_to_csv(candles: &[Candle]) -> String {
    let mut s = String::with_capacity(48 * (candles.len() + 1));
    s.push_str("timestamp,open,high,low,close\n");
    for c in candles {
        s.push_str(&format!("{},{},{},{},{}\n", c.timestamp, c.open, c.high, c.low, c.close));
    }
    s
}

pub fn sessions_to_csv(weeks: &[WeekSession]) -> String {
    candles_to_csv(&flatten_weeks(weeks))
}

/// Writes `contents` to `path`, or to stdout when `path` is `None` or `-`.
pub fn write_output(path: Option<&Path>, contents: &str) -> Result<()> {
    match path.filter(|p| p.as_os_str() != "-") {
        Some(p) => {
            let f = File::create(p).map_err(io_err(p))?;
            let mut w = BufWriter::new(f);
            w.write_all(contents.as_bytes()).and_then(|_| w.flush()).map_err(io_err(p))
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(contents.as_bytes())
                .map_err(|source| Error::Io { path: PathBuf::from("<stdout>"), source })
        }
    }
}
