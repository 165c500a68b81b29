//! Client video-log parsing and writing.
//!
//! A session log is a delimiter-separated text file with one header row and
//! one row per streamed segment. Three columns are semantically required and
//! located by name (segment index, representation bitrate, stall duration);
//! their names and the separator are configuration, since different players
//! label them differently. The remaining well-known columns (arrival time,
//! delivery time, delivery rate, actual rate, byte size, buffer level) are
//! picked up when present under their usual names; unknown extras are
//! ignored.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use indexmap::IndexMap;

use crate::error::{Error, Result};

/// Canonical names of the optional log columns, as commonly emitted by
/// HAS clients. Matched case-sensitively against the header.
pub const ARRIVAL_TIME_COLUMN: &str = "Arr_Time";
pub const DELIVERY_TIME_COLUMN: &str = "Del_Time";
pub const DELIVERY_RATE_COLUMN: &str = "Del_Rate";
pub const ACTUAL_RATE_COLUMN: &str = "Act_Rate";
pub const BYTE_SIZE_COLUMN: &str = "Byte_Size";
pub const BUFFER_LEVEL_COLUMN: &str = "Buffer_Level";

/// Field separator of a log file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Separator {
    Tab,
    Comma,
    Semicolon,
    Custom(char),
}

impl Separator {
    /// Single-byte delimiter for the reader/writer.
    pub fn as_byte(self) -> u8 {
        match self {
            Separator::Tab => b'\t',
            Separator::Comma => b',',
            Separator::Semicolon => b';',
            Separator::Custom(c) => c as u8,
        }
    }
}

impl FromStr for Separator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tab" | "\\t" => Ok(Separator::Tab),
            "comma" | "csv" => Ok(Separator::Comma),
            "semicolon" => Ok(Separator::Semicolon),
            other => {
                let mut chars = other.chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) if c.is_ascii() && c != '"' && c != '\n' && c != '\r' => {
                        Ok(Separator::Custom(c))
                    }
                    _ => Err(Error::Config(format!(
                        "invalid log separator {s:?}: expected tab, comma, semicolon or a single ASCII character"
                    ))),
                }
            }
        }
    }
}

impl fmt::Display for Separator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Separator::Tab => f.write_str("tab"),
            Separator::Comma => f.write_str("comma"),
            Separator::Semicolon => f.write_str("semicolon"),
            Separator::Custom(c) => write!(f, "{c}"),
        }
    }
}

/// Where to find the three required columns, plus the separator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogSchema {
    pub index_column: String,
    pub rep_level_column: String,
    pub stall_duration_column: String,
    pub separator: Separator,
}

impl LogSchema {
    pub fn new(
        index_column: impl Into<String>,
        rep_level_column: impl Into<String>,
        stall_duration_column: impl Into<String>,
        separator: Separator,
    ) -> Result<Self> {
        let schema = LogSchema {
            index_column: index_column.into(),
            rep_level_column: rep_level_column.into(),
            stall_duration_column: stall_duration_column.into(),
            separator,
        };
        if schema.index_column == schema.rep_level_column
            || schema.index_column == schema.stall_duration_column
            || schema.rep_level_column == schema.stall_duration_column
        {
            return Err(Error::Config(format!(
                "log schema column names must be pairwise distinct: {:?}, {:?}, {:?}",
                schema.index_column, schema.rep_level_column, schema.stall_duration_column
            )));
        }
        Ok(schema)
    }
}

impl Default for LogSchema {
    /// The common client-log layout: `Seg_#` / `Rep_Level` / `Stall_Dur`,
    /// tab-separated.
    fn default() -> Self {
        LogSchema {
            index_column: "Seg_#".into(),
            rep_level_column: "Rep_Level".into(),
            stall_duration_column: "Stall_Dur".into(),
            separator: Separator::Tab,
        }
    }
}

/// One parsed log row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentRecord {
    /// Segment ordinal, 1-based in practice; must be positive.
    pub index: u64,
    /// Representation bitrate in kbps.
    pub rep_level: u32,
    /// Stall duration in milliseconds (0 = no stall at this segment).
    pub stall_duration: u64,
    /// Arrival wall-clock time in milliseconds, when logged.
    pub arrival_time: Option<u64>,
    /// Time taken to receive the segment, milliseconds.
    pub delivery_time: Option<u64>,
    /// Measured delivery rate, kbps.
    pub delivery_rate: Option<u32>,
    /// Actual encoded rate of the segment, kbps.
    pub actual_rate: Option<u32>,
    /// Segment size in bytes; positive when present.
    pub byte_size: Option<u64>,
    /// Client buffer level in milliseconds.
    pub buffer_level: Option<i64>,
}

impl SegmentRecord {
    /// Minimal record carrying only the three required fields.
    pub fn new(index: u64, rep_level: u32, stall_duration: u64) -> Self {
        SegmentRecord {
            index,
            rep_level,
            stall_duration,
            arrival_time: None,
            delivery_time: None,
            delivery_rate: None,
            actual_rate: None,
            byte_size: None,
            buffer_level: None,
        }
    }
}

/// A stall: the segment it is recorded against and its duration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StallEvent {
    pub at_segment: u64,
    pub duration_ms: u64,
}

/// A whole parsed session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VideoLog {
    records: Vec<SegmentRecord>,
    source_path: PathBuf,
}

impl VideoLog {
    /// Build a log from records, enforcing the structural invariants:
    /// non-empty, indices strictly increasing.
    pub fn new(records: Vec<SegmentRecord>, source_path: impl Into<PathBuf>) -> Result<Self> {
        let source_path = source_path.into();
        if records.is_empty() {
            return Err(Error::EmptyLog(source_path));
        }
        for pair in records.windows(2) {
            if pair[1].index <= pair[0].index {
                return Err(Error::LogStructure {
                    path: source_path,
                    message: format!(
                        "segment indices must be strictly increasing: {} followed by {}",
                        pair[0].index, pair[1].index
                    ),
                });
            }
        }
        Ok(VideoLog {
            records,
            source_path,
        })
    }

    pub fn records(&self) -> &[SegmentRecord] {
        &self.records
    }

    pub fn source_path(&self) -> &Path {
        &self.source_path
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Segment-index → rep-level map, in record order.
    pub fn rep_levels(&self) -> IndexMap<u64, u32> {
        self.records
            .iter()
            .map(|r| (r.index, r.rep_level))
            .collect()
    }

    /// The stall events: records with a positive stall duration, in order.
    pub fn stalls(&self) -> Vec<StallEvent> {
        self.records
            .iter()
            .filter(|r| r.stall_duration > 0)
            .map(|r| StallEvent {
                at_segment: r.index,
                duration_ms: r.stall_duration,
            })
            .collect()
    }

    /// Distinct rep levels in first-use order.
    pub fn distinct_rep_levels(&self) -> Vec<u32> {
        let mut seen = Vec::new();
        for r in &self.records {
            if !seen.contains(&r.rep_level) {
                seen.push(r.rep_level);
            }
        }
        seen
    }
}

struct ParsedHeader {
    index: usize,
    rep_level: usize,
    stall_duration: usize,
    arrival_time: Option<usize>,
    delivery_time: Option<usize>,
    delivery_rate: Option<usize>,
    actual_rate: Option<usize>,
    byte_size: Option<usize>,
    buffer_level: Option<usize>,
}

fn open_reader(path: &Path, schema: &LogSchema) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .delimiter(schema.separator.as_byte())
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(file))
}

fn locate_columns(
    reader: &mut csv::Reader<std::fs::File>,
    path: &Path,
    schema: &LogSchema,
) -> Result<ParsedHeader> {
    let headers = reader
        .headers()
        .map_err(|e| Error::LogStructure {
            path: path.to_path_buf(),
            message: format!("cannot read header row: {e}"),
        })?
        .clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::EmptyLog(path.to_path_buf()));
    }
    let find = |name: &str| headers.iter().position(|h| h == name);
    let required = |name: &str| {
        find(name).ok_or_else(|| Error::LogSchema {
            column: name.to_string(),
            path: path.to_path_buf(),
        })
    };
    Ok(ParsedHeader {
        index: required(&schema.index_column)?,
        rep_level: required(&schema.rep_level_column)?,
        stall_duration: required(&schema.stall_duration_column)?,
        arrival_time: find(ARRIVAL_TIME_COLUMN),
        delivery_time: find(DELIVERY_TIME_COLUMN),
        delivery_rate: find(DELIVERY_RATE_COLUMN),
        actual_rate: find(ACTUAL_RATE_COLUMN),
        byte_size: find(BYTE_SIZE_COLUMN),
        buffer_level: find(BUFFER_LEVEL_COLUMN),
    })
}

fn row_line(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

fn parse_cell<T: FromStr>(
    record: &csv::StringRecord,
    col: usize,
    name: &str,
    path: &Path,
) -> Result<T>
where
    T::Err: fmt::Display,
{
    let raw = record.get(col).unwrap_or("");
    raw.parse::<T>().map_err(|e| Error::LogRow {
        path: path.to_path_buf(),
        line: row_line(record),
        message: format!("cannot parse {name} cell {raw:?}: {e}"),
    })
}

fn parse_optional<T: FromStr>(
    record: &csv::StringRecord,
    col: Option<usize>,
    name: &str,
    path: &Path,
) -> Result<Option<T>>
where
    T::Err: fmt::Display,
{
    match col {
        None => Ok(None),
        Some(c) => {
            let raw = record.get(c).unwrap_or("");
            if raw.is_empty() {
                return Ok(None);
            }
            parse_cell::<T>(record, c, name, path).map(Some)
        }
    }
}

fn row_error(path: &Path, record: &csv::StringRecord, message: String) -> Error {
    Error::LogRow {
        path: path.to_path_buf(),
        line: row_line(record),
        message,
    }
}

fn parse_record(header: &ParsedHeader, record: &csv::StringRecord, path: &Path) -> Result<SegmentRecord> {
    let index: u64 = parse_cell(record, header.index, "segment index", path)?;
    if index == 0 {
        return Err(row_error(path, record, "segment index must be positive".into()));
    }
    let rep_level: u32 = parse_cell(record, header.rep_level, "rep level", path)?;
    if rep_level == 0 {
        return Err(row_error(path, record, "rep_level must be positive".into()));
    }
    let stall_signed: i64 = parse_cell(record, header.stall_duration, "stall duration", path)?;
    if stall_signed < 0 {
        return Err(row_error(
            path,
            record,
            format!("stall duration must be non-negative, got {stall_signed}"),
        ));
    }
    let byte_size: Option<u64> = parse_optional(record, header.byte_size, BYTE_SIZE_COLUMN, path)?;
    if byte_size == Some(0) {
        return Err(row_error(path, record, "byte size must be positive when present".into()));
    }
    Ok(SegmentRecord {
        index,
        rep_level,
        stall_duration: stall_signed as u64,
        arrival_time: parse_optional(record, header.arrival_time, ARRIVAL_TIME_COLUMN, path)?,
        delivery_time: parse_optional(record, header.delivery_time, DELIVERY_TIME_COLUMN, path)?,
        delivery_rate: parse_optional(record, header.delivery_rate, DELIVERY_RATE_COLUMN, path)?,
        actual_rate: parse_optional(record, header.actual_rate, ACTUAL_RATE_COLUMN, path)?,
        byte_size,
        buffer_level: parse_optional(record, header.buffer_level, BUFFER_LEVEL_COLUMN, path)?,
    })
}

fn for_each_row(
    path: &Path,
    schema: &LogSchema,
    mut f: impl FnMut(&ParsedHeader, &csv::StringRecord) -> Result<()>,
) -> Result<()> {
    let mut reader = open_reader(path, schema)?;
    let header = locate_columns(&mut reader, path, schema)?;
    let mut rows = 0u64;
    for record in reader.records() {
        let record = record.map_err(|e| Error::LogStructure {
            path: path.to_path_buf(),
            message: format!("malformed row: {e}"),
        })?;
        // A lone empty line parses as one empty field; skip it.
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        rows += 1;
        f(&header, &record)?;
    }
    if rows == 0 {
        return Err(Error::EmptyLog(path.to_path_buf()));
    }
    Ok(())
}

/// Parse the log and return the segment-index → rep-level map, one entry per
/// data row, in row order.
pub fn read_rep_levels(path: &Path, schema: &LogSchema) -> Result<IndexMap<u64, u32>> {
    let mut map = IndexMap::new();
    for_each_row(path, schema, |header, record| {
        let index: u64 = parse_cell(record, header.index, "segment index", path)?;
        let rep: u32 = parse_cell(record, header.rep_level, "rep level", path)?;
        map.insert(index, rep);
        Ok(())
    })?;
    Ok(map)
}

/// Parse the log and return the stall events: one per row whose stall cell is
/// positive, in row order. Negative stall cells are row errors.
pub fn read_stalls(path: &Path, schema: &LogSchema) -> Result<Vec<StallEvent>> {
    let mut stalls = Vec::new();
    for_each_row(path, schema, |header, record| {
        let index: u64 = parse_cell(record, header.index, "segment index", path)?;
        let stall: i64 = parse_cell(record, header.stall_duration, "stall duration", path)?;
        if stall < 0 {
            return Err(row_error(
                path,
                record,
                format!("stall duration must be non-negative, got {stall}"),
            ));
        }
        if stall > 0 {
            stalls.push(StallEvent {
                at_segment: index,
                duration_ms: stall as u64,
            });
        }
        Ok(())
    })?;
    Ok(stalls)
}

/// Parse and validate a whole session log.
pub fn load_log(path: &Path, schema: &LogSchema) -> Result<VideoLog> {
    let mut records = Vec::new();
    for_each_row(path, schema, |header, record| {
        records.push(parse_record(header, record, path)?);
        Ok(())
    })?;
    let mut seen = std::collections::HashSet::new();
    for r in &records {
        if !seen.insert(r.index) {
            return Err(Error::LogStructure {
                path: path.to_path_buf(),
                message: format!("duplicate segment index {}", r.index),
            });
        }
    }
    VideoLog::new(records, path)
}

/// Write a log back out under the given schema. Columns follow the common
/// layout order; optional columns are emitted only when at least one record
/// carries them. Re-parsing with the same schema yields an equal `VideoLog`.
pub fn write_log(log: &VideoLog, path: &Path, schema: &LogSchema) -> Result<()> {
    let records = log.records();
    let has = |f: fn(&SegmentRecord) -> bool| records.iter().any(f);
    let with_arrival = has(|r| r.arrival_time.is_some());
    let with_delivery = has(|r| r.delivery_time.is_some());
    let with_del_rate = has(|r| r.delivery_rate.is_some());
    let with_act_rate = has(|r| r.actual_rate.is_some());
    let with_bytes = has(|r| r.byte_size.is_some());
    let with_buffer = has(|r| r.buffer_level.is_some());

    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = csv::WriterBuilder::new()
        .delimiter(schema.separator.as_byte())
        .from_writer(file);

    let mut header: Vec<&str> = vec![&schema.index_column];
    if with_arrival {
        header.push(ARRIVAL_TIME_COLUMN);
    }
    if with_delivery {
        header.push(DELIVERY_TIME_COLUMN);
    }
    header.push(&schema.stall_duration_column);
    header.push(&schema.rep_level_column);
    if with_del_rate {
        header.push(DELIVERY_RATE_COLUMN);
    }
    if with_act_rate {
        header.push(ACTUAL_RATE_COLUMN);
    }
    if with_bytes {
        header.push(BYTE_SIZE_COLUMN);
    }
    if with_buffer {
        header.push(BUFFER_LEVEL_COLUMN);
    }
    writer
        .write_record(&header)
        .map_err(|e| Error::io(path, std::io::Error::other(e)))?;

    let opt = |v: Option<String>| v.unwrap_or_default();
    for r in records {
        let mut row: Vec<String> = vec![r.index.to_string()];
        if with_arrival {
            row.push(opt(r.arrival_time.map(|v| v.to_string())));
        }
        if with_delivery {
            row.push(opt(r.delivery_time.map(|v| v.to_string())));
        }
        row.push(r.stall_duration.to_string());
        row.push(r.rep_level.to_string());
        if with_del_rate {
            row.push(opt(r.delivery_rate.map(|v| v.to_string())));
        }
        if with_act_rate {
            row.push(opt(r.actual_rate.map(|v| v.to_string())));
        }
        if with_bytes {
            row.push(opt(r.byte_size.map(|v| v.to_string())));
        }
        if with_buffer {
            row.push(opt(r.buffer_level.map(|v| v.to_string())));
        }
        writer
            .write_record(&row)
            .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    }
    writer
        .flush()
        .map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    fn tab_schema() -> LogSchema {
        LogSchema::default()
    }

    #[test]
    fn rep_levels_three_rows() {
        let f = write_temp("Seg_#\tRep_Level\tStall_Dur\n1\t235\t0\n2\t375\t0\n3\t375\t0\n");
        let map = read_rep_levels(f.path(), &tab_schema()).unwrap();
        assert_eq!(
            map.iter().map(|(k, v)| (*k, *v)).collect::<Vec<_>>(),
            vec![(1, 235), (2, 375), (3, 375)]
        );
    }

    #[test]
    fn full_nine_column_layout_parses() {
        let f = write_temp(
            "Seg_#\tArr_Time\tDel_Time\tStall_Dur\tRep_Level\tDel_Rate\tAct_Rate\tByte_Size\tBuffer_Level\n\
             1\t4123\t4123\t0\t235\t912\t228\t117500\t4000\n\
             2\t8050\t3927\t0\t375\t1530\t382\t187500\t8000\n",
        );
        let map = read_rep_levels(f.path(), &tab_schema()).unwrap();
        assert_eq!(map.len(), 2);
        assert_eq!(map[&1], 235);
        assert_eq!(map[&2], 375);
        let log = load_log(f.path(), &tab_schema()).unwrap();
        assert_eq!(log.records()[0].arrival_time, Some(4123));
        assert_eq!(log.records()[1].byte_size, Some(187500));
    }

    #[test]
    fn missing_schema_column_is_schema_error() {
        let f = write_temp("Seg_#\tRep_Level\tStall_Dur\n1\t235\t0\n");
        let schema =
            LogSchema::new("Seg_#", "Bitrate", "Stall_Dur", Separator::Tab).unwrap();
        let err = read_rep_levels(f.path(), &schema).unwrap_err();
        match err {
            Error::LogSchema { column, .. } => assert_eq!(column, "Bitrate"),
            other => panic!("expected schema error, got {other}"),
        }
    }

    #[test]
    fn stalls_filter_positive_cells() {
        let f = write_temp(
            "Seg_#\tRep_Level\tStall_Dur\n1\t235\t0\n2\t235\t0\n3\t235\t2000\n4\t235\t0\n5\t235\t500\n",
        );
        let stalls = read_stalls(f.path(), &tab_schema()).unwrap();
        assert_eq!(
            stalls,
            vec![
                StallEvent { at_segment: 3, duration_ms: 2000 },
                StallEvent { at_segment: 5, duration_ms: 500 },
            ]
        );
    }

    #[test]
    fn all_zero_stalls_is_empty_list() {
        let f = write_temp("Seg_#\tRep_Level\tStall_Dur\n1\t235\t0\n2\t235\t0\n");
        assert!(read_stalls(f.path(), &tab_schema()).unwrap().is_empty());
    }

    #[test]
    fn negative_stall_is_row_error() {
        let f = write_temp("Seg_#\tRep_Level\tStall_Dur\n1\t235\t0\n2\t235\t-5\n");
        let err = read_stalls(f.path(), &tab_schema()).unwrap_err();
        match err {
            Error::LogRow { line, .. } => assert_eq!(line, 3),
            other => panic!("expected row error, got {other}"),
        }
    }

    #[test]
    fn unparseable_cell_reports_line() {
        let f = write_temp("Seg_#\tRep_Level\tStall_Dur\n1\t235\t0\n2\tfast\t0\n");
        let err = read_rep_levels(f.path(), &tab_schema()).unwrap_err();
        match err {
            Error::LogRow { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("fast"));
            }
            other => panic!("expected row error, got {other}"),
        }
    }

    #[test]
    fn empty_file_is_empty_log_error() {
        let f = write_temp("");
        assert!(matches!(
            read_rep_levels(f.path(), &tab_schema()),
            Err(Error::EmptyLog(_))
        ));
        let header_only = write_temp("Seg_#\tRep_Level\tStall_Dur\n");
        assert!(matches!(
            load_log(header_only.path(), &tab_schema()),
            Err(Error::EmptyLog(_))
        ));
    }

    #[test]
    fn load_log_three_rows() {
        let f = write_temp("Seg_#\tRep_Level\tStall_Dur\n1\t235\t0\n2\t375\t100\n3\t235\t0\n");
        let log = load_log(f.path(), &tab_schema()).unwrap();
        assert_eq!(log.len(), 3);
        assert_eq!(log.records()[1].stall_duration, 100);
    }

    #[test]
    fn duplicate_index_is_structural_error() {
        let f = write_temp("Seg_#\tRep_Level\tStall_Dur\n1\t235\t0\n2\t375\t0\n2\t235\t0\n");
        assert!(matches!(
            load_log(f.path(), &tab_schema()),
            Err(Error::LogStructure { .. })
        ));
    }

    #[test]
    fn non_increasing_index_is_structural_error() {
        let f = write_temp("Seg_#\tRep_Level\tStall_Dur\n2\t235\t0\n1\t375\t0\n");
        assert!(matches!(
            load_log(f.path(), &tab_schema()),
            Err(Error::LogStructure { .. })
        ));
    }

    #[test]
    fn separator_agnostic_parsing() {
        let tab = write_temp("Seg_#\tRep_Level\tStall_Dur\n1\t235\t0\n2\t375\t0\n");
        let comma = write_temp("Seg_#,Rep_Level,Stall_Dur\n1,235,0\n2,375,0\n");
        let semi = write_temp("Seg_#;Rep_Level;Stall_Dur\n1;235;0\n2;375;0\n");
        let a = load_log(tab.path(), &tab_schema()).unwrap();
        let b = load_log(
            comma.path(),
            &LogSchema::new("Seg_#", "Rep_Level", "Stall_Dur", Separator::Comma).unwrap(),
        )
        .unwrap();
        let c = load_log(
            semi.path(),
            &LogSchema::new("Seg_#", "Rep_Level", "Stall_Dur", Separator::Semicolon).unwrap(),
        )
        .unwrap();
        assert_eq!(a.records(), b.records());
        assert_eq!(a.records(), c.records());
    }

    #[test]
    fn whitespace_padding_is_trimmed() {
        let f = write_temp("Seg_#,Rep_Level,Stall_Dur\n 1 , 235 , 0 \n");
        let log = load_log(f.path(), &tab_schema().separator_comma()).unwrap();
        assert_eq!(log.records()[0].rep_level, 235);
    }

    #[test]
    fn stalls_match_loaded_log_projection() {
        let f = write_temp(
            "Seg_#\tRep_Level\tStall_Dur\n1\t235\t0\n2\t375\t1500\n3\t375\t0\n4\t560\t300\n",
        );
        let from_reader = read_stalls(f.path(), &tab_schema()).unwrap();
        let from_log = load_log(f.path(), &tab_schema()).unwrap().stalls();
        assert_eq!(from_reader, from_log);
    }

    #[test]
    fn unknown_extra_columns_ignored() {
        let f = write_temp("Seg_#\tRep_Level\tStall_Dur\tPlayer_State\n1\t235\t0\twild\n");
        let log = load_log(f.path(), &tab_schema()).unwrap();
        assert_eq!(log.len(), 1);
    }

    #[test]
    fn schema_rejects_duplicate_column_names() {
        assert!(LogSchema::new("A", "A", "B", Separator::Tab).is_err());
    }

    #[test]
    fn separator_parsing() {
        assert_eq!("tab".parse::<Separator>().unwrap(), Separator::Tab);
        assert_eq!("comma".parse::<Separator>().unwrap(), Separator::Comma);
        assert_eq!("semicolon".parse::<Separator>().unwrap(), Separator::Semicolon);
        assert_eq!("|".parse::<Separator>().unwrap(), Separator::Custom('|'));
        assert!("||".parse::<Separator>().is_err());
    }

    #[test]
    fn round_trip_preserves_log() {
        let f = write_temp(
            "Seg_#\tArr_Time\tDel_Time\tStall_Dur\tRep_Level\tDel_Rate\tAct_Rate\tByte_Size\tBuffer_Level\n\
             1\t4123\t4123\t0\t235\t912\t228\t117500\t4000\n\
             2\t8050\t3927\t2500\t375\t1530\t382\t187500\t8000\n",
        );
        let schema = tab_schema();
        let log = load_log(f.path(), &schema).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        write_log(&log, out.path(), &schema).unwrap();
        let reparsed = load_log(out.path(), &schema).unwrap();
        assert_eq!(log.records(), reparsed.records());
    }

    impl LogSchema {
        fn separator_comma(mut self) -> Self {
            self.separator = Separator::Comma;
            self
        }
    }
}
