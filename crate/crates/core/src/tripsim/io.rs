use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BusLoadSeries, ChargingProfile, TripError, TripRecord, MINUTES_PER_DAY};
use crate::network::io::{read_rows, write_rows};

fn format_err(path: &Path, reason: impl ToString) -> TripError {
    TripError::Format {
        file: path.display().to_string(),
        reason: reason.to_string(),
    }
}

/// Trip table: `id,origin,destination,depart_min,initial_soc_frac`.
pub fn read_trips_csv(path: &Path) -> Result<Vec<TripRecord>, TripError> {
    let rows: Vec<TripRecord> = read_rows(path)?;
    for r in &rows {
        r.validate().map_err(|e| format_err(path, e))?;
    }
    Ok(rows)
}

pub fn write_trips_csv(path: &Path, trips: &[TripRecord]) -> Result<(), TripError> {
    Ok(write_rows(path, trips)?)
}

#[derive(Serialize, Deserialize)]
struct MapRow {
    station_id: usize,
    bus_id: usize,
}

/// Station-to-bus map: `station_id,bus_id`.
pub fn read_station_bus_map(path: &Path) -> Result<BTreeMap<usize, usize>, TripError> {
    let rows: Vec<MapRow> = read_rows(path)?;
    let mut map = BTreeMap::new();
    for r in rows {
        if map.insert(r.station_id, r.bus_id).is_some() {
            return Err(format_err(path, format!("station {} mapped twice", r.station_id)));
        }
    }
    Ok(map)
}

pub fn write_station_bus_map(path: &Path, map: &BTreeMap<usize, usize>) -> Result<(), TripError> {
    let rows: Vec<MapRow> = map
        .iter()
        .map(|(&station_id, &bus_id)| MapRow { station_id, bus_id })
        .collect();
    Ok(write_rows(path, &rows)?)
}

fn write_table(path: &Path, comments: &[String], header: Vec<String>, rows: Vec<Vec<String>>) -> Result<(), TripError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).map_err(|e| format_err(path, e))?;
    for r in rows {
        w.write_record(&r).map_err(|e| format_err(path, e))?;
    }
    let body = w.into_inner().map_err(|e| format_err(path, e))?;
    let mut out: Vec<u8> = comments.iter().flat_map(|c| format!("# {c}\n").into_bytes()).collect();
    out.extend(body);
    std::fs::write(path, out).map_err(|e| format_err(path, e))
}

/// Minute-resolution station profiles: `minute,station_<id>,...` in kW,
/// preceded by `# ` comment lines.
pub fn write_profiles_csv(path: &Path, profiles: &[ChargingProfile], comments: &[String]) -> Result<(), TripError> {
    let header = std::iter::once("minute".to_string())
        .chain(profiles.iter().map(|p| format!("station_{}", p.station_id)))
        .collect();
    let rows = (0..MINUTES_PER_DAY)
        .map(|m| {
            std::iter::once(m.to_string())
                .chain(profiles.iter().map(|p| p.series_kw[m].to_string()))
                .collect()
        })
        .collect();
    write_table(path, comments, header, rows)
}

pub fn read_profiles_csv(path: &Path) -> Result<Vec<ChargingProfile>, TripError> {
    let file = File::open(path).map_err(|e| format_err(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(file);
    let header = rdr.headers().map_err(|e| format_err(path, e))?.clone();
    if header.get(0) != Some("minute") {
        return Err(format_err(path, "first column must be `minute`"));
    }
    let mut profiles = header
        .iter()
        .skip(1)
        .map(|h| {
            h.strip_prefix("station_")
                .and_then(|id| id.parse().ok())
                .map(|station_id| ChargingProfile {
                    station_id,
                    series_kw: Vec::with_capacity(MINUTES_PER_DAY),
                })
                .ok_or_else(|| format_err(path, format!("bad column `{h}`, expected station_<id>")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| format_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let minute: usize = rec[0]
            .parse()
            .map_err(|_| format_err(path, format!("line {line}: bad minute `{}`", &rec[0])))?;
        if minute != row {
            return Err(format_err(path, format!("line {line}: expected minute {row}, got {minute}")));
        }
        for (p, cell) in profiles.iter_mut().zip(rec.iter().skip(1)) {
            let v: f64 = cell
                .parse()
                .map_err(|_| format_err(path, format!("line {line}: bad value `{cell}`")))?;
            if !(v >= 0.0 && v.is_finite()) {
                return Err(format_err(path, format!("line {line}: load must be non-negative, got {v}")));
            }
            p.series_kw.push(v);
        }
    }
    if profiles.iter().any(|p| p.series_kw.len() != MINUTES_PER_DAY) {
        return Err(format_err(path, format!("expected {MINUTES_PER_DAY} minute rows")));
    }
    Ok(profiles)
}

/// Resampled bus series: `step,start_min,bus_<id>,...` in MW.
pub fn write_bus_series_csv(path: &Path, series: &[BusLoadSeries], comments: &[String]) -> Result<(), TripError> {
    let step_min = series.first().map_or(60, |s| s.step_min);
    let steps = series.first().map_or(0, |s| s.series_mw.len());
    let header = ["step".to_string(), "start_min".to_string()]
        .into_iter()
        .chain(series.iter().map(|s| format!("bus_{}", s.bus_id)))
        .collect();
    let rows = (0..steps)
        .map(|t| {
            [t.to_string(), (t * step_min).to_string()]
                .into_iter()
                .chain(series.iter().map(|s| s.series_mw[t].to_string()))
                .collect()
        })
        .collect();
    write_table(path, comments, header, rows)
}
