use std::fs::File;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{NetworkError, RoadLink, RoadNode, StationSite};

fn csv_err(path: &Path, source: csv::Error) -> NetworkError {
    NetworkError::Csv {
        file: path.display().to_string(),
        source,
    }
}

pub(crate) fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, NetworkError> {
    let file = File::open(path).map_err(|e| csv_err(path, e.into()))?;
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(file)
        .deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| csv_err(path, e))
}

pub(crate) fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), NetworkError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| csv_err(path, e.into()))
}

/// Nodes CSV: `id,lat,lon,elev_m`.
pub fn read_nodes_csv(path: &Path) -> Result<Vec<RoadNode>, NetworkError> {
    read_rows(path)
}

/// Links CSV: `from,to,length_m,speed_kmh`.
pub fn read_links_csv(path: &Path) -> Result<Vec<RoadLink>, NetworkError> {
    read_rows(path)
}

/// Stations CSV: `id,node,power_kw,plugs` (last two optional).
pub fn read_stations_csv(path: &Path) -> Result<Vec<StationSite>, NetworkError> {
    read_rows(path)
}

pub fn write_nodes_csv(path: &Path, nodes: &[RoadNode]) -> Result<(), NetworkError> {
    write_rows(path, nodes)
}

pub fn write_links_csv(path: &Path, links: &[RoadLink]) -> Result<(), NetworkError> {
    write_rows(path, links)
}

pub fn write_stations_csv(path: &Path, stations: &[StationSite]) -> Result<(), NetworkError> {
    write_rows(path, stations)
}
