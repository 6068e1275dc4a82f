use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use super::{simulate_trips, SimParams, Trip, TripError, TripOutcome};
use crate::network::{RoadNetwork, StationSite};

pub const MINUTES_PER_DAY: usize = 1440;

/// Station load at one-minute resolution, kW.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChargingProfile {
    pub station_id: usize,
    pub series_kw: Vec<f64>,
}

impl ChargingProfile {
    pub fn energy_kwh(&self) -> f64 {
        self.series_kw.iter().sum::<f64>() / 60.0
    }
}

/// Bus load after resampling, MW per step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BusLoadSeries {
    pub bus_id: usize,
    pub step_min: usize,
    pub series_mw: Vec<f64>,
}

impl BusLoadSeries {
    pub fn energy_kwh(&self) -> f64 {
        self.series_mw.iter().sum::<f64>() * 1000.0 * self.step_min as f64 / 60.0
    }
}

/// Superposes charging events into per-station minute series, one per
/// entry of `stations`, in that order. Fractional minutes are weighted by
/// their overlap so every event keeps its exact energy.
pub fn profiles_from_outcomes(
    outcomes: &[TripOutcome],
    stations: &[StationSite],
) -> Result<Vec<ChargingProfile>, TripError> {
    let slot: HashMap<usize, usize> = stations.iter().enumerate().map(|(i, s)| (s.id, i)).collect();
    let mut series = vec![vec![0.0; MINUTES_PER_DAY]; stations.len()];
    for ev in outcomes.iter().flat_map(|o| &o.events) {
        let i = *slot.get(&ev.station_id).ok_or(TripError::UnknownStation(ev.station_id))?;
        let (start, end) = (ev.start_min, ev.end_min());
        if end > MINUTES_PER_DAY as f64 {
            return Err(TripError::EventPastHorizon {
                station: ev.station_id,
                end_min: end,
            });
        }
        let first = start.floor() as usize;
        let last = (end.ceil() as usize).min(MINUTES_PER_DAY);
        for (m, v) in series[i].iter_mut().enumerate().take(last).skip(first) {
            let overlap = end.min((m + 1) as f64) - start.max(m as f64);
            if overlap > 0.0 {
                *v += ev.power_kw * overlap;
            }
        }
    }
    Ok(stations
        .iter()
        .zip(series)
        .map(|(s, series_kw)| ChargingProfile {
            station_id: s.id,
            series_kw,
        })
        .collect())
}

/// Simulates every EV trip and returns the per-station profiles together
/// with the trip outcomes they came from.
pub fn generate_profiles(
    trips: &[Trip],
    net: &RoadNetwork,
    stations: &[StationSite],
    params: &SimParams,
) -> Result<(Vec<ChargingProfile>, Vec<TripOutcome>), TripError> {
    let outcomes = simulate_trips(trips, net, stations, params)?;
    Ok((profiles_from_outcomes(&outcomes, stations)?, outcomes))
}

/// Sums station profiles per mapped bus, averages over `step_min` blocks and
/// converts kW to MW. Output is ordered by bus id.
pub fn aggregate_to_buses(
    profiles: &[ChargingProfile],
    station_bus: &BTreeMap<usize, usize>,
    step_min: usize,
) -> Result<Vec<BusLoadSeries>, TripError> {
    if step_min == 0 || MINUTES_PER_DAY % step_min != 0 {
        return Err(TripError::InvalidStep(step_min));
    }
    let mut per_bus: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut ordered: Vec<&ChargingProfile> = profiles.iter().collect();
    ordered.sort_by_key(|p| p.station_id);
    for p in ordered {
        let bus = *station_bus.get(&p.station_id).ok_or(TripError::UnmappedStation(p.station_id))?;
        let acc = per_bus.entry(bus).or_insert_with(|| vec![0.0; MINUTES_PER_DAY]);
        for (a, v) in acc.iter_mut().zip(&p.series_kw) {
            *a += v;
        }
    }
    Ok(per_bus
        .into_iter()
        .map(|(bus_id, kw)| BusLoadSeries {
            bus_id,
            step_min,
            series_mw: kw
                .chunks(step_min)
                .map(|b| b.iter().sum::<f64>() / step_min as f64 / 1000.0)
                .collect(),
        })
        .collect())
}
