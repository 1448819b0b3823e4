use super::{round_minutes, LocationId, Minutes, ModelConfig, ModelError, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub id: LocationId,
    /// Display coordinates in map units.
    pub x: f64,
    pub y: f64,
}

/// Explicit travel-time override for one ordered pair of locations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TravelEntry {
    pub from: LocationId,
    pub to: LocationId,
    pub minutes: Minutes,
}

/// Locations of a scenario and the travel times between them.
///
/// Travel time is the Manhattan distance between display coordinates scaled
/// by `minutes_per_unit`, unless the matrix carries an entry for the pair.
/// An entry for `(a, b)` also answers `(b, a)` when the reverse pair has no
/// entry of its own.
#[derive(Clone, Debug, Default)]
pub struct Network {
    locations: BTreeMap<LocationId, Location>,
    matrix: HashMap<(LocationId, LocationId), Minutes>,
}

impl Network {
    pub fn new(locations: impl IntoIterator<Item = Location>, matrix: &[TravelEntry]) -> Result<Self> {
        let mut by_id = BTreeMap::new();
        for location in locations {
            if by_id.insert(location.id, location).is_some() {
                return Err(ModelError::InvalidInput(format!("duplicate location id {}", location.id)));
            }
        }
        let mut network = Self { locations: by_id, matrix: HashMap::new() };
        for entry in matrix {
            network.location(entry.from)?;
            network.location(entry.to)?;
            if entry.minutes < 0 {
                return Err(ModelError::InvalidInput(format!("negative travel time {} -> {}", entry.from, entry.to)));
            }
            network.matrix.insert((entry.from, entry.to), entry.minutes);
        }
        Ok(network)
    }

    /// A network without overrides, convenient for grid examples.
    pub fn grid(points: &[(LocationId, f64, f64)]) -> Result<Self> {
        Self::new(points.iter().map(|&(id, x, y)| Location { id, x, y }), &[])
    }

    pub fn location(&self, id: LocationId) -> Result<&Location> {
        self.locations.get(&id).ok_or_else(|| ModelError::InvalidInput(format!("unknown location id {id}")))
    }

    pub fn contains(&self, id: LocationId) -> bool {
        self.locations.contains_key(&id)
    }

    pub fn ids(&self) -> impl Iterator<Item = LocationId> + '_ {
        self.locations.keys().copied()
    }

    pub fn locations(&self) -> impl Iterator<Item = &Location> {
        self.locations.values()
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    pub fn matrix_entries(&self) -> Vec<TravelEntry> {
        let mut entries: Vec<_> =
            self.matrix.iter().map(|(&(from, to), &minutes)| TravelEntry { from, to, minutes }).collect();
        entries.sort_by_key(|e| (e.from, e.to));
        entries
    }

    pub fn travel_time(&self, a: LocationId, b: LocationId, config: &ModelConfig) -> Result<Minutes> {
        let from = self.location(a)?;
        let to = self.location(b)?;
        if a == b {
            return Ok(0);
        }
        if let Some(&minutes) = self.matrix.get(&(a, b)).or_else(|| self.matrix.get(&(b, a))) {
            return Ok(minutes);
        }
        let units = (from.x - to.x).abs() + (from.y - to.y).abs();
        Ok(round_minutes(units * config.minutes_per_unit))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> ModelConfig {
        ModelConfig::default()
    }

    #[test]
    fn identity_is_zero() {
        let net = Network::grid(&[(1, 0.0, 0.0)]).unwrap();
        assert_eq!(net.travel_time(1, 1, &config()).unwrap(), 0);
    }

    #[test]
    fn manhattan_distance() {
        let net = Network::grid(&[(1, 0.0, 0.0), (2, 3.0, 4.0)]).unwrap();
        assert_eq!(net.travel_time(1, 2, &config()).unwrap(), 7);
        assert_eq!(net.travel_time(2, 1, &config()).unwrap(), 7);
    }

    #[test]
    fn scaled_distance_rounds_half_up() {
        let net = Network::grid(&[(1, 0.0, 0.0), (2, 1.0, 0.0)]).unwrap();
        let cfg = ModelConfig { minutes_per_unit: 2.5, ..config() };
        assert_eq!(net.travel_time(1, 2, &cfg).unwrap(), 3);
    }

    #[test]
    fn matrix_override() {
        let locations = [(1, 0.0, 0.0), (2, 3.0, 4.0), (3, 1.0, 1.0)].map(|(id, x, y)| Location { id, x, y });
        let net = Network::new(locations, &[TravelEntry { from: 1, to: 2, minutes: 13 }]).unwrap();
        assert_eq!(net.travel_time(1, 2, &config()).unwrap(), 13);
        assert_eq!(net.travel_time(2, 1, &config()).unwrap(), 13);
        assert_eq!(net.travel_time(1, 3, &config()).unwrap(), 2);

        let asymmetric = Network::new(
            locations,
            &[TravelEntry { from: 1, to: 2, minutes: 13 }, TravelEntry { from: 2, to: 1, minutes: 9 }],
        )
        .unwrap();
        assert_eq!(asymmetric.travel_time(2, 1, &config()).unwrap(), 9);
    }

    #[test]
    fn unknown_location() {
        let net = Network::grid(&[(1, 0.0, 0.0)]).unwrap();
        assert!(matches!(net.travel_time(1, 9, &config()), Err(ModelError::InvalidInput(_))));
    }

    #[test]
    fn duplicate_ids_rejected() {
        assert!(Network::grid(&[(1, 0.0, 0.0), (1, 1.0, 1.0)]).is_err());
    }
}
