//! Species registry backed by `data/species.toml`.

use serde::{Deserialize, Serialize};

use super::IonSpecies;
use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};

const BUILTIN: &str = include_str!("../../data/species.toml");

/// One registry row as written on disk; units are carried in the key names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesRecord {
    pub name: String,
    pub mass_u: f64,
    pub nuclear_spin: f64,
    pub hyperfine_a_hz: f64,
    pub g_j: f64,
    pub g_i: f64,
    #[serde(default)]
    pub reference: String,
}

impl SpeciesRecord {
    pub fn to_species(&self) -> Result<IonSpecies<f64>> {
        let c = PhysicalConstants::<f64>::codata();
        IonSpecies::new(
            self.name.clone(),
            self.mass_u * c.atomic_mass_unit,
            self.nuclear_spin,
            self.hyperfine_a_hz,
            self.g_j,
            self.g_i,
        )
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RegistryFile {
    species: Vec<SpeciesRecord>,
}

#[derive(Clone, Debug)]
pub struct SpeciesRegistry {
    records: Vec<SpeciesRecord>,
    species: Vec<IonSpecies<f64>>,
}

impl SpeciesRegistry {
    /// The registry shipped with the crate.
    pub fn builtin() -> Self {
        Self::from_toml(BUILTIN).expect("built-in species registry is valid")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let file: RegistryFile = toml::from_str(text).map_err(|e| Error::Parse(format!("species registry: {e}")))?;
        let mut registry = Self {
            records: Vec::new(),
            species: Vec::new(),
        };
        for record in file.species {
            registry.insert(record)?;
        }
        Ok(registry)
    }

    pub fn get(&self, name: &str) -> Result<&IonSpecies<f64>> {
        self.species
            .iter()
            .find(|s| s.name.eq_ignore_ascii_case(name))
            .ok_or_else(|| {
                let known: Vec<&str> = self.species.iter().map(|s| s.name.as_str()).collect();
                Error::InvalidInput(format!("unknown species '{name}' (known: {})", known.join(", ")))
            })
    }

    pub fn record(&self, name: &str) -> Option<&SpeciesRecord> {
        self.records.iter().find(|r| r.name.eq_ignore_ascii_case(name))
    }

    /// Adds a species, replacing any entry of the same name.
    pub fn insert(&mut self, record: SpeciesRecord) -> Result<()> {
        let species = record.to_species()?;
        if let Some(pos) = self.records.iter().position(|r| r.name.eq_ignore_ascii_case(&record.name)) {
            self.records[pos] = record;
            self.species[pos] = species;
        } else {
            self.records.push(record);
            self.species.push(species);
        }
        Ok(())
    }

    pub fn records(&self) -> &[SpeciesRecord] {
        &self.records
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.records.iter().map(|r| r.name.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_contains_beryllium() {
        let reg = SpeciesRegistry::builtin();
        let be = reg.get("9Be+").unwrap();
        assert_eq!(be.nuclear_spin, 1.5);
        assert!(be.hyperfine_a < 0.0);
        assert!((be.mass / 1.4965e-26 - 1.0).abs() < 1e-3);
        assert!(reg.get("9be+").is_ok());
        assert!(reg.get("unobtainium").is_err());
        assert!(reg.names().count() >= 4);
    }

    #[test]
    fn override_replaces_entry() {
        let mut reg = SpeciesRegistry::builtin();
        let mut rec = reg.record("9Be+").unwrap().clone();
        rec.hyperfine_a_hz = -600e6;
        let n = reg.records().len();
        reg.insert(rec).unwrap();
        assert_eq!(reg.records().len(), n);
        assert_eq!(reg.get("9Be+").unwrap().hyperfine_a, -600e6);
    }

    #[test]
    fn rejects_invalid_rows() {
        let text = "[[species]]\nname='x'\nmass_u=-1\nnuclear_spin=0.5\nhyperfine_a_hz=1\ng_j=2\ng_i=0\n";
        assert!(SpeciesRegistry::from_toml(text).is_err());
        let text = "[[species]]\nname='x'\nmass_u=1\nnuclear_spin=0.7\nhyperfine_a_hz=1\ng_j=2\ng_i=0\n";
        assert!(SpeciesRegistry::from_toml(text).is_err());
        assert!(SpeciesRegistry::from_toml("[[species]]\nname='x'\nbogus=1\n").is_err());
    }
}
