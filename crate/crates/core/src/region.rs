//! Region codes and indicator tags.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// INSEE code of one of the 13 mainland-France regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RegionCode(u8);

/// All mainland regions, ordered by code.
pub const MAINLAND_REGIONS: [RegionCode; 13] = [
    RegionCode(11),
    RegionCode(24),
    RegionCode(27),
    RegionCode(28),
    RegionCode(32),
    RegionCode(44),
    RegionCode(52),
    RegionCode(53),
    RegionCode(75),
    RegionCode(76),
    RegionCode(84),
    RegionCode(93),
    RegionCode(94),
];

const REGION_NAMES: [(u8, &str); 13] = [
    (11, "Île-de-France"),
    (24, "Centre-Val de Loire"),
    (27, "Bourgogne-Franche-Comté"),
    (28, "Normandie"),
    (32, "Hauts-de-France"),
    (44, "Grand Est"),
    (52, "Pays de la Loire"),
    (53, "Bretagne"),
    (75, "Nouvelle-Aquitaine"),
    (76, "Occitanie"),
    (84, "Auvergne-Rhône-Alpes"),
    (93, "Provence-Alpes-Côte d'Azur"),
    (94, "Corse"),
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegionError {
    #[error("region code {0} is not a mainland-France region")]
    NotMainland(i64),
    #[error("unparseable region code {0:?}")]
    Unparseable(String),
}

impl RegionCode {
    pub fn new(code: i64) -> Result<Self, RegionError> {
        MAINLAND_REGIONS
            .iter()
            .copied()
            .find(|r| i64::from(r.0) == code)
            .ok_or(RegionError::NotMainland(code))
    }

    pub fn code(self) -> u8 {
        self.0
    }

    pub fn name(self) -> &'static str {
        REGION_NAMES
            .iter()
            .find(|(c, _)| *c == self.0)
            .map(|(_, n)| *n)
            .expect("every RegionCode has a name")
    }

    /// Looks a region up by its French name. Case and surrounding whitespace
    /// are ignored; hyphens and spaces are interchangeable.
    pub fn from_name(name: &str) -> Option<Self> {
        let wanted = normalize_name(name);
        REGION_NAMES
            .iter()
            .find(|(_, n)| normalize_name(n) == wanted)
            .map(|(c, _)| RegionCode(*c))
    }
}

fn normalize_name(s: &str) -> String {
    s.trim()
        .chars()
        .map(|c| match c {
            '-' => ' ',
            '’' => '\'',
            other => other,
        })
        .flat_map(char::to_lowercase)
        .collect()
}

impl fmt::Display for RegionCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for RegionCode {
    type Err = RegionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let code: i64 = s
            .trim()
            .parse()
            .map_err(|_| RegionError::Unparseable(s.to_string()))?;
        RegionCode::new(code)
    }
}

impl Serialize for RegionCode {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_u8(self.0)
    }
}

impl<'de> Deserialize<'de> for RegionCode {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let code = i64::deserialize(deserializer)?;
        RegionCode::new(code).map_err(serde::de::Error::custom)
    }
}

/// Tag identifying what a daily series measures.
///
/// The first fifteen variants are raw source indicators; the rest are tags
/// for series derived by this crate (smoothed, corrected or simulated).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Indicator {
    Deces2018,
    Deces2019,
    Deces2020,
    IncidHosp,
    IncidRea,
    IncidDc,
    IncidRad,
    IncidInserm,
    Test,
    Pos,
    NbrePassTot,
    NbrePassCorona,
    NbreHospitCorona,
    NbreActeTot,
    NbreActeCorona,
    MeanExcess20,
    MeanIncidDc,
    MeanInserm,
    MeanExcess20Corr,
    Fhat,
    Delta,
}

impl Indicator {
    pub const SOURCE: [Indicator; 15] = [
        Indicator::Deces2018,
        Indicator::Deces2019,
        Indicator::Deces2020,
        Indicator::IncidHosp,
        Indicator::IncidRea,
        Indicator::IncidDc,
        Indicator::IncidRad,
        Indicator::IncidInserm,
        Indicator::Test,
        Indicator::Pos,
        Indicator::NbrePassTot,
        Indicator::NbrePassCorona,
        Indicator::NbreHospitCorona,
        Indicator::NbreActeTot,
        Indicator::NbreActeCorona,
    ];

    /// The nine indicators compared against the model signal.
    pub const VALIDATION: [Indicator; 9] = [
        Indicator::IncidHosp,
        Indicator::IncidRea,
        Indicator::IncidDc,
        Indicator::IncidRad,
        Indicator::Pos,
        Indicator::IncidInserm,
        Indicator::NbrePassCorona,
        Indicator::NbreHospitCorona,
        Indicator::NbreActeCorona,
    ];

    const ALL: [Indicator; 21] = [
        Indicator::Deces2018,
        Indicator::Deces2019,
        Indicator::Deces2020,
        Indicator::IncidHosp,
        Indicator::IncidRea,
        Indicator::IncidDc,
        Indicator::IncidRad,
        Indicator::IncidInserm,
        Indicator::Test,
        Indicator::Pos,
        Indicator::NbrePassTot,
        Indicator::NbrePassCorona,
        Indicator::NbreHospitCorona,
        Indicator::NbreActeTot,
        Indicator::NbreActeCorona,
        Indicator::MeanExcess20,
        Indicator::MeanIncidDc,
        Indicator::MeanInserm,
        Indicator::MeanExcess20Corr,
        Indicator::Fhat,
        Indicator::Delta,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Indicator::Deces2018 => "deces_2018",
            Indicator::Deces2019 => "deces_2019",
            Indicator::Deces2020 => "deces_2020",
            Indicator::IncidHosp => "incid_hosp",
            Indicator::IncidRea => "incid_rea",
            Indicator::IncidDc => "incid_dc",
            Indicator::IncidRad => "incid_rad",
            Indicator::IncidInserm => "incid_inserm",
            Indicator::Test => "test",
            Indicator::Pos => "pos",
            Indicator::NbrePassTot => "nbre_pass_tot",
            Indicator::NbrePassCorona => "nbre_pass_corona",
            Indicator::NbreHospitCorona => "nbre_hospit_corona",
            Indicator::NbreActeTot => "nbre_acte_tot",
            Indicator::NbreActeCorona => "nbre_acte_corona",
            Indicator::MeanExcess20 => "mean_excess20",
            Indicator::MeanIncidDc => "mean_incid_dc",
            Indicator::MeanInserm => "mean_inserm",
            Indicator::MeanExcess20Corr => "mean_excess20_corr",
            Indicator::Fhat => "fhat",
            Indicator::Delta => "delta",
        }
    }

    /// Raw counts straight from a source file (as opposed to derived tags).
    pub fn is_source(self) -> bool {
        Self::SOURCE.contains(&self)
    }

    /// Death-count indicator for a calendar year, if one exists.
    pub fn deaths_for_year(year: i32) -> Option<Self> {
        match year {
            2018 => Some(Indicator::Deces2018),
            2019 => Some(Indicator::Deces2019),
            2020 => Some(Indicator::Deces2020),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown indicator {0:?}")]
pub struct UnknownIndicator(pub String);

impl FromStr for Indicator {
    type Err = UnknownIndicator;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        Self::ALL
            .iter()
            .copied()
            .find(|i| i.as_str() == s)
            .ok_or_else(|| UnknownIndicator(s.to_string()))
    }
}

impl Serialize for Indicator {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Indicator {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let tag = String::deserialize(deserializer)?;
        tag.parse().map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for Indicator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exactly_thirteen_mainland_codes() {
        let mut codes: Vec<u8> = MAINLAND_REGIONS.iter().map(|r| r.code()).collect();
        codes.dedup();
        assert_eq!(codes, vec![11, 24, 27, 28, 32, 44, 52, 53, 75, 76, 84, 93, 94]);
        assert!(RegionCode::new(1).is_err());
        assert!(RegionCode::new(6).is_err());
        assert_eq!("084".parse::<RegionCode>().unwrap().code(), 84);
    }

    #[test]
    fn names_resolve() {
        assert_eq!(RegionCode::from_name("grand est").unwrap().code(), 44);
        assert_eq!(RegionCode::from_name(" Île-de-France ").unwrap().code(), 11);
        assert_eq!(RegionCode::from_name("ile de france"), None);
        assert_eq!(RegionCode::from_name("Guadeloupe"), None);
        for r in MAINLAND_REGIONS {
            assert_eq!(RegionCode::from_name(r.name()), Some(r));
        }
    }

    #[test]
    fn indicator_tags_round_trip() {
        for i in Indicator::ALL {
            assert_eq!(i.as_str().parse::<Indicator>().unwrap(), i);
            let json = serde_json::to_string(&i).unwrap();
            assert_eq!(json, format!("\"{}\"", i.as_str()));
        }
        assert_eq!(Indicator::SOURCE.len(), 15);
        assert!(Indicator::VALIDATION.iter().all(|i| i.is_source()));
        assert!(!Indicator::Fhat.is_source());
        assert!("nbre_act_corona".parse::<Indicator>().is_err());
    }
}
