//! Rule constants and the fixed-point quarter type used for cooldowns and roads.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::state::{ResourceKind, UnitKind};

/// A non-negative quantity measured in quarters (0.25 steps).
///
/// Every rule increment touching cooldowns and road levels is a multiple of
/// 0.25, so storing them as integers keeps the simulation free of rounding.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Quarters(pub u32);

impl Quarters {
    pub const ZERO: Quarters = Quarters(0);
    pub const ONE: Quarters = Quarters(4);

    pub const fn whole(n: u32) -> Self {
        Quarters(n * 4)
    }

    /// Converts a decimal value, rejecting anything that is negative or not a
    /// multiple of 0.25.
    pub fn from_f64(value: f64) -> Option<Self> {
        if !value.is_finite() || value < 0.0 {
            return None;
        }
        let scaled = value * 4.0;
        if (scaled - scaled.round()).abs() > 1e-9 || scaled > u32::MAX as f64 {
            return None;
        }
        Some(Quarters(scaled.round() as u32))
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / 4.0
    }

    pub fn saturating_sub(self, other: Quarters) -> Quarters {
        Quarters(self.0.saturating_sub(other.0))
    }

    pub fn min(self, other: Quarters) -> Quarters {
        Quarters(self.0.min(other.0))
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl std::ops::Add for Quarters {
    type Output = Quarters;
    fn add(self, rhs: Quarters) -> Quarters {
        Quarters(self.0 + rhs.0)
    }
}

impl std::ops::Mul<u32> for Quarters {
    type Output = Quarters;
    fn mul(self, rhs: u32) -> Quarters {
        Quarters(self.0 * rhs)
    }
}

impl fmt::Display for Quarters {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let whole = self.0 / 4;
        match self.0 % 4 {
            0 => write!(f, "{whole}"),
            1 => write!(f, "{whole}.25"),
            2 => write!(f, "{whole}.5"),
            _ => write!(f, "{whole}.75"),
        }
    }
}

impl Serialize for Quarters {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.as_f64())
    }
}

impl<'de> Deserialize<'de> for Quarters {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = f64::deserialize(deserializer)?;
        Quarters::from_f64(value).ok_or_else(|| {
            serde::de::Error::custom(format!("{value} is not a non-negative multiple of 0.25"))
        })
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read constants file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed constants file: {0}")]
    Parse(String),
    #[error("invalid constant `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
}

/// Every tunable number of the ruleset in one record.
///
/// Defaults are compiled in; [`RuleConstants::from_config_str`] accepts a
/// `key = value` file where any subset of keys overrides the defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RuleConstants {
    pub fuel_wood: u32,
    pub fuel_coal: u32,
    pub fuel_uranium: u32,

    pub collect_wood: u32,
    pub collect_coal: u32,
    pub collect_uranium: u32,

    pub research_coal: u32,
    pub research_uranium: u32,
    pub research_cap: u32,

    pub cooldown_citytile: Quarters,
    pub cooldown_worker: Quarters,
    pub cooldown_cart: Quarters,
    /// Multiplier applied to base cooldowns for actions taken at night.
    pub night_cooldown_factor: u32,

    pub capacity_worker: u32,
    pub capacity_cart: u32,

    pub night_upkeep_worker: u32,
    pub night_upkeep_cart: u32,
    pub city_tile_upkeep_base: u32,
    pub city_tile_upkeep_adjacency_discount: u32,

    pub wood_regrowth_rate: f64,
    pub wood_regrowth_cap: u32,

    pub road_build_per_cart_stop: Quarters,
    pub road_pillage_decrement: Quarters,
    pub road_max: Quarters,

    pub cycle_length: u32,
    pub day_length: u32,
    pub episode_length: u32,

    pub turn_time_budget_s: f64,
    pub time_pool_s: f64,
}

impl Default for RuleConstants {
    fn default() -> Self {
        RuleConstants {
            fuel_wood: 1,
            fuel_coal: 10,
            fuel_uranium: 40,
            collect_wood: 20,
            collect_coal: 5,
            collect_uranium: 2,
            research_coal: 50,
            research_uranium: 200,
            research_cap: 200,
            cooldown_citytile: Quarters::whole(10),
            cooldown_worker: Quarters::whole(2),
            cooldown_cart: Quarters::whole(3),
            night_cooldown_factor: 2,
            capacity_worker: 100,
            capacity_cart: 2000,
            night_upkeep_worker: 4,
            night_upkeep_cart: 10,
            city_tile_upkeep_base: 23,
            city_tile_upkeep_adjacency_discount: 5,
            wood_regrowth_rate: 0.025,
            wood_regrowth_cap: 500,
            road_build_per_cart_stop: Quarters(3),
            road_pillage_decrement: Quarters(2),
            road_max: Quarters::whole(6),
            cycle_length: 40,
            day_length: 30,
            episode_length: 360,
            turn_time_budget_s: 3.0,
            time_pool_s: 60.0,
        }
    }
}

impl RuleConstants {
    /// Parses a `key = value` override file on top of the defaults.
    pub fn from_config_str(text: &str) -> Result<Self, ConfigError> {
        let constants: RuleConstants =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        constants.validate()?;
        Ok(constants)
    }

    pub fn from_config_file(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_config_str(&text)
    }

    /// Renders every constant as a `key = value` document that
    /// [`RuleConstants::from_config_str`] reads back unchanged.
    pub fn to_config_string(&self) -> String {
        toml::to_string(self).expect("constants always serialize")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        fn positive(field: &'static str, v: u32) -> Result<(), ConfigError> {
            if v == 0 {
                return Err(ConfigError::Invalid { field, reason: "must be > 0".into() });
            }
            Ok(())
        }
        fn positive_q(field: &'static str, v: Quarters) -> Result<(), ConfigError> {
            positive(field, v.0)
        }

        positive("fuel_wood", self.fuel_wood)?;
        positive("fuel_coal", self.fuel_coal)?;
        positive("fuel_uranium", self.fuel_uranium)?;
        positive("collect_wood", self.collect_wood)?;
        positive("collect_coal", self.collect_coal)?;
        positive("collect_uranium", self.collect_uranium)?;
        positive("research_coal", self.research_coal)?;
        positive("research_uranium", self.research_uranium)?;
        positive("research_cap", self.research_cap)?;
        positive_q("cooldown_citytile", self.cooldown_citytile)?;
        positive_q("cooldown_worker", self.cooldown_worker)?;
        positive_q("cooldown_cart", self.cooldown_cart)?;
        positive("night_cooldown_factor", self.night_cooldown_factor)?;
        positive("capacity_worker", self.capacity_worker)?;
        positive("capacity_cart", self.capacity_cart)?;
        positive("night_upkeep_worker", self.night_upkeep_worker)?;
        positive("night_upkeep_cart", self.night_upkeep_cart)?;
        positive("city_tile_upkeep_base", self.city_tile_upkeep_base)?;
        positive(
            "city_tile_upkeep_adjacency_discount",
            self.city_tile_upkeep_adjacency_discount,
        )?;
        positive("wood_regrowth_cap", self.wood_regrowth_cap)?;
        positive_q("road_build_per_cart_stop", self.road_build_per_cart_stop)?;
        positive_q("road_pillage_decrement", self.road_pillage_decrement)?;
        positive_q("road_max", self.road_max)?;
        positive("cycle_length", self.cycle_length)?;
        positive("day_length", self.day_length)?;
        positive("episode_length", self.episode_length)?;

        if self.city_tile_upkeep_base <= 4 * self.city_tile_upkeep_adjacency_discount {
            return Err(ConfigError::Invalid {
                field: "city_tile_upkeep_base",
                reason: "upkeep with four neighbours must stay positive".into(),
            });
        }
        if self.day_length >= self.cycle_length {
            return Err(ConfigError::Invalid {
                field: "day_length",
                reason: "must be shorter than cycle_length".into(),
            });
        }
        if self.episode_length != 9 * self.cycle_length {
            return Err(ConfigError::Invalid {
                field: "episode_length",
                reason: "must equal 9 cycles".into(),
            });
        }
        if self.research_uranium > self.research_cap || self.research_coal > self.research_cap {
            return Err(ConfigError::Invalid {
                field: "research_cap",
                reason: "research prerequisites must be reachable".into(),
            });
        }
        if !(self.wood_regrowth_rate > 0.0 && self.wood_regrowth_rate.is_finite()) {
            return Err(ConfigError::Invalid {
                field: "wood_regrowth_rate",
                reason: "must be a positive number".into(),
            });
        }
        let ppm = self.wood_regrowth_rate * 1e6;
        if (ppm - ppm.round()).abs() > 1e-6 {
            return Err(ConfigError::Invalid {
                field: "wood_regrowth_rate",
                reason: "must be a whole number of parts per million".into(),
            });
        }
        if !(self.turn_time_budget_s > 0.0 && self.time_pool_s >= 0.0) {
            return Err(ConfigError::Invalid {
                field: "turn_time_budget_s",
                reason: "time budgets must be positive".into(),
            });
        }
        Ok(())
    }

    pub fn night_length(&self) -> u32 {
        self.cycle_length - self.day_length
    }

    pub fn cycles(&self) -> u32 {
        self.episode_length / self.cycle_length
    }

    pub fn fuel_per_unit(&self, kind: ResourceKind) -> u32 {
        match kind {
            ResourceKind::Wood => self.fuel_wood,
            ResourceKind::Coal => self.fuel_coal,
            ResourceKind::Uranium => self.fuel_uranium,
        }
    }

    pub fn collection_rate(&self, kind: ResourceKind) -> u32 {
        match kind {
            ResourceKind::Wood => self.collect_wood,
            ResourceKind::Coal => self.collect_coal,
            ResourceKind::Uranium => self.collect_uranium,
        }
    }

    pub fn research_prereq(&self, kind: ResourceKind) -> u32 {
        match kind {
            ResourceKind::Wood => 0,
            ResourceKind::Coal => self.research_coal,
            ResourceKind::Uranium => self.research_uranium,
        }
    }

    pub fn capacity(&self, kind: UnitKind) -> u32 {
        match kind {
            UnitKind::Worker => self.capacity_worker,
            UnitKind::Cart => self.capacity_cart,
        }
    }

    pub fn unit_cooldown(&self, kind: UnitKind) -> Quarters {
        match kind {
            UnitKind::Worker => self.cooldown_worker,
            UnitKind::Cart => self.cooldown_cart,
        }
    }

    pub fn unit_night_upkeep(&self, kind: UnitKind) -> u32 {
        match kind {
            UnitKind::Worker => self.night_upkeep_worker,
            UnitKind::Cart => self.night_upkeep_cart,
        }
    }

    /// Wood regrowth in integer form: `ceil(amount * rate)`.
    pub fn wood_regrowth(&self, amount: u32) -> u32 {
        let ppm = (self.wood_regrowth_rate * 1e6).round() as u64;
        ((amount as u64 * ppm).div_ceil(1_000_000)) as u32
    }
}
