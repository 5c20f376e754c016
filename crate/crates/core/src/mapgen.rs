//! Seeded, reflection-symmetric map generation and the map file format.
//!
//! One half of the board is generated (spawn plus resource clusters whose
//! centres are kept apart by rejection sampling) and then mirrored across the
//! chosen axis, so both teams always face the same map.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Position;
use crate::state::{ResourceKind, Team};

pub const MAP_FORMAT_VERSION: u32 = 1;
pub const STANDARD_SIZES: [u32; 4] = [12, 16, 24, 32];
pub const OVERSIZE_SIZES: [u32; 3] = [48, 64, 128];
pub const MIN_SIZE: u32 = 8;
pub const MAX_SIZE: u32 = 128;
/// Largest per-cell amount accepted from a map file.
pub const MAX_RESOURCE_AMOUNT: u32 = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    /// Mirror across a vertical line: `(x, y) <-> (size - 1 - x, y)`.
    Vertical,
    /// Mirror across a horizontal line: `(x, y) <-> (x, size - 1 - y)`.
    Horizontal,
}

impl Axis {
    pub fn mirror(self, pos: Position, size: u32) -> Position {
        match self {
            Axis::Vertical => Position::new(size - 1 - pos.x, pos.y),
            Axis::Horizontal => Position::new(pos.x, size - 1 - pos.y),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ResourceSpot {
    pub pos: Position,
    pub kind: ResourceKind,
    pub amount: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GameMap {
    pub size: u32,
    pub axis: Axis,
    /// Seed the map was generated from (0 for hand-written maps).
    pub seed: u64,
    /// Team A then team B.
    pub spawns: [Position; 2],
    /// Sorted by `(y, x)`.
    pub resources: Vec<ResourceSpot>,
}

#[derive(Debug, Error)]
pub enum MapError {
    #[error("map size {size} is not supported{}", if *.allow_oversize { "" } else { " (standard sizes are 12, 16, 24, 32)" })]
    UnsupportedSize { size: u32, allow_oversize: bool },
    #[error("invalid map config `{field}`: {reason}")]
    Config { field: &'static str, reason: String },
    #[error("map parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("map validation failed on `{field}`: {reason}")]
    Validation { field: String, reason: String },
}

/// Checks a board side against the allowed set. Oversize mode accepts any
/// side in `[MIN_SIZE, MAX_SIZE]`, which includes 48, 64, and 128.
pub fn check_size(size: u32, allow_oversize: bool) -> Result<(), MapError> {
    let ok = STANDARD_SIZES.contains(&size) || (allow_oversize && (MIN_SIZE..=MAX_SIZE).contains(&size));
    if ok {
        Ok(())
    } else {
        Err(MapError::UnsupportedSize { size, allow_oversize })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapGenConfig {
    pub seed: u64,
    pub size: u32,
    pub allow_oversize: bool,
    /// Clusters per half-map, in addition to the wood cluster beside the spawn.
    pub wood_clusters: u32,
    pub coal_clusters: u32,
    pub uranium_clusters: u32,
    pub cluster_radius: u32,
    /// Chance that a cell within a cluster's radius holds resources.
    pub cluster_fill: f64,
    pub wood_amount: (u32, u32),
    pub coal_amount: (u32, u32),
    pub uranium_amount: (u32, u32),
}

impl MapGenConfig {
    /// Defaults scale cluster counts with the board side.
    pub fn new(seed: u64, size: u32) -> Self {
        MapGenConfig {
            seed,
            size,
            allow_oversize: false,
            wood_clusters: (size / 6).max(1),
            coal_clusters: (size / 10).max(1),
            uranium_clusters: (size / 14).max(1),
            cluster_radius: 1,
            cluster_fill: 0.6,
            wood_amount: (300, 500),
            coal_amount: (350, 450),
            uranium_amount: (300, 350),
        }
    }

    pub fn oversize(mut self, allow: bool) -> Self {
        self.allow_oversize = allow;
        self
    }

    fn amount_range(&self, kind: ResourceKind) -> (u32, u32) {
        match kind {
            ResourceKind::Wood => self.wood_amount,
            ResourceKind::Coal => self.coal_amount,
            ResourceKind::Uranium => self.uranium_amount,
        }
    }

    fn validate(&self) -> Result<(), MapError> {
        check_size(self.size, self.allow_oversize)?;
        if self.wood_clusters == 0 {
            return Err(MapError::Config {
                field: "wood_clusters",
                reason: "each half needs at least one wood cluster".into(),
            });
        }
        for (field, (lo, hi)) in [
            ("wood_amount", self.wood_amount),
            ("coal_amount", self.coal_amount),
            ("uranium_amount", self.uranium_amount),
        ] {
            if lo == 0 || lo > hi || hi > MAX_RESOURCE_AMOUNT {
                return Err(MapError::Config { field, reason: format!("bad range {lo}..={hi}") });
            }
        }
        if !(0.0..=1.0).contains(&self.cluster_fill) {
            return Err(MapError::Config { field: "cluster_fill", reason: "must be in [0, 1]".into() });
        }
        Ok(())
    }
}

/// Generates a symmetric map; a pure function of the config.
pub fn generate_map(config: &MapGenConfig) -> Result<GameMap, MapError> {
    config.validate()?;
    let size = config.size;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let axis = if rng.gen_bool(0.5) { Axis::Vertical } else { Axis::Horizontal };

    // Work in (u, v) where u is the coordinate across the axis; the generated
    // half is u < half. Odd sides leave the middle line empty.
    let half = size / 2;
    let to_pos = |u: u32, v: u32| match axis {
        Axis::Vertical => Position::new(u, v),
        Axis::Horizontal => Position::new(v, u),
    };

    let spawn_u = rng.gen_range(1..half.saturating_sub(1).max(2));
    let spawn_v = rng.gen_range(1..size - 1);
    let spawn = (spawn_u, spawn_v);

    let mut cells: BTreeMap<(u32, u32), (ResourceKind, u32)> = BTreeMap::new();
    let mut centers: Vec<(u32, u32)> = Vec::new();
    let radius = config.cluster_radius as i64;

    let place_cluster = |rng: &mut ChaCha8Rng,
                             cells: &mut BTreeMap<(u32, u32), (ResourceKind, u32)>,
                             center: (u32, u32),
                             kind: ResourceKind| {
        let (lo, hi) = config.amount_range(kind);
        for dv in -radius..=radius {
            for du in -radius..=radius {
                let u = center.0 as i64 + du;
                let v = center.1 as i64 + dv;
                if u < 0 || v < 0 || u >= half as i64 || v >= size as i64 {
                    continue;
                }
                let key = (u as u32, v as u32);
                let is_center = du == 0 && dv == 0;
                if key == spawn || cells.contains_key(&key) {
                    continue;
                }
                if is_center || rng.gen_bool(config.cluster_fill) {
                    cells.insert(key, (kind, rng.gen_range(lo..=hi)));
                }
            }
        }
    };

    // A wood cluster two or three steps from the spawn keeps every map winnable.
    let near_spawn = loop {
        let du: i64 = rng.gen_range(-3..=3);
        let dv: i64 = rng.gen_range(-3..=3);
        let dist = du.abs() + dv.abs();
        let u = spawn.0 as i64 + du;
        let v = spawn.1 as i64 + dv;
        if (2..=3).contains(&dist) && u >= 0 && v >= 0 && u < half as i64 && v < size as i64 {
            break (u as u32, v as u32);
        }
    };
    place_cluster(&mut rng, &mut cells, near_spawn, ResourceKind::Wood);
    centers.push(near_spawn);

    let min_gap = 2 * config.cluster_radius + 2;
    let plan = [
        (ResourceKind::Wood, config.wood_clusters),
        (ResourceKind::Coal, config.coal_clusters),
        (ResourceKind::Uranium, config.uranium_clusters),
    ];
    for (kind, count) in plan {
        for _ in 0..count {
            for _attempt in 0..30 {
                let c = (rng.gen_range(0..half), rng.gen_range(0..size));
                let far_from_spawn = c.0.abs_diff(spawn.0) + c.1.abs_diff(spawn.1) >= 3;
                let spaced = centers
                    .iter()
                    .all(|o| o.0.abs_diff(c.0).max(o.1.abs_diff(c.1)) >= min_gap);
                if far_from_spawn && spaced {
                    place_cluster(&mut rng, &mut cells, c, kind);
                    centers.push(c);
                    break;
                }
            }
        }
    }

    let spawn_a = to_pos(spawn.0, spawn.1);
    let mut resources = Vec::with_capacity(cells.len() * 2);
    for (&(u, v), &(kind, amount)) in &cells {
        let pos = to_pos(u, v);
        resources.push(ResourceSpot { pos, kind, amount });
        resources.push(ResourceSpot { pos: axis.mirror(pos, size), kind, amount });
    }
    resources.sort_by_key(|r| r.pos.row_major());

    Ok(GameMap {
        size,
        axis,
        seed: config.seed,
        spawns: [spawn_a, axis.mirror(spawn_a, size)],
        resources,
    })
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapDoc {
    version: u32,
    size: u32,
    axis: Axis,
    #[serde(default)]
    seed: u64,
    spawns: Vec<SpawnDoc>,
    resources: Vec<ResourceDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpawnDoc {
    team: Team,
    x: i64,
    y: i64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ResourceDoc {
    kind: ResourceKind,
    x: i64,
    y: i64,
    amount: i64,
}

fn to_doc(map: &GameMap) -> MapDoc {
    let mut resources: Vec<&ResourceSpot> = map.resources.iter().collect();
    resources.sort_by_key(|r| r.pos.row_major());
    MapDoc {
        version: MAP_FORMAT_VERSION,
        size: map.size,
        axis: map.axis,
        seed: map.seed,
        spawns: Team::BOTH
            .iter()
            .map(|&team| {
                let p = map.spawns[team.index()];
                SpawnDoc { team, x: p.x as i64, y: p.y as i64 }
            })
            .collect(),
        resources: resources
            .into_iter()
            .map(|r| ResourceDoc {
                kind: r.kind,
                x: r.pos.x as i64,
                y: r.pos.y as i64,
                amount: r.amount as i64,
            })
            .collect(),
    }
}

/// Canonical JSON document with fixed key order and `(y, x)`-sorted resources.
pub fn serialize_map(map: &GameMap) -> String {
    let mut text = serde_json::to_string_pretty(&to_doc(map)).expect("map serializes");
    text.push('\n');
    text
}

impl Serialize for GameMap {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        to_doc(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for GameMap {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let doc = MapDoc::deserialize(deserializer)?;
        from_doc(doc, true).map_err(serde::de::Error::custom)
    }
}

/// Parses and validates a map document.
pub fn parse_map(text: &str, allow_oversize: bool) -> Result<GameMap, MapError> {
    let doc: MapDoc = serde_json::from_str(text).map_err(|e| MapError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    from_doc(doc, allow_oversize)
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> MapError {
    MapError::Validation { field: field.into(), reason: reason.into() }
}

fn from_doc(doc: MapDoc, allow_oversize: bool) -> Result<GameMap, MapError> {
    if doc.version != MAP_FORMAT_VERSION {
        return Err(invalid(
            "version",
            format!("expected {MAP_FORMAT_VERSION}, found {}", doc.version),
        ));
    }
    check_size(doc.size, allow_oversize).map_err(|e| invalid("size", e.to_string()))?;
    let size = doc.size;
    let coord = |field: String, x: i64, y: i64| -> Result<Position, MapError> {
        if x < 0 || y < 0 || x >= size as i64 || y >= size as i64 {
            return Err(invalid(field, format!("({x}, {y}) is off the {size}x{size} board")));
        }
        Ok(Position::new(x as u32, y as u32))
    };

    if doc.spawns.len() != 2 {
        return Err(invalid("spawns", format!("expected 2 entries, found {}", doc.spawns.len())));
    }
    let mut spawns: [Option<Position>; 2] = [None, None];
    for (i, s) in doc.spawns.iter().enumerate() {
        let p = coord(format!("spawns[{i}]"), s.x, s.y)?;
        if spawns[s.team.index()].replace(p).is_some() {
            return Err(invalid(format!("spawns[{i}].team"), format!("team {} listed twice", s.team)));
        }
    }
    let spawns = [spawns[0].expect("two distinct teams"), spawns[1].expect("two distinct teams")];
    if spawns[0] == spawns[1] {
        return Err(invalid("spawns", "both teams spawn on the same cell"));
    }
    if doc.axis.mirror(spawns[0], size) != spawns[1] {
        return Err(invalid("spawns", format!("spawns are not mirrored across the {:?} axis", doc.axis)));
    }

    let mut by_pos: BTreeMap<Position, (ResourceKind, u32)> = BTreeMap::new();
    for (i, r) in doc.resources.iter().enumerate() {
        let p = coord(format!("resources[{i}]"), r.x, r.y)?;
        if r.amount < 1 || r.amount > MAX_RESOURCE_AMOUNT as i64 {
            return Err(invalid(
                format!("resources[{i}].amount"),
                format!("{} is outside 1..={MAX_RESOURCE_AMOUNT}", r.amount),
            ));
        }
        if spawns.contains(&p) {
            return Err(invalid(format!("resources[{i}]"), format!("resource on spawn cell {p}")));
        }
        if by_pos.insert(p, (r.kind, r.amount as u32)).is_some() {
            return Err(invalid(format!("resources[{i}]"), format!("duplicate cell {p}")));
        }
    }
    for (i, r) in doc.resources.iter().enumerate() {
        let p = Position::new(r.x as u32, r.y as u32);
        let m = doc.axis.mirror(p, size);
        if by_pos.get(&m) != by_pos.get(&p) {
            return Err(invalid(
                format!("resources[{i}]"),
                format!("{p} has no matching mirror cell at {m}"),
            ));
        }
    }

    let mut resources: Vec<ResourceSpot> = by_pos
        .into_iter()
        .map(|(pos, (kind, amount))| ResourceSpot { pos, kind, amount })
        .collect();
    resources.sort_by_key(|r| r.pos.row_major());
    Ok(GameMap { size, axis: doc.axis, seed: doc.seed, spawns, resources })
}
