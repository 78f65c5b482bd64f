//! Procedural articulated-object assets.
//!
//! An asset is a cabinet-like body with one openable panel (door, flap, or
//! drawer front) and a graspable handle. Geometry is generated from a seed,
//! so a split regenerates byte-identically anywhere. The text format below
//! round-trips exactly because floats print in shortest-roundtrip form.

use crate::geometry::{Cuboid, GeometryError, JointKind, JointSpec, Pose};
use nalgebra::{Unit, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const ASSET_FORMAT_VERSION: u32 = 1;

/// Revolute doors open to a quarter turn; drawers pull out 0.4 m.
pub const REVOLUTE_LIMIT: f64 = std::f64::consts::FRAC_PI_2;
pub const PRISMATIC_LIMIT: f64 = 0.4;

#[derive(Debug, Error)]
pub enum AssetError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported asset format version {0}")]
    Version(u32),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Visual handle family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HandleClass {
    /// Horizontal elongated bar.
    Bar,
    /// Vertical elongated grip.
    Vertical,
    /// Compact knob, near-equal extents.
    Knob,
}

impl HandleClass {
    pub const ALL: [HandleClass; 3] = [HandleClass::Bar, HandleClass::Vertical, HandleClass::Knob];

    fn name(self) -> &'static str {
        match self {
            HandleClass::Bar => "bar",
            HandleClass::Vertical => "vertical",
            HandleClass::Knob => "knob",
        }
    }
}

fn kind_name(kind: JointKind) -> &'static str {
    match kind {
        JointKind::RevoluteLeft => "revolute_left",
        JointKind::RevoluteRight => "revolute_right",
        JointKind::RevoluteUp => "revolute_up",
        JointKind::RevoluteDown => "revolute_down",
        JointKind::Prismatic => "prismatic",
    }
}

fn kind_from_name(s: &str) -> Option<JointKind> {
    Some(match s {
        "revolute_left" => JointKind::RevoluteLeft,
        "revolute_right" => JointKind::RevoluteRight,
        "revolute_up" => JointKind::RevoluteUp,
        "revolute_down" => JointKind::RevoluteDown,
        "prismatic" => JointKind::Prismatic,
        _ => return None,
    })
}

fn class_from_name(s: &str) -> Option<HandleClass> {
    Some(match s {
        "bar" => HandleClass::Bar,
        "vertical" => HandleClass::Vertical,
        "knob" => HandleClass::Knob,
        _ => return None,
    })
}

/// One articulated object at rest (articulation 0), in world frame with the
/// panel front face normal +x and the body behind it in x < 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectAsset {
    pub id: u64,
    pub kind: JointKind,
    pub class: HandleClass,
    /// True when the handle look does not determine the joint: a centered
    /// top bar occurs across several joint types.
    pub ambiguous: bool,
    pub panel: Cuboid,
    pub handle: Cuboid,
    pub joint: JointSpec,
}

impl ObjectAsset {
    pub fn xi_norm(&self, xi: f64) -> f64 {
        xi / self.joint.limit
    }

    /// Panel cuboid at articulation `xi`.
    pub fn panel_at(&self, xi: f64) -> Cuboid {
        Cuboid {
            pose: self.joint.displacement(xi).compose(&self.panel.pose),
            half_extents: self.panel.half_extents,
        }
    }

    /// Handle cuboid at articulation `xi` (rides rigidly on the panel).
    pub fn handle_at(&self, xi: f64) -> Cuboid {
        Cuboid {
            pose: self.joint.displacement(xi).compose(&self.handle.pose),
            half_extents: self.handle.half_extents,
        }
    }

    pub fn handle_center_at(&self, xi: f64) -> Vector3<f64> {
        self.joint.displacement(xi).transform_point(&self.handle.pose.position)
    }

    /// World-frame articulation cue at the current handle position: lever
    /// arm to the axis for revolute joints, unit gravity for prismatic.
    pub fn articulation_cue_at(&self, xi: f64) -> Result<Vector3<f64>, GeometryError> {
        crate::geometry::ground_truth_articulation(&self.joint, &self.handle_center_at(xi))
    }

    /// Static body box behind the panel; never moves.
    pub fn body_cuboid(&self) -> Cuboid {
        let p = &self.panel;
        let depth = 0.25;
        let center = Vector3::new(
            p.pose.position.x - p.half_extents.x - depth,
            p.pose.position.y,
            p.pose.position.z,
        );
        Cuboid {
            pose: Pose::new(center, p.pose.orientation),
            half_extents: Vector3::new(depth, p.half_extents.y + 0.05, p.half_extents.z + 0.05),
        }
    }

    /// Shape-only ambiguity test, independent of the stored flag: a
    /// horizontally elongated bar near the panel's vertical centerline in
    /// the upper half reads the same on doors, flaps, and drawers.
    pub fn has_ambiguous_shape(&self) -> bool {
        let h = &self.handle.half_extents;
        let long_is_y = h.y >= h.x && h.y >= h.z;
        let ratio = h.y / h.x.max(h.z);
        let rel = self.handle.pose.position - self.panel.pose.position;
        long_is_y
            && ratio >= 3.0
            && rel.y.abs() <= 0.25 * self.panel.half_extents.y
            && rel.z >= 0.3 * self.panel.half_extents.z
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let v3 = |v: &Vector3<f64>| format!("{} {} {}", v.x, v.y, v.z);
        s.push_str(&format!("artobj {ASSET_FORMAT_VERSION}\n"));
        s.push_str(&format!("id {}\n", self.id));
        s.push_str(&format!("kind {}\n", kind_name(self.kind)));
        s.push_str(&format!("class {}\n", self.class.name()));
        s.push_str(&format!("ambiguous {}\n", u8::from(self.ambiguous)));
        s.push_str(&format!("panel_center {}\n", v3(&self.panel.pose.position)));
        s.push_str(&format!("panel_half {}\n", v3(&self.panel.half_extents)));
        s.push_str(&format!("handle_center {}\n", v3(&self.handle.pose.position)));
        s.push_str(&format!("handle_half {}\n", v3(&self.handle.half_extents)));
        s.push_str(&format!("axis_point {}\n", v3(&self.joint.axis_point)));
        s.push_str(&format!("axis_dir {}\n", v3(&self.joint.axis_dir)));
        s.push_str(&format!("limit {}\n", self.joint.limit));
        s
    }

    pub fn from_text(text: &str) -> Result<Self, AssetError> {
        let mut fields = std::collections::HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once(' ').ok_or_else(|| AssetError::Parse {
                line: i + 1,
                message: format!("expected 'key value', got {line:?}"),
            })?;
            fields.insert(key.to_string(), (i + 1, value.to_string()));
        }
        let take = |key: &str| -> Result<(usize, String), AssetError> {
            fields.get(key).cloned().ok_or_else(|| AssetError::Parse {
                line: 0,
                message: format!("missing field {key:?}"),
            })
        };
        let parse_f64 = |key: &str| -> Result<f64, AssetError> {
            let (line, v) = take(key)?;
            v.parse().map_err(|e| AssetError::Parse { line, message: format!("{key}: {e}") })
        };
        let parse_v3 = |key: &str| -> Result<Vector3<f64>, AssetError> {
            let (line, v) = take(key)?;
            let parts: Vec<&str> = v.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(AssetError::Parse { line, message: format!("{key}: need 3 numbers") });
            }
            let mut out = [0.0; 3];
            for (j, p) in parts.iter().enumerate() {
                out[j] = p
                    .parse()
                    .map_err(|e| AssetError::Parse { line, message: format!("{key}: {e}") })?;
            }
            Ok(Vector3::new(out[0], out[1], out[2]))
        };

        let (line, version) = take("artobj")?;
        let version: u32 = version
            .parse()
            .map_err(|e| AssetError::Parse { line, message: format!("version: {e}") })?;
        if version != ASSET_FORMAT_VERSION {
            return Err(AssetError::Version(version));
        }
        let (line, id) = take("id")?;
        let id: u64 =
            id.parse().map_err(|e| AssetError::Parse { line, message: format!("id: {e}") })?;
        let (line, kind) = take("kind")?;
        let kind = kind_from_name(&kind)
            .ok_or_else(|| AssetError::Parse { line, message: format!("unknown kind {kind:?}") })?;
        let (line, class) = take("class")?;
        let class = class_from_name(&class).ok_or_else(|| AssetError::Parse {
            line,
            message: format!("unknown class {class:?}"),
        })?;
        let (line, amb) = take("ambiguous")?;
        let ambiguous = match amb.as_str() {
            "0" => false,
            "1" => true,
            other => {
                return Err(AssetError::Parse {
                    line,
                    message: format!("ambiguous must be 0 or 1, got {other:?}"),
                })
            }
        };
        let panel = Cuboid::new(
            Pose::new(parse_v3("panel_center")?, nalgebra::UnitQuaternion::identity()),
            parse_v3("panel_half")?,
        )?;
        let handle = Cuboid::new(
            Pose::new(parse_v3("handle_center")?, nalgebra::UnitQuaternion::identity()),
            parse_v3("handle_half")?,
        )?;
        let joint = JointSpec {
            kind,
            axis_point: parse_v3("axis_point")?,
            axis_dir: Unit::new_normalize(parse_v3("axis_dir")?),
            limit: parse_f64("limit")?,
        };
        Ok(Self { id, kind, class, ambiguous, panel, handle, joint })
    }
}

/// Generation controls. Geometry ranges are fixed; the split layout and the
/// forced-ambiguity rate are the tunable surface.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct AssetGenConfig {
    pub n_train: usize,
    pub n_test: usize,
    pub seed_base_train: u64,
    pub seed_base_test: u64,
    /// Chance that an eligible object gets the ambiguous top-center bar
    /// instead of its default handle placement.
    pub p_ambiguous: f64,
}

impl Default for AssetGenConfig {
    fn default() -> Self {
        Self { n_train: 41, n_test: 10, seed_base_train: 1000, seed_base_test: 2000, p_ambiguous: 0.25 }
    }
}

/// Deterministic asset from a seed. Kind and handle class are chosen by
/// cycling so small splits still cover the whole grid.
pub fn generate_asset(seed: u64, index: usize, p_ambiguous: f64) -> ObjectAsset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kind = JointKind::ALL[index % JointKind::ALL.len()];
    let mut class = HandleClass::ALL[(index / JointKind::ALL.len()) % HandleClass::ALL.len()];

    // Panel: thin box, front face normal +x, resting above the floor.
    let hx = rng.gen_range(0.012..=0.025);
    let hy = rng.gen_range(0.15..=0.45);
    let hz = rng.gen_range(0.15..=0.45);
    let zc = rng.gen_range(0.5..=1.0);
    let panel = Cuboid {
        pose: Pose::new(Vector3::new(0.0, 0.0, zc), nalgebra::UnitQuaternion::identity()),
        half_extents: Vector3::new(hx, hy, hz),
    };

    // A top-center bar is only ambiguous where several joints could own it.
    let eligible = matches!(
        kind,
        JointKind::RevoluteLeft | JointKind::RevoluteRight | JointKind::RevoluteDown | JointKind::Prismatic
    );
    let force_ambiguous = eligible && rng.gen_bool(p_ambiguous.clamp(0.0, 1.0));
    if force_ambiguous {
        class = HandleClass::Bar;
    }

    // Handle extents by class.
    let handle_half = match class {
        HandleClass::Bar => {
            let len = hy * rng.gen_range(0.25..=0.45);
            let thick = (len / rng.gen_range(4.0..=8.0)).clamp(0.008, 0.02);
            Vector3::new(thick, len, thick)
        }
        HandleClass::Vertical => {
            let len = hz * rng.gen_range(0.25..=0.45);
            let thick = (len / rng.gen_range(4.0..=8.0)).clamp(0.008, 0.02);
            Vector3::new(thick, thick, len)
        }
        HandleClass::Knob => {
            let r = rng.gen_range(0.015..=0.03);
            Vector3::new(
                r * rng.gen_range(0.85..=1.15),
                r * rng.gen_range(0.85..=1.15),
                r * rng.gen_range(0.85..=1.15),
            )
        }
    };

    // Placement on the panel face, relative to the panel center. Margins
    // keep the handle fully on the panel.
    let usable_y = (hy - handle_half.y - 0.01).max(0.01);
    let usable_z = (hz - handle_half.z - 0.01).max(0.01);
    let (rel_y, rel_z) = if force_ambiguous {
        (rng.gen_range(-0.1..=0.1) * usable_y, rng.gen_range(0.5..=0.8) * usable_z)
    } else {
        match kind {
            JointKind::RevoluteLeft => {
                (rng.gen_range(0.55..=0.9) * usable_y, rng.gen_range(-0.25..=0.25) * usable_z)
            }
            JointKind::RevoluteRight => {
                (-rng.gen_range(0.55..=0.9) * usable_y, rng.gen_range(-0.25..=0.25) * usable_z)
            }
            JointKind::RevoluteUp => {
                (rng.gen_range(-0.25..=0.25) * usable_y, -rng.gen_range(0.55..=0.9) * usable_z)
            }
            JointKind::RevoluteDown => {
                (rng.gen_range(-0.25..=0.25) * usable_y, rng.gen_range(0.55..=0.9) * usable_z)
            }
            JointKind::Prismatic => {
                (rng.gen_range(-0.15..=0.15) * usable_y, rng.gen_range(-0.15..=0.15) * usable_z)
            }
        }
    };
    let standoff = rng.gen_range(0.03..=0.06);
    let handle_center = Vector3::new(hx + standoff, rel_y, zc + rel_z);
    let handle = Cuboid {
        pose: Pose::new(handle_center, nalgebra::UnitQuaternion::identity()),
        half_extents: handle_half,
    };

    let (axis_point, axis_dir, limit) = match kind {
        JointKind::RevoluteLeft => {
            (Vector3::new(0.0, -hy, zc), Vector3::new(0.0, 0.0, -1.0), REVOLUTE_LIMIT)
        }
        JointKind::RevoluteRight => {
            (Vector3::new(0.0, hy, zc), Vector3::new(0.0, 0.0, 1.0), REVOLUTE_LIMIT)
        }
        JointKind::RevoluteUp => {
            (Vector3::new(0.0, 0.0, zc + hz), Vector3::new(0.0, -1.0, 0.0), REVOLUTE_LIMIT)
        }
        JointKind::RevoluteDown => {
            (Vector3::new(0.0, 0.0, zc - hz), Vector3::new(0.0, 1.0, 0.0), REVOLUTE_LIMIT)
        }
        JointKind::Prismatic => {
            (Vector3::new(0.0, 0.0, zc), Vector3::new(1.0, 0.0, 0.0), PRISMATIC_LIMIT)
        }
    };
    let joint = JointSpec { kind, axis_point, axis_dir: Unit::new_normalize(axis_dir), limit };

    let mut asset =
        ObjectAsset { id: seed, kind, class, ambiguous: false, panel, handle, joint };
    asset.ambiguous = asset.has_ambiguous_shape();
    asset
}

/// Train and test splits from disjoint seed ranges.
pub fn generate_split(cfg: &AssetGenConfig) -> (Vec<ObjectAsset>, Vec<ObjectAsset>) {
    let train = (0..cfg.n_train)
        .map(|i| generate_asset(cfg.seed_base_train + i as u64, i, cfg.p_ambiguous))
        .collect();
    let test = (0..cfg.n_test)
        .map(|i| generate_asset(cfg.seed_base_test + i as u64, i, cfg.p_ambiguous))
        .collect();
    (train, test)
}
