//! Fibers, fiber stacks, and the differential dispersion phase between the
//! long and short paths of an unbalanced Mach-Zehnder interferometer.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{FransonError, Result};
use crate::spectra::Detuning;
use crate::units::{C_MM_PER_NS, FS2_TO_PS2, FS3_TO_PS3};

pub const DEFAULT_GROUP_INDEX: f64 = 1.468;

/// Dispersion coefficients of one fiber type at the operating wavelength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberSpec {
    pub name: String,
    #[serde(rename = "beta2_fs2_per_mm")]
    pub beta2: f64,
    #[serde(rename = "beta3_fs3_per_mm", default)]
    pub beta3: f64,
    #[serde(default = "default_group_index")]
    pub group_index: f64,
}

fn default_group_index() -> f64 {
    DEFAULT_GROUP_INDEX
}

impl FiberSpec {
    pub fn new(name: impl Into<String>, beta2_fs2_per_mm: f64) -> Self {
        Self {
            name: name.into(),
            beta2: beta2_fs2_per_mm,
            beta3: 0.0,
            group_index: DEFAULT_GROUP_INDEX,
        }
    }

    pub fn with_beta3(mut self, beta3_fs3_per_mm: f64) -> Self {
        self.beta3 = beta3_fs3_per_mm;
        self
    }

    pub fn with_group_index(mut self, group_index: f64) -> Self {
        self.group_index = group_index;
        self
    }

    /// Standard single-mode fiber at 1560 nm.
    pub fn smf() -> Self {
        Self::new("SMF", -22.5)
    }

    /// Large-effective-area low-dispersion fiber at 1560 nm.
    pub fn leaf() -> Self {
        Self::new("LEAF", -6.19)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta2.is_finite() && self.beta3.is_finite()) {
            return Err(FransonError::Configuration(format!(
                "fiber '{}': dispersion coefficients must be finite",
                self.name
            )));
        }
        if !(self.group_index > 1.0 && self.group_index.is_finite()) {
            return Err(FransonError::Configuration(format!(
                "fiber '{}': group index must exceed 1, got {}",
                self.name, self.group_index
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiberSegment {
    pub fiber: FiberSpec,
    pub length_mm: f64,
}

impl FiberSegment {
    pub fn new(fiber: FiberSpec, length_mm: f64) -> Result<Self> {
        fiber.validate()?;
        if !(length_mm >= 0.0 && length_mm.is_finite()) {
            return Err(FransonError::Configuration(format!(
                "segment of '{}' has invalid length {length_mm} mm",
                fiber.name
            )));
        }
        Ok(Self { fiber, length_mm })
    }

    pub fn beta2_l_fs2(&self) -> f64 {
        self.fiber.beta2 * self.length_mm
    }

    pub fn beta3_l_fs3(&self) -> f64 {
        self.fiber.beta3 * self.length_mm
    }

    pub fn group_delay_ns(&self) -> f64 {
        self.fiber.group_index * self.length_mm / C_MM_PER_NS
    }
}

/// An ordered list of fiber segments making up one interferometer path.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PathStack {
    segments: Vec<FiberSegment>,
}

impl PathStack {
    pub fn new(segments: Vec<FiberSegment>) -> Self {
        Self { segments }
    }

    pub fn single(fiber: FiberSpec, length_mm: f64) -> Result<Self> {
        Ok(Self::new(vec![FiberSegment::new(fiber, length_mm)?]))
    }

    pub fn push(&mut self, segment: FiberSegment) {
        self.segments.push(segment);
    }

    pub fn concat(mut self, other: &PathStack) -> Self {
        self.segments.extend(other.segments.iter().cloned());
        self
    }

    pub fn segments(&self) -> &[FiberSegment] {
        &self.segments
    }

    pub fn total_length_mm(&self) -> f64 {
        self.segments.iter().map(|s| s.length_mm).sum()
    }

    pub fn beta2_l_fs2(&self) -> f64 {
        self.segments.iter().map(FiberSegment::beta2_l_fs2).sum()
    }

    pub fn beta3_l_fs3(&self) -> f64 {
        self.segments.iter().map(FiberSegment::beta3_l_fs3).sum()
    }

    pub fn group_delay_ns(&self) -> f64 {
        self.segments.iter().map(FiberSegment::group_delay_ns).sum()
    }
}

/// Long-minus-short accumulated dispersion of one interferometer.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DifferentialDispersion {
    /// Δ(β₂L), ps².
    pub d_beta2_l: f64,
    /// Δ(β₃L), ps³.
    pub d_beta3_l: f64,
}

impl DifferentialDispersion {
    pub const ZERO: Self = Self {
        d_beta2_l: 0.0,
        d_beta3_l: 0.0,
    };

    pub fn new(d_beta2_l: f64, d_beta3_l: f64) -> Self {
        Self {
            d_beta2_l,
            d_beta3_l,
        }
    }

    /// Spectral phase `Ω²/2·Δ(β₂L) + Ω³/6·Δ(β₃L)`, radians.
    pub fn phase(&self, omega: Detuning) -> f64 {
        let w = omega.0;
        let w2 = w * w;
        0.5 * w2 * self.d_beta2_l + w2 * w * self.d_beta3_l / 6.0
    }
}

impl std::ops::Add for DifferentialDispersion {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(
            self.d_beta2_l + rhs.d_beta2_l,
            self.d_beta3_l + rhs.d_beta3_l,
        )
    }
}

impl std::ops::Neg for DifferentialDispersion {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.d_beta2_l, -self.d_beta3_l)
    }
}

pub fn stack_moments(long: &PathStack, short: &PathStack) -> DifferentialDispersion {
    DifferentialDispersion {
        d_beta2_l: (long.beta2_l_fs2() - short.beta2_l_fs2()) * FS2_TO_PS2,
        d_beta3_l: (long.beta3_l_fs3() - short.beta3_l_fs3()) * FS3_TO_PS3,
    }
}

pub fn differential_phase(d: &DifferentialDispersion, omega: Detuning) -> f64 {
    d.phase(omega)
}

/// First-order group-delay spread `|Δ(β₂L)|·Δω` across a band, in fs.
pub fn temporal_spread(d: &DifferentialDispersion, bandwidth_radps: f64) -> Result<f64> {
    if bandwidth_radps.is_nan() || bandwidth_radps <= 0.0 {
        return Err(FransonError::Domain(format!(
            "bandwidth must be positive, got {bandwidth_radps} rad/ps"
        )));
    }
    Ok(d.d_beta2_l.abs() * bandwidth_radps * 1e3)
}

/// Named fiber types, loaded from TOML:
///
/// ```toml
/// [[fiber]]
/// name = "SMF"
/// beta2_fs2_per_mm = -22.5
/// beta3_fs3_per_mm = 0.0   # optional
/// group_index = 1.468      # optional
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct FiberCatalog {
    fibers: BTreeMap<String, FiberSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogFile {
    #[serde(default)]
    fiber: Vec<FiberSpec>,
}

impl Default for FiberCatalog {
    fn default() -> Self {
        Self::builtin()
    }
}

impl FiberCatalog {
    /// Catalog holding `SMF` and `LEAF`.
    pub fn builtin() -> Self {
        let mut fibers = BTreeMap::new();
        for f in [FiberSpec::smf(), FiberSpec::leaf()] {
            fibers.insert(f.name.clone(), f);
        }
        Self { fibers }
    }

    pub fn empty() -> Self {
        Self {
            fibers: BTreeMap::new(),
        }
    }

    /// Adds or replaces an entry.
    pub fn insert(&mut self, fiber: FiberSpec) -> Result<()> {
        fiber.validate()?;
        self.fibers.insert(fiber.name.clone(), fiber);
        Ok(())
    }

    pub fn extend(&mut self, fibers: impl IntoIterator<Item = FiberSpec>) -> Result<()> {
        for f in fibers {
            self.insert(f)?;
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&FiberSpec> {
        self.fibers.get(name).ok_or_else(|| {
            let known: Vec<&str> = self.fibers.keys().map(String::as_str).collect();
            FransonError::Configuration(format!(
                "unknown fiber '{name}' (known: {})",
                known.join(", ")
            ))
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = &FiberSpec> {
        self.fibers.values()
    }

    /// Parses a catalog file and layers it over the built-in entries.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: CatalogFile =
            toml::from_str(text).map_err(|e| FransonError::Parse(e.to_string()))?;
        let mut catalog = Self::builtin();
        catalog.extend(file.fiber)?;
        Ok(catalog)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| FransonError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }
}
