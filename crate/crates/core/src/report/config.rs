use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::alignment::DEFAULT_BIN_WIDTH_DEG;
use crate::channel::{
    ArchingFilterParams, ChannelParams, CELLO_RADIUS_MM, DEFAULT_MIN_VOTES, VIOLIN_VIOLA_RADIUS_MM,
};
use crate::contours::{ColourScale, DEFAULT_CONTOUR_SPACING_MM};
use crate::contours::{CELLO_COLOUR_RANGE_MM, VIOLIN_VIOLA_COLOUR_RANGE_MM};
use crate::elevation::DEFAULT_GRID_STEP_MM;
use crate::error::{Error, Result};
use crate::size_class::SizeClass;

/// Settings that differ between the two scale families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SizeClassConfig {
    pub colour_range_mm: f64,
    pub neighbourhood_radius_mm: f64,
}

/// Which artifacts an analysis writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmitFlags {
    pub svg: bool,
    pub csv: bool,
    pub json: bool,
    pub raster: bool,
}

impl Default for EmitFlags {
    fn default() -> Self {
        EmitFlags {
            svg: true,
            csv: true,
            json: true,
            raster: false,
        }
    }
}

impl EmitFlags {
    pub const NONE: EmitFlags = EmitFlags {
        svg: false,
        csv: false,
        json: false,
        raster: false,
    };

    fn names(self) -> Vec<&'static str> {
        [
            (self.svg, "svg"),
            (self.csv, "csv"),
            (self.json, "json"),
            (self.raster, "raster"),
        ]
        .into_iter()
        .filter_map(|(on, name)| on.then_some(name))
        .collect()
    }
}

impl FromStr for EmitFlags {
    type Err = Error;

    /// Comma-separated subset of `svg,csv,json,raster`.
    fn from_str(s: &str) -> Result<Self> {
        let mut flags = EmitFlags::NONE;
        for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            match item {
                "svg" => flags.svg = true,
                "csv" => flags.csv = true,
                "json" => flags.json = true,
                "raster" => flags.raster = true,
                other => return Err(Error::Config(format!("unknown emit flag {other:?}"))),
            }
        }
        Ok(flags)
    }
}

impl Serialize for EmitFlags {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.names().serialize(s)
    }
}

impl<'de> Deserialize<'de> for EmitFlags {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let names = Vec::<String>::deserialize(d)?;
        names.join(",").parse().map_err(serde::de::Error::custom)
    }
}

/// Every tunable of an analysis run, with its default in one place.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub contour_spacing_mm: f64,
    pub grid_step_mm: f64,
    pub histogram_bin_deg: f64,
    pub min_votes: u8,
    /// Scale applied to mesh coordinates on load (1 for millimetre files).
    pub unit_scale: f64,
    pub emit: EmitFlags,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Write wall-clock stage timings into the reports. Off by default so
    /// that repeated runs produce identical files.
    pub record_timings: bool,
    pub arching_filter: ArchingFilterParams,
    pub violin_viola: SizeClassConfig,
    pub cello: SizeClassConfig,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            contour_spacing_mm: DEFAULT_CONTOUR_SPACING_MM,
            grid_step_mm: DEFAULT_GRID_STEP_MM,
            histogram_bin_deg: DEFAULT_BIN_WIDTH_DEG,
            min_votes: DEFAULT_MIN_VOTES,
            unit_scale: 1.0,
            emit: EmitFlags::default(),
            output_dir: None,
            record_timings: false,
            arching_filter: ArchingFilterParams::default(),
            violin_viola: SizeClassConfig {
                colour_range_mm: VIOLIN_VIOLA_COLOUR_RANGE_MM,
                neighbourhood_radius_mm: VIOLIN_VIOLA_RADIUS_MM,
            },
            cello: SizeClassConfig {
                colour_range_mm: CELLO_COLOUR_RANGE_MM,
                neighbourhood_radius_mm: CELLO_RADIUS_MM,
            },
        }
    }
}

impl AnalysisConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: AnalysisConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("contour_spacing_mm", self.contour_spacing_mm),
            ("grid_step_mm", self.grid_step_mm),
            ("histogram_bin_deg", self.histogram_bin_deg),
            ("unit_scale", self.unit_scale),
            ("violin_viola.colour_range_mm", self.violin_viola.colour_range_mm),
            ("cello.colour_range_mm", self.cello.colour_range_mm),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        for class in [SizeClass::ViolinViola, SizeClass::Cello] {
            self.channel_params(class)
                .validate()
                .map_err(|e| Error::Config(format!("{class}: {e}")))?;
        }
        Ok(())
    }

    pub fn size_class(&self, class: SizeClass) -> &SizeClassConfig {
        match class {
            SizeClass::ViolinViola => &self.violin_viola,
            SizeClass::Cello => &self.cello,
        }
    }

    pub fn channel_params(&self, class: SizeClass) -> ChannelParams {
        ChannelParams {
            neighbourhood_radius: self.size_class(class).neighbourhood_radius_mm,
            min_votes: self.min_votes,
            arching_filter: self.arching_filter,
        }
    }

    pub fn colour_scale(&self, class: SizeClass) -> ColourScale {
        ColourScale::new(self.size_class(class).colour_range_mm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let cfg = AnalysisConfig::default();
        let text = cfg.to_toml();
        assert_eq!(AnalysisConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg = AnalysisConfig::from_toml("grid_step_mm = 0.5\n[cello]\ncolour_range_mm = 90.0\nneighbourhood_radius_mm = 4.0\n").unwrap();
        assert_eq!(cfg.grid_step_mm, 0.5);
        assert_eq!(cfg.contour_spacing_mm, 1.0);
        assert_eq!(cfg.channel_params(SizeClass::Cello).neighbourhood_radius, 4.0);
        assert_eq!(cfg.channel_params(SizeClass::ViolinViola).neighbourhood_radius, 2.0);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(AnalysisConfig::from_toml("grid_step_mm = 0.0").is_err());
        assert!(AnalysisConfig::from_toml("min_votes = 5").is_err());
        assert!(AnalysisConfig::from_toml("bogus = 1").is_err());
        assert!(AnalysisConfig::from_toml("emit = [\"pdf\"]").is_err());
    }

    #[test]
    fn emit_parsing() {
        let f: EmitFlags = "svg, raster".parse().unwrap();
        assert!(f.svg && f.raster && !f.csv && !f.json);
        assert!("svg,xml".parse::<EmitFlags>().is_err());
    }

    #[test]
    fn constants_appear_once() {
        let text = AnalysisConfig::default().to_toml();
        for needle in [
            "contour_spacing_mm = 1.0\n",
            "grid_step_mm = 0.25\n",
            "histogram_bin_deg = 0.05\n",
            "min_votes = 2\n",
            "colour_range_mm = 28.0\n",
            "colour_range_mm = 80.0\n",
            "neighbourhood_radius_mm = 2.0\n",
            "neighbourhood_radius_mm = 5.0\n",
        ] {
            assert_eq!(text.matches(needle).count(), 1, "{needle:?} in\n{text}");
        }
    }
}
