//! Semantic class table: names, palette, reflectivity, and the background
//! subset used by BEV labeling. Stored as a JSON sidecar next to OCCG files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::GridError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassDef {
    pub id: u8,
    pub name: String,
    /// Palette color for visualizations.
    pub color: [u8; 3],
    /// Nominal reflectivity in [0, 1], used by the analytic intensity head.
    pub reflectivity: f64,
    /// Whether BEV maps may carry this class as a background label.
    #[serde(default)]
    pub background: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassTable {
    pub classes: Vec<ClassDef>,
}

impl ClassTable {
    /// Validate: ids contiguous from 0, id 0 named "empty" with zero
    /// reflectivity, reflectivities in [0, 1].
    pub fn validate(&self) -> Result<(), GridError> {
        for (i, c) in self.classes.iter().enumerate() {
            if c.id as usize != i {
                return Err(GridError::Format(format!(
                    "class ids must be contiguous from 0; index {i} has id {}",
                    c.id
                )));
            }
            if !(0.0..=1.0).contains(&c.reflectivity) {
                return Err(GridError::Format(format!("class {}: reflectivity out of [0,1]", c.name)));
            }
        }
        match self.classes.first() {
            Some(c) if c.name == "empty" && c.reflectivity == 0.0 => Ok(()),
            _ => Err(GridError::Format("class 0 must be \"empty\" with reflectivity 0".into())),
        }
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn id_of(&self, name: &str) -> Option<u8> {
        self.classes.iter().find(|c| c.name == name).map(|c| c.id)
    }

    pub fn name_of(&self, id: u8) -> Option<&str> {
        self.classes.get(id as usize).map(|c| c.name.as_str())
    }

    pub fn reflectivity(&self, id: u8) -> f64 {
        self.classes.get(id as usize).map_or(0.0, |c| c.reflectivity)
    }

    pub fn color(&self, id: u8) -> [u8; 3] {
        self.classes.get(id as usize).map_or([0, 0, 0], |c| c.color)
    }

    pub fn is_background(&self, id: u8) -> bool {
        self.classes.get(id as usize).is_some_and(|c| c.background)
    }

    pub fn save(&self, path: &Path) -> Result<(), GridError> {
        let json = serde_json::to_string_pretty(self).map_err(|e| GridError::Format(e.to_string()))?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, GridError> {
        let data = std::fs::read_to_string(path)?;
        let table: Self = serde_json::from_str(&data).map_err(|e| GridError::Format(e.to_string()))?;
        table.validate()?;
        Ok(table)
    }
}

impl Default for ClassTable {
    /// The ten driving classes plus "empty".
    fn default() -> Self {
        let defs = [
            ("empty", [0, 0, 0], 0.0, false),
            ("other-ground", [110, 80, 100], 0.15, true),
            ("vehicle", [0, 90, 200], 0.30, false),
            ("bicycle", [50, 180, 120], 0.25, false),
            ("pedestrian", [220, 40, 40], 0.20, false),
            ("traffic-cone", [250, 150, 0], 0.80, false),
            ("barrier", [200, 200, 60], 0.40, true),
            ("construction-zones", [150, 100, 40], 0.35, true),
            ("generic-object", [130, 130, 130], 0.25, false),
            ("road", [80, 80, 90], 0.18, true),
            ("road-line", [240, 240, 240], 0.90, true),
        ];
        Self {
            classes: defs
                .iter()
                .enumerate()
                .map(|(i, &(name, color, reflectivity, background))| ClassDef {
                    id: i as u8,
                    name: name.to_string(),
                    color,
                    reflectivity,
                    background,
                })
                .collect(),
        }
    }
}
