//! Intensity and ray-drop heads. The default head is analytic; any pure
//! function of (ray feature, hit info) into [0,1]² can stand in for it.

use nalgebra::Vector3;

use crate::grid::ClassTable;

/// What the renderer knows about a ray's surface hit.
#[derive(Debug, Clone)]
pub struct HitInfo {
    pub position: Vector3<f64>,
    pub class_id: u8,
    /// |cos| of the incidence angle between the ray and the surface normal.
    pub cos_incidence: f64,
    pub depth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadOutput {
    pub intensity: f64,
    pub drop_prob: f64,
}

pub trait HeadModel: Send + Sync {
    fn eval(&self, ray_feature: &[f64], hit: &HitInfo) -> HeadOutput;
}

/// Analytic head: intensity = ρ(class)·|cosθ|·exp(−depth/λ), drop
/// probability = (1 − |cosθ|)·p_graze.
#[derive(Debug, Clone)]
pub struct AnalyticHead {
    pub attenuation_length: f64,
    pub graze_drop: f64,
    reflectivity: Vec<f64>,
}

impl AnalyticHead {
    pub fn new(table: &ClassTable, attenuation_length: f64, graze_drop: f64) -> Self {
        Self {
            attenuation_length,
            graze_drop,
            reflectivity: table.classes.iter().map(|c| c.reflectivity).collect(),
        }
    }

    fn rho(&self, class: u8) -> f64 {
        self.reflectivity.get(class as usize).copied().unwrap_or(0.0)
    }
}

impl HeadModel for AnalyticHead {
    fn eval(&self, _ray_feature: &[f64], hit: &HitInfo) -> HeadOutput {
        let cos = hit.cos_incidence.abs().min(1.0);
        let intensity = (self.rho(hit.class_id) * cos * (-hit.depth / self.attenuation_length).exp()).clamp(0.0, 1.0);
        let drop_prob = ((1.0 - cos) * self.graze_drop).clamp(0.0, 1.0);
        HeadOutput { intensity, drop_prob }
    }
}
