//! Experiment runner for the Poisson configuration-space identities.

pub mod config;
pub mod run;

use poisson_forms::cylinder::CYLINDER_PRESETS;
use poisson_forms::intensity::DENSITY_PRESETS;
use poisson_forms::preset::{ONE_FORM_PRESETS, SCALAR_PRESETS};

pub const MANIFOLD_PRESETS: &[&str] = &["flat_torus", "unit_sphere"];

/// Preset listing in a fixed order.
pub fn list_presets() -> String {
    let mut s = String::new();
    let sections: [(&str, &[&str]); 5] = [
        ("manifolds", MANIFOLD_PRESETS),
        ("densities", DENSITY_PRESETS),
        ("fields", SCALAR_PRESETS),
        ("one_forms", ONE_FORM_PRESETS),
        ("observables", CYLINDER_PRESETS),
    ];
    for (title, items) in sections {
        s.push_str(title);
        s.push_str(":\n");
        for i in items {
            s.push_str("  ");
            s.push_str(i);
            s.push('\n');
        }
    }
    s.push_str("forms:\n  observable * one_form\n");
    s
}
