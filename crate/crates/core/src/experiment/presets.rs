//! Named experiments for the eight panels of the variance figures, at full
//! scale (`T = 1e5`) and as `-desk` variants (`T = 1e4`).

use crate::error::{EwsError, Result};

use super::{parse_config, ExperimentConfig};

pub const PRESETS: &[&str] = &[
    "fig1a",
    "fig1b",
    "fig1c",
    "fig1d",
    "fig2a",
    "fig2b",
    "fig2c",
    "fig2d",
    "fig1a-desk",
    "fig1b-desk",
    "fig1c-desk",
    "fig1d-desk",
    "fig2a-desk",
    "fig2b-desk",
    "fig2c-desk",
    "fig2d-desk",
    "fig1c-asymptotic",
];

// 2^-1/2 and 2^1/2
const ALPHAS: &str = "[0.7071067811865476, 1.0, 1.4142135623730951, 2.0]";

fn system(panel: char, desk: bool) -> String {
    match panel {
        'a' => "variant = \"cable_periodic\"\ndx = 0.005\n".into(),
        'b' => "variant = \"jordan_chain\"\ndim = 4\n".into(),
        'c' => format!(
            "variant = \"multiplication_op\"\nalpha = {ALPHAS}\ninterval = [-0.01, 0.01]\ndx = {}\n",
            if desk { "1e-3" } else { "1e-5" }
        ),
        'd' => "variant = \"cable_boundary_noise\"\ndx = 0.005\n".into(),
        _ => unreachable!(),
    }
}

fn probes(panel: char) -> &'static str {
    match panel {
        'a' => "[\"e_1\", \"e_2\", \"e_3\"]",
        'b' => "[\"e_1\", \"e_2\", \"e_3\", \"e_4\"]",
        'c' => "[\"indicator[-0.01,0.01]\"]",
        'd' => "[\"indicator[0,1/3]\", \"indicator[1/3,2/3]\", \"indicator[2/3,1]\"]",
        _ => unreachable!(),
    }
}

fn fit(figure: char, panel: char) -> &'static str {
    match (figure, panel) {
        ('1', 'b') => "window = [0.0625, 1.0]\ntolerances = [0.2, 0.3, 0.5, 0.7]\n",
        ('1', 'c') => "tolerance = 0.1\n",
        (_, 'd') => "tolerance = 0.2\n",
        _ => "tolerance = 0.15\n",
    }
}

fn panel_config(name: &str, figure: char, panel: char, desk: bool) -> String {
    let (swept, noise, p) = match figure {
        '1' => ("p", "kappa = 2.0\nsigma = 0.1\n", ""),
        _ => ("kappa", "kappa = 2.0\nsigma = 0.1\n", "p = -0.5\n"),
    };
    let grid = match figure {
        '1' => "grid = { hi = 0, lo = -8 }",
        _ => "grid = { hi = 1, lo = -8 }",
    };
    format!(
        "name = \"{name}\"\n\n[system]\n{}{p}\n[noise]\n{noise}\n[sweep]\nswept = \"{swept}\"\n{grid}\nhorizon = {}\ndt = 0.1\nn_samples = 10\nroot_seed = 20240601\nburn_in_fraction = 0.1\n\n[probes]\nnames = {}\n\n[fit]\n{}\n[output]\ndirectory = \"out/{name}\"\nformats = [\"csv\", \"jsonl\"]\n",
        system(panel, desk),
        if desk { "1e4" } else { "1e5" },
        probes(panel),
        fit(figure, panel),
    )
}

/// TOML text of a preset.
pub fn preset_text(name: &str) -> Result<String> {
    if name == "fig1c-asymptotic" {
        return Ok(format!(
            "name = \"{name}\"\n\n[system]\nvariant = \"multiplication_op\"\nalpha = {ALPHAS}\ninterval = [-0.01, 0.01]\ndx = 1e-3\n\n[sweep]\nswept = \"p\"\ngrid = {{ hi = 0, lo = -34, step = 2 }}\nestimator = \"oracle\"\nn_samples = 1\n\n[probes]\nnames = [\"indicator[-0.01,0.01]\"]\n\n[fit]\ntolerance = 0.1\n\n[output]\ndirectory = \"out/{name}\"\nformats = [\"csv\", \"jsonl\"]\n"
        ));
    }
    let (base, desk) = match name.strip_suffix("-desk") {
        Some(b) => (b, true),
        None => (name, false),
    };
    let mut chars = base.strip_prefix("fig").unwrap_or("").chars();
    match (chars.next(), chars.next(), chars.next()) {
        (Some(f @ ('1' | '2')), Some(p @ ('a'..='d')), None) => Ok(panel_config(name, f, p, desk)),
        _ => Err(EwsError::Config(format!(
            "unknown preset `{name}`; available: {}",
            PRESETS.join(", ")
        ))),
    }
}

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    parse_config(&preset_text(name)?)
}
