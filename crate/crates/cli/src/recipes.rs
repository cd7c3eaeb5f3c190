//! Built-in configurations for the published figures and the secular-validity protocol.
//!
//! Truncations are reduced from the per-mode cap of 10 by a cap on total quanta,
//! chosen per recipe; `--truncation` overrides them.

use crate::config::{parse_config_str, SweepSpec};
use crate::error::{CliError, CliResult};

pub struct Recipe {
    pub name: &'static str,
    /// subcommand that runs it
    pub command: &'static str,
    pub summary: &'static str,
    pub config: &'static str,
}

// The resonance peaks at Δ = 3/2 need six quanta in total to settle.
const TETRAMER: &str = "n_sites = 4
lambda = 0.5
j_hop = 0.01
solver = secular
truncation = 10,6
axis1 = delta
axis1_grid = 0.005:1.995:0.005
outputs = rho,site_populations,msd,p_ex
r_r = 1e-9
r_p = 1e-10
";

pub const RECIPES: &[Recipe] = &[
    Recipe {
        name: "fig2",
        command: "spectrum",
        summary: "trimer one-exciton spectrum and avoided crossings, lambda 0.4, J 0.01",
        config: "n_sites = 3
lambda = 0.4
j_hop = 0.01
solver = secular
truncation = 10,4
axis1 = delta
axis1_grid = 0.05:2:0.005
outputs = spectrum,crossings
n_levels = 12
",
    },
    Recipe {
        name: "fig3",
        command: "sweep",
        summary: "tetramer normalised NESS populations, R = 1e2",
        config: "r_b = 1e-7\n",
    },
    Recipe {
        name: "fig3-lambda",
        command: "sweep",
        summary: "trimer populations over delta and lambda at J 0.01, R = 1",
        config: "n_sites = 3
j_hop = 0.01
r_b = 1e-9
r_r = 1e-9
r_p = 1e-10
solver = secular
truncation = 10,4
axis1 = delta
axis1_grid = 0.05:2:0.005
axis2 = lambda
axis2_grid = 0.2,0.3,0.4,0.5,0.6
outputs = rho
",
    },
    Recipe {
        name: "fig3-j",
        command: "sweep",
        summary: "trimer populations over delta and J at lambda 0.4, R = 1",
        config: "n_sites = 3
lambda = 0.4
r_b = 1e-9
r_r = 1e-9
r_p = 1e-10
solver = secular
truncation = 10,4
axis1 = delta
axis1_grid = 0.05:2:0.005
axis2 = j_hop
axis2_grid = 0.005,0.01,0.015,0.02
outputs = rho
",
    },
    Recipe {
        name: "fig4",
        command: "spectrum",
        summary: "site profiles of the lowest pentamer eigenstates off (0.45) and on (0.5) resonance",
        config: "n_sites = 5
lambda = 0.4
j_hop = 0.01
solver = secular
truncation = 10,4
axis1 = delta
axis1_grid = 0.45,0.5
outputs = eigenstates
n_levels = 12
",
    },
    Recipe {
        name: "fig5a",
        command: "kinetic",
        summary: "kinetic tetramer without jumps over R",
        config: "n_sites = 4
solver = kinetic
jump_length = 0
f = 0.01
r_r = 1e-9
r_p = 1e-10
axis1 = R
axis1_grid = 0.01,0.1,1,10,100,1000,10000,100000,1000000
outputs = rho,p_ex
",
    },
    Recipe {
        name: "fig5b",
        command: "kinetic",
        summary: "kinetic tetramer with resonant jumps of length 2 over R",
        config: "n_sites = 4
solver = kinetic
jump_length = 2
f = 0.01
g = 1
r_r = 1e-9
r_p = 1e-10
axis1 = R
axis1_grid = 0.01,0.1,1,10,100,1000,10000,100000,1000000
outputs = rho,p_ex
",
    },
    Recipe { name: "fig6a", command: "sweep", summary: "tetramer populations at R = 1", config: "r_b = 1e-9\n" },
    Recipe { name: "fig6b", command: "sweep", summary: "tetramer populations at R = 1e6", config: "r_b = 1e-3\n" },
    Recipe {
        name: "fig7",
        command: "sweep",
        summary: "tetramer mean squared displacement for R from 1 to 1e6 (r_b varied)",
        config: "axis2 = R\naxis2_grid = 1,100,10000,1000000\n",
    },
    Recipe {
        name: "appendixA-off",
        command: "validate-secular",
        summary: "secular against full NESS at delta 0.99, lambda 0.2, J 0.01 (R = 1e2)",
        config: "n_sites = 3
delta = 0.99
lambda = 0.2
j_hop = 0.01
r_b = 1e-7
r_r = 1e-9
r_p = 1e-10
solver = full
truncation = 2,2
outputs = rho
r_grid = 1e-8,2e-8,5e-8,1e-7,2e-7,5e-7,1e-6,2e-6,5e-6,1e-5,2e-5,5e-5,1e-4,2e-4,5e-4,1e-3,2e-3,5e-3,1e-2
",
    },
    Recipe {
        name: "appendixA-on",
        command: "validate-secular",
        summary: "secular against full NESS at delta 1.00, lambda 0.2, J 0.01 (R = 1e2)",
        config: "n_sites = 3
delta = 1
lambda = 0.2
j_hop = 0.01
r_b = 1e-7
r_r = 1e-9
r_p = 1e-10
solver = full
truncation = 2,2
outputs = rho
r_grid = 1e-8,2e-8,5e-8,1e-7,2e-7,5e-7,1e-6,2e-6,5e-6,1e-5,2e-5,5e-5,1e-4,2e-4,5e-4,1e-3,2e-3,5e-3,1e-2
",
    },
];

pub fn find(name: &str) -> Option<&'static Recipe> {
    RECIPES.iter().find(|r| r.name == name)
}

impl Recipe {
    /// Complete configuration text. The tetramer sweeps share a base and differ
    /// in the lines given here.
    pub fn text(&self) -> String {
        match self.name {
            "fig3" | "fig6a" | "fig6b" => format!("{TETRAMER}{}", self.config),
            "fig7" => format!(
                "{}r_b = 1e-7\n{}",
                TETRAMER.replace("rho,site_populations,msd,p_ex", "msd,rho"),
                self.config
            ),
            _ => self.config.to_string(),
        }
    }

    pub fn spec(&self) -> CliResult<SweepSpec> {
        parse_config_str(&self.text())
    }
}

pub fn recipe_spec(name: &str) -> CliResult<SweepSpec> {
    let names: Vec<&str> = RECIPES.iter().map(|r| r.name).collect();
    find(name)
        .ok_or_else(|| {
            CliError::config(format!(
                "unknown recipe `{name}` (known: {})",
                names.join(", ")
            ))
        })?
        .spec()
}
