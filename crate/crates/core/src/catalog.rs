//! Built-in isotropic curves.
//!
//! The `-4` variants live in complex 6-space (n = 4). Each is a sum of
//! isotropic blocks: an Enneper or helicoid triple, the catenoid triple
//! `(cosh z, i sinh z, z)`, or exponential pairs `(f, if)`.

use crate::surface::{Domain, HolomorphicCurve};
use crate::{Error, Result};

const CATALOG: &[(&str, &[&str])] = &[
    ("enneper-pair", &["z/2 - z^3/6", "i*(z/2 + z^3/6)", "z^2/2", "z^2/2", "i*z^2/2"]),
    ("helicoid-pair", &["cos(z)", "sin(z)", "-i*z", "exp(z)", "i*exp(z)"]),
    ("null-exp", &["exp(z)", "i*exp(z)", "exp(-z)", "i*exp(-z)", "0"]),
    ("enneper-4", &["z/2 - z^3/6", "i*(z/2 + z^3/6)", "z^2/2", "cosh(z)", "i*sinh(z)", "z"]),
    ("helicoid-4", &["cos(z)", "sin(z)", "-i*z", "cosh(z)", "i*sinh(z)", "z + 1"]),
    ("null-exp-4", &["exp(z)", "i*exp(z)", "exp(-z)", "i*exp(-z)", "exp(2*z)/2", "i*exp(2*z)/2"]),
];

pub fn builtin_names() -> Vec<&'static str> {
    CATALOG.iter().map(|(name, _)| *name).collect()
}

pub fn builtin(name: &str) -> Result<HolomorphicCurve> {
    let (name, comps) = CATALOG
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::InvalidInput(format!("unknown built-in curve {name:?}")))?;
    HolomorphicCurve::from_strings(*name, comps, Domain::Plane)
}

/// Component strings of a built-in, for writing config files.
pub fn builtin_components(name: &str) -> Option<&'static [&'static str]> {
    CATALOG.iter().find(|(n, _)| *n == name).map(|(_, c)| *c)
}
