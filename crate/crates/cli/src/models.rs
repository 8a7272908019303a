//! Registry of builtin models, maps, profiles and symbols.

use hbarlab_core::explosion::BUILTIN_MAPS;
use hbarlab_core::field::LATTICE_SYMBOLS;
use hbarlab_core::fuzzy::BUILTIN_SYMBOLS;

pub const GROUPOID_MODELS: &[(&str, &str)] = &[
    ("constant-pi", "exploded symplectic groupoid of constant Pi on R^2"),
    ("constant-pi-broken", "constant Pi with the z'-sign of the product flipped; fails associativity"),
    ("pair-line", "pair groupoid of R"),
];

fn provenance(kind: &str, name: &str) -> &'static str {
    match (kind, name) {
        ("groupoid", "constant-pi") => "§4.1",
        ("profile", "fibonacci") => "§5.2",
        ("profile", "single-sphere") => "§4.2",
        ("profile", "golden-linear") => "irrational constant ratio",
        ("profile", "rational-pair") => "integrable example",
        ("groupoid", "constant-pi-broken") => "fault injection",
        ("groupoid", _) => "baseline",
        ("map", _) => "explosion example",
        ("sphere-symbol", _) => "fuzzy sphere",
        ("lattice-symbol", _) => "Moyal plane",
        _ => "",
    }
}

/// `(kind, name, provenance)` rows sorted by name, then kind.
pub fn list_models() -> Vec<(&'static str, &'static str, &'static str)> {
    let mut rows = Vec::new();
    for (n, _) in GROUPOID_MODELS {
        rows.push(("groupoid", *n));
    }
    for (n, _) in BUILTIN_MAPS {
        rows.push(("map", *n));
    }
    for n in hbarlab_core::planck::BUILTIN_PROFILES {
        rows.push(("profile", *n));
    }
    for n in BUILTIN_SYMBOLS {
        rows.push(("sphere-symbol", *n));
    }
    for n in LATTICE_SYMBOLS {
        rows.push(("lattice-symbol", *n));
    }
    rows.sort_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
    rows.into_iter().map(|(k, n)| (k, n, provenance(k, n))).collect()
}

pub fn render_list() -> String {
    let rows = list_models();
    let width = rows.iter().map(|r| r.1.len() + r.2.len() + 3).max().unwrap_or(0);
    let mut out = String::new();
    for (kind, name, prov) in rows {
        let label = format!("{name} ({prov})");
        out.push_str(&format!("{label:<width$}  {kind}\n"));
    }
    out
}
