//! Presets reproducing the published 2D studies.

use stokes_eig::mesh::DomainKind;
use stokes_eig::{Formulation, Scheme};

use crate::config::PartialConfig;

pub const PRESETS: [&str; 7] = ["table1", "table2", "table3", "table4", "table5", "table6", "table7"];

fn study(domain: DomainKind, family: Scheme, k: usize, formulation: Formulation, levels: &[usize]) -> PartialConfig {
    PartialConfig {
        domain: Some(domain),
        family: Some(family),
        k: Some(k),
        formulation: Some(formulation),
        levels: Some(levels.to_vec()),
        ..Default::default()
    }
}

/// Studies of a preset, or `None` for an unknown name.
pub fn preset(name: &str) -> Option<Vec<PartialConfig>> {
    use DomainKind::{Disk, Lshape, Square};
    use Formulation::{Full, Reduced};
    const SQ: [usize; 4] = [10, 20, 30, 40];
    const DK: [usize; 4] = [20, 30, 40, 50];
    const LS: [usize; 4] = [9, 15, 20, 35];
    let both = |d, f, form, l: &[usize]| vec![study(d, f, 0, form, l), study(d, f, 1, form, l)];
    Some(match name {
        "table1" => both(Square, Scheme::Rt, Full, &SQ),
        "table2" => both(Square, Scheme::Rt, Reduced, &SQ),
        "table3" => both(Square, Scheme::Bdm, Full, &SQ),
        "table4" => both(Square, Scheme::Bdm, Reduced, &SQ),
        "table5" => both(Disk, Scheme::Rt, Full, &DK),
        "table6" => both(Disk, Scheme::Bdm, Full, &DK),
        "table7" => vec![study(Lshape, Scheme::Rt, 0, Full, &LS), study(Lshape, Scheme::Bdm, 0, Full, &LS)],
        _ => return None,
    })
}
