use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// An energy-harvesting element mounted on the sensing board.
///
/// Declaration order is the canonical channel order used everywhere: feature
/// columns, CSV headers and ablation subsets all follow it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ElementKind {
    /// Polycrystalline silicon, glass coated.
    SC1,
    /// Organic thin film.
    SC2,
    /// Amorphous silicon.
    SC3,
    /// Polycrystalline silicon, uncoated.
    SC4,
    /// Thin amorphous silicon.
    SC5,
    PIEZO,
    PELTIER,
}

impl ElementKind {
    pub const ALL: [ElementKind; 7] = [
        ElementKind::SC1,
        ElementKind::SC2,
        ElementKind::SC3,
        ElementKind::SC4,
        ElementKind::SC5,
        ElementKind::PIEZO,
        ElementKind::PELTIER,
    ];

    /// The six elements carried by the nameplate board (no peltier).
    pub const BOARD: [ElementKind; 6] = [
        ElementKind::SC1,
        ElementKind::SC2,
        ElementKind::SC3,
        ElementKind::SC4,
        ElementKind::SC5,
        ElementKind::PIEZO,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ElementKind::SC1 => "SC1",
            ElementKind::SC2 => "SC2",
            ElementKind::SC3 => "SC3",
            ElementKind::SC4 => "SC4",
            ElementKind::SC5 => "SC5",
            ElementKind::PIEZO => "PIEZO",
            ElementKind::PELTIER => "PELTIER",
        }
    }

    /// Short tag used in combination listings: `1`..`5` for solar cells,
    /// `p` for piezo and `t` for peltier.
    pub fn short_tag(self) -> &'static str {
        match self {
            ElementKind::SC1 => "1",
            ElementKind::SC2 => "2",
            ElementKind::SC3 => "3",
            ElementKind::SC4 => "4",
            ElementKind::SC5 => "5",
            ElementKind::PIEZO => "p",
            ElementKind::PELTIER => "t",
        }
    }

    pub fn is_solar(self) -> bool {
        matches!(
            self,
            ElementKind::SC1 | ElementKind::SC2 | ElementKind::SC3 | ElementKind::SC4 | ElementKind::SC5
        )
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ElementKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let trimmed = s.trim();
        ElementKind::ALL
            .iter()
            .copied()
            .find(|k| k.name().eq_ignore_ascii_case(trimmed))
            .ok_or_else(|| Error::Validation(format!("unknown element '{trimmed}'")))
    }
}

/// Parses a comma-separated element list such as `SC1,SC2,PIEZO`.
///
/// The result is deduplicated and sorted into canonical order.
pub fn parse_selection(list: &str) -> Result<Vec<ElementKind>, Error> {
    let mut out = Vec::new();
    for part in list.split(',').filter(|p| !p.trim().is_empty()) {
        out.push(part.parse::<ElementKind>()?);
    }
    if out.is_empty() {
        return Err(Error::Validation("empty channel selection".into()));
    }
    out.sort();
    out.dedup();
    Ok(out)
}
