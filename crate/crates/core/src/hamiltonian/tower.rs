use super::{DriveProfile, HamiltonianError};

/// One rung of the magnetization ladder, `n↑ = lower → lower + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TowerLink {
    pub lower: usize,
    /// Bessel multiplier `m` of `𝒥(…, m·V_1)`, here `−(2·lower − N + 1)`.
    pub multiplier: f64,
    pub factor: f64,
}

impl TowerLink {
    pub fn is_open(&self, floor: f64) -> bool {
        self.factor.abs() >= floor
    }
}

/// Ladder of magnetization sectors `n↑ = 0…N` for `N` uniformly coupled qubits.
///
/// Every spin flip changes `n↑` by one and its amplitude depends only on the
/// sector it starts from, so the whole connectivity collapses onto this chain.
#[derive(Debug, Clone, PartialEq)]
pub struct TowerGraph {
    n_qubits: usize,
    links: Vec<TowerLink>,
}

impl TowerGraph {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn links(&self) -> &[TowerLink] {
        &self.links
    }

    pub fn link(&self, lower: usize) -> Option<&TowerLink> {
        self.links.get(lower)
    }

    /// Lower ends of the links whose `|𝒥|` reaches `floor`.
    pub fn open_links(&self, floor: f64) -> Vec<usize> {
        self.links.iter().filter(|l| l.is_open(floor)).map(|l| l.lower).collect()
    }

    /// Sectors reachable from `start` through links with `|𝒥| ≥ floor`.
    pub fn connected_sectors(&self, start: usize, floor: f64) -> Vec<usize> {
        let mut lo = start;
        while lo > 0 && self.links[lo - 1].is_open(floor) {
            lo -= 1;
        }
        let mut hi = start;
        while hi < self.n_qubits && self.links[hi].is_open(floor) {
            hi += 1;
        }
        (lo..=hi).collect()
    }
}

pub fn build_tower(n_qubits: usize, profile: &DriveProfile) -> Result<TowerGraph, HamiltonianError> {
    if n_qubits == 0 {
        return Err(HamiltonianError::InvalidProfile("tower needs at least one qubit".into()));
    }
    let links = (0..n_qubits)
        .map(|lower| {
            let multiplier = -((2 * lower) as f64 - n_qubits as f64 + 1.0);
            Ok(TowerLink { lower, multiplier, factor: profile.bessel(multiplier)? })
        })
        .collect::<Result<Vec<_>, HamiltonianError>>()?;
    Ok(TowerGraph { n_qubits, links })
}
