//! Finite models of `X = [0,1] ∪ A`: midpoint-rule cells on the unit
//! interval followed by unit-mass atoms.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PointKind {
    Cell { midpoint: f64 },
    Atom { id: i64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    #[serde(flatten)]
    pub kind: PointKind,
    pub weight: f64,
}

impl Point {
    pub fn is_atom(&self) -> bool {
        matches!(self.kind, PointKind::Atom { .. })
    }
}

/// Cells come first (midpoints strictly increasing), atoms after.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureSpace {
    points: Vec<Point>,
}

/// Uniform midpoint grid with `num_cells` cells, followed by one unit atom
/// per id.
pub fn build_space(num_cells: usize, atom_ids: &[i64]) -> Result<MeasureSpace> {
    let mut seen = HashSet::new();
    for &id in atom_ids {
        if !seen.insert(id) {
            return Err(Error::DuplicateAtom(id));
        }
    }
    if num_cells + atom_ids.len() == 0 {
        return Err(Error::EmptySpace);
    }
    let h = 1.0 / num_cells.max(1) as f64;
    let cells = (0..num_cells).map(|i| Point { kind: PointKind::Cell { midpoint: (i as f64 + 0.5) * h }, weight: h });
    let atoms = atom_ids.iter().map(|&id| Point { kind: PointKind::Atom { id }, weight: 1.0 });
    Ok(MeasureSpace { points: cells.chain(atoms).collect() })
}

impl MeasureSpace {
    pub(crate) fn from_points(points: Vec<Point>) -> Self {
        Self { points }
    }

    /// Purely atomic space with ids `1..=p` (counting measure).
    pub fn atomic(p: usize) -> Result<Self> {
        let ids: Vec<i64> = (1..=p as i64).collect();
        build_space(0, &ids)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.points[i].weight
    }

    pub fn weights(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.weight).collect()
    }

    pub fn is_atom(&self, i: usize) -> bool {
        self.points[i].is_atom()
    }

    pub fn num_cells(&self) -> usize {
        self.points.iter().filter(|p| !p.is_atom()).count()
    }

    pub fn num_atoms(&self) -> usize {
        self.points.iter().filter(|p| p.is_atom()).count()
    }

    pub fn full(&self) -> StandardSet {
        StandardSet::full(self.len())
    }

    pub fn empty_set(&self) -> StandardSet {
        StandardSet::empty(self.len())
    }

    /// The standard set of all cells (`P_C`).
    pub fn cells(&self) -> StandardSet {
        StandardSet::from_flags(self.points.iter().map(|p| !p.is_atom()).collect())
    }

    /// The standard set of all atoms (`P_A`).
    pub fn atoms(&self) -> StandardSet {
        StandardSet::from_flags(self.points.iter().map(Point::is_atom).collect())
    }

    /// The space carried by `ran P_E`, points in their original order.
    pub fn restrict(&self, set: &StandardSet) -> MeasureSpace {
        MeasureSpace { points: set.indices().map(|i| self.points[i]).collect() }
    }

    pub fn same_shape(&self, set: &StandardSet) -> Result<()> {
        if set.len() != self.len() {
            return Err(Error::SpaceMismatch);
        }
        Ok(())
    }
}

/// A union of whole points of a [`MeasureSpace`], stored as membership flags.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StandardSet {
    members: Vec<bool>,
}

impl StandardSet {
    pub fn empty(p: usize) -> Self {
        Self { members: vec![false; p] }
    }

    pub fn full(p: usize) -> Self {
        Self { members: vec![true; p] }
    }

    pub fn from_flags(members: Vec<bool>) -> Self {
        Self { members }
    }

    pub fn from_indices(p: usize, indices: &[usize]) -> Result<Self> {
        let mut members = vec![false; p];
        for &i in indices {
            if i >= p {
                return Err(Error::InvalidArgument(format!("point {i} outside a {p}-point space")));
            }
            members[i] = true;
        }
        Ok(Self { members })
    }

    /// Bit `i` of `mask` is point `i`.
    pub fn from_mask(p: usize, mask: u64) -> Self {
        Self { members: (0..p).map(|i| mask >> i & 1 == 1).collect() }
    }

    pub fn mask(&self) -> u64 {
        assert!(self.members.len() <= 64, "mask only defined for at most 64 points");
        self.members.iter().enumerate().filter(|(_, &m)| m).fold(0, |acc, (i, _)| acc | 1 << i)
    }

    /// Length of the ambient space.
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    pub fn count(&self) -> usize {
        self.members.iter().filter(|&&m| m).count()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members[i]
    }

    pub fn flags(&self) -> &[bool] {
        &self.members
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i)
    }

    pub fn to_indices(&self) -> Vec<usize> {
        self.indices().collect()
    }

    pub fn is_subset(&self, other: &StandardSet) -> bool {
        self.len() == other.len() && self.members.iter().zip(&other.members).all(|(&a, &b)| !a || b)
    }

    pub fn is_disjoint(&self, other: &StandardSet) -> bool {
        self.members.iter().zip(&other.members).all(|(&a, &b)| !(a && b))
    }

    fn zip_with(&self, other: &StandardSet, op: impl Fn(bool, bool) -> bool) -> StandardSet {
        assert_eq!(self.len(), other.len(), "standard sets over different spaces");
        StandardSet { members: self.members.iter().zip(&other.members).map(|(&a, &b)| op(a, b)).collect() }
    }

    pub fn union(&self, other: &StandardSet) -> StandardSet {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &StandardSet) -> StandardSet {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &StandardSet) -> StandardSet {
        self.zip_with(other, |a, b| a && !b)
    }

    pub fn complement(&self) -> StandardSet {
        StandardSet { members: self.members.iter().map(|&a| !a).collect() }
    }
}

/// Membership vectors ordered lexicographically, point 0 most significant.
/// Returns the mask whose bit `i` is point `i`, for the `code`-th vector.
fn lex_code_to_mask(p: usize, code: u64) -> u64 {
    (0..p).filter(|&i| code >> (p - 1 - i) & 1 == 1).fold(0, |m, i| m | 1 << i)
}

/// Iterator over every ordered pair `E ⊆ F` of standard sets, in
/// lexicographic order of `(E, F)` membership vectors (`false < true`,
/// point 0 first). Yields masks; bit `i` is point `i`.
#[derive(Debug, Clone)]
pub struct StandardPairs {
    p: usize,
    inner: u64,
    outer_extra: Option<u64>,
}

impl StandardPairs {
    fn new(p: usize) -> Self {
        Self { p, inner: 0, outer_extra: Some(0) }
    }

    pub fn total(&self) -> u128 {
        3u128.pow(self.p as u32)
    }
}

impl Iterator for StandardPairs {
    type Item = (u64, u64);

    fn next(&mut self) -> Option<(u64, u64)> {
        let p = self.p;
        let limit = 1u64 << p;
        loop {
            if self.inner >= limit {
                return None;
            }
            let free = (limit - 1) & !self.inner;
            match self.outer_extra {
                Some(extra) => {
                    // next submask of `free` in increasing numeric order
                    let next = extra.wrapping_sub(free) & free;
                    self.outer_extra = if next == 0 { None } else { Some(next) };
                    let inner_mask = lex_code_to_mask(p, self.inner);
                    let outer_mask = lex_code_to_mask(p, self.inner | extra);
                    return Some((inner_mask, outer_mask));
                }
                None => {
                    self.inner += 1;
                    self.outer_extra = Some(0);
                }
            }
        }
    }
}

/// Every pair `E ⊆ F` over the points of `space`, `3^p` in total.
pub fn enumerate_standard_pairs(space: &MeasureSpace, max_points: usize) -> Result<StandardPairs> {
    let p = space.len();
    if p > max_points || p > 40 {
        return Err(Error::TooLarge { points: p, max_points, pairs: 3u128.pow(p as u32) });
    }
    Ok(StandardPairs::new(p))
}

/// `E_0 ⊂ E_1 ⊂ … ⊂ E_steps` with `E_s` the cells whose midpoint is at most
/// `s / steps`. Atoms are never included.
pub fn nested_chain(space: &MeasureSpace, steps: usize) -> Result<Vec<StandardSet>> {
    let cells = space.num_cells();
    if cells == 0 {
        return Err(Error::NoCells);
    }
    if steps == 0 || steps > cells {
        return Err(Error::InvalidArgument(format!("chain needs 1 <= steps <= {cells} (cells), got {steps}")));
    }
    let chain = (0..=steps)
        .map(|s| {
            let t = s as f64 / steps as f64;
            StandardSet::from_flags(
                space
                    .points()
                    .iter()
                    .map(|pt| match pt.kind {
                        PointKind::Cell { midpoint } => s == steps || midpoint <= t,
                        PointKind::Atom { .. } => false,
                    })
                    .collect(),
            )
        })
        .collect();
    Ok(chain)
}
