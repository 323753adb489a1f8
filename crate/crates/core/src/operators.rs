//! Kernel operators on a [`MeasureSpace`].
//!
//! An [`Operator`] stores the matrix of its action, `a[i][j] = k(x_i, x_j) w_j`,
//! and (usually) the raw kernel samples `k(x_i, x_j)` next to it.

use nalgebra::DMatrix;

use crate::measure_space::{MeasureSpace, StandardSet};
use crate::{Error, Result, C64, ZERO_THRESHOLD};

#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    space: MeasureSpace,
    entries: DMatrix<C64>,
    kernel: Option<DMatrix<C64>>,
}

fn check_finite(m: &DMatrix<C64>) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFinite(i, j));
            }
        }
    }
    Ok(())
}

fn weighted(kernel: &DMatrix<C64>, weights: &[f64]) -> DMatrix<C64> {
    DMatrix::from_fn(kernel.nrows(), kernel.ncols(), |i, j| kernel[(i, j)] * weights[j])
}

impl Operator {
    /// Operator with kernel samples `kernel[i][j] = k(x_i, x_j)`.
    pub fn from_kernel(space: MeasureSpace, kernel: DMatrix<C64>) -> Result<Self> {
        let p = space.len();
        if kernel.nrows() != p || kernel.ncols() != p {
            return Err(Error::DimensionMismatch(format!(
                "kernel is {}x{}, space has {p} points",
                kernel.nrows(),
                kernel.ncols()
            )));
        }
        check_finite(&kernel)?;
        let entries = weighted(&kernel, &space.weights());
        Ok(Self { space, entries, kernel: Some(kernel) })
    }

    pub fn from_kernel_fn(space: MeasureSpace, k: impl Fn(usize, usize) -> C64) -> Result<Self> {
        let p = space.len();
        Self::from_kernel(space, DMatrix::from_fn(p, p, k))
    }

    /// Operator known only through its matrix; no kernel samples.
    pub fn from_entries(space: MeasureSpace, entries: DMatrix<C64>) -> Result<Self> {
        let p = space.len();
        if entries.nrows() != p || entries.ncols() != p {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, space has {p} points",
                entries.nrows(),
                entries.ncols()
            )));
        }
        check_finite(&entries)?;
        Ok(Self { space, entries, kernel: None })
    }

    /// Real kernel on a purely atomic space with ids `1..=p`.
    pub fn atomic(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.len();
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::DimensionMismatch("kernel rows are ragged".into()));
        }
        Self::from_kernel_fn(MeasureSpace::atomic(p)?, |i, j| C64::new(rows[i][j], 0.0))
    }

    pub fn space(&self) -> &MeasureSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.len()
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn kernel(&self) -> Option<&DMatrix<C64>> {
        self.kernel.as_ref()
    }

    pub fn kernel_or_err(&self) -> Result<&DMatrix<C64>> {
        self.kernel.as_ref().ok_or(Error::MissingKernel)
    }

    /// Kernel sample `k(x_i, x_j)`, falling back to `a[i][j] / w_j`.
    pub fn kernel_value(&self, i: usize, j: usize) -> C64 {
        match &self.kernel {
            Some(k) => k[(i, j)],
            None => self.entries[(i, j)] / self.space.weight(j),
        }
    }

    pub fn max_entry(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_kernel(&self) -> f64 {
        match &self.kernel {
            Some(k) => k.iter().map(|z| z.norm()).fold(0.0, f64::max),
            None => (0..self.dim())
                .flat_map(|i| (0..self.dim()).map(move |j| (i, j)))
                .map(|(i, j)| self.kernel_value(i, j).norm())
                .fold(0.0, f64::max),
        }
    }

    /// `max(1, max |a_ij|)`, the scale all relative tolerances refer to.
    pub fn scale(&self) -> f64 {
        self.max_entry().max(1.0)
    }

    /// Same operator with the points of the space reordered: point `i` of
    /// the result is point `order[i]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Operator {
        let pick = |m: &DMatrix<C64>| m.select_rows(order).select_columns(order);
        let space = self.space.restrict_ordered(order);
        Operator { space, entries: pick(&self.entries), kernel: self.kernel.as_ref().map(pick) }
    }

    /// `|a_ij| <= tol·scale`.
    pub fn is_zero_entry(&self, i: usize, j: usize, tol: f64) -> bool {
        self.entries[(i, j)].norm() <= tol * self.scale()
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.max_entry() <= tol * self.scale()
    }

    /// Numerical rank: singular values above `1e-10·σ_max`.
    pub fn numerical_rank(&self) -> usize {
        numerical_rank(&self.kernel.clone().unwrap_or_else(|| self.entries.clone()))
    }
}

pub(crate) fn numerical_rank(m: &DMatrix<C64>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.singular_values();
    let top = sv.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > ZERO_THRESHOLD * top).count()
}

impl MeasureSpace {
    pub(crate) fn restrict_ordered(&self, order: &[usize]) -> MeasureSpace {
        MeasureSpace::from_points(order.iter().map(|&i| self.points()[i]).collect())
    }
}

/// `k(x, y) = Σ_t f_t(x) g_t(y)`; column `t` of `f` samples `f_t` at the
/// points of the space, likewise for `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteRankOperator {
    space: MeasureSpace,
    f: DMatrix<C64>,
    g: DMatrix<C64>,
}

impl FiniteRankOperator {
    pub fn new(space: MeasureSpace, f: DMatrix<C64>, g: DMatrix<C64>) -> Result<Self> {
        let p = space.len();
        if f.nrows() != p || g.nrows() != p {
            return Err(Error::DimensionMismatch(format!(
                "factors have {} and {} rows, space has {p} points",
                f.nrows(),
                g.nrows()
            )));
        }
        if f.ncols() != g.ncols() {
            return Err(Error::DimensionMismatch(format!("F has {} functions, G has {}", f.ncols(), g.ncols())));
        }
        check_finite(&f)?;
        check_finite(&g)?;
        let n = f.ncols();
        for (which, m) in [("F", &f), ("G", &g)] {
            let rank = numerical_rank(m);
            if rank < n {
                return Err(Error::DependentFactors { which, rank, expected: n });
            }
        }
        Ok(Self { space, f, g })
    }

    /// Factor a kernel through its singular value decomposition,
    /// `k = U Σ V^*`, as `F = U Σ`, `G = conj(V)`.
    pub fn from_operator(op: &Operator) -> Result<Self> {
        let k = op.kernel_or_err()?;
        let n = numerical_rank(k);
        let p = op.dim();
        if n == 0 {
            return Self::new(op.space().clone(), DMatrix::zeros(p, 0), DMatrix::zeros(p, 0));
        }
        let svd = k.clone().svd(true, true);
        let u = svd.u.expect("svd computed with u");
        let v_t = svd.v_t.expect("svd computed with v_t");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].partial_cmp(&svd.singular_values[a]).unwrap());
        let keep = &order[..n];
        let f = DMatrix::from_fn(p, n, |i, t| u[(i, keep[t])] * svd.singular_values[keep[t]]);
        // row t of V^* is conj(v_t)^T, so g_t(y) = V^*[t][y]
        let g = DMatrix::from_fn(p, n, |j, t| v_t[(keep[t], j)]);
        Self::new(op.space().clone(), f, g)
    }

    pub fn space(&self) -> &MeasureSpace {
        &self.space
    }

    pub fn rank(&self) -> usize {
        self.f.ncols()
    }

    pub fn f(&self) -> &DMatrix<C64> {
        &self.f
    }

    pub fn g(&self) -> &DMatrix<C64> {
        &self.g
    }

    pub fn kernel_matrix(&self) -> DMatrix<C64> {
        &self.f * self.g.transpose()
    }
}

/// Dense form of a finite-rank kernel operator.
pub fn densify(kfr: &FiniteRankOperator) -> Result<Operator> {
    Operator::from_kernel(kfr.space.clone(), kfr.kernel_matrix())
}

/// `P_E K|_{ran P_E}` as an operator on the points of `E`.
pub fn compress(k: &Operator, e: &StandardSet) -> Result<Operator> {
    k.space.same_shape(e)?;
    let idx = e.to_indices();
    let pick = |m: &DMatrix<C64>| m.select_rows(&idx).select_columns(&idx);
    Ok(Operator { space: k.space.restrict(e), entries: pick(&k.entries), kernel: k.kernel.as_ref().map(pick) })
}

/// Compression to an explicit index list (kept in the given order).
pub(crate) fn compress_indices(k: &Operator, idx: &[usize]) -> Operator {
    k.permuted(idx)
}

/// The kernel operator with kernel `|k|`.
pub fn modulus(k: &Operator) -> Result<Operator> {
    let abs = k.kernel_or_err()?.map(|z| C64::new(z.norm(), 0.0));
    Operator::from_kernel(k.space.clone(), abs)
}

/// `Σ_i k(x_i, x_i) w_i`.
pub fn trace(k: &Operator) -> C64 {
    (0..k.dim()).map(|i| k.entries[(i, i)]).sum()
}

/// Diagonal integral of the kernel, split over cells and atoms.
pub fn trace_split(k: &Operator) -> (C64, C64) {
    let mut cells = C64::new(0.0, 0.0);
    let mut atoms = C64::new(0.0, 0.0);
    for i in 0..k.dim() {
        let term = k.kernel_value(i, i) * k.space.weight(i);
        if k.space.is_atom(i) {
            atoms += term;
        } else {
            cells += term;
        }
    }
    (cells, atoms)
}

/// `tr(K^n)` by repeated multiplication.
pub fn trace_power(k: &Operator, n: usize) -> Result<C64> {
    if n == 0 {
        return Err(Error::InvalidArgument("trace_power needs n >= 1".into()));
    }
    if k.dim() == 0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let mut acc = k.entries.clone();
    for _ in 1..n {
        acc = &acc * &k.entries;
    }
    Ok(acc.trace())
}

/// `K = G + D` with `D` carrying `k(j, j)` on atoms only.
pub fn split_atom_diagonal(k: &Operator) -> Result<(Operator, Operator)> {
    let kernel = k.kernel_or_err()?;
    let p = k.dim();
    let mut d = DMatrix::zeros(p, p);
    let mut g = kernel.clone();
    for j in (0..p).filter(|&j| k.space.is_atom(j)) {
        d[(j, j)] = kernel[(j, j)];
        g[(j, j)] = C64::new(0.0, 0.0);
    }
    Ok((Operator::from_kernel(k.space.clone(), g)?, Operator::from_kernel(k.space.clone(), d)?))
}

/// Built-in operators.
pub mod named {
    use super::*;
    use crate::measure_space::{build_space, PointKind};

    /// `Σ_j (e_{2j-1} + e_{2j}) f_j^T` with `f_j = Σ_{i=2j}^{2n+1} e_i`, on
    /// `2n+1` atoms: upper triangular, rank `n`, diagonal `0,1,0,…,1,0`.
    pub fn paper_example(n: usize) -> Result<FiniteRankOperator> {
        if n == 0 {
            return Err(Error::InvalidArgument("example needs n >= 1".into()));
        }
        let p = 2 * n + 1;
        let space = MeasureSpace::atomic(p)?;
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        // 0-based: rows 2j, 2j+1 carry f_{j+1}, supported on 2j+1..p
        let f = DMatrix::from_fn(p, n, |i, j| if i == 2 * j || i == 2 * j + 1 { one } else { zero });
        let g = DMatrix::from_fn(p, n, |i, j| if i > 2 * j { one } else { zero });
        FiniteRankOperator::new(space, f, g)
    }

    fn cell_kernel(cells: usize, k: impl Fn(f64, f64) -> f64) -> Result<Operator> {
        let space = build_space(cells, &[])?;
        let x: Vec<f64> = space
            .points()
            .iter()
            .map(|p| match p.kind {
                PointKind::Cell { midpoint } => midpoint,
                PointKind::Atom { .. } => unreachable!("cells only"),
            })
            .collect();
        Operator::from_kernel_fn(space, |i, j| C64::new(k(x[i], x[j]), 0.0))
    }

    /// Volterra-type kernel `max(x - y, 0)` on a midpoint grid.
    pub fn volterra_linear(cells: usize) -> Result<Operator> {
        cell_kernel(cells, |x, y| (x - y).max(0.0))
    }

    /// Rank-one averaging kernel `k ≡ 1`.
    pub fn ones_kernel(cells: usize) -> Result<Operator> {
        cell_kernel(cells, |_, _| 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure_space::build_space;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn paper_example_matrix() {
        let k = densify(&named::paper_example(2).unwrap()).unwrap();
        let printed = [[0, 1, 1, 1, 1], [0, 1, 1, 1, 1], [0, 0, 0, 1, 1], [0, 0, 0, 1, 1], [0, 0, 0, 0, 0]];
        for (i, row) in printed.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                assert_eq!(k.entries()[(i, j)], c(v as f64));
            }
        }
        assert_eq!(trace(&k), c(2.0));
        assert_eq!(trace_power(&k, 2).unwrap(), c(2.0));
        assert_eq!(k.numerical_rank(), 2);
    }

    #[test]
    fn densify_rank_one_ones() {
        let space = build_space(0, &[1, 2]).unwrap();
        let ones = DMatrix::from_element(2, 1, c(1.0));
        let kfr = FiniteRankOperator::new(space, ones.clone(), ones).unwrap();
        let k = densify(&kfr).unwrap();
        assert!(k.kernel().unwrap().iter().all(|&z| z == c(1.0)));
    }

    #[test]
    fn factor_errors() {
        let space = MeasureSpace::atomic(3).unwrap();
        let f = DMatrix::from_element(3, 2, c(1.0));
        let g = DMatrix::from_fn(3, 2, |i, j| c((i == j) as u8 as f64));
        assert!(matches!(
            FiniteRankOperator::new(space.clone(), f, g.clone()),
            Err(Error::DependentFactors { which: "F", .. })
        ));
        assert!(matches!(FiniteRankOperator::new(space, DMatrix::zeros(2, 2), g), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn compression_cases() {
        let k = densify(&named::paper_example(2).unwrap()).unwrap();
        assert_eq!(compress(&k, &k.space().full()).unwrap(), k);
        let empty = compress(&k, &k.space().empty_set()).unwrap();
        assert_eq!(empty.dim(), 0);
        let corner = compress(&k, &StandardSet::from_indices(5, &[0, 1]).unwrap()).unwrap();
        assert_eq!(corner.entries(), &DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(1.0)]));
        assert!(matches!(compress(&k, &StandardSet::full(4)), Err(Error::SpaceMismatch)));
    }

    #[test]
    fn modulus_cases() {
        let k = Operator::atomic(&[vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap();
        let m = modulus(&k).unwrap();
        assert_eq!(m.kernel().unwrap(), &DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]));
        assert_eq!(modulus(&m).unwrap(), m);
        let bare =
            Operator::from_entries(MeasureSpace::atomic(1).unwrap(), DMatrix::from_element(1, 1, c(1.0))).unwrap();
        assert!(matches!(modulus(&bare), Err(Error::MissingKernel)));
    }

    #[test]
    fn nilpotent_trace_power() {
        let k = Operator::atomic(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(trace_power(&k, 2).unwrap(), c(0.0));
        assert_eq!(trace_power(&k, 1).unwrap(), trace(&k));
        let lower = named::volterra_linear(8).unwrap();
        assert_eq!(trace(&lower), c(0.0));
    }

    #[test]
    fn split_cases() {
        let cont = named::ones_kernel(3).unwrap();
        let (g, d) = split_atom_diagonal(&cont).unwrap();
        assert_eq!(g, cont);
        assert!(d.is_zero(0.0));

        let diag = Operator::atomic(&[vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let (g, d) = split_atom_diagonal(&diag).unwrap();
        assert!(g.is_zero(0.0));
        assert_eq!(d, diag);

        let space = build_space(2, &[9]).unwrap();
        let k = Operator::from_kernel_fn(space, |i, j| if i == 2 && j == 2 { c(5.0) } else { c(1.0) }).unwrap();
        let (g, d) = split_atom_diagonal(&k).unwrap();
        assert_eq!(d.kernel().unwrap()[(2, 2)], c(5.0));
        assert_eq!(d.kernel().unwrap().iter().filter(|z| z.norm() > 0.0).count(), 1);
        assert_eq!(g.kernel().unwrap()[(2, 2)], c(0.0));
        assert_eq!(g.kernel().unwrap()[(0, 0)], c(1.0));
    }

    #[test]
    fn trace_splits_over_cells_and_atoms() {
        let space = build_space(4, &[2, 3]).unwrap();
        let k = Operator::from_kernel_fn(space, |i, j| c((i + 2 * j) as f64)).unwrap();
        let (cells, atoms) = trace_split(&k);
        let direct_cells: C64 = (0..4).map(|i| c(3.0 * i as f64 * 0.25)).sum();
        assert!((cells - direct_cells).norm() < 1e-15);
        assert_eq!(atoms, c(12.0 + 15.0));
        assert!((cells + atoms - trace(&k)).norm() < 1e-12);
    }
}
