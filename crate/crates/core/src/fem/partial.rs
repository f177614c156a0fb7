use super::assembly::{accumulate, pattern};
use super::SparseSymMatrix;
use crate::linalg::Matrix;
use std::collections::BTreeSet;

/// Global matrix that can be updated element by element.
///
/// Every stored entry remembers its contributing `(element, local index)`
/// pairs in assembly order, so re-summing an entry after some element
/// matrices changed yields bitwise the same value as a full assembly.
#[derive(Clone, Debug)]
pub struct PartialAssembler {
    matrix: SparseSymMatrix,
    element_dofs: Vec<Vec<usize>>,
    locals: Vec<Matrix>,
    contributions: Vec<Vec<(u32, u16)>>,
    element_positions: Vec<Vec<usize>>,
}

impl PartialAssembler {
    pub fn new(ndof: usize, element_dofs: Vec<Vec<usize>>, locals: Vec<Matrix>) -> Self {
        assert_eq!(element_dofs.len(), locals.len());
        let mut matrix = pattern(ndof, &element_dofs);
        accumulate(&mut matrix, &element_dofs, &locals);
        let mut contributions = vec![Vec::new(); matrix.nnz()];
        let mut element_positions = Vec::with_capacity(element_dofs.len());
        for (e, dofs) in element_dofs.iter().enumerate() {
            let k = dofs.len();
            let mut positions = Vec::with_capacity(k * k);
            for (a, &i) in dofs.iter().enumerate() {
                for (b, &j) in dofs.iter().enumerate() {
                    let pos = matrix.position(i, j).expect("entry in pattern");
                    contributions[pos].push((e as u32, (a * k + b) as u16));
                    positions.push(pos);
                }
            }
            element_positions.push(positions);
        }
        PartialAssembler { matrix, element_dofs, locals, contributions, element_positions }
    }

    pub fn matrix(&self) -> &SparseSymMatrix {
        &self.matrix
    }

    pub fn local(&self, element: usize) -> &Matrix {
        &self.locals[element]
    }

    pub fn element_count(&self) -> usize {
        self.locals.len()
    }

    /// Stored positions touched by any of `elements`.
    pub fn entries_touched_by(&self, elements: impl IntoIterator<Item = usize>) -> BTreeSet<usize> {
        elements.into_iter().flat_map(|e| self.element_positions[e].iter().copied()).collect()
    }

    /// Replaces element matrices and re-sums only the affected entries.
    /// Returns the number of re-summed entries.
    pub fn update(&mut self, changes: Vec<(usize, Matrix)>) -> usize {
        let touched = self.entries_touched_by(changes.iter().map(|(e, _)| *e));
        for (e, m) in changes {
            self.locals[e] = m;
        }
        for &pos in &touched {
            let mut s = 0.0;
            for &(e, idx) in &self.contributions[pos] {
                let local = &self.locals[e as usize];
                let k = local.nrows();
                s += local[(idx as usize / k, idx as usize % k)];
            }
            self.matrix.values_mut()[pos] = s;
        }
        touched.len()
    }

    /// Sum of all current element matrices from scratch.
    pub fn full_reassembly(&self) -> SparseSymMatrix {
        let mut m = pattern(self.matrix.dim(), &self.element_dofs);
        accumulate(&mut m, &self.element_dofs, &self.locals);
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn update_matches_full_reassembly() {
        let dofs = vec![vec![0, 1, 2], vec![1, 3, 2], vec![3, 4, 2]];
        let local = |s: f64| Matrix::from_fn(3, 3, |i, j| if i == j { 2.0 * s } else { -s } + 0.1 * (i * 3 + j) as f64);
        let mut p = PartialAssembler::new(5, dofs, vec![local(1.0), local(1.3), local(0.7)]);
        assert_eq!(p.matrix(), &p.full_reassembly());
        let n = p.update(vec![(1, local(1.0 / 3.0))]);
        assert_eq!(n, 9);
        assert_eq!(p.matrix(), &p.full_reassembly());
        assert_eq!(p.update(vec![]), 0);
    }
}
