use super::{FemError, SparseSymMatrix};

/// Difference between two matrices with the same dof numbering.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixComparison {
    /// `‖A − B‖_F / max(‖A‖_F, ‖B‖_F)` (0 when both are zero).
    pub frobenius_relative: f64,
    /// `max |a_ij − b_ij|` divided by the largest entry magnitude of A or B.
    pub max_entry_deviation: f64,
    pub max_entry_index: Option<(usize, usize)>,
}

/// Compares over the union of both sparsity patterns.
pub fn compare_matrices(a: &SparseSymMatrix, b: &SparseSymMatrix) -> Result<MatrixComparison, FemError> {
    if a.dim() != b.dim() {
        return Err(FemError::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    let mut diff_sq = 0.0;
    let mut worst = 0.0_f64;
    let mut worst_index = None;
    let mut scale = 0.0_f64;
    for i in 0..a.dim() {
        let (mut ra, mut rb) = (a.row(i).peekable(), b.row(i).peekable());
        loop {
            let (j, va, vb) = match (ra.peek().copied(), rb.peek().copied()) {
                (None, None) => break,
                (Some((ja, va)), Some((jb, vb))) if ja == jb => {
                    ra.next();
                    rb.next();
                    (ja, va, vb)
                }
                (Some((ja, va)), Some((jb, _))) if ja < jb => {
                    ra.next();
                    (ja, va, 0.0)
                }
                (Some((ja, va)), None) => {
                    ra.next();
                    (ja, va, 0.0)
                }
                (_, Some((jb, vb))) => {
                    rb.next();
                    (jb, 0.0, vb)
                }
            };
            scale = scale.max(va.abs()).max(vb.abs());
            let d = (va - vb).abs();
            diff_sq += d * d;
            if d > worst {
                worst = d;
                worst_index = Some((i, j));
            }
        }
    }
    let norm = a.frobenius_norm().max(b.frobenius_norm());
    Ok(MatrixComparison {
        frobenius_relative: if norm == 0.0 { 0.0 } else { diff_sq.sqrt() / norm },
        max_entry_deviation: if scale == 0.0 { 0.0 } else { worst / scale },
        max_entry_index: worst_index,
    })
}
