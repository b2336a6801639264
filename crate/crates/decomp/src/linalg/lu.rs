use crate::error::{Error, Result};
use crate::linalg::dense::DenseMatrix;
use crate::linalg::perm::PermutationVector;

/// Partial-pivot LU of a tall matrix (`rows ≥ cols`): `P·M = L·U` with
/// `L: rows×cols` unit lower trapezoidal, every entry bounded by 1 in
/// magnitude, and `U: cols×cols` upper triangular. A numerically zero pivot
/// column is skipped, leaving a zero column in `U`.
pub fn lu_partial_pivot(
    m: &DenseMatrix,
) -> Result<(PermutationVector, DenseMatrix, DenseMatrix)> {
    let (rows, cols) = m.shape();
    if rows < cols {
        return Err(Error::InvalidParams(format!(
            "lu_partial_pivot requires rows >= cols, got {rows}x{cols}"
        )));
    }
    let mut work = m.clone();
    let mut perm = PermutationVector::identity(rows);

    for k in 0..cols {
        // Select the largest pivot in column k at or below the diagonal.
        let mut pivot_row = k;
        let mut pivot_abs = work[(k, k)].abs();
        for i in k + 1..rows {
            let a = work[(i, k)].abs();
            if a > pivot_abs {
                pivot_abs = a;
                pivot_row = i;
            }
        }
        if pivot_abs == 0.0 {
            continue; // zero column: no elimination needed
        }
        if pivot_row != k {
            perm.swap(k, pivot_row);
            for j in 0..cols {
                let tmp = work[(k, j)];
                work[(k, j)] = work[(pivot_row, j)];
                work[(pivot_row, j)] = tmp;
            }
        }
        let pivot = work[(k, k)];
        for i in k + 1..rows {
            let mult = work[(i, k)] / pivot;
            work[(i, k)] = mult;
            if mult != 0.0 {
                for j in k + 1..cols {
                    let sub = mult * work[(k, j)];
                    work[(i, j)] -= sub;
                }
            }
        }
    }

    let mut l = DenseMatrix::zeros(rows, cols);
    let mut u = DenseMatrix::zeros(cols, cols);
    for i in 0..rows {
        for j in 0..cols {
            if i > j {
                l[(i, j)] = work[(i, j)];
            } else if i == j {
                l[(i, j)] = 1.0;
                u[(i, j)] = work[(i, j)];
            } else if i < cols {
                u[(i, j)] = work[(i, j)];
            }
        }
    }
    Ok((perm, l, u))
}

/// Column-pivot LU of a wide matrix (`rows ≤ cols`): `M·Qc = L·U` with
/// `L: rows×rows` unit lower triangular and `U: rows×cols` upper
/// trapezoidal. At each step the remaining column with the largest entry in
/// the pivot row is swapped in, which keeps `U`'s diagonal dominant along
/// its row; `L`'s entries are not magnitude-bounded here.
pub fn lu_column_pivot(
    m: &DenseMatrix,
) -> Result<(PermutationVector, DenseMatrix, DenseMatrix)> {
    let (rows, cols) = m.shape();
    if rows > cols {
        return Err(Error::InvalidParams(format!(
            "lu_column_pivot requires rows <= cols, got {rows}x{cols}"
        )));
    }
    let mut work = m.clone();
    let mut perm = PermutationVector::identity(cols);

    for k in 0..rows {
        let mut pivot_col = k;
        let mut pivot_abs = work[(k, k)].abs();
        for j in k + 1..cols {
            let a = work[(k, j)].abs();
            if a > pivot_abs {
                pivot_abs = a;
                pivot_col = j;
            }
        }
        if pivot_abs == 0.0 {
            continue;
        }
        if pivot_col != k {
            perm.swap(k, pivot_col);
            for i in 0..rows {
                let tmp = work[(i, k)];
                work[(i, k)] = work[(i, pivot_col)];
                work[(i, pivot_col)] = tmp;
            }
        }
        let pivot = work[(k, k)];
        for i in k + 1..rows {
            let mult = work[(i, k)] / pivot;
            work[(i, k)] = mult;
            if mult != 0.0 {
                for j in k + 1..cols {
                    let sub = mult * work[(k, j)];
                    work[(i, j)] -= sub;
                }
            }
        }
    }

    let mut l = DenseMatrix::zeros(rows, rows);
    let mut u = DenseMatrix::zeros(rows, cols);
    for i in 0..rows {
        l[(i, i)] = 1.0;
        for j in 0..cols {
            if j < i && j < rows {
                l[(i, j)] = work[(i, j)];
            } else if j >= i {
                u[(i, j)] = work[(i, j)];
            }
        }
    }
    Ok((perm, l, u))
}
