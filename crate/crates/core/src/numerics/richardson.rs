//! Richardson extrapolation of a sequence of approximations.

use crate::scalar::Scalar;

/// Extrapolation tableau built from approximations at step sizes
/// `h, h/ratio, h/ratio², ...`.
#[derive(Debug, Clone)]
pub struct Richardson<T> {
    /// `table[k][j]` eliminates the first `j` error terms using levels `k-j..=k`.
    pub table: Vec<Vec<T>>,
    /// Most extrapolated entry.
    pub value: T,
    /// Difference between the two most extrapolated diagonal entries.
    pub error: T,
}

impl<T: Scalar> Richardson<T> {
    /// Diagonal entries `table[k][k]`.
    pub fn diagonal(&self) -> Vec<T> {
        self.table.iter().enumerate().map(|(k, row)| row[k]).collect()
    }
}

/// Builds the tableau for approximations whose error expands in powers
/// `h^orders[0], h^orders[1], ...`. Columns beyond the supplied orders are
/// not formed. Returns `None` for an empty input.
pub fn richardson_table<T: Scalar>(approx: &[T], ratio: T, orders: &[T]) -> Option<Richardson<T>> {
    if approx.is_empty() {
        return None;
    }
    let mut table: Vec<Vec<T>> = Vec::with_capacity(approx.len());
    for (k, &a) in approx.iter().enumerate() {
        let mut row = vec![a];
        for j in 1..=k.min(orders.len()) {
            let factor = ratio.powf(orders[j - 1]) - T::one();
            let prev = &table[k - 1];
            row.push(row[j - 1] + (row[j - 1] - prev[j - 1]) / factor);
        }
        table.push(row);
    }
    let last = table.last().unwrap();
    let value = *last.last().unwrap();
    let error = if table.len() >= 2 {
        let prev = &table[table.len() - 2];
        (value - *prev.last().unwrap()).abs()
    } else {
        T::infinity()
    };
    Some(Richardson { table, value, error })
}
