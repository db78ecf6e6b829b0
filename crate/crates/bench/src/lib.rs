//! Fixtures shared by the benchmarks.

use std::sync::Arc;

use nlpme_core::{make_grid, Field, Grid};

pub fn grid(dim: usize, n: usize) -> Arc<Grid> {
    make_grid(dim, 8.0, n).expect("valid benchmark grid")
}

/// Unit Gaussian centred at the origin.
pub fn gaussian(grid: &Arc<Grid>) -> Field {
    Field::from_fn(grid.clone(), |x| (-(x[0] * x[0] + x[1] * x[1]) / 2.0).exp()).expect("finite field")
}

#[cfg(test)]
mod tests {
    #[test]
    fn fixtures_build() {
        let g = super::grid(2, 16);
        assert_eq!(super::gaussian(&g).values().len(), 256);
    }
}
