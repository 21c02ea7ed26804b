/// Resource caps shared by the counting and torus modules.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    /// Largest number of distinct keys a materialized histogram may hold.
    pub support: u64,
    /// Largest `N^{2s}` that brute-force enumeration will attempt.
    pub brute_force: u64,
    /// Largest number of quadrature nodes in a tensor grid.
    pub grid: u64,
}

impl Budget {
    pub const DEFAULT_SUPPORT: u64 = 20_000_000;
    pub const DEFAULT_BRUTE_FORCE: u64 = 10_000_000;
    pub const DEFAULT_GRID: u64 = 50_000_000;
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            support: Self::DEFAULT_SUPPORT,
            brute_force: Self::DEFAULT_BRUTE_FORCE,
            grid: Self::DEFAULT_GRID,
        }
    }
}
