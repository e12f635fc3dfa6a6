#![allow(dead_code)]

use std::path::PathBuf;

use cbem::{CbParams, Dataset};

pub const SOYBEAN: [u32; 20] = [4, 4, 6, 2, 3, 3, 3, 5, 5, 6, 6, 3, 3, 4, 1, 1, 5, 4, 4, 2];

pub fn soybean() -> Dataset {
    Dataset::new(6, SOYBEAN.to_vec()).unwrap()
}

pub fn soybean_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/soybean.txt")
}

/// Reference simulation results for one setting.
#[derive(Debug, Clone, Copy)]
pub struct TableRow {
    pub n: u32,
    pub p: f64,
    pub rho: f64,
    pub bias_p: f64,
    pub rmse_p: f64,
    pub interval_p: (f64, f64),
    pub interval_rho: (f64, f64),
}

impl TableRow {
    pub fn params(&self) -> CbParams {
        CbParams::new(self.n, self.p, self.rho).unwrap()
    }

    pub fn label(&self) -> String {
        format!("CB({}, {}, {})", self.n, self.p, self.rho)
    }
}

pub const TABLE: [TableRow; 6] = [
    TableRow {
        n: 10,
        p: 0.5,
        rho: 0.8,
        bias_p: 0.0008097407,
        rmse_p: 0.05771765,
        interval_p: (0.3849653, 0.6093339),
        interval_rho: (0.6325764, 0.9331690),
    },
    TableRow {
        n: 20,
        p: 0.5,
        rho: 0.8,
        bias_p: 0.0005851561,
        rmse_p: 0.04473148,
        interval_p: (0.4137872, 0.5889664),
        interval_rho: (0.6333326, 0.9333331),
    },
    TableRow {
        n: 10,
        p: 0.2,
        rho: 0.9,
        bias_p: 0.000899965,
        rmse_p: 0.05855643,
        interval_p: (0.08966766, 0.3306402),
        interval_rho: (0.75164919, 1.0),
    },
    TableRow {
        n: 20,
        p: 0.2,
        rho: 0.9,
        bias_p: 0.0004018936,
        rmse_p: 0.04758628,
        interval_p: (0.1100396, 0.3),
        interval_rho: (0.7659021, 1.0),
    },
    TableRow {
        n: 10,
        p: 0.5,
        rho: 0.5,
        bias_p: 0.0008298881,
        rmse_p: 0.04078532,
        interval_p: (0.4217728, 0.5803682),
        interval_rho: (0.3315481, 0.6659845),
    },
    TableRow {
        n: 20,
        p: 0.5,
        rho: 0.5,
        bias_p: 0.0007427234,
        rmse_p: 0.02914349,
        interval_p: (0.4475884, 0.5587433),
        interval_rho: (0.3333316, 0.6666659),
    },
];

pub const SAMPLE_SIZE: usize = 30;
pub const REPLICATIONS: usize = 1000;
pub const STUDY_SEED: u64 = 20_230_915;

/// `count` seeded datasets of size 30, cycling through the table's settings.
pub fn table_datasets(count: usize, seed: u64) -> Vec<(CbParams, Dataset)> {
    (0..count)
        .map(|i| {
            let params = TABLE[i % TABLE.len()].params();
            let data = cbem::sample(&params, SAMPLE_SIZE, cbem::sim::child_seed(seed, i as u64)).unwrap();
            (params, data)
        })
        .collect()
}
