//! SINR to MCS mapping.

use crate::{Error, Result};

/// CQI-style switching thresholds, dB.
const NR_THRESHOLDS_DB: [f64; 15] = [
    -6.0, -4.0, -2.0, 0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0, 18.0, 20.0, 22.0,
];
/// Spectral efficiency per resource element at each threshold, bits/RE.
const NR_EFFICIENCIES: [f64; 15] = [
    0.15, 0.23, 0.38, 0.60, 0.88, 1.18, 1.48, 1.91, 2.41, 2.73, 3.32, 3.90, 4.52, 5.12, 5.55,
];
/// 32 PRBs of 12 subcarriers (50 MHz at 120 kHz spacing).
const NR_RE_PER_SYMBOL: u32 = 384;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McsEntry {
    pub sinr_threshold_db: f64,
    pub spectral_efficiency: f64,
}

/// Ordered MCS table. Index 0 is reserved for outage; entry `j` of the table
/// is MCS index `j + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct McsTable {
    pub entries: Vec<McsEntry>,
    pub resource_elements_per_symbol: u32,
}

impl Default for McsTable {
    fn default() -> Self {
        Self {
            entries: NR_THRESHOLDS_DB
                .iter()
                .zip(NR_EFFICIENCIES)
                .map(|(&sinr_threshold_db, spectral_efficiency)| McsEntry {
                    sinr_threshold_db,
                    spectral_efficiency,
                })
                .collect(),
            resource_elements_per_symbol: NR_RE_PER_SYMBOL,
        }
    }
}

/// Result of link adaptation for one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinkRate {
    pub mcs_index: usize,
    pub bits_per_symbol: u64,
}

impl McsTable {
    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::InvalidConfig("MCS table is empty".into()));
        }
        if self.resource_elements_per_symbol == 0 {
            return Err(Error::InvalidConfig(
                "resource_elements_per_symbol must be > 0".into(),
            ));
        }
        for e in &self.entries {
            if !e.sinr_threshold_db.is_finite() || e.spectral_efficiency.is_nan() || e.spectral_efficiency <= 0.0 {
                return Err(Error::InvalidConfig(format!("bad MCS entry {e:?}")));
            }
        }
        for w in self.entries.windows(2) {
            if w[1].sinr_threshold_db <= w[0].sinr_threshold_db
                || w[1].spectral_efficiency <= w[0].spectral_efficiency
            {
                return Err(Error::InvalidConfig(
                    "MCS thresholds and efficiencies must be strictly increasing".into(),
                ));
            }
        }
        Ok(())
    }

    /// Highest MCS index the table defines.
    pub fn max_index(&self) -> usize {
        self.entries.len()
    }

    pub fn bits_per_symbol(&self, mcs_index: usize) -> u64 {
        match mcs_index {
            0 => 0,
            i => {
                let e = self.entries[i - 1].spectral_efficiency;
                (f64::from(self.resource_elements_per_symbol) * e).floor() as u64
            }
        }
    }

    /// Picks the highest entry whose threshold does not exceed `sinr_db`.
    pub fn rate_for(&self, sinr_db: f64) -> LinkRate {
        // thresholds are sorted, so the count of thresholds <= sinr is the index
        let mcs_index = self
            .entries
            .partition_point(|e| e.sinr_threshold_db <= sinr_db);
        LinkRate {
            mcs_index,
            bits_per_symbol: self.bits_per_symbol(mcs_index),
        }
    }
}
