use serde::{Deserialize, Serialize};

/// Delivery models whose per-user traffic is compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandwidthScheme {
    /// Every constant view is sent to the client.
    Conventional,
    /// The ten constant views nearest the user's view are sent to the client.
    Has10,
    /// The edge sends the single reassembled stream.
    Reassembled,
}

/// Bits delivered to one user in one chunk under each model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthRow {
    pub chunk: u64,
    pub user_id: u32,
    pub reassembled: u64,
    pub has10: u64,
    pub conventional: u64,
}

impl BandwidthRow {
    pub fn ordered(&self) -> bool {
        self.reassembled <= self.has10 && self.has10 <= self.conventional
    }
}

/// 1-based views of the `width` views around `view`, shifted to stay inside `1..=n`.
pub fn has_window(view: usize, n_views: usize, width: usize) -> std::ops::RangeInclusive<usize> {
    let width = width.min(n_views).max(1);
    let below = (width - 1) / 2;
    let start = view.saturating_sub(below).max(1).min(n_views + 1 - width);
    start..=start + width - 1
}

/// Per-user bits of one chunk under one delivery model.
///
/// `constant_bits` holds the chunk's constant-stream sizes by `view - 1`;
/// `view` is the user's view at the chunk's first emitted frame and
/// `emitted_bits` what the edge actually sent.
pub fn baseline_bandwidth(scheme: BandwidthScheme, constant_bits: &[u64], view: usize, emitted_bits: u64) -> u64 {
    match scheme {
        BandwidthScheme::Conventional => constant_bits.iter().sum(),
        BandwidthScheme::Has10 => has_window(view, constant_bits.len(), 10)
            .map(|v| constant_bits[v - 1])
            .sum(),
        BandwidthScheme::Reassembled => emitted_bits,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn windows_stay_inside() {
        assert_eq!(has_window(1, 23, 10), 1..=10);
        assert_eq!(has_window(12, 23, 10), 8..=17);
        assert_eq!(has_window(23, 23, 10), 14..=23);
        assert_eq!(has_window(2, 4, 10), 1..=4);
    }

    #[test]
    fn uniform_ratios() {
        let b = vec![1000u64; 23];
        assert_eq!(baseline_bandwidth(BandwidthScheme::Conventional, &b, 5, 1000), 23_000);
        assert_eq!(baseline_bandwidth(BandwidthScheme::Has10, &b, 5, 1000), 10_000);
        assert_eq!(baseline_bandwidth(BandwidthScheme::Reassembled, &b, 5, 1000), 1000);
    }
}
