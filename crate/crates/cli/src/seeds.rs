//! Seed derivation for realizations and validation streams.

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Channel seed of realization `index` under `master`.
pub fn realization(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

/// Seed of the error stream used to validate a design on channels `seed`.
pub fn validation(seed: u64) -> u64 {
    splitmix64(seed ^ 0xa076_1d64_78bd_642f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distinct_and_stable() {
        let a: Vec<u64> = (0..100).map(|k| realization(7, k)).collect();
        let mut b = a.clone();
        b.sort();
        b.dedup();
        assert_eq!(b.len(), 100);
        assert_eq!(a[3], realization(7, 3));
        assert_ne!(realization(7, 3), realization(8, 3));
        assert_ne!(validation(5), 5);
    }
}
