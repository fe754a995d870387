/// SplitMix64 generator (Steele, Lea & Flood). Fixed so that a presentation
/// order can be reproduced from its seed in any language.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

/// Fisher–Yates permutation of `0..n` driven by SplitMix64 seeded with `seed`.
///
/// Walks `i` from `n - 1` down to 1 and swaps with `j = next() % (i + 1)`.
pub fn shuffle_order(n: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = SplitMix64::new(seed);
    for i in (1..n).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        order.swap(i, j);
    }
    order
}

/// True when `v` contains each of `0..n` exactly once.
pub fn is_permutation(v: &[usize], n: usize) -> bool {
    if v.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &i in v {
        if i >= n || std::mem::replace(&mut seen[i], true) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_reference_stream() {
        let mut rng = SplitMix64::new(0);
        assert_eq!(rng.next_u64(), 0xe220_a839_7b1d_cdaf);
        assert_eq!(rng.next_u64(), 0x6e78_9e6a_a1b9_65f4);
        assert_eq!(rng.next_u64(), 0x06c4_5d18_8009_454f);
    }

    #[test]
    fn single_element() {
        for seed in [0, 1, u64::MAX] {
            assert_eq!(shuffle_order(1, seed), vec![0]);
        }
        assert!(shuffle_order(0, 7).is_empty());
    }

    #[test]
    fn permutation_check() {
        assert!(is_permutation(&[2, 0, 1, 4, 3], 5));
        assert!(!is_permutation(&[0, 0, 1, 2, 3], 5));
        assert!(!is_permutation(&[0, 1, 2, 3], 5));
        assert!(!is_permutation(&[0, 1, 2, 3, 5], 5));
    }
}
