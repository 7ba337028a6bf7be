//! k-subset enumeration.

use rand::seq::SliceRandom;
use rand::Rng;

/// All `k`-element subsets of `items`, in lexicographic index order.
pub fn combinations<T: Copy>(items: &[T], k: usize) -> Vec<Vec<T>> {
    let n = items.len();
    if k > n {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.iter().map(|&i| items[i]).collect());
        // rightmost index that can still advance
        let Some(pos) = (0..k).rev().find(|&i| idx[i] < n - k + i) else {
            return out;
        };
        idx[pos] += 1;
        for j in pos + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// [`combinations`] in uniformly random order.
pub fn shuffled_combinations<T: Copy, R: Rng + ?Sized>(items: &[T], k: usize, rng: &mut R) -> Vec<Vec<T>> {
    let mut all = combinations(items, k);
    all.shuffle(rng);
    all
}
