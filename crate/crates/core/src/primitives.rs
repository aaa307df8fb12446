//! Deterministic data-parallel prefix scan and stream compaction.
//!
//! Both primitives split their input into fixed-size chunks, so results do not
//! depend on how many worker threads rayon happens to use.

use rayon::prelude::*;

use crate::error::{Error, Result};

const CHUNK: usize = 1 << 13;

/// Exclusive prefix sum. Returns `out` with `out[i] = xs[0] + .. + xs[i-1]`
/// together with the grand total.
pub fn prefix_sum(xs: &[u64]) -> Result<(Vec<u64>, u64)> {
    let chunk_sums: Vec<u64> = xs
        .par_chunks(CHUNK)
        .map(|c| c.iter().try_fold(0u64, |acc, &x| acc.checked_add(x)))
        .collect::<Option<_>>()
        .ok_or_else(|| Error::Overflow("prefix sum exceeded u64".into()))?;

    let mut offsets = Vec::with_capacity(chunk_sums.len());
    let mut total = 0u64;
    for s in &chunk_sums {
        offsets.push(total);
        total = total
            .checked_add(*s)
            .ok_or_else(|| Error::Overflow("prefix sum exceeded u64".into()))?;
    }

    let mut out = vec![0u64; xs.len()];
    out.par_chunks_mut(CHUNK)
        .zip(xs.par_chunks(CHUNK))
        .zip(offsets.par_iter())
        .for_each(|((dst, src), &base)| {
            let mut acc = base;
            for (d, &s) in dst.iter_mut().zip(src) {
                *d = acc;
                acc += s;
            }
        });
    Ok((out, total))
}

/// Stable parallel filter: keeps the elements satisfying `keep`, in order.
///
/// Per-chunk counts are scanned into write offsets and each chunk scatters
/// into its own disjoint output window.
pub fn stream_compact<T, F>(xs: &[T], keep: F) -> Vec<T>
where
    T: Copy + Send + Sync,
    F: Fn(&T) -> bool + Sync,
{
    let counts: Vec<u64> = xs
        .par_chunks(CHUNK)
        .map(|c| c.iter().filter(|x| keep(x)).count() as u64)
        .collect();
    // counts are bounded by xs.len(), which cannot overflow u64
    let (offsets, total) = prefix_sum(&counts).expect("element counts fit in u64");
    if total == 0 {
        return Vec::new();
    }

    let mut out = vec![xs[0]; total as usize];
    let mut windows: Vec<&mut [T]> = Vec::with_capacity(counts.len());
    let mut rest = out.as_mut_slice();
    for (i, &n) in counts.iter().enumerate() {
        debug_assert_eq!(offsets[i] as usize, total as usize - rest.len());
        let (head, tail) = rest.split_at_mut(n as usize);
        windows.push(head);
        rest = tail;
    }

    windows
        .into_par_iter()
        .zip(xs.par_chunks(CHUNK))
        .for_each(|(dst, src)| {
            for (d, s) in dst.iter_mut().zip(src.iter().filter(|x| keep(x))) {
                *d = *s;
            }
        });
    out
}

/// Indices `i` in `0..n` with `keep(i)`, ascending, without materialising
/// the index range.
pub fn compact_range<F>(n: usize, keep: F) -> Vec<usize>
where
    F: Fn(usize) -> bool + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    let range = |c: usize| c * CHUNK..((c + 1) * CHUNK).min(n);
    let counts: Vec<u64> = (0..chunks)
        .into_par_iter()
        .map(|c| range(c).filter(|&i| keep(i)).count() as u64)
        .collect();
    let (offsets, total) = prefix_sum(&counts).expect("element counts fit in u64");
    let mut out = vec![0usize; total as usize];
    let mut windows: Vec<&mut [usize]> = Vec::with_capacity(chunks);
    let mut rest = out.as_mut_slice();
    for (i, &k) in counts.iter().enumerate() {
        debug_assert_eq!(offsets[i] as usize, total as usize - rest.len());
        let (head, tail) = rest.split_at_mut(k as usize);
        windows.push(head);
        rest = tail;
    }
    windows.into_par_iter().enumerate().for_each(|(c, dst)| {
        for (d, i) in dst.iter_mut().zip(range(c).filter(|&i| keep(i))) {
            *d = i;
        }
    });
    out
}

/// Indices `i` with `flags[i]` set, ascending.
pub fn compact_indices(flags: &[bool]) -> Vec<usize> {
    compact_range(flags.len(), |i| flags[i])
}
