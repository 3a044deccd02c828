//! Reference implementations written independently of the library, used
//! as oracles by the integration tests.

#![allow(dead_code)]

use std::path::PathBuf;
use std::process::{Command, Output};

/// Terms of `A_k = sum c_i A_{k-i}` by direct evaluation; `None` once a
/// term is negative.
pub fn naive_linear(coeffs: &[i64], init: &[i128], count: usize) -> Option<Vec<i128>> {
    let mut terms: Vec<i128> = init.to_vec();
    while terms.len() < count {
        let k = terms.len();
        let mut next = 0i128;
        for (i, &c) in coeffs.iter().enumerate() {
            next += c as i128 * terms[k - 1 - i];
        }
        terms.push(next);
    }
    terms.truncate(count);
    if terms.iter().any(|&t| t < 0) {
        return None;
    }
    Some(terms)
}

pub fn naive_fixed(difference: i64, first: i128, count: usize) -> Option<Vec<i128>> {
    let terms: Vec<i128> = (0..count as i128).map(|k| first + k * difference as i128).collect();
    terms.iter().all(|&t| t >= 0).then_some(terms)
}

pub fn naive_geometric(num: i128, den: i128, first: i128, count: usize) -> Vec<i128> {
    let mut terms = vec![first];
    while terms.len() < count {
        let last = *terms.last().unwrap();
        terms.push(last * num / den);
    }
    terms
}

/// Little-endian digits of `v`, at least one digit.
pub fn le_digits(mut v: i128, base: u32) -> Vec<u32> {
    assert!(v >= 0);
    let mut out = Vec::new();
    loop {
        out.push((v % base as i128) as u32);
        v /= base as i128;
        if v == 0 {
            return out;
        }
    }
}

/// Token stream: minimal little-endian digits of each term, then a blank.
pub fn naive_stream(terms: &[i128], base: u32, length: usize) -> Vec<u32> {
    let mut out = Vec::new();
    for &t in terms {
        out.extend(le_digits(t, base));
        out.push(base);
        if out.len() >= length {
            break;
        }
    }
    assert!(out.len() >= length, "not enough terms for the stream");
    out.truncate(length);
    out
}

pub fn from_le(digits: &[u32], base: u32) -> i128 {
    digits.iter().rev().fold(0i128, |acc, &d| acc * base as i128 + d as i128)
}

/// Minimum number of distinct product terms covering a multi-output
/// function, found by enumerating sets of prime implicants.
///
/// `on[r]` / `dc[r]` are output bitmasks per input row. Primes are found by
/// brute force over all `3^inputs` cubes: an implicant is kept unless a
/// strictly larger cube implies at least the same outputs. Covers are
/// searched by increasing size, branching on the uncovered (row, output)
/// pair with the fewest candidate primes.
pub fn brute_min_cover(inputs: usize, outputs: usize, on: &[u32], dc: &[u32]) -> usize {
    let rows = 1usize << inputs;
    // cube as (care mask, value)
    let mut cubes: Vec<(Vec<usize>, u32)> = Vec::new();
    let mut cube_count = 1;
    for _ in 0..inputs {
        cube_count *= 3;
    }
    for code in 0..cube_count {
        let mut c = code;
        let mut care = 0usize;
        let mut value = 0usize;
        for i in 0..inputs {
            match c % 3 {
                0 => {}
                1 => care |= 1 << i,
                _ => {
                    care |= 1 << i;
                    value |= 1 << i;
                }
            }
            c /= 3;
        }
        let members: Vec<usize> = (0..rows).filter(|r| r & care == value).collect();
        let mut implied = 0u32;
        for j in 0..outputs {
            if members.iter().all(|&r| (on[r] | dc[r]) >> j & 1 == 1) {
                implied |= 1 << j;
            }
        }
        if implied != 0 {
            cubes.push((members, implied));
        }
    }
    let cubes: Vec<(Vec<usize>, u32)> = cubes
        .iter()
        .filter(|(m, t)| {
            !cubes
                .iter()
                .any(|(m2, t2)| m2.len() > m.len() && m.iter().all(|r| m2.contains(r)) && t2 & t == *t)
        })
        .cloned()
        .collect();
    let elements: Vec<(usize, usize)> = (0..rows)
        .flat_map(|r| (0..outputs).filter(move |&j| on[r] >> j & 1 == 1).map(move |j| (r, j)))
        .collect();
    let covers: Vec<Vec<usize>> = cubes
        .iter()
        .map(|(members, implied)| {
            elements
                .iter()
                .enumerate()
                .filter(|(_, (r, j))| members.contains(r) && implied >> j & 1 == 1)
                .map(|(e, _)| e)
                .collect()
        })
        .collect();

    fn search(covered: &mut Vec<u32>, covers: &[Vec<usize>], budget: usize) -> bool {
        let uncovered = (0..covered.len()).filter(|&e| covered[e] == 0);
        let Some(first) = uncovered.min_by_key(|&e| covers.iter().filter(|c| c.contains(&e)).count()) else {
            return true;
        };
        if budget == 0 {
            return false;
        }
        for cover in covers.iter().filter(|c| c.contains(&first)) {
            for &e in cover {
                covered[e] += 1;
            }
            let ok = search(covered, covers, budget - 1);
            for &e in cover {
                covered[e] -= 1;
            }
            if ok {
                return true;
            }
        }
        false
    }

    let mut k = 0;
    loop {
        let mut covered = vec![0u32; elements.len()];
        if search(&mut covered, &covers, k) {
            return k;
        }
        k += 1;
    }
}

pub fn nsp_bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_nsp"))
}

pub fn nsp(args: &[&str]) -> Output {
    Command::new(nsp_bin())
        .args(args)
        .env_remove("NSP_SEED")
        .output()
        .expect("run nsp")
}
