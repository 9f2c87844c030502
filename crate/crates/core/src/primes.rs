//! Primality testing, factorization of small integers and a segmented
//! sieve used to enumerate the primes below a bound.

/// Width of one sieve segment, in odd numbers.
const SEGMENT_ODDS: usize = 1 << 15;

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// Modular exponentiation on machine words.
pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller–Rabin for the full `u64` range.
pub fn is_prime(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &b in &BASES {
        if n.is_multiple_of(b) {
            return n == b;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Distinct prime divisors of `n`, ascending. Trial division; intended for
/// conductors and other small levels.
pub fn prime_divisors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// All primes strictly below `bound`, ascending.
pub fn primes_below(bound: u64) -> Vec<u64> {
    let mut out = Vec::new();
    if bound <= 2 {
        return out;
    }
    out.push(2);
    if bound <= 3 {
        return out;
    }
    let limit = bound - 1;
    let root = (limit as f64).sqrt() as u64 + 1;
    let base = small_odd_primes(root);

    // Segment k covers the odd numbers lo, lo+2, ..., starting at lo = 3.
    let mut lo = 3u64;
    let mut seg = vec![true; SEGMENT_ODDS];
    while lo <= limit {
        let hi = (lo + 2 * (SEGMENT_ODDS as u64 - 1)).min(limit | 1);
        let len = ((hi - lo) / 2 + 1) as usize;
        seg[..len].fill(true);
        for &q in &base {
            if q * q > hi {
                break;
            }
            // first odd multiple of q that is >= max(q*q, lo)
            let mut start = (q * q).max(lo.div_ceil(q) * q);
            if start % 2 == 0 {
                start += q;
            }
            let mut j = ((start - lo) / 2) as usize;
            while j < len {
                seg[j] = false;
                j += q as usize;
            }
        }
        for (j, &flag) in seg[..len].iter().enumerate() {
            let v = lo + 2 * j as u64;
            if flag && v <= limit {
                out.push(v);
            }
        }
        lo = hi + 2;
    }
    out
}

fn small_odd_primes(upto: u64) -> Vec<u64> {
    let n = upto as usize + 1;
    let mut composite = vec![false; n];
    let mut out = Vec::new();
    for i in 3..n {
        if i % 2 == 1 && !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j < n {
                composite[j] = true;
                j += 2 * i;
            }
        }
    }
    out
}

/// Number of primes strictly below `bound`.
pub fn prime_pi(bound: u64) -> usize {
    primes_below(bound).len()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_is_prime(n: u64) -> bool {
        n >= 2 && (2..n).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
    }

    #[test]
    fn sieve_matches_trial_division() {
        for bound in [0, 1, 2, 3, 4, 5, 30, 100, 1000, 70_001, 200_003] {
            let expect: Vec<u64> = (0..bound).filter(|&n| naive_is_prime(n)).collect();
            assert_eq!(primes_below(bound), expect, "bound {bound}");
        }
    }

    #[test]
    fn known_prime_counts() {
        assert_eq!(prime_pi(100), 25);
        assert_eq!(prime_pi(100_000), 9592);
        assert_eq!(prime_pi(1_000_000), 78498);
    }

    #[test]
    fn miller_rabin() {
        for n in 0..5000 {
            assert_eq!(is_prime(n), naive_is_prime(n), "{n}");
        }
        assert!(is_prime(18_446_744_073_709_551_557));
        assert!(!is_prime(3_215_031_751));
    }

    #[test]
    fn divisors() {
        assert_eq!(prime_divisors(1), Vec::<u64>::new());
        assert_eq!(prime_divisors(11), vec![11]);
        assert_eq!(prime_divisors(143), vec![11, 13]);
        assert_eq!(prime_divisors(8 * 9 * 49), vec![2, 3, 7]);
    }
}
