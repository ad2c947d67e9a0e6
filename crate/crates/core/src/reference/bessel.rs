//! Bessel functions of the first kind and their positive zeros.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BesselKind {
    /// Zeros of `J_n`.
    J,
    /// Zeros of `J_n'`.
    Jprime,
}

fn series(n: usize, x: f64) -> f64 {
    let h = 0.5 * x;
    let mut term = 1.0;
    for k in 1..=n {
        term *= h / k as f64;
    }
    let mut sum = term;
    let q = -h * h;
    for k in 1..200 {
        term *= q / (k as f64 * (k + n) as f64);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// `J_0(x), …, J_{nmax}(x)` by Miller's backward recurrence, normalized with
/// `J_0 + 2 Σ J_{2k} = 1`.
fn miller(nmax: usize, x: f64) -> Vec<f64> {
    let top = (nmax as f64).max(x);
    let mut start = (top + 25.0 + (40.0 * top).sqrt()) as usize;
    start += start % 2;
    let mut out = vec![0.0; nmax + 1];
    let (mut jp, mut j) = (0.0f64, 1e-300f64);
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        // j = J_k, jp = J_{k+1}; produce J_{k-1}.
        let jm = 2.0 * k as f64 / x * j - jp;
        jp = j;
        j = jm;
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp *= 1e-250;
            norm *= 1e-250;
            out.iter_mut().for_each(|v| *v *= 1e-250);
        }
        let idx = k - 1;
        if idx <= nmax {
            out[idx] = j;
        }
        if idx % 2 == 0 && idx > 0 {
            norm += 2.0 * j;
        }
    }
    norm += j;
    out.iter_mut().for_each(|v| *v /= norm);
    out
}

/// `J_n(x)` for `x ≥ 0`.
pub fn bessel_j(n: usize, x: f64) -> f64 {
    if x < 1.0 {
        series(n, x)
    } else {
        miller(n, x)[n]
    }
}

/// `J_n'(x) = (J_{n-1}(x) - J_{n+1}(x)) / 2`, with `J_0' = -J_1`.
pub fn bessel_j_prime(n: usize, x: f64) -> f64 {
    if n == 0 {
        -bessel_j(1, x)
    } else if x < 1.0 {
        0.5 * (series(n - 1, x) - series(n + 1, x))
    } else {
        let j = miller(n + 1, x);
        0.5 * (j[n - 1] - j[n + 1])
    }
}

/// The `m`-th positive zero of `J_n` or `J_n'` (the trivial zero of `J_0'`
/// at the origin is not counted).
pub fn bessel_zero(n: usize, m: usize, kind: BesselKind) -> Result<f64> {
    if n > 20 || m == 0 || m > 20 {
        return Err(Error::InvalidInput(format!(
            "Bessel zero index out of range: n = {n}, m = {m} (n ≤ 20, 1 ≤ m ≤ 20)"
        )));
    }
    let f = |x: f64| match kind {
        BesselKind::J => bessel_j(n, x),
        BesselKind::Jprime => bessel_j_prime(n, x),
    };
    // Consecutive zeros are more than 2 apart; a 0.05 scan cannot skip one.
    let step = 0.05;
    let mut a = 0.01;
    let mut fa = f(a);
    let mut found = 0;
    loop {
        let b = a + step;
        let fb = f(b);
        if fa == 0.0 || fa.signum() != fb.signum() {
            found += 1;
            if found == m {
                return Ok(bisect(f, a, b, fa));
            }
        }
        a = b;
        fa = fb;
    }
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    if fa == 0.0 {
        return a;
    }
    while b - a > 1e-14 * b {
        let c = 0.5 * (a + b);
        let fc = f(c);
        if fc == 0.0 {
            return c;
        }
        if fc.signum() == fa.signum() {
            a = c;
            fa = fc;
        } else {
            b = c;
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        assert!((bessel_j(0, 0.0) - 1.0).abs() < 1e-16);
        // Tabulated J_0(10), J_1(1), J_5(30).
        assert!((bessel_j(0, 10.0) + 0.245_935_764_451_348_3).abs() < 1e-14);
        assert!((bessel_j(1, 1.0) - 0.440_050_585_744_933_5).abs() < 1e-15);
        assert!((bessel_j(5, 30.0) + 0.143_240_295_512_077_06).abs() < 1e-13);
    }

    #[test]
    fn series_and_recurrence_agree() {
        for n in 0..6 {
            for x in [1.0, 2.5, 5.0] {
                assert!((series(n, x) - miller(n, x)[n]).abs() < 1e-14, "n {n} x {x}");
            }
        }
    }

    #[test]
    fn classical_zeros() {
        let z = bessel_zero(0, 1, BesselKind::J).unwrap();
        assert!((z - 2.404_825_557_695_773).abs() < 1e-12);
        assert!((z * z - 5.783_185_96).abs() < 1e-8);
        assert!((bessel_zero(1, 1, BesselKind::Jprime).unwrap() - 1.841_183_781_340_659).abs() < 1e-12);
        assert!((bessel_zero(0, 1, BesselKind::Jprime).unwrap() - 3.831_705_970_207_512).abs() < 1e-12);
        assert!((bessel_zero(1, 1, BesselKind::J).unwrap() - 3.831_705_970_207_512).abs() < 1e-12);
        assert!((bessel_zero(20, 20, BesselKind::J).unwrap() - 91.263_548_162_504_39).abs() < 1e-9);
    }

    #[test]
    fn zeros_interlace() {
        // J_0' also vanishes at the origin, which is not counted, so its
        // zeros sit one position ahead; start the derivative check at n = 1.
        for (kind, first) in [(BesselKind::J, 0), (BesselKind::Jprime, 1)] {
            for n in first..8 {
                for m in 1..6 {
                    let z = bessel_zero(n, m, kind).unwrap();
                    assert!(z < bessel_zero(n + 1, m, kind).unwrap());
                    assert!(bessel_zero(n + 1, m, kind).unwrap() < bessel_zero(n, m + 1, kind).unwrap());
                }
            }
        }
    }

    #[test]
    fn out_of_range() {
        assert!(bessel_zero(21, 1, BesselKind::J).is_err());
        assert!(bessel_zero(0, 0, BesselKind::J).is_err());
    }
}
