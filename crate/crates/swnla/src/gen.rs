//! Deterministic stream generators.
//!
//! Random suites (`gaussian`, `integer-bounded`, `hypercube`,
//! `duplicate-heavy`, `geometric-norm`) exercise the sketches across easy
//! and compression-heavy regimes. `index-hard` reproduces the
//! communication-complexity instance whose Gram cross-terms encode a random
//! bit string at geometrically decreasing magnitudes — the stream that makes
//! Gram approximation expensive. The `nonsmooth-*` fixtures are the explicit
//! streams on which a trailing arrival flips the quality of a suffix
//! approximation, which is why plain value-based histogram merging cannot
//! drive low-rank approximation or regression.
//!
//! Everything is a pure function of `(spec, seed)` — replays are
//! byte-identical.

use serde::{Deserialize, Serialize};
use swnla_core::rng::{self, domain};

use crate::{Error, Result};

/// Stream family plus its parameters.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Generator {
    /// Independent standard normal entries.
    Gaussian,
    /// Uniform integer entries in `[−dim^c, dim^c]`.
    IntegerBounded { c_exp: u32 },
    /// Entries drawn from `{−1, +1}`.
    Hypercube,
    /// Rows drawn from a small fixed pool, so most arrivals repeat.
    DuplicateHeavy,
    /// Unit rows scaled by `ratio^level`; the level advances every
    /// `rows_per_level` arrivals.
    GeometricNorm { levels: usize, rows_per_level: usize, ratio: f64 },
    /// Hard instance for Gram approximation: `log₂(dim/2)` blocks
    /// `[M | E]`, block `k` carrying sign entries `±72ε·2^{log₂(n)−k}`
    /// beside matching scaled basis columns, then zero-row padding.
    IndexHard { eps: f64 },
    /// Fixed stream showing rank-2 residuals are not smoothly monotone:
    /// `2d·e₁, e₂, 2d·e₃, e₄…e_{d+3}, 2d·e_{d+4}` with `d = 2/alpha`.
    NonsmoothLra { alpha: f64 },
    /// Fixed regression stream (rows `[a | b]`, width 6) whose residual
    /// ordering flips when the final row arrives.
    NonsmoothRegression { alpha: f64 },
}

/// A stream request: row width, total length, window length (carried for
/// the runner), generator, and seed.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct StreamSpec {
    pub dim: usize,
    pub length: usize,
    pub window: usize,
    pub generator: Generator,
    pub seed: u64,
}

impl StreamSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::invalid("dim must be ≥ 1"));
        }
        if self.window == 0 {
            return Err(Error::invalid("window must be ≥ 1"));
        }
        match &self.generator {
            Generator::IntegerBounded { c_exp } => {
                if !(1..=2).contains(c_exp) {
                    return Err(Error::invalid("integer-bounded needs c_exp in {1,2}"));
                }
            }
            Generator::GeometricNorm { levels, rows_per_level, ratio } => {
                if *levels == 0 || *rows_per_level == 0 {
                    return Err(Error::invalid("geometric-norm needs levels, rows_per_level ≥ 1"));
                }
                if !(*ratio > 0.0 && ratio.is_finite()) {
                    return Err(Error::invalid("geometric-norm ratio must be positive"));
                }
            }
            Generator::IndexHard { eps } => {
                index_hard_shape(self.dim, *eps)?;
            }
            Generator::NonsmoothLra { alpha } => {
                let d = lra_gap(*alpha)?;
                if self.dim != d + 4 || self.length != d + 4 {
                    return Err(Error::invalid(format!(
                        "nonsmooth-lra with alpha={alpha} needs dim = length = {}",
                        d + 4
                    )));
                }
            }
            Generator::NonsmoothRegression { alpha } => {
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    return Err(Error::invalid("nonsmooth-regression needs alpha in (0,1)"));
                }
                if self.dim != 6 || self.length != 5 {
                    return Err(Error::invalid("nonsmooth-regression needs dim=6, length=5"));
                }
            }
            Generator::Gaussian | Generator::Hypercube | Generator::DuplicateHeavy => {}
        }
        Ok(())
    }
}

/// Block separation `d = 2/alpha` of the rank-2 residual fixture.
fn lra_gap(alpha: f64) -> Result<usize> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("nonsmooth-lra needs alpha in (0,1)"));
    }
    let d = (2.0 / alpha).round();
    if (2.0 / alpha - d).abs() > 1e-9 || d < 2.0 {
        return Err(Error::invalid("nonsmooth-lra needs 2/alpha to be an integer ≥ 2"));
    }
    Ok(d as usize)
}

/// Validated shape of the hard instance: `(n, levels, block_rows, group)`
/// where rows are `2n` wide, `levels = log₂ n`, each block has
/// `block_rows = 1/(72²ε²)` rows, and each basis column repeats `group`
/// times.
fn index_hard_shape(dim: usize, eps: f64) -> Result<(usize, usize, usize, usize)> {
    if dim % 2 != 0 {
        return Err(Error::invalid("index-hard needs an even dim (rows are [M | E])"));
    }
    let n = dim / 2;
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::invalid("index-hard needs dim/2 to be a power of two ≥ 2"));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid("index-hard needs eps in (0,1)"));
    }
    let levels = n.trailing_zeros() as usize;
    let rows_f = 1.0 / (5184.0 * eps * eps);
    let block_rows = rows_f.round();
    if (rows_f - block_rows).abs() > 1e-6 || block_rows < 1.0 {
        return Err(Error::invalid("index-hard needs 1/(72²ε²) to be a positive integer"));
    }
    let block_rows = block_rows as usize;
    if n % block_rows != 0 {
        return Err(Error::invalid("index-hard needs 1/(72²ε²) to divide dim/2"));
    }
    Ok((n, levels, block_rows, n / block_rows))
}

/// Generate the full stream for `spec`: `spec.length` rows of width
/// `spec.dim`, a pure function of the [`StreamSpec`].
pub fn generate(spec: &StreamSpec) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    let n = spec.dim;
    let seed = spec.seed;
    let mut rows = Vec::with_capacity(spec.length);
    match &spec.generator {
        Generator::Gaussian => {
            for t in 0..spec.length {
                rows.push(gauss_row(seed, t as u64, n));
            }
        }
        Generator::IntegerBounded { c_exp } => {
            let bound = (n as f64).powi(*c_exp as i32);
            for t in 0..spec.length {
                let row = (0..n)
                    .map(|j| {
                        let u = rng::unit(seed, domain::GENERATE, t as u64, j as u64);
                        (u * (2.0 * bound + 1.0)).floor().min(2.0 * bound) - bound
                    })
                    .collect();
                rows.push(row);
            }
        }
        Generator::Hypercube => {
            for t in 0..spec.length {
                let row = (0..n)
                    .map(|j| {
                        if rng::unit(seed, domain::GENERATE, t as u64, j as u64) < 0.5 {
                            -1.0
                        } else {
                            1.0
                        }
                    })
                    .collect();
                rows.push(row);
            }
        }
        Generator::DuplicateHeavy => {
            let pool: Vec<Vec<f64>> =
                (0..(n / 2).max(2)).map(|p| gauss_row(seed, 1_000_000 + p as u64, n)).collect();
            for t in 0..spec.length {
                let u = rng::unit(seed, domain::GENERATE, t as u64, u64::MAX);
                let pick = ((u * pool.len() as f64) as usize).min(pool.len() - 1);
                rows.push(pool[pick].clone());
            }
        }
        Generator::GeometricNorm { levels, rows_per_level, ratio } => {
            for t in 0..spec.length {
                let level = (t / rows_per_level).min(levels - 1);
                let mut r = gauss_row(seed, t as u64, n);
                let nrm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
                let scale = if nrm > 0.0 { ratio.powi(level as i32) / nrm } else { 0.0 };
                r.iter_mut().for_each(|v| *v *= scale);
                rows.push(r);
            }
        }
        Generator::IndexHard { eps } => {
            let (half, levels, block_rows, group) = index_hard_shape(n, *eps)?;
            let mut emitted = 0usize;
            'outer: for k in 1..=levels {
                let basis_scale = (2.0_f64).powi((levels - k) as i32);
                let sign_mag = 72.0 * eps * basis_scale;
                for i in 0..block_rows {
                    if emitted >= spec.length {
                        break 'outer;
                    }
                    let mut row = vec![0.0; n];
                    for (j, v) in row.iter_mut().take(half).enumerate() {
                        let bit = rng::bits(seed, domain::GENERATE, emitted as u64, j as u64) & 1;
                        *v = if bit == 1 { sign_mag } else { -sign_mag };
                    }
                    for v in row.iter_mut().skip(half + i * group).take(group) {
                        *v = basis_scale;
                    }
                    rows.push(row);
                    emitted += 1;
                }
            }
            while rows.len() < spec.length {
                rows.push(vec![0.0; n]);
            }
        }
        Generator::NonsmoothLra { alpha } => {
            let d = lra_gap(*alpha)?;
            let spike = 2.0 * d as f64;
            let axis = |i: usize, mag: f64| {
                let mut r = vec![0.0; n];
                r[i] = mag;
                r
            };
            rows.push(axis(0, spike));
            rows.push(axis(1, 1.0));
            rows.push(axis(2, spike));
            for i in 0..d {
                rows.push(axis(3 + i, 1.0));
            }
            rows.push(axis(d + 3, spike));
        }
        Generator::NonsmoothRegression { alpha } => {
            rows.push(vec![100.0, 0.0, 0.0, 0.0, 0.0, 100.0]);
            rows.push(vec![0.0, *alpha, 0.0, 0.0, 0.0, 0.0]);
            rows.push(vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
            rows.push(vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
            rows.push(vec![0.0, 0.0, 0.0, 0.0, 1000.0, 2000.0]);
        }
    }
    if rows.len() > spec.length {
        rows.truncate(spec.length);
    }
    Ok(rows)
}

fn gauss_row(seed: u64, t: u64, n: usize) -> Vec<f64> {
    (0..n).map(|j| rng::gauss_pair(seed, domain::GENERATE, t, j as u64).0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(dim: usize, length: usize, generator: Generator, seed: u64) -> StreamSpec {
        StreamSpec { dim, length, window: length.max(1), generator, seed }
    }

    #[test]
    fn generation_is_deterministic_and_seed_sensitive() {
        let s = spec(5, 24, Generator::Gaussian, 9);
        assert_eq!(generate(&s).unwrap(), generate(&s).unwrap());
        let t = spec(5, 24, Generator::Gaussian, 10);
        assert_ne!(generate(&s).unwrap(), generate(&t).unwrap());
    }

    #[test]
    fn hypercube_entries_are_signs() {
        let rows = generate(&spec(6, 40, Generator::Hypercube, 3)).unwrap();
        assert!(rows.iter().flatten().all(|v| *v == 1.0 || *v == -1.0));
    }

    #[test]
    fn integer_bounded_entries_are_integral_and_bounded() {
        for c_exp in [1, 2] {
            let rows = generate(&spec(4, 60, Generator::IntegerBounded { c_exp }, 5)).unwrap();
            let bound = 4f64.powi(c_exp as i32);
            for v in rows.iter().flatten() {
                assert_eq!(*v, v.round());
                assert!(v.abs() <= bound);
            }
            // Both signs show up at this length.
            assert!(rows.iter().flatten().any(|v| *v > 0.0));
            assert!(rows.iter().flatten().any(|v| *v < 0.0));
        }
    }

    #[test]
    fn duplicate_heavy_repeats_rows() {
        let rows = generate(&spec(6, 30, Generator::DuplicateHeavy, 1)).unwrap();
        let repeats =
            rows.iter().filter(|r| rows.iter().filter(|s| s == r).count() > 1).count();
        assert!(repeats > rows.len() / 2, "only {repeats}/{} rows repeat", rows.len());
    }

    #[test]
    fn geometric_norm_levels_scale_by_ratio() {
        let g = Generator::GeometricNorm { levels: 3, rows_per_level: 4, ratio: 4.0 };
        let rows = generate(&spec(5, 12, g, 7)).unwrap();
        for (t, r) in rows.iter().enumerate() {
            let nrm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            let want = 4f64.powi((t / 4) as i32);
            assert!((nrm - want).abs() <= 1e-9 * want, "row {t}: {nrm} vs {want}");
        }
    }

    #[test]
    fn nonsmooth_lra_fixture_matches_alpha_half_rows() {
        // alpha = 1/2 gives d = 4: spikes 8·e₁, 8·e₃, 8·e₈ among unit rows.
        let s = spec(8, 8, Generator::NonsmoothLra { alpha: 0.5 }, 0);
        let rows = generate(&s).unwrap();
        let axis = |i: usize, mag: f64| {
            let mut r = vec![0.0; 8];
            r[i] = mag;
            r
        };
        assert_eq!(
            rows,
            vec![
                axis(0, 8.0),
                axis(1, 1.0),
                axis(2, 8.0),
                axis(3, 1.0),
                axis(4, 1.0),
                axis(5, 1.0),
                axis(6, 1.0),
                axis(7, 8.0),
            ]
        );
    }

    #[test]
    fn nonsmooth_regression_fixture_is_fixed() {
        let s = spec(6, 5, Generator::NonsmoothRegression { alpha: 0.5 }, 0);
        let rows = generate(&s).unwrap();
        assert_eq!(rows[0], vec![100.0, 0.0, 0.0, 0.0, 0.0, 100.0]);
        assert_eq!(rows[1][1], 0.5);
        assert_eq!(rows[4], vec![0.0, 0.0, 0.0, 0.0, 1000.0, 2000.0]);
    }

    #[test]
    fn index_hard_blocks_have_the_advertised_frobenius_mass() {
        // dim = 16 → n = 8, three levels; 1/(72²ε²) = 4 rows per block at
        // ε = 1/144. Block k must have squared Frobenius mass 2n³/2^{2k}.
        let eps = 1.0 / 144.0;
        let s = spec(16, 12, Generator::IndexHard { eps }, 11);
        let rows = generate(&s).unwrap();
        assert_eq!(rows.len(), 12);
        for k in 1..=3usize {
            let block = &rows[(k - 1) * 4..k * 4];
            let mass: f64 = block.iter().flatten().map(|v| v * v).sum();
            let want = 2.0 * 512.0 / 4f64.powi(k as i32);
            assert!((mass - want).abs() <= 1e-9 * want, "block {k}: {mass} vs {want}");
        }
        // Every column is a unit vector scaled by the level: check one
        // basis column — single nonzero of magnitude 2^{levels−k}.
        let col: Vec<f64> = rows[0..4].iter().map(|r| r[8]).collect();
        assert_eq!(col, vec![4.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn index_hard_pads_with_zero_rows() {
        let eps = 1.0 / 144.0;
        let s = spec(16, 15, Generator::IndexHard { eps }, 11);
        let rows = generate(&s).unwrap();
        assert_eq!(rows.len(), 15);
        for r in &rows[12..] {
            assert!(r.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(generate(&spec(0, 4, Generator::Gaussian, 0)).is_err());
        assert!(generate(&spec(4, 8, Generator::IntegerBounded { c_exp: 3 }, 0)).is_err());
        assert!(generate(&spec(7, 4, Generator::IndexHard { eps: 1.0 / 144.0 }, 0)).is_err());
        assert!(generate(&spec(16, 4, Generator::IndexHard { eps: 0.5 }, 0)).is_err());
        assert!(generate(&spec(9, 9, Generator::NonsmoothLra { alpha: 0.5 }, 0)).is_err());
        assert!(generate(&spec(6, 4, Generator::NonsmoothRegression { alpha: 0.5 }, 0)).is_err());
        let g = Generator::GeometricNorm { levels: 0, rows_per_level: 1, ratio: 2.0 };
        assert!(generate(&spec(4, 4, g, 0)).is_err());
    }

    #[test]
    fn stream_spec_serializes_with_kebab_case_tags() {
        let s = spec(4, 8, Generator::IndexHard { eps: 0.25 }, 3);
        let j = serde_json::to_string(&s).unwrap();
        assert!(j.contains("\"kind\":\"index-hard\""), "{j}");
    }
}
