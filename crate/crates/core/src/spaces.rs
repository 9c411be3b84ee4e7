//! Function- and sequence-space norms computed from sampled data by
//! quadrature and lattice summation: Lebesgue, Sobolev, amalgam,
//! uniformly-local L2, modulation, local Hardy, weak sequence norms, and
//! ordered mixed norms.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::decomp::{DecompPair, SymbolBoxSet, PIECE_DROP_ENERGY};
use crate::error::{Error, Result};
use crate::grid::{hat_of, multiplier_apply, Domain, SampledField, SampledSymbol};

/// A computed norm with its space identifier and parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormResult {
    pub value: f64,
    pub space_id: String,
    pub params: Vec<f64>,
    pub quad_error_hint: f64,
}

impl NormResult {
    fn new(value: f64, space_id: impl Into<String>, params: Vec<f64>, hint: f64) -> Result<Self> {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::Param(format!("norm value {value} not finite nonnegative")));
        }
        Ok(NormResult { value, space_id: space_id.into(), params, quad_error_hint: hint })
    }
}

fn check_exponent(p: f64) -> Result<()> {
    if !(p >= 1.0) {
        return Err(Error::Param(format!("exponent {p} must lie in [1, inf]")));
    }
    Ok(())
}

fn fmt_exp(p: f64) -> String {
    if p.is_infinite() {
        "inf".into()
    } else if (p - p.round()).abs() < 1e-12 {
        format!("{}", p.round() as i64)
    } else {
        format!("{p}")
    }
}

/// Axis-aligned half-open box used to restrict integration regions.
#[derive(Debug, Clone)]
pub struct Region {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Region {
    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(x, (lo, hi))| *x >= *lo && *x < *hi)
    }
}

/// `(integral_E |f|^p)^{1/p}` by quadrature; max of samples for `p = inf`.
pub fn lp_norm(f: &SampledField, p: f64, region: Option<&Region>) -> Result<NormResult> {
    check_exponent(p)?;
    let dim = f.grid().dim();
    let coords = match f.domain() {
        Domain::Space => f.grid().space_coords(),
        Domain::Frequency => f.grid().freq_coords(),
    };
    let w = f.quad_weight();
    let step = w.powf(1.0 / dim as f64);
    let mut acc = 0.0f64;
    for (i, v) in f.values().iter().enumerate() {
        if let Some(r) = region {
            if !r.contains(&coords[i * dim..(i + 1) * dim]) {
                continue;
            }
        }
        let a = v.norm();
        if p.is_infinite() {
            acc = acc.max(a);
        } else {
            acc += a.powf(p) * w;
        }
    }
    let value = if p.is_infinite() { acc } else { acc.powf(1.0 / p) };
    let id = if p.is_infinite() { "Linf".into() } else { format!("L{}", fmt_exp(p)) };
    NormResult::new(value, id, vec![p], if p.is_infinite() { 0.0 } else { step })
}

/// Plain `ell^q` norm of a finite sequence (absolute values taken).
pub fn seq_norm(a: &[f64], q: f64) -> Result<NormResult> {
    check_exponent(q)?;
    let value = if q.is_infinite() {
        a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    } else {
        a.iter().map(|v| v.abs().powf(q)).sum::<f64>().powf(1.0 / q)
    };
    NormResult::new(value, format!("l{}", fmt_exp(q)), vec![q], 0.0)
}

/// Weak `ell^{q, inf}` quasi-norm, computed exactly through the decreasing
/// rearrangement: `max_m m^{1/q} a*_m` equals the threshold form
/// `sup_t t #{|a_k| > t}^{1/q}` for finite sequences.
pub fn weak_seq_norm(a: &[f64], q: f64) -> Result<NormResult> {
    check_exponent(q)?;
    if q.is_infinite() {
        return Err(Error::Param("weak sequence norm requires finite q".into()));
    }
    let mut sorted: Vec<f64> = a.iter().map(|v| v.abs()).collect();
    sorted.sort_by(|x, y| y.partial_cmp(x).unwrap());
    let mut best = 0.0f64;
    for (m, v) in sorted.iter().enumerate() {
        best = best.max(((m + 1) as f64).powf(1.0 / q) * v);
    }
    NormResult::new(best, format!("l{},inf", fmt_exp(q)), vec![q], 0.0)
}

/// Sobolev norm `((2 pi)^{-n} integral <xi>^{2s} |F f|^2 d xi)^{1/2}`; the
/// normalization makes `s = 0` reproduce the L2 norm.
pub fn sobolev_norm(f: &SampledField, s: f64) -> Result<NormResult> {
    let grid = f.grid();
    let dim = grid.dim();
    let hat = hat_of(f)?;
    let coords = grid.freq_coords();
    let w = grid.freq_axis().step().powi(dim as i32)
        / (2.0 * std::f64::consts::PI).powi(dim as i32);
    let mut acc = 0.0;
    for (j, v) in hat.iter().enumerate() {
        let p = &coords[j * dim..(j + 1) * dim];
        let bracket = 1.0 + p.iter().map(|t| t * t).sum::<f64>();
        acc += bracket.powf(s) * v.norm_sqr() * w;
    }
    NormResult::new(acc.sqrt(), format!("H^{s}"), vec![s], grid.freq_axis().step())
}

/// Norm value shorthand used all over the harness.
pub fn hs_norm_of_hat(hat: &[Complex64], coords: &[f64], dim: usize, step: f64, s: f64) -> f64 {
    let w = step.powi(dim as i32) / (2.0 * std::f64::consts::PI).powi(dim as i32);
    let mut acc = 0.0;
    for (j, v) in hat.iter().enumerate() {
        let p = &coords[j * dim..(j + 1) * dim];
        let bracket = 1.0 + p.iter().map(|t| t * t).sum::<f64>();
        acc += bracket.powf(s) * v.norm_sqr() * w;
    }
    acc.sqrt()
}

// ---------------------------------------------------------------------------
// Cube-lattice norms
// ---------------------------------------------------------------------------

/// Integer cube lattice covering an axis window `[-halfwidth, halfwidth)`:
/// translates `nu` with `[nu - 1/2, nu + 1/2)` meeting the window, i.e.
/// `nu in [-halfwidth, halfwidth]` (both edge cubes are half cubes, so every
/// sample lands in exactly one cube).
fn cube_range(halfwidth: i64) -> std::ops::RangeInclusive<i64> {
    -halfwidth..=halfwidth
}

fn cube_index_of(x: f64) -> i64 {
    (x + 0.5).floor() as i64
}

/// Per-cube `L^p(Q + nu)` norms combined in `ell^q` over the cube lattice.
pub fn amalgam_norm(f: &SampledField, p: f64, q: f64) -> Result<NormResult> {
    check_exponent(p)?;
    check_exponent(q)?;
    if f.domain() != Domain::Space {
        return Err(Error::Domain { expected: "space", got: "frequency" });
    }
    let grid = f.grid();
    let dim = grid.dim();
    let half = grid.space_axis().halfwidth_int();
    let side = (2 * half + 1) as usize;
    let cubes = side.pow(dim as u32);
    let coords = grid.space_coords();
    let w = f.quad_weight();
    // Accumulate L^p mass (or sup) per cube.
    let mut acc = vec![0.0f64; cubes];
    for (i, v) in f.values().iter().enumerate() {
        let point = &coords[i * dim..(i + 1) * dim];
        let mut cube = 0usize;
        for t in point {
            let c = (cube_index_of(*t) + half) as usize;
            cube = cube * side + c;
        }
        let a = v.norm();
        if p.is_infinite() {
            acc[cube] = acc[cube].max(a);
        } else {
            acc[cube] += a.powf(p) * w;
        }
    }
    let locals = acc.iter().map(|m| if p.is_infinite() { *m } else { m.powf(1.0 / p) });
    let value = if q.is_infinite() {
        locals.fold(0.0f64, f64::max)
    } else {
        locals.map(|l| l.powf(q)).sum::<f64>().powf(1.0 / q)
    };
    NormResult::new(
        value,
        format!("(L{},l{})", fmt_exp(p), fmt_exp(q)),
        vec![p, q],
        grid.space_axis().step(),
    )
}

/// Uniformly-local L2: sup over lattice translates of the unit-cube L2 norm.
pub fn uniform_local_l2(f: &SampledField) -> Result<NormResult> {
    let r = amalgam_norm(f, 2.0, f64::INFINITY)?;
    NormResult::new(r.value, "L2ul", vec![], r.quad_error_hint)
}

/// Uniformly-local L2 of a symbol: cubes run over all three variables
/// jointly.
pub fn uniform_local_l2_symbol(symbol: &SampledSymbol) -> Result<NormResult> {
    let grid = symbol.grid();
    if grid.dim() != 1 {
        return Err(Error::Dim { dim: grid.dim(), why: "symbol norms support dimension 1" });
    }
    let (nx, nf, _) = symbol.dims();
    let xhalf = grid.space_axis().halfwidth_int();
    let fhalf = grid.freq_axis().halfwidth_int();
    let xside = (2 * xhalf + 1) as usize;
    let fside = (2 * fhalf + 1) as usize;
    let xs = grid.space_coords();
    let xis = grid.freq_coords();
    let w = grid.space_axis().step() * grid.freq_axis().step() * grid.freq_axis().step();
    let xcube: Vec<usize> = xs.iter().map(|t| (cube_index_of(*t) + xhalf) as usize).collect();
    let fcube: Vec<usize> = xis.iter().map(|t| (cube_index_of(*t) + fhalf) as usize).collect();
    let mut acc = vec![0.0f64; xside * fside * fside];
    for m in 0..nx {
        let block = &symbol.values()[m * nf * nf..(m + 1) * nf * nf];
        let cx = xcube[m];
        for j1 in 0..nf {
            let base = (cx * fside + fcube[j1]) * fside;
            let row = &block[j1 * nf..(j1 + 1) * nf];
            for j2 in 0..nf {
                acc[base + fcube[j2]] += row[j2].norm_sqr() * w;
            }
        }
    }
    let value = acc.iter().fold(0.0f64, |m, v| m.max(*v)).sqrt();
    NormResult::new(value, "L2ul", vec![], grid.space_axis().step())
}

// ---------------------------------------------------------------------------
// Modulation norms
// ---------------------------------------------------------------------------

/// Modulation norm of a field: partition pieces `phi(D - k) f` in `L^p`,
/// then `ell^q` over the lattice window meeting the frequency grid.
///
/// Requires a checked Fourier support radius `<= Xi - 2` so the lattice sum
/// is complete on-grid.
pub fn modulation_norm(
    f: &SampledField,
    p: f64,
    q: f64,
    pair: &DecompPair,
) -> Result<NormResult> {
    check_exponent(p)?;
    check_exponent(q)?;
    let grid = f.grid();
    let bound = grid.freq_axis().halfwidth() - 2.0;
    match f.fsupp_radius() {
        Some(r) if r <= bound + 1e-12 => {}
        got => {
            return Err(Error::Param(format!(
                "modulation norm requires checked Fourier support <= {bound}, got {got:?}"
            )))
        }
    }
    let half = grid.freq_axis().halfwidth_int();
    let dim = grid.dim();
    let mut piece_norms = Vec::new();
    let mut lattice = vec![0i64; dim];
    loop {
        let mask = pair.phi_mask(grid, &lattice);
        let piece = multiplier_apply(&mask, f, false)?;
        piece_norms.push(lp_norm(&piece, p, None)?.value);
        // Advance the lattice multi-index over [-half, half]^dim.
        let mut carry = true;
        for slot in lattice.iter_mut() {
            if !carry {
                break;
            }
            *slot += 1;
            if *slot > half {
                *slot = -half;
            } else {
                carry = false;
            }
        }
        if carry {
            break;
        }
    }
    let value = combine_lq(piece_norms.into_iter(), q);
    NormResult::new(
        value,
        format!("M^{{{},{}}}", fmt_exp(p), fmt_exp(q)),
        vec![p, q],
        grid.freq_axis().step(),
    )
}

/// Modulation norm of a symbol: the tensor partition acts in all three
/// frequency variables; pieces below the energy drop threshold contribute
/// nothing and are skipped.
pub fn modulation_norm_symbol(
    symbol: &SampledSymbol,
    p: f64,
    q: f64,
    pair: &DecompPair,
) -> Result<NormResult> {
    let set = SymbolBoxSet::new(symbol)?;
    modulation_norm_symbol_from_set(&set, symbol, p, q, pair)
}

/// Same as [`modulation_norm_symbol`] but reusing a precomputed spectrum.
pub fn modulation_norm_symbol_from_set(
    set: &SymbolBoxSet,
    symbol: &SampledSymbol,
    p: f64,
    q: f64,
    pair: &DecompPair,
) -> Result<NormResult> {
    check_exponent(p)?;
    check_exponent(q)?;
    let grid = symbol.grid();
    let w = grid.space_axis().step() * grid.freq_axis().step() * grid.freq_axis().step();
    let mut piece_norms = Vec::new();
    for (k, energy) in set.energies() {
        if *energy < PIECE_DROP_ENERGY {
            continue;
        }
        let piece = set.piece(*k, pair);
        let norm = if p.is_infinite() {
            piece.values().iter().map(|v| v.norm()).fold(0.0f64, f64::max)
        } else {
            piece
                .values()
                .iter()
                .map(|v| v.norm().powf(p) * w)
                .sum::<f64>()
                .powf(1.0 / p)
        };
        piece_norms.push(norm);
    }
    let value = combine_lq(piece_norms.into_iter(), q);
    NormResult::new(
        value,
        format!("M^{{{},{}}}", fmt_exp(p), fmt_exp(q)),
        vec![p, q],
        grid.freq_axis().step(),
    )
}

fn combine_lq(values: impl Iterator<Item = f64>, q: f64) -> f64 {
    if q.is_infinite() {
        values.fold(0.0f64, f64::max)
    } else {
        values.map(|v| v.powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

// ---------------------------------------------------------------------------
// Local Hardy norm
// ---------------------------------------------------------------------------

/// Default dyadic scale set for the local Hardy maximal function.
pub fn default_hardy_scales() -> Vec<f64> {
    (0..=8).map(|j| 0.5f64.powi(j)).collect()
}

/// `L^1` norm of `max_t |phi_t * f|` over the given scales, with a fixed
/// normalized Gaussian window. Discrete kernels are renormalized to unit
/// mass so scales below the grid step degrade to the identity average
/// instead of a mis-scaled quadrature.
pub fn local_hardy_norm(f: &SampledField, scales: &[f64]) -> Result<NormResult> {
    if scales.is_empty() {
        return Err(Error::Param("local Hardy norm needs at least one scale".into()));
    }
    if f.domain() != Domain::Space {
        return Err(Error::Domain { expected: "space", got: "frequency" });
    }
    let grid = f.grid();
    if grid.dim() != 1 {
        return Err(Error::Dim { dim: grid.dim(), why: "local Hardy norm supports dimension 1" });
    }
    let n = grid.space_len();
    let h = grid.space_axis().step();
    let mut best = vec![0.0f64; n];
    for t in scales {
        if !(*t > 0.0 && *t < 1.0 + 1e-12) {
            return Err(Error::Param(format!("Hardy scale {t} outside (0, 1]")));
        }
        // Normalized discrete Gaussian kernel on lag indices.
        let reach = ((4.0 * t / h).ceil() as i64).max(1);
        let mut kernel = Vec::with_capacity((2 * reach + 1) as usize);
        let mut mass = 0.0;
        for lag in -reach..=reach {
            let u = lag as f64 * h / t;
            let v = (-u * u).exp();
            kernel.push(v);
            mass += v;
        }
        for v in kernel.iter_mut() {
            *v /= mass;
        }
        for i in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for (o, kv) in kernel.iter().enumerate() {
                let j = i as i64 + o as i64 - reach;
                if j >= 0 && (j as usize) < n {
                    acc += f.values()[j as usize] * *kv;
                }
            }
            best[i] = best[i].max(acc.norm());
        }
    }
    let value = best.iter().sum::<f64>() * h;
    NormResult::new(value, "h1", vec![scales.len() as f64], h)
}

// ---------------------------------------------------------------------------
// Ordered mixed norms
// ---------------------------------------------------------------------------

/// One reduction step of a mixed norm: exponent plus quadrature weight per
/// index (weight 1 gives a sequence norm, the grid step an integral norm).
#[derive(Debug, Clone, Copy)]
pub struct AxisNorm {
    pub axis: usize,
    pub p: f64,
    pub weight: f64,
}

/// Mixed norm of a 3-index array, reduced innermost-first in the order
/// given (the order matters unless all exponents coincide).
pub fn mixed_norm(
    data: &[Complex64],
    dims: (usize, usize, usize),
    spec: &[AxisNorm],
) -> Result<NormResult> {
    let (n0, n1, n2) = dims;
    if data.len() != n0 * n1 * n2 {
        return Err(Error::Shape(format!(
            "mixed norm data has {} entries, dims give {}",
            data.len(),
            n0 * n1 * n2
        )));
    }
    let mut seen = [false; 3];
    for an in spec {
        if an.axis > 2 || seen[an.axis] {
            return Err(Error::Param(format!(
                "mixed norm spec must cover each axis exactly once (axis {})",
                an.axis
            )));
        }
        check_exponent(an.p)?;
        seen[an.axis] = true;
    }
    if !seen.iter().all(|s| *s) {
        return Err(Error::Param("mixed norm spec must cover all three axes".into()));
    }
    let mut work: Vec<f64> = data.iter().map(|v| v.norm()).collect();
    let mut cur = [n0, n1, n2];
    for an in spec {
        work = reduce_axis(&work, cur, an.axis, an.p, an.weight);
        cur[an.axis] = 1;
    }
    debug_assert_eq!(work.len(), 1);
    NormResult::new(work[0], "mixed", spec.iter().map(|a| a.p).collect(), 0.0)
}

fn reduce_axis(values: &[f64], dims: [usize; 3], axis: usize, p: f64, weight: f64) -> Vec<f64> {
    let [d0, d1, d2] = dims;
    let (outer, mid, inner) = (d0, d1, d2);
    let mut out = Vec::new();
    match axis {
        0 => {
            out.resize(mid * inner, 0.0);
            for b in 0..mid {
                for c in 0..inner {
                    let it = (0..outer).map(|a| values[(a * mid + b) * inner + c]);
                    out[b * inner + c] = fold_p(it, p, weight);
                }
            }
            out
        }
        1 => {
            out.resize(outer * inner, 0.0);
            for a in 0..outer {
                for c in 0..inner {
                    let it = (0..mid).map(|b| values[(a * mid + b) * inner + c]);
                    out[a * inner + c] = fold_p(it, p, weight);
                }
            }
            // Re-pack as (outer, 1, inner) row-major = same layout.
            out
        }
        _ => {
            out.resize(outer * mid, 0.0);
            for a in 0..outer {
                for b in 0..mid {
                    let it = (0..inner).map(|c| values[(a * mid + b) * inner + c]);
                    out[a * mid + b] = fold_p(it, p, weight);
                }
            }
            out
        }
    }
}

fn fold_p(values: impl Iterator<Item = f64>, p: f64, weight: f64) -> f64 {
    if p.is_infinite() {
        values.fold(0.0f64, f64::max)
    } else {
        (values.map(|v| v.powf(p)).sum::<f64>() * weight).powf(1.0 / p)
    }
}
