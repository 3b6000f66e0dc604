//! Upper and lower bounds on the maximal realizable density `ρ̄_α(d)`.

use std::f64::consts::E;

use crate::error::{invalid, Result};
use crate::lattice::{yamada_holds, BoxRegion, RadialSpec};

/// Structure-function upper bound `R_F(α,d) = 1 / (1 + 2d|1−α|)`.
pub fn upper_r_f(alpha: f64, d: usize) -> f64 {
    1.0 / (1.0 + 2.0 * d as f64 * (1.0 - alpha).abs())
}

/// General-method lower bound `r_A(α,d)`.
///
/// Discontinuous at `α = 1`: the left limit is `1/e`, the value is 1.
pub fn lower_r_a(alpha: f64, d: usize) -> f64 {
    let d = d as f64;
    if alpha < 1.0 {
        1.0 / (E * (2.0 * d + 1.0 - 2.0 * d * alpha))
    } else {
        alpha.powf(-2.0 * d)
    }
}

/// Lower bound on `ρ̄_α(1)` from the explicit one-dimensional constructions.
pub fn lower_1d(alpha: f64) -> f64 {
    if alpha < 0.5 {
        let s = 1.0 + (1.0 - alpha).sqrt();
        1.0 / (s * s)
    } else if alpha <= 1.0 {
        1.0 / (1.0 + (2.0 - 2.0 * alpha).sqrt())
    } else {
        1.0 / (2.0 * alpha - 1.0)
    }
}

/// Product-construction lower bound `r_C(α,d) = lower_1d(α)^d`, `d ≥ 2`.
pub fn lower_r_c(alpha: f64, d: usize) -> Result<f64> {
    if d < 2 {
        return Err(invalid("r_C is defined for d >= 2"));
    }
    Ok(lower_1d(alpha).powi(d as i32))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha >= 0.0 {
        Ok(())
    } else {
        Err(invalid(format!(
            "alpha must be finite and >= 0, got {alpha}"
        )))
    }
}

/// All bound values for one `(α, d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport {
    pub alpha: f64,
    pub dim: usize,
    pub r_f: f64,
    pub r_a: f64,
    /// Absent for `d = 1`.
    pub r_c: Option<f64>,
    pub lower_1d: f64,
    pub ratio_c: Option<f64>,
    pub ratio_a: f64,
}

impl BoundsReport {
    pub fn new(alpha: f64, dim: usize) -> Result<Self> {
        check_alpha(alpha)?;
        if dim == 0 {
            return Err(invalid("dimension must be >= 1"));
        }
        let r_f = upper_r_f(alpha, dim);
        let r_a = lower_r_a(alpha, dim);
        let r_c = lower_r_c(alpha, dim).ok();
        Ok(Self {
            alpha,
            dim,
            r_f,
            r_a,
            r_c,
            lower_1d: lower_1d(alpha),
            ratio_c: r_c.map(|c| c / r_f),
            ratio_a: r_a / r_f,
        })
    }
}

/// Outcome of the crossover search on `[1/2, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Crossover {
    /// `r_C ≥ r_A` on the whole interval; the value is `1/2`.
    Boundary(f64),
    /// Sign change of `r_C − r_A` located by bisection.
    Interior(f64),
}

impl Crossover {
    pub fn alpha(&self) -> f64 {
        match *self {
            Crossover::Boundary(a) | Crossover::Interior(a) => a,
        }
    }
}

const CROSSOVER_SCAN_STEP: f64 = 1e-3;
const CROSSOVER_MAX_ITER: usize = 200;

fn crossover_gap(alpha: f64, d: usize) -> f64 {
    lower_1d(alpha).powi(d as i32) - lower_r_a(alpha, d)
}

/// Smallest `α_C(d) ∈ [1/2, 1]` above which `r_C ≥ r_A`.
///
/// The gap `h = r_C − r_A` is scanned on a 1e-3 grid from the left; the
/// leftmost negative-to-nonnegative transition is refined by bisection until
/// the bracket is below `tol`. `h(1) = 0` always, so the scan stops short
/// of 1.
pub fn crossover_alpha_c(d: usize, tol: f64) -> Result<Crossover> {
    if d < 2 {
        return Err(invalid("crossover is defined for d >= 2"));
    }
    if !(tol > 0.0) {
        return Err(invalid("tol must be positive"));
    }
    let steps = (0.5 / CROSSOVER_SCAN_STEP).round() as usize;
    let grid = |i: usize| 0.5 + i as f64 * CROSSOVER_SCAN_STEP;

    let mut last_negative = None;
    for i in 0..steps {
        let a = grid(i);
        if crossover_gap(a, d) < 0.0 {
            last_negative = Some(i);
        } else if let Some(j) = last_negative {
            let (mut lo, mut hi) = (grid(j), a);
            for _ in 0..CROSSOVER_MAX_ITER {
                if hi - lo <= tol {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                if crossover_gap(mid, d) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(Crossover::Interior(hi));
        }
    }
    match last_negative {
        None => Ok(Crossover::Boundary(0.5)),
        // Negative right up to the last grid point below 1: the switch is the
        // jump of r_A at α = 1 itself.
        Some(_) => Ok(Crossover::Interior(1.0)),
    }
}

/// One row of the bound-ratio table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioRow {
    pub alpha: f64,
    pub dim: usize,
    pub ratio_c: f64,
    pub ratio_a: f64,
}

/// `α` grid `0, s, 2s, …` strictly below 1.
pub fn alpha_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 0.5) {
        return Err(invalid(format!(
            "alpha step must lie in (0, 0.5], got {step}"
        )));
    }
    let n = (1.0 / step - 1e-9).ceil() as usize;
    Ok((0..n)
        .map(|i| i as f64 * step)
        .filter(|&a| a < 1.0)
        .collect())
}

/// Ratios `r_C/R_F` and `r_A/R_F`, rows sorted by `(d, α)`.
pub fn figure4_table(dims: &[usize], alphas: &[f64]) -> Result<Vec<RatioRow>> {
    if let Some(&a) = alphas.iter().find(|a| !(0.0..1.0).contains(*a)) {
        return Err(invalid(format!("alpha grid must lie in [0,1), got {a}")));
    }
    let mut dims = dims.to_vec();
    dims.sort_unstable();
    dims.dedup();
    let mut alphas = alphas.to_vec();
    alphas.sort_by(f64::total_cmp);
    let mut rows = Vec::with_capacity(dims.len() * alphas.len());
    for &d in &dims {
        for &alpha in &alphas {
            let r_f = upper_r_f(alpha, d);
            rows.push(RatioRow {
                alpha,
                dim: d,
                ratio_c: lower_r_c(alpha, d)? / r_f,
                ratio_a: lower_r_a(alpha, d) / r_f,
            });
        }
    }
    Ok(rows)
}

/// Why the one-dimensional Yamada search stopped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum YamadaLimit {
    /// Every grid point up to `R_F(α,1)` passed.
    StructureFunction,
    /// The Yamada inequality failed on an interval of length `n` at density `rho`.
    Interval { n: usize, rho: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YamadaReport {
    pub alpha: f64,
    pub n_max: usize,
    pub step: f64,
    pub r_y: f64,
    pub r_f: f64,
    pub limit: YamadaLimit,
}

/// Numerical Yamada upper bound on `ρ̄_α(1)`.
///
/// Scans `ρ = 0, step, 2·step, …` up to `R_F(α,1)` (appended as the last
/// candidate) and returns the last density before the first one whose
/// Yamada inequality fails on some interval of length `2 ≤ n ≤ n_max`.
pub fn yamada_upper_1d(alpha: f64, n_max: usize, step: f64) -> Result<YamadaReport> {
    check_alpha(alpha)?;
    if n_max < 2 {
        return Err(invalid("n_max must be >= 2"));
    }
    if !(step > 0.0 && step <= 1.0) {
        return Err(invalid("rho grid step must lie in (0, 1]"));
    }
    let r_f = upper_r_f(alpha, 1);
    let intervals: Vec<BoxRegion> = (2..=n_max)
        .map(|n| BoxRegion::with_sides(vec![n]))
        .collect::<Result<_>>()?;

    let mut candidates: Vec<f64> = (0..)
        .map(|i| i as f64 * step)
        .take_while(|&rho| rho < r_f)
        .collect();
    candidates.push(r_f);

    let mut best = 0.0;
    for rho in candidates {
        let spec = RadialSpec::new(alpha, rho, 1)?;
        for (region, n) in intervals.iter().zip(2..) {
            if !yamada_holds(&spec, region)? {
                return Ok(YamadaReport {
                    alpha,
                    n_max,
                    step,
                    r_y: best,
                    r_f,
                    limit: YamadaLimit::Interval { n, rho },
                });
            }
        }
        best = rho;
    }
    Ok(YamadaReport {
        alpha,
        n_max,
        step,
        r_y: best,
        r_f,
        limit: YamadaLimit::StructureFunction,
    })
}

/// Constants quoted for `ρ̄_0(1)` from sharper one-dimensional work.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceConstants {
    /// `ρ̄_0(1) > 0.265`.
    pub lower_alpha0_d1: f64,
    /// `ρ̄_0(1) < (326 − √3115)/822`.
    pub upper_alpha0_d1: f64,
}

pub fn reference_constants() -> ReferenceConstants {
    ReferenceConstants {
        lower_alpha0_d1: 0.265,
        upper_alpha0_d1: (326.0 - 3115f64.sqrt()) / 822.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn upper_examples() {
        assert_eq!(upper_r_f(0.0, 2), 0.2);
        for d in 1..7 {
            assert_eq!(upper_r_f(1.0, d), 1.0);
        }
        assert!((upper_r_f(2.0, 1) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn lower_a_examples() {
        assert!((lower_r_a(0.0, 1) - 1.0 / (3.0 * E)).abs() < 1e-15);
        assert!((lower_r_a(0.0, 1) - 0.1226).abs() < 1e-4);
        assert_eq!(lower_r_a(1.0, 4), 1.0);
        assert_eq!(lower_r_a(2.0, 1), 0.25);
        // recorded discontinuity at α = 1
        assert!((lower_r_a(1.0 - 1e-12, 3) - 1.0 / E).abs() < 1e-9);
    }

    #[test]
    fn lower_1d_examples() {
        assert_eq!(lower_1d(0.0), 0.25);
        assert_eq!(lower_1d(1.0), 1.0);
        assert_eq!(lower_1d(0.5), 0.5);
        assert_eq!(lower_1d(3.0), 0.2);
    }

    #[test]
    fn lower_c_examples() {
        assert_eq!(lower_r_c(0.0, 2).unwrap(), 0.0625);
        assert_eq!(lower_r_c(1.0, 5).unwrap(), 1.0);
        assert!((lower_r_c(2.0, 3).unwrap() - 1.0 / 27.0).abs() < 1e-15);
        assert!(lower_r_c(0.3, 1).is_err());
    }

    #[test]
    fn report_for_d1_has_no_r_c() {
        let r = BoundsReport::new(0.0, 1).unwrap();
        assert!(r.r_c.is_none() && r.ratio_c.is_none());
        assert!(BoundsReport::new(-1.0, 2).is_err());
        assert!(BoundsReport::new(0.5, 0).is_err());
    }

    #[test]
    fn crossover_d2_is_boundary() {
        // h(1/2) = 1/4 − 1/(3e) > 0
        assert!(crossover_gap(0.5, 2) > 0.0);
        assert_eq!(
            crossover_alpha_c(2, 1e-12).unwrap(),
            Crossover::Boundary(0.5)
        );
        assert!(crossover_alpha_c(1, 1e-12).is_err());
    }

    #[test]
    fn crossover_d6_interior() {
        let c = crossover_alpha_c(6, 1e-12).unwrap();
        let Crossover::Interior(a) = c else {
            panic!("expected interior crossover, got {c:?}")
        };
        assert!((0.5..1.0).contains(&a));
        assert!(crossover_gap(a, 6).abs() <= 1e-10);
        assert!(crossover_gap(a - 1e-3, 6) < 0.0);
    }

    #[test]
    fn alpha_grids() {
        assert_eq!(alpha_grid(0.5).unwrap(), vec![0.0, 0.5]);
        assert_eq!(alpha_grid(0.01).unwrap().len(), 100);
        assert_eq!(alpha_grid(0.25).unwrap().len(), 4);
        assert!(alpha_grid(0.0).is_err());
        assert!(alpha_grid(0.6).is_err());
    }

    #[test]
    fn figure4_rows() {
        let rows = figure4_table(&[3, 2], &[0.5, 0.0]).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!((rows[0].dim, rows[0].alpha), (2, 0.0));
        assert!((rows[0].ratio_c - 5.0 / 16.0).abs() < 1e-15);
        assert_eq!((rows[3].dim, rows[3].alpha), (3, 0.5));
        for r in &rows {
            assert!((r.ratio_a - 1.0 / E).abs() < 1e-12);
        }
        assert!(figure4_table(&[2], &[1.0]).is_err());
        assert!(figure4_table(&[1], &[0.0]).is_err());
        let near_one = figure4_table(&[4], &[1.0 - 1e-12]).unwrap();
        assert!((near_one[0].ratio_c - 1.0).abs() < 1e-5);
    }

    #[test]
    fn yamada_alpha_one_is_one() {
        let r = yamada_upper_1d(1.0, 256, 1e-4).unwrap();
        assert_eq!(r.r_y, 1.0);
        assert_eq!(r.limit, YamadaLimit::StructureFunction);
    }

    #[test]
    fn yamada_alpha_point_three_is_strictly_below_r_f() {
        let r = yamada_upper_1d(0.3, 64, 1e-4).unwrap();
        assert!(r.r_y <= r.r_f);
        assert!(r.r_y < r.r_f - 1e-4, "{r:?}");
        assert!(matches!(r.limit, YamadaLimit::Interval { .. }));
    }

    #[test]
    fn yamada_monotone_in_n_max() {
        let mut prev = f64::INFINITY;
        for n in [2, 4, 8, 16, 64] {
            let r = yamada_upper_1d(0.1, n, 1e-3).unwrap().r_y;
            assert!(r <= prev);
            prev = r;
        }
    }

    #[test]
    fn reference_values() {
        let c = reference_constants();
        assert_eq!(c.lower_alpha0_d1, 0.265);
        assert_eq!(format!("{:.4}", c.upper_alpha0_d1), "0.3287");
        assert!(c.lower_alpha0_d1 < c.upper_alpha0_d1);
        assert!(c.upper_alpha0_d1 < upper_r_f(0.0, 1));
    }
}
