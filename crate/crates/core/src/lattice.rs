//! Target correlation structure on `Z^d`: the radial distribution `g^(α)`,
//! the structure function and the two necessary conditions for
//! realizability (structure-function positivity and the Yamada bound on
//! site-count variance).

use std::f64::consts::PI;

use crate::bounds::upper_r_f;
use crate::error::{invalid, Error, Result};

/// Integer lattice displacement.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticeVector(Vec<i64>);

impl LatticeVector {
    pub fn new(coords: Vec<i64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(invalid("lattice vector must have dimension >= 1"));
        }
        Ok(Self(coords))
    }

    pub fn zero(dim: usize) -> Self {
        Self(vec![0; dim.max(1)])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    /// Exact squared Euclidean norm.
    pub fn norm_sq(&self) -> i128 {
        self.0.iter().map(|&c| (c as i128) * (c as i128)).sum()
    }

    /// Sup norm.
    pub fn norm_inf(&self) -> u64 {
        self.0.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn neg(&self) -> Self {
        Self(self.0.iter().map(|c| -c).collect())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self(
            self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect(),
        ))
    }
}

impl std::fmt::Display for LatticeVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// The target pair `(ρ, g^(α))` on `Z^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialSpec {
    alpha: f64,
    rho: f64,
    dim: usize,
}

impl RadialSpec {
    pub fn new(alpha: f64, rho: f64, dim: usize) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(invalid(format!(
                "alpha must be finite and >= 0, got {alpha}"
            )));
        }
        if !(0.0..=1.0).contains(&rho) {
            return Err(invalid(format!("rho must lie in [0,1], got {rho}")));
        }
        if dim == 0 {
            return Err(invalid("dimension must be >= 1"));
        }
        Ok(Self { alpha, rho, dim })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Target value of `⟨P_i P_{i+x}⟩`, including the on-site atom `ρ` at `x = 0`.
    pub fn pair_target(&self, x: &LatticeVector) -> Result<f64> {
        check_dim(self.dim, x.dim())?;
        if x.is_zero() {
            Ok(self.rho)
        } else {
            Ok(self.rho * self.rho * eval_g_alpha(self.alpha, x)?)
        }
    }
}

/// Rectangular window of the lattice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoxRegion {
    side_lengths: Vec<usize>,
    origin: LatticeVector,
}

impl BoxRegion {
    pub fn new(side_lengths: Vec<usize>, origin: LatticeVector) -> Result<Self> {
        if side_lengths.is_empty() {
            return Err(invalid("box must have dimension >= 1"));
        }
        if side_lengths.contains(&0) {
            return Err(invalid("box side lengths must be >= 1"));
        }
        check_dim(side_lengths.len(), origin.dim())?;
        Ok(Self {
            side_lengths,
            origin,
        })
    }

    /// Box anchored at the origin.
    pub fn with_sides(side_lengths: Vec<usize>) -> Result<Self> {
        let d = side_lengths.len();
        Self::new(side_lengths, LatticeVector::zero(d))
    }

    pub fn cube(side: usize, dim: usize) -> Result<Self> {
        Self::with_sides(vec![side; dim])
    }

    pub fn dim(&self) -> usize {
        self.side_lengths.len()
    }

    pub fn side_lengths(&self) -> &[usize] {
        &self.side_lengths
    }

    pub fn origin(&self) -> &LatticeVector {
        &self.origin
    }

    pub fn site_count(&self) -> u128 {
        self.side_lengths.iter().map(|&l| l as u128).product()
    }

    /// Number of unordered nearest-neighbour pairs inside the box,
    /// `Σ_m (L_m − 1) Π_{m'≠m} L_{m'}`.
    pub fn nearest_neighbor_pairs(&self) -> u128 {
        let sites = self.site_count();
        self.side_lengths
            .iter()
            .map(|&l| sites / l as u128 * (l as u128 - 1))
            .sum()
    }
}

/// Wave vector `k`, radians per lattice spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveVector(Vec<f64>);

impl WaveVector {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(invalid("wave vector must have dimension >= 1"));
        }
        if components.iter().any(|c| !c.is_finite()) {
            return Err(invalid("wave vector components must be finite"));
        }
        Ok(Self(components))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[f64] {
        &self.0
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

/// `g^(α)(x)`: 0 at the origin, `α` on the `2d` unit vectors, 1 elsewhere.
pub fn eval_g_alpha(alpha: f64, x: &LatticeVector) -> Result<f64> {
    if x.dim() == 0 {
        return Err(invalid("dimension-zero vector"));
    }
    if !(alpha >= 0.0) {
        return Err(invalid(format!("alpha must be >= 0, got {alpha}")));
    }
    Ok(match x.norm_sq() {
        0 => 0.0,
        1 => alpha,
        _ => 1.0,
    })
}

/// `f_α(k) = 1 − 2(α−1) Σ_j cos k_j`.
pub fn eval_f_alpha(alpha: f64, k: &WaveVector) -> f64 {
    let cos_sum: f64 = k.0.iter().map(|c| c.cos()).sum();
    1.0 - 2.0 * (alpha - 1.0) * cos_sum
}

/// Closed form of the structure function, `Ŝ(k) = ρ[1 − ρ f_α(k)]`.
pub fn eval_structure_function(spec: &RadialSpec, k: &WaveVector) -> Result<f64> {
    check_dim(spec.dim, k.dim())?;
    let rho = spec.rho;
    Ok(rho * (1.0 - rho * eval_f_alpha(spec.alpha, k)))
}

/// `R_F(α,d) − ρ`; nonnegative iff `Ŝ ≥ 0` everywhere.
pub fn psd_margin(spec: &RadialSpec) -> f64 {
    upper_r_f(spec.alpha, spec.dim) - spec.rho
}

/// Minimum of `Ŝ` over a tensor grid of `[−π, π]^d`.
///
/// Each axis carries `points_per_axis` uniform nodes (always including 0 and
/// π) plus extra nodes at distances 1e-3 and 1e-6 from 0 and ±π.
pub fn structure_function_grid_min(spec: &RadialSpec, points_per_axis: usize) -> f64 {
    let axis = refined_axis_grid(points_per_axis);
    let d = spec.dim;
    let mut idx = vec![0usize; d];
    let mut best = f64::INFINITY;
    loop {
        let k = WaveVector(idx.iter().map(|&i| axis[i]).collect());
        let s = eval_structure_function(spec, &k).expect("dimensions agree");
        best = best.min(s);
        let mut m = 0;
        loop {
            if m == d {
                return best;
            }
            idx[m] += 1;
            if idx[m] < axis.len() {
                break;
            }
            idx[m] = 0;
            m += 1;
        }
    }
}

fn refined_axis_grid(points: usize) -> Vec<f64> {
    let n = points.max(4);
    let mut axis: Vec<f64> = (0..=n)
        .map(|j| -PI + 2.0 * PI * j as f64 / n as f64)
        .collect();
    axis.push(0.0);
    axis.push(PI);
    for eps in [1e-3, 1e-6] {
        axis.extend_from_slice(&[eps, -eps, PI - eps, -PI + eps]);
    }
    axis.sort_by(f64::total_cmp);
    axis.dedup();
    axis
}

/// Variance of the site count `N_Λ` in a box for any process realizing `spec`:
/// `ρ|Λ|(1−ρ) + 2ρ²(α−1)·#{nearest-neighbour pairs in Λ}`.
pub fn number_variance(spec: &RadialSpec, region: &BoxRegion) -> Result<f64> {
    check_dim(spec.dim, region.dim())?;
    let rho = spec.rho;
    let sites = region.site_count() as f64;
    let pairs = region.nearest_neighbor_pairs() as f64;
    Ok(rho * sites * (1.0 - rho) + 2.0 * rho * rho * (spec.alpha - 1.0) * pairs)
}

/// Yamada inequality `Var(N_Λ) ≥ θ(1−θ)`, `θ = frac(ρ|Λ|)`.
pub fn yamada_holds(spec: &RadialSpec, region: &BoxRegion) -> Result<bool> {
    const SLACK: f64 = 1e-12;
    let var = number_variance(spec, region)?;
    let mean = spec.rho * region.site_count() as f64;
    let theta = mean - mean.floor();
    Ok(var + SLACK >= theta * (1.0 - theta))
}
