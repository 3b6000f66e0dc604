//! Replica-batched estimates of `⟨P_i⟩` and `⟨P_i P_{i+x}⟩` from sampled
//! boxes, and z-score consistency tests against a target `(ρ, g^(α))`.
//!
//! Within one box the translation averages are correlated, so the error bar
//! comes only from the spread across independent replicas. Averages run over
//! the core of the box (every side shrunk by the radius), where every pair
//! partner is inside the sampled region.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use statrs::function::erf::erfc;

use crate::error::{invalid, Error, Result};
use crate::format::fmt12;
use crate::lattice::{check_dim, BoxRegion, LatticeVector, RadialSpec};
use crate::product::{class_key, class_label, sup_ball, FieldSample, ProductProcessND};
use crate::rng::{derive_seed, stream};

/// Default z-score threshold.
pub const Z_MAX: f64 = 4.0;

/// Stream index for the thinning coin flips, disjoint from the axis indices
/// used by the field sampler.
const THIN_STREAM: u64 = u64::MAX;

/// Mean and standard error over replicas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub std_error: f64,
}

impl Stat {
    fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Self {
            mean,
            std_error: (var / n).sqrt(),
        }
    }

    /// `(mean − target)/SE`. With zero spread the score is 0 on an exact
    /// match and absent (infinite) otherwise.
    pub fn z_score(&self, target: f64) -> Option<f64> {
        let diff = self.mean - target;
        if self.std_error > 0.0 {
            Some(diff / self.std_error)
        } else if diff.abs() <= 1e-12 {
            Some(0.0)
        } else {
            None
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.std_error == 0.0
    }
}

/// Pair-expectation estimate for one displacement class (pooled over the
/// axis permutations and reflections of its representative).
#[derive(Debug, Clone, PartialEq)]
pub struct ClassEstimate {
    pub label: String,
    pub representative: LatticeVector,
    pub members: usize,
    pub stat: Stat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationEstimate {
    pub rho_hat: Stat,
    pub classes: Vec<ClassEstimate>,
    pub replicas: usize,
    pub radius: usize,
    pub core_box: BoxRegion,
    /// Target the estimate was produced for (the process' own `(ρ, α)`,
    /// scaled by the thinning probability when thinned).
    pub target: RadialSpec,
}

impl CorrelationEstimate {
    /// True when any statistic has zero replica spread.
    pub fn degenerate(&self) -> bool {
        self.rho_hat.is_degenerate() || self.classes.iter().any(|c| c.stat.is_degenerate())
    }

    /// Delimited rows: class label, displacement, estimate, standard error,
    /// target, z-score. The first row is the density.
    pub fn to_text(&self) -> Result<String> {
        let mut s = String::from("class,displacement,estimate,std_error,target,z_score\n");
        let z = |st: &Stat, t: f64| st.z_score(t).map_or("inf".to_string(), fmt12);
        let rho = self.target.rho();
        s.push_str(&format!(
            "density,-,{},{},{},{}\n",
            fmt12(self.rho_hat.mean),
            fmt12(self.rho_hat.std_error),
            fmt12(rho),
            z(&self.rho_hat, rho)
        ));
        for c in &self.classes {
            let t = self.target.pair_target(&c.representative)?;
            let disp: Vec<String> = c
                .representative
                .coords()
                .iter()
                .map(|v| v.to_string())
                .collect();
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                c.label,
                disp.join(";"),
                fmt12(c.stat.mean),
                fmt12(c.stat.std_error),
                fmt12(t),
                z(&c.stat, t)
            ));
        }
        Ok(s)
    }
}

struct ReplicaStats {
    rho: f64,
    classes: Vec<f64>,
}

struct Layout {
    sides: Vec<usize>,
    core_sites: Vec<usize>,
    /// `(offset, class index)` per displacement in the ball.
    offsets: Vec<(isize, usize)>,
    class_members: Vec<usize>,
    class_keys: Vec<Vec<u64>>,
}

impl Layout {
    fn new(region: &BoxRegion, radius: usize) -> Result<Self> {
        let sides = region.side_lengths().to_vec();
        let d = sides.len();
        if sides.iter().any(|&l| l <= 2 * radius) {
            return Err(Error::Degenerate(format!(
                "core of box {sides:?} shrunk by radius {radius} is empty"
            )));
        }
        let mut strides = vec![1usize; d];
        for m in (0..d.saturating_sub(1)).rev() {
            strides[m] = strides[m + 1] * sides[m + 1];
        }
        let total: usize = sides.iter().product();
        let core_sites = (0..total)
            .filter(|&f| {
                (0..d).all(|m| {
                    let c = (f / strides[m]) % sides[m];
                    c >= radius && c < sides[m] - radius
                })
            })
            .collect();

        let mut keys: BTreeMap<Vec<u64>, usize> = BTreeMap::new();
        let ball = sup_ball(d, radius as i64);
        for x in &ball {
            keys.entry(class_key(x)).or_insert(0);
        }
        for (i, v) in keys.values_mut().enumerate() {
            *v = i;
        }
        let mut class_members = vec![0; keys.len()];
        let offsets = ball
            .iter()
            .map(|x| {
                let class = keys[&class_key(x)];
                class_members[class] += 1;
                let off: isize = x
                    .coords()
                    .iter()
                    .zip(&strides)
                    .map(|(&c, &s)| c as isize * s as isize)
                    .sum();
                (off, class)
            })
            .collect();
        Ok(Self {
            sides,
            core_sites,
            offsets,
            class_members,
            class_keys: keys.into_keys().collect(),
        })
    }

    fn core_box(&self, radius: usize) -> Result<BoxRegion> {
        BoxRegion::new(
            self.sides.iter().map(|l| l - 2 * radius).collect(),
            LatticeVector::new(vec![radius as i64; self.sides.len()])?,
        )
    }

    fn measure(&self, values: &[u8]) -> ReplicaStats {
        let n = self.core_sites.len() as f64;
        let mut sums = vec![0u64; self.class_members.len()];
        let mut occupied = 0u64;
        for &site in &self.core_sites {
            if values[site] == 0 {
                continue;
            }
            occupied += 1;
            for &(off, class) in &self.offsets {
                sums[class] += values[(site as isize + off) as usize] as u64;
            }
        }
        ReplicaStats {
            rho: occupied as f64 / n,
            classes: sums
                .iter()
                .zip(&self.class_members)
                .map(|(&s, &m)| s as f64 / (n * m as f64))
                .collect(),
        }
    }
}

fn thin_field(field: FieldSample, t: f64, seed: u64) -> Vec<u8> {
    let mut rng = stream(seed, &[THIN_STREAM]);
    field
        .into_values()
        .into_iter()
        .map(|v| {
            let keep = rng.gen::<f64>() < t;
            v & u8::from(keep)
        })
        .collect()
}

fn run(
    proc: &ProductProcessND,
    region: &BoxRegion,
    radius: usize,
    replicas: usize,
    seed: u64,
    thin: Option<f64>,
) -> Result<CorrelationEstimate> {
    check_dim(proc.dim(), region.dim())?;
    if replicas < 2 {
        return Err(invalid(
            "at least 2 replicas are needed for a standard error",
        ));
    }
    let layout = Layout::new(region, radius)?;
    let per_replica: Vec<ReplicaStats> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let rseed = derive_seed(seed, &[r as u64]);
            let field = proc.sample_box(region, rseed)?;
            let values = match thin {
                Some(t) => thin_field(field, t, rseed),
                None => field.into_values(),
            };
            Ok(layout.measure(&values))
        })
        .collect::<Result<_>>()?;

    let rho_hat = Stat::from_samples(&per_replica.iter().map(|s| s.rho).collect::<Vec<_>>());
    let classes = layout
        .class_keys
        .iter()
        .enumerate()
        .map(|(i, key)| {
            let xs: Vec<f64> = per_replica.iter().map(|s| s.classes[i]).collect();
            Ok(ClassEstimate {
                label: class_label(key),
                representative: LatticeVector::new(key.iter().map(|&k| k as i64).collect())?,
                members: layout.class_members[i],
                stat: Stat::from_samples(&xs),
            })
        })
        .collect::<Result<_>>()?;
    let base = proc.target_spec()?;
    let target = RadialSpec::new(base.alpha(), base.rho() * thin.unwrap_or(1.0), base.dim())?;
    Ok(CorrelationEstimate {
        rho_hat,
        classes,
        replicas,
        radius,
        core_box: layout.core_box(radius)?,
        target,
    })
}

/// Replica-batched estimate of density and pair expectations for every
/// displacement class with `|x|_∞ ≤ radius`. Replica `r` samples with
/// `derive_seed(seed, [r])`.
pub fn estimate(
    proc: &ProductProcessND,
    region: &BoxRegion,
    radius: usize,
    replicas: usize,
    seed: u64,
) -> Result<CorrelationEstimate> {
    run(proc, region, radius, replicas, seed, None)
}

/// As [`estimate`], with every sampled field independently thinned (each
/// occupied site kept with probability `t`).
pub fn estimate_thinned(
    proc: &ProductProcessND,
    region: &BoxRegion,
    radius: usize,
    replicas: usize,
    seed: u64,
    t: f64,
) -> Result<CorrelationEstimate> {
    if !(0.0..=1.0).contains(&t) {
        return Err(invalid(format!(
            "thinning probability must lie in [0,1], got {t}"
        )));
    }
    run(proc, region, radius, replicas, seed, Some(t))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyRow {
    pub label: String,
    pub estimate: f64,
    pub std_error: f64,
    pub target: f64,
    /// `None` when the spread is zero and the estimate misses the target.
    pub z: Option<f64>,
}

impl ConsistencyRow {
    fn passes(&self, z_max: f64) -> bool {
        self.z.is_some_and(|z| z.abs() <= z_max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub pass: bool,
    pub z_max: f64,
    pub rows: Vec<ConsistencyRow>,
    /// Failing rows, worst first.
    pub offenders: Vec<ConsistencyRow>,
    /// Upper bound on the chance that a correct target fails somewhere.
    pub family_false_failure_bound: f64,
}

impl ConsistencyReport {
    pub fn note(&self) -> String {
        format!(
            "{} simultaneous tests at |z| <= {}: a correct target fails with probability <= {} (union bound, normal approximation)",
            self.rows.len(),
            fmt12(self.z_max),
            fmt12(self.family_false_failure_bound)
        )
    }
}

/// Pass iff the density and every class are within `z_max` standard errors
/// of `spec`.
pub fn consistency_test(
    est: &CorrelationEstimate,
    spec: &RadialSpec,
    z_max: f64,
) -> Result<ConsistencyReport> {
    check_dim(est.core_box.dim(), spec.dim())?;
    if !(z_max > 0.0) {
        return Err(invalid("z_max must be positive"));
    }
    if est.rho_hat.is_degenerate() && est.classes.iter().all(|c| c.stat.is_degenerate()) {
        return Err(Error::Degenerate(
            "every statistic has zero replica variance".into(),
        ));
    }
    let mut rows = vec![ConsistencyRow {
        label: "density".into(),
        estimate: est.rho_hat.mean,
        std_error: est.rho_hat.std_error,
        target: spec.rho(),
        z: est.rho_hat.z_score(spec.rho()),
    }];
    for c in &est.classes {
        let target = spec.pair_target(&c.representative)?;
        rows.push(ConsistencyRow {
            label: c.label.clone(),
            estimate: c.stat.mean,
            std_error: c.stat.std_error,
            target,
            z: c.stat.z_score(target),
        });
    }
    let mut offenders: Vec<ConsistencyRow> =
        rows.iter().filter(|r| !r.passes(z_max)).cloned().collect();
    offenders.sort_by(|a, b| {
        let key = |r: &ConsistencyRow| r.z.map_or(f64::INFINITY, f64::abs);
        key(b).total_cmp(&key(a))
    });
    let tests = rows.len() as f64;
    Ok(ConsistencyReport {
        pass: offenders.is_empty(),
        z_max,
        family_false_failure_bound: (tests * erfc(z_max / std::f64::consts::SQRT_2)).min(1.0),
        rows,
        offenders,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThinningReport {
    pub t: f64,
    pub estimate: CorrelationEstimate,
    /// Against `(tρ, α)`; absent when the thinned samples carry no variance
    /// (e.g. `t = 0`).
    pub consistency: Option<ConsistencyReport>,
}

impl ThinningReport {
    pub fn pass(&self) -> bool {
        self.consistency.as_ref().is_some_and(|c| c.pass)
    }
}

/// Thins sampled fields with probability `t` and checks that the density
/// scales to `tρ` while `g` is unchanged.
pub fn thinning_check(
    proc: &ProductProcessND,
    t: f64,
    region: &BoxRegion,
    radius: usize,
    replicas: usize,
    seed: u64,
    z_max: f64,
) -> Result<ThinningReport> {
    let est = estimate_thinned(proc, region, radius, replicas, seed, t)?;
    let consistency = match consistency_test(&est, &est.target, z_max) {
        Ok(c) => Some(c),
        Err(Error::Degenerate(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(ThinningReport {
        t,
        estimate: est,
        consistency,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basic1d::{alpha0_exclusion_factor, BlockFactorProcess1D};
    use crate::product::realize;

    fn exclusion2() -> ProductProcessND {
        realize(&alpha0_exclusion_factor(0.5).unwrap(), 2).unwrap()
    }

    #[test]
    fn stat_and_z() {
        let s = Stat::from_samples(&[1.0, 2.0, 3.0]);
        assert_eq!(s.mean, 2.0);
        assert!((s.std_error - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        let flat = Stat::from_samples(&[0.5, 0.5]);
        assert_eq!(flat.z_score(0.5), Some(0.0));
        assert_eq!(flat.z_score(0.4), None);
    }

    #[test]
    fn full_lattice_is_degenerate() {
        let full = realize(&BlockFactorProcess1D::constant(1, 0.5, 1.0).unwrap(), 2).unwrap();
        let b = BoxRegion::cube(10, 2).unwrap();
        let est = estimate(&full, &b, 2, 4, 1).unwrap();
        assert_eq!(est.rho_hat.mean, 1.0);
        assert!(est.classes.iter().all(|c| c.stat.mean == 1.0));
        assert!(est.degenerate());
        assert!(matches!(
            consistency_test(&est, &est.target, Z_MAX),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn empty_process_estimates_zero() {
        let empty = BlockFactorProcess1D::new(2, 0.5, vec![0.0, 1e-100, 0.0, 0.0]).unwrap();
        let p = realize(&empty, 2).unwrap();
        let est = estimate(&p, &BoxRegion::cube(8, 2).unwrap(), 2, 3, 0).unwrap();
        assert_eq!(est.rho_hat.mean, 0.0);
        assert!(est.classes.iter().all(|c| c.stat.mean == 0.0));
    }

    #[test]
    fn argument_errors() {
        let p = exclusion2();
        let b = BoxRegion::cube(6, 2).unwrap();
        assert!(estimate(&p, &b, 3, 10, 0).is_err());
        assert!(estimate(&p, &b, 1, 1, 0).is_err());
        assert!(estimate(&p, &BoxRegion::cube(6, 3).unwrap(), 1, 2, 0).is_err());
        assert!(estimate_thinned(&p, &b, 1, 2, 0, 1.5).is_err());
    }

    #[test]
    fn class_layout_radius_three() {
        let est = estimate(&exclusion2(), &BoxRegion::cube(16, 2).unwrap(), 3, 4, 0).unwrap();
        assert_eq!(est.classes.len(), 10);
        assert_eq!(est.core_box.side_lengths(), &[10, 10]);
        let nn = est
            .classes
            .iter()
            .find(|c| c.label.starts_with("nearest"))
            .unwrap();
        assert_eq!(nn.members, 4);
        assert_eq!(nn.stat.mean, 0.0);
    }

    #[test]
    fn deterministic_regardless_of_schedule() {
        let p = exclusion2();
        let b = BoxRegion::cube(20, 2).unwrap();
        let a = estimate(&p, &b, 2, 16, 99).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let serial = pool.install(|| estimate(&p, &b, 2, 16, 99).unwrap());
        assert_eq!(a, serial);
    }

    #[test]
    fn thinning_identity_and_zero() {
        let p = exclusion2();
        let b = BoxRegion::cube(16, 2).unwrap();
        let plain = estimate(&p, &b, 2, 8, 5).unwrap();
        let same = estimate_thinned(&p, &b, 2, 8, 5, 1.0).unwrap();
        assert_eq!(plain, same);
        let zero = thinning_check(&p, 0.0, &b, 2, 8, 5, Z_MAX).unwrap();
        assert_eq!(zero.estimate.rho_hat.mean, 0.0);
        assert!(zero.consistency.is_none());
    }

    #[test]
    fn wrong_alpha_fails_on_unit_vectors() {
        let p = exclusion2();
        let est = estimate(&p, &BoxRegion::cube(64, 2).unwrap(), 3, 200, 7).unwrap();
        let wrong = RadialSpec::new(0.5, 1.0 / 16.0, 2).unwrap();
        let report = consistency_test(&est, &wrong, Z_MAX).unwrap();
        assert!(!report.pass);
        assert!(report.offenders[0].label.starts_with("nearest-neighbor"));
        assert!(consistency_test(&est, &est.target, Z_MAX).unwrap().pass);
    }

    #[test]
    fn text_rows() {
        let est = estimate(&exclusion2(), &BoxRegion::cube(12, 2).unwrap(), 2, 4, 1).unwrap();
        let text = est.to_text().unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next(),
            Some("class,displacement,estimate,std_error,target,z_score")
        );
        assert!(lines.next().unwrap().starts_with("density,-,"));
        assert_eq!(text.lines().count(), 2 + est.classes.len());
        assert!(text.contains("nearest-neighbor[1;0],1;0,0,0,0,0"));
    }
}
