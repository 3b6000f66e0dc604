//! `d`-dimensional product construction: `P_i = B^(1)_i ⋯ B^(d)_i`, where
//! `B^(m)` is a family of independent copies of one basic process laid along
//! the lines parallel to axis `m`.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::basic1d::{BlockFactorProcess1D, CorrelationProfile1D};
use crate::error::{invalid, Error, Result};
use crate::lattice::{check_dim, BoxRegion, LatticeVector, RadialSpec};
use crate::rng::stream;

/// Default tolerance on the 1D lag residual accepted by [`realize`].
pub const PROFILE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ProductProcessND {
    dim: usize,
    axis: BlockFactorProcess1D,
    profile: CorrelationProfile1D,
    alpha_hat: f64,
}

/// Product process built from `d` independent families of `proc1d`.
pub fn realize(proc1d: &BlockFactorProcess1D, d: usize) -> Result<ProductProcessND> {
    realize_with_tolerance(proc1d, d, PROFILE_TOL)
}

/// As [`realize`], accepting lag residuals up to `tol`.
pub fn realize_with_tolerance(
    proc1d: &BlockFactorProcess1D,
    d: usize,
    tol: f64,
) -> Result<ProductProcessND> {
    if d < 2 {
        return Err(invalid(format!(
            "product construction needs d >= 2, got {d}"
        )));
    }
    let profile = proc1d.profile()?;
    let alpha_hat = profile
        .alpha_hat()
        .ok_or_else(|| Error::ProfileNotRadial("density is zero, alpha undefined".into()))?;
    let residual = profile.residual();
    if residual > tol {
        return Err(Error::ProfileNotRadial(format!(
            "lags 2..w-1 deviate from gamma^2 by {residual:e} (tolerance {tol:e})"
        )));
    }
    Ok(ProductProcessND {
        dim: d,
        axis: proc1d.clone(),
        profile,
        alpha_hat,
    })
}

impl ProductProcessND {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The basic process reused (with independent randomness) on every axis.
    pub fn axis_process(&self) -> &BlockFactorProcess1D {
        &self.axis
    }

    pub fn profile(&self) -> &CorrelationProfile1D {
        &self.profile
    }

    pub fn gamma(&self) -> f64 {
        self.profile.density
    }

    pub fn alpha_hat(&self) -> f64 {
        self.alpha_hat
    }

    /// `ρ = γ^d`.
    pub fn density(&self) -> f64 {
        self.gamma().powi(self.dim as i32)
    }

    pub fn target_spec(&self) -> Result<RadialSpec> {
        RadialSpec::new(self.alpha_hat, self.density(), self.dim)
    }

    /// `⟨B^(m)_i B^(m)_j⟩` for axis `m` (0-based): `γ²` when `i` and `j` lie
    /// on different lines parallel to `m`, else the 1D lag value.
    pub fn axis_pair_expectation(
        &self,
        m: usize,
        i: &LatticeVector,
        j: &LatticeVector,
    ) -> Result<f64> {
        check_dim(self.dim, i.dim())?;
        check_dim(self.dim, j.dim())?;
        if m >= self.dim {
            return Err(invalid(format!(
                "axis {m} out of range for d = {}",
                self.dim
            )));
        }
        let (a, b) = (i.coords(), j.coords());
        let same_line = (0..self.dim).all(|k| k == m || a[k] == b[k]);
        if same_line {
            Ok(self.profile.lag(a[m].abs_diff(b[m]) as usize))
        } else {
            Ok(self.gamma() * self.gamma())
        }
    }

    /// `⟨P_i P_j⟩ = Π_m ⟨B^(m)_i B^(m)_j⟩`.
    pub fn exact_pair_expectation(&self, i: &LatticeVector, j: &LatticeVector) -> Result<f64> {
        (0..self.dim).try_fold(1.0, |acc, m| Ok(acc * self.axis_pair_expectation(m, i, j)?))
    }

    /// Compares `⟨P_0 P_x⟩` with the `g^(α)` target for every displacement in
    /// the sup-norm ball of the given radius.
    pub fn verify_against_target(&self, radius: usize) -> Result<VerificationReport> {
        if radius < 2 {
            return Err(invalid("verification radius must be >= 2"));
        }
        let spec = self.target_spec()?;
        let origin = LatticeVector::zero(self.dim);
        let mut classes: BTreeMap<Vec<u64>, ClassRow> = BTreeMap::new();
        let mut max_deviation = 0.0f64;
        let mut worst = origin.clone();
        for x in sup_ball(self.dim, radius as i64) {
            let value = self.exact_pair_expectation(&origin, &x)?;
            let target = spec.pair_target(&x)?;
            let deviation = (value - target).abs();
            if deviation > max_deviation {
                max_deviation = deviation;
                worst = x.clone();
            }
            let key = class_key(&x);
            let row = classes.entry(key.clone()).or_insert_with(|| ClassRow {
                label: class_label(&key),
                representative: LatticeVector::new(key.iter().map(|&k| k as i64).collect())
                    .expect("d >= 2"),
                members: 0,
                value,
                target,
                deviation: 0.0,
            });
            row.members += 1;
            row.deviation = row.deviation.max(deviation);
        }
        Ok(VerificationReport {
            dim: self.dim,
            radius,
            rho: spec.rho(),
            alpha: spec.alpha(),
            max_deviation,
            worst,
            classes: classes.into_values().collect(),
        })
    }

    /// Samples the product field on a box. Line `l` of axis `m` draws its
    /// own path from the stream keyed by `(seed, m, l)`.
    pub fn sample_box(&self, region: &BoxRegion, seed: u64) -> Result<FieldSample> {
        check_dim(self.dim, region.dim())?;
        let sides = region.side_lengths();
        let total: usize = sides.iter().product();
        let mut values = vec![1u8; total];
        for m in 0..self.dim {
            let len = sides[m];
            let stride: usize = sides[m + 1..].iter().product();
            let starts: Vec<usize> = (0..total)
                .filter(|f| (f / stride).is_multiple_of(len))
                .collect();
            let paths: Vec<Vec<u8>> = starts
                .par_iter()
                .enumerate()
                .map(|(line, _)| {
                    self.axis
                        .sample_path_with(len, &mut stream(seed, &[m as u64, line as u64]))
                })
                .collect();
            for (start, path) in starts.iter().zip(&paths) {
                for (t, &bit) in path.iter().enumerate() {
                    values[start + t * stride] &= bit;
                }
            }
        }
        Ok(FieldSample {
            region: region.clone(),
            values,
        })
    }
}

/// Displacements `x` with `|x|_∞ ≤ r`, in lexicographic order.
pub(crate) fn sup_ball(dim: usize, r: i64) -> Vec<LatticeVector> {
    let side = (2 * r + 1) as usize;
    let total = side.pow(dim as u32);
    (0..total)
        .map(|mut f| {
            let mut c = vec![0i64; dim];
            for k in (0..dim).rev() {
                c[k] = (f % side) as i64 - r;
                f /= side;
            }
            LatticeVector::new(c).expect("dim >= 1")
        })
        .collect()
}

/// Symmetry class of a displacement under axis permutations and
/// reflections: the absolute coordinates sorted in decreasing order.
pub(crate) fn class_key(x: &LatticeVector) -> Vec<u64> {
    let mut k: Vec<u64> = x.coords().iter().map(|c| c.unsigned_abs()).collect();
    k.sort_unstable_by(|a, b| b.cmp(a));
    k
}

pub(crate) fn class_label(key: &[u64]) -> String {
    let kind = match key.iter().map(|&k| k * k).sum::<u64>() {
        0 => "same-site",
        1 => "nearest-neighbor",
        _ => "far",
    };
    let coords: Vec<String> = key.iter().map(|k| k.to_string()).collect();
    format!("{kind}[{}]", coords.join(";"))
}

/// One displacement class in a verification table.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassRow {
    pub label: String,
    pub representative: LatticeVector,
    pub members: usize,
    pub value: f64,
    pub target: f64,
    /// Largest deviation over the members of the class.
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub dim: usize,
    pub radius: usize,
    pub rho: f64,
    pub alpha: f64,
    pub max_deviation: f64,
    pub worst: LatticeVector,
    pub classes: Vec<ClassRow>,
}

/// Occupation numbers on a box, row-major with the last axis fastest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldSample {
    region: BoxRegion,
    values: Vec<u8>,
}

impl FieldSample {
    pub fn new(region: BoxRegion, values: Vec<u8>) -> Result<Self> {
        if values.len() as u128 != region.site_count() {
            return Err(invalid("value count does not match the box"));
        }
        if values.iter().any(|&v| v > 1) {
            return Err(invalid("occupation values must be 0 or 1"));
        }
        Ok(Self { region, values })
    }

    pub fn region(&self) -> &BoxRegion {
        &self.region
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn into_values(self) -> Vec<u8> {
        self.values
    }

    pub fn occupied(&self) -> usize {
        self.values.iter().map(|&v| v as usize).sum()
    }

    /// Value at box-relative coordinates.
    pub fn get(&self, coords: &[usize]) -> u8 {
        let sides = self.region.side_lengths();
        let flat = coords
            .iter()
            .zip(sides)
            .fold(0usize, |acc, (&c, &l)| acc * l + c);
        self.values[flat]
    }

    /// Header `d L_1 … L_d`, then one line of 0/1 characters per
    /// last-axis slice.
    pub fn to_text(&self) -> String {
        let sides = self.region.side_lengths();
        let mut s = sides.len().to_string();
        for l in sides {
            s.push(' ');
            s.push_str(&l.to_string());
        }
        s.push('\n');
        let row = *sides.last().expect("dim >= 1");
        for chunk in self.values.chunks(row) {
            s.extend(chunk.iter().map(|&v| if v == 1 { '1' } else { '0' }));
            s.push('\n');
        }
        s
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let perr = |line: usize, msg: String| Error::Parse { line, msg };
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.starts_with('#'));
        let (ln, head) = lines
            .next()
            .ok_or_else(|| perr(0, "empty field sample".into()))?;
        let nums: Vec<usize> = head
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| perr(ln + 1, format!("bad header token {t:?}")))
            })
            .collect::<Result<_>>()?;
        let (&d, sides) = nums
            .split_first()
            .ok_or_else(|| perr(ln + 1, "missing dimension".into()))?;
        if d != sides.len() {
            return Err(perr(
                ln + 1,
                format!("header declares d = {d} but lists {} sides", sides.len()),
            ));
        }
        let region =
            BoxRegion::with_sides(sides.to_vec()).map_err(|e| perr(ln + 1, e.to_string()))?;
        let row = *sides.last().expect("checked");
        let rows = region.site_count() as usize / row;
        let mut values = Vec::with_capacity(region.site_count() as usize);
        let mut count = 0;
        for (ln, line) in lines {
            if count == rows {
                if line.is_empty() {
                    continue;
                }
                return Err(perr(ln + 1, "extra rows".into()));
            }
            if line.len() != row {
                return Err(perr(
                    ln + 1,
                    format!("row has {} characters, expected {row}", line.len()),
                ));
            }
            for b in line.bytes() {
                match b {
                    b'0' => values.push(0),
                    b'1' => values.push(1),
                    _ => return Err(perr(ln + 1, format!("bad character {:?}", b as char))),
                }
            }
            count += 1;
        }
        if count != rows {
            return Err(perr(0, format!("expected {rows} rows, found {count}")));
        }
        Self::new(region, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basic1d::alpha0_exclusion_factor;

    fn lv(c: &[i64]) -> LatticeVector {
        LatticeVector::new(c.to_vec()).unwrap()
    }

    fn exclusion(d: usize) -> ProductProcessND {
        realize(&alpha0_exclusion_factor(0.5).unwrap(), d).unwrap()
    }

    #[test]
    fn realize_densities() {
        assert_eq!(exclusion(2).density(), 1.0 / 16.0);
        assert_eq!(exclusion(3).density(), 1.0 / 64.0);
        let full = BlockFactorProcess1D::constant(1, 0.5, 1.0).unwrap();
        let p = realize(&full, 3).unwrap();
        assert_eq!(p.density(), 1.0);
        assert_eq!(p.alpha_hat(), 1.0);
    }

    #[test]
    fn realize_rejections() {
        let proc = alpha0_exclusion_factor(0.5).unwrap();
        assert!(realize(&proc, 1).is_err());
        let empty = BlockFactorProcess1D::constant(2, 0.5, 0.0).unwrap();
        assert!(matches!(
            realize(&empty, 2),
            Err(Error::ProfileNotRadial(_))
        ));
        // A_i = X_i X_{i+2}: lag 2 is p^3 = 1/8, not γ² = 1/16
        let mut q = vec![0.0; 8];
        q[0b101] = 1.0;
        q[0b111] = 1.0;
        let bad = BlockFactorProcess1D::new(3, 0.5, q).unwrap();
        assert!(matches!(realize(&bad, 2), Err(Error::ProfileNotRadial(_))));
    }

    #[test]
    fn axis_pairs_follow_line_structure() {
        let p = exclusion(2);
        let g2 = 1.0 / 16.0;
        // axis 0 lines are indexed by coordinate 1
        assert_eq!(
            p.axis_pair_expectation(0, &lv(&[3, 4]), &lv(&[5, 4]))
                .unwrap(),
            g2
        );
        assert_eq!(
            p.axis_pair_expectation(0, &lv(&[3, 4]), &lv(&[4, 4]))
                .unwrap(),
            0.0
        );
        assert_eq!(
            p.axis_pair_expectation(0, &lv(&[3, 4]), &lv(&[3, 5]))
                .unwrap(),
            g2
        );
        assert_eq!(
            p.axis_pair_expectation(1, &lv(&[3, 4]), &lv(&[3, 5]))
                .unwrap(),
            0.0
        );
        assert_eq!(
            p.axis_pair_expectation(1, &lv(&[3, 4]), &lv(&[3, 4]))
                .unwrap(),
            0.25
        );
        assert!(p
            .axis_pair_expectation(2, &lv(&[0, 0]), &lv(&[0, 0]))
            .is_err());
        assert!(p.axis_pair_expectation(0, &lv(&[0]), &lv(&[0, 0])).is_err());
    }

    #[test]
    fn pair_expectation_cases() {
        let p = exclusion(2);
        let o = lv(&[0, 0]);
        assert_eq!(p.exact_pair_expectation(&o, &o).unwrap(), 1.0 / 16.0);
        assert_eq!(p.exact_pair_expectation(&o, &lv(&[0, 1])).unwrap(), 0.0);
        assert_eq!(
            p.exact_pair_expectation(&o, &lv(&[1, 1])).unwrap(),
            1.0 / 256.0
        );
        assert_eq!(
            p.exact_pair_expectation(&o, &lv(&[0, 2])).unwrap(),
            1.0 / 256.0
        );
    }

    #[test]
    fn verification_classes() {
        let report = exclusion(2).verify_against_target(3).unwrap();
        assert!(report.max_deviation <= 1e-12);
        // (a,b) with 3 >= a >= b >= 0
        assert_eq!(report.classes.len(), 10);
        assert_eq!(report.classes.iter().map(|c| c.members).sum::<usize>(), 49);
        assert!(exclusion(2).verify_against_target(1).is_err());

        let full = realize(&BlockFactorProcess1D::constant(1, 0.5, 1.0).unwrap(), 2).unwrap();
        assert_eq!(full.verify_against_target(3).unwrap().max_deviation, 0.0);
    }

    #[test]
    fn sampling_full_and_deterministic() {
        let full = realize(&BlockFactorProcess1D::constant(2, 0.5, 1.0).unwrap(), 2).unwrap();
        let b = BoxRegion::with_sides(vec![5, 7]).unwrap();
        assert!(full
            .sample_box(&b, 1)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 1));

        let p = exclusion(3);
        let b = BoxRegion::with_sides(vec![4, 5, 6]).unwrap();
        assert_eq!(p.sample_box(&b, 11).unwrap(), p.sample_box(&b, 11).unwrap());
        assert_ne!(p.sample_box(&b, 11).unwrap(), p.sample_box(&b, 12).unwrap());
    }

    #[test]
    fn exclusion_samples_have_no_adjacent_pairs() {
        let p = exclusion(2);
        let b = BoxRegion::cube(40, 2).unwrap();
        for seed in 0..20 {
            let s = p.sample_box(&b, seed).unwrap();
            for x in 0..40 {
                for y in 0..40 {
                    if s.get(&[x, y]) == 0 {
                        continue;
                    }
                    if x + 1 < 40 {
                        assert_eq!(s.get(&[x + 1, y]), 0);
                    }
                    if y + 1 < 40 {
                        assert_eq!(s.get(&[x, y + 1]), 0);
                    }
                }
            }
        }
    }

    #[test]
    fn field_text_round_trip() {
        let p = exclusion(3);
        let b = BoxRegion::with_sides(vec![2, 3, 4]).unwrap();
        let s = p.sample_box(&b, 5).unwrap();
        let text = s.to_text();
        assert!(text.starts_with("3 2 3 4\n"));
        assert_eq!(text.lines().count(), 1 + 6);
        assert_eq!(FieldSample::parse_text(&text).unwrap(), s);
        assert_eq!(FieldSample::parse_text(&text).unwrap().to_text(), text);
    }

    #[test]
    fn field_text_rejects_malformed() {
        for bad in [
            "",
            "2 2\n01\n10\n",
            "2 2 2\n01\n",
            "2 2 2\n01\n12\n",
            "2 2 2\n01\n10\n11\n",
        ] {
            assert!(FieldSample::parse_text(bad).is_err(), "{bad:?}");
        }
    }
}
