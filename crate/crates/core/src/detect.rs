//! Plateau segmentation of two-point current profiles and what can be read
//! off it: defect positions and lattice periods.
//!
//! A defect at `X` spoils translation constancy wherever `x` or `x + L` sits
//! on it, so it shows up as two bumps of `|Q'|` near `X - L` and `X`. When
//! the barrier support exceeds the gap between them the bumps merge into one
//! run. [`locate_defects`] pairs bumps accordingly before estimating.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::domain::{SymmetryTransform, TransformKind};
use crate::invariants::{convergence_measure, CurrentProfile, ScanMap};
use crate::{Error, Result};

/// Relative part of the default constancy floor.
pub const RELATIVE_FLOOR: f64 = 1e-9;
/// Multiple of the median `|Q'|` in the default constancy floor.
pub const MEDIAN_FLOOR_FACTOR: f64 = 5.0;
/// Deviation intervals longer than this multiple of `L + w + 2A` are flagged.
pub const LENGTH_FLAG_FACTOR: f64 = 1.25;

/// A closed interval. On a periodic profile `end` may exceed the cell edge,
/// meaning the interval wraps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
}

impl Interval {
    pub fn length(&self) -> f64 {
        self.end - self.start
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.start + self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plateau {
    pub interval: Interval,
    /// Mean of `Q` over the plateau.
    pub value: Complex64,
    /// `max |Q - value|` over the plateau.
    pub spread: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub interval: Interval,
    /// Largest `|Q'|` inside the interval.
    pub peak: f64,
    pub peak_position: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectEstimate {
    pub position: f64,
    /// The deviation interval the estimate was read from.
    pub interval: Interval,
    /// Set when the interval is longer than expected for one defect.
    pub flagged: bool,
}

/// Deviation intervals too long to belong to a single defect, or lone bumps
/// with no partner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Unresolved {
    pub interval: Interval,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub transform: SymmetryTransform,
    pub floor: f64,
    pub x_min: f64,
    pub x_max: f64,
    /// Cell length when the profile wraps.
    pub period: Option<f64>,
    pub plateaus: Vec<Plateau>,
    pub deviations: Vec<Deviation>,
    pub defects: Vec<DefectEstimate>,
    pub unresolved: Vec<Unresolved>,
    pub inferred_period: Option<f64>,
}

impl SymmetryReport {
    pub fn defect_positions(&self) -> Vec<f64> {
        self.defects.iter().map(|d| d.position).collect()
    }

    /// Map `x` back into the cell of a periodic profile.
    fn wrap(&self, x: f64) -> f64 {
        match self.period {
            Some(p) => self.x_min + (x - self.x_min).rem_euclid(p),
            None => x,
        }
    }

    /// Whether `x` lies in `interval`, honouring the wrap.
    fn covers(&self, interval: &Interval, x: f64) -> bool {
        match self.period {
            Some(p) => (x - interval.start).rem_euclid(p) <= interval.length(),
            None => x >= interval.start && x <= interval.end,
        }
    }
}

/// `max(1e-9 · max|Q|, 5 · median|Q'|)`.
pub fn default_floor(profile: &CurrentProfile) -> f64 {
    let mut slopes: Vec<f64> = profile.derivative().iter().map(|d| d.norm()).collect();
    slopes.sort_by(f64::total_cmp);
    let median = if slopes.is_empty() {
        0.0
    } else if slopes.len() % 2 == 1 {
        slopes[slopes.len() / 2]
    } else {
        0.5 * (slopes[slopes.len() / 2 - 1] + slopes[slopes.len() / 2])
    };
    (RELATIVE_FLOOR * profile.max_abs()).max(MEDIAN_FLOOR_FACTOR * median)
}

/// Split the profile into runs with `|Q'| <= floor` (plateaus) and the rest
/// (deviations). Interval edges sit half a spacing outside the run's first
/// and last samples, so the intervals tile the profile. On a full-period
/// profile runs wrap around the cell edge.
pub fn segment_constancy(profile: &CurrentProfile, floor: f64) -> Result<SymmetryReport> {
    if profile.len() < 8 {
        return Err(Error::InvalidArgument(format!(
            "segmentation needs at least 8 samples, got {}",
            profile.len()
        )));
    }
    if !(floor >= 0.0) {
        return Err(Error::InvalidArgument(format!("floor must be non-negative, got {floor}")));
    }
    let dx = profile.grid.spacing();
    let slopes: Vec<f64> = profile.derivative().iter().map(|d| d.norm()).collect();
    let periodic = profile.period.is_some();
    // On a full period the last sample repeats the first.
    let n = if periodic { profile.len() - 1 } else { profile.len() };
    let flat: Vec<bool> = slopes[..n].iter().map(|&s| s <= floor).collect();

    // Runs as (first index, count), in order of increasing position.
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let start = if periodic {
        (0..n).find(|&i| flat[i] != flat[(i + n - 1) % n]).unwrap_or(0)
    } else {
        0
    };
    let mut i = 0;
    while i < n {
        let first = (start + i) % n;
        let mut count = 1;
        while i + count < n && flat[(start + i + count) % n] == flat[first] {
            count += 1;
        }
        runs.push((first, count));
        i += count;
    }

    let mut report = SymmetryReport {
        transform: profile.transform,
        floor,
        x_min: profile.grid.x_min(),
        x_max: profile.grid.x_max(),
        period: profile.period,
        plateaus: Vec::new(),
        deviations: Vec::new(),
        defects: Vec::new(),
        unresolved: Vec::new(),
        inferred_period: None,
    };
    let x_first = profile.grid.x_min();
    for &(first, count) in &runs {
        let begin = profile.x(first);
        let mut interval = Interval { start: begin - 0.5 * dx, end: begin + (count as f64 - 0.5) * dx };
        if !periodic {
            interval.start = interval.start.max(x_first);
            interval.end = interval.end.min(profile.grid.x_max());
        } else if runs.len() == 1 {
            interval = Interval { start: x_first, end: profile.grid.x_max() };
        }
        let indices = (0..count).map(|k| (first + k) % n);
        if flat[first] {
            let value = indices.clone().map(|k| profile.values[k]).sum::<Complex64>() / count as f64;
            let spread = indices.map(|k| (profile.values[k] - value).norm()).fold(0.0, f64::max);
            report.plateaus.push(Plateau { interval, value, spread, points: count });
        } else {
            let (peak_index, peak) = indices
                .map(|k| (k, slopes[k]))
                .fold((first, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
            let offset = (peak_index + n - first) % n;
            report.deviations.push(Deviation {
                interval,
                peak,
                peak_position: begin + offset as f64 * dx,
            });
        }
    }
    sort_by_start(&mut report);
    Ok(report)
}

fn sort_by_start(report: &mut SymmetryReport) {
    let (x_min, period) = (report.x_min, report.period);
    let key = |x: f64| period.map_or(x, |p| x_min + (x - x_min).rem_euclid(p));
    report.plateaus.sort_by(|a, b| key(a.interval.start).total_cmp(&key(b.interval.start)));
    report.deviations.sort_by(|a, b| key(a.interval.start).total_cmp(&key(b.interval.start)));
}

/// Distance from `a` forward to `b`, wrapping on a periodic report.
fn forward(report: &SymmetryReport, a: f64, b: f64) -> f64 {
    match report.period {
        Some(p) => (b - a).rem_euclid(p),
        None => b - a,
    }
}

/// Pair the deviation bumps of a translation report into defects.
///
/// Consecutive bumps whose peaks lie about `L` apart, and whose union is not
/// longer than `1.25 (L + w + 2A)`, form one defect; a run that is already at
/// least `L` long is taken as both bumps merged. The estimate is the midpoint
/// of the union plus `L/2`. Runs longer than `2 (L + w + 2A)` and lone short
/// bumps are reported as unresolved. Plateaus enclosed by a pair are absorbed
/// into its deviation interval.
pub fn locate_defects(
    report: &SymmetryReport,
    support: f64,
    amplitude: f64,
) -> Result<SymmetryReport> {
    if report.transform.kind != TransformKind::Translation {
        return Err(Error::InvalidArgument(
            "defect localisation from a single profile needs a translation; use locate_inversion_defects"
                .into(),
        ));
    }
    let shift = report.transform.parameter;
    let length = shift.abs();
    if !(length > 0.0) {
        return Err(Error::InvalidArgument("translation length must be nonzero".into()));
    }
    let expected = length + support + 2.0 * amplitude;
    let tolerance = 0.25 * length + amplitude;

    let mut out = report.clone();
    out.defects.clear();
    out.unresolved.clear();
    let devs = &report.deviations;
    let m = devs.len();
    if m == 0 {
        return Ok(out);
    }

    // Begin right after the longest plateau so that the first bump is the
    // leading one of its defect.
    let first = if report.period.is_some() && m > 1 {
        (0..m)
            .max_by(|&a, &b| {
                let gap = |i: usize| forward(report, devs[(i + m - 1) % m].interval.end, devs[i].interval.start);
                gap(a).total_cmp(&gap(b)).then(b.cmp(&a))
            })
            .unwrap_or(0)
    } else {
        0
    };
    let order: Vec<usize> = (0..m).map(|k| (first + k) % m).collect();

    let mut merged = Vec::new();
    let mut k = 0;
    while k < m {
        let current = &devs[order[k]];
        let own = current.interval.length();
        let partner = (k + 1 < m).then(|| &devs[order[k + 1]]);
        let paired = partner.and_then(|next| {
            let gap = forward(report, current.peak_position, next.peak_position);
            let union = Interval {
                start: current.interval.start,
                end: current.interval.start + forward(report, current.interval.start, next.interval.end),
            };
            let fits = (gap - length).abs() <= tolerance && union.length() <= LENGTH_FLAG_FACTOR * expected;
            (fits && own < 2.0 * expected).then(|| {
                let (peak, peak_position) = if next.peak > current.peak {
                    (next.peak, next.peak_position)
                } else {
                    (current.peak, current.peak_position)
                };
                Deviation { interval: union, peak, peak_position }
            })
        });
        if let Some(deviation) = paired {
            merged.push(deviation);
            k += 2;
            continue;
        }
        if own > 2.0 * expected {
            out.unresolved.push(Unresolved {
                interval: current.interval,
                reason: format!("deviation of length {own:.3} exceeds twice the single-defect width {expected:.3}"),
            });
        } else if own < length {
            out.unresolved.push(Unresolved {
                interval: current.interval,
                reason: format!("isolated deviation of length {own:.3} has no partner at distance {length}"),
            });
        }
        merged.push(current.clone());
        k += 1;
    }

    for deviation in &merged {
        let own = deviation.interval.length();
        let unresolved = out.unresolved.iter().any(|u| u.interval == deviation.interval);
        if unresolved {
            continue;
        }
        out.defects.push(DefectEstimate {
            position: report.wrap(deviation.interval.midpoint() + 0.5 * shift),
            interval: deviation.interval,
            flagged: own > LENGTH_FLAG_FACTOR * expected,
        });
    }
    let keep: Vec<bool> = out
        .plateaus
        .iter()
        .map(|p| !merged.iter().any(|d| out.covers(&d.interval, p.interval.midpoint())))
        .collect();
    let mut flags = keep.into_iter();
    out.plateaus.retain(|_| flags.next().unwrap_or(true));
    out.deviations = merged;
    sort_by_start(&mut out);
    out.defects.sort_by(|a, b| a.position.total_cmp(&b.position));
    Ok(out)
}

/// Segment with `floor` (or the default floor) and locate defects.
pub fn analyze_translation(
    profile: &CurrentProfile,
    floor: Option<f64>,
    support: f64,
    amplitude: f64,
) -> Result<SymmetryReport> {
    let floor = floor.unwrap_or_else(|| default_floor(profile));
    locate_defects(&segment_constancy(profile, floor)?, support, amplitude)
}

/// Defects from inversion profiles taken about several centres.
///
/// Under inversion through `α` a defect at `X` spoils constancy near `X` and
/// near its mirror image `2α - X`. Only `X` itself appears for every centre,
/// so the candidates are the deviation peaks present in all reports that
/// deviate at all (within `tolerance`, modulo the period). Centres with no
/// deviation are skipped: there the defect is its own mirror image.
pub fn locate_inversion_defects(reports: &[SymmetryReport], tolerance: f64) -> Result<Vec<f64>> {
    if reports.iter().any(|r| r.transform.kind != TransformKind::Inversion) {
        return Err(Error::InvalidArgument("all reports must come from inversion profiles".into()));
    }
    let deviating: Vec<&SymmetryReport> = reports.iter().filter(|r| !r.deviations.is_empty()).collect();
    let Some((head, rest)) = deviating.split_first() else {
        return Ok(Vec::new());
    };
    let distance = |report: &SymmetryReport, a: f64, b: f64| match report.period {
        Some(p) => {
            let d = (a - b).rem_euclid(p);
            d.min(p - d)
        }
        None => (a - b).abs(),
    };
    let mut found: Vec<f64> = Vec::new();
    for candidate in head.deviations.iter().map(|d| head.wrap(d.peak_position)) {
        let everywhere = rest
            .iter()
            .all(|r| r.deviations.iter().any(|d| distance(r, d.peak_position, candidate) <= tolerance));
        if everywhere && !found.iter().any(|&f| distance(head, f, candidate) <= tolerance) {
            found.push(candidate);
        }
    }
    found.sort_by(f64::total_cmp);
    Ok(found)
}

/// Row scores of a shift scan and the period read from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodInference {
    /// `(ΔL, ε)` for every row.
    pub scores: Vec<(f64, f64)>,
    /// Shifts at significant local minima of the score curve.
    pub minima: Vec<f64>,
    /// Smallest significant shift; `None` when the curve is flat.
    pub period: Option<f64>,
    pub flat: bool,
}

impl PeriodInference {
    pub fn period(&self) -> Result<f64> {
        self.period.ok_or_else(|| {
            Error::NoSymmetryFound("shift-scan score curve has no significant minimum".into())
        })
    }
}

/// Score each scan row by the convergence measure over `trim` and pick the
/// smallest shift at a significant minimum.
///
/// Rows with `|ΔL|` below one grid spacing are left out (every state is
/// trivially invariant under the identity). A row whose `Q` vanishes on the
/// trim counts as constant. The curve is flat when its minimum is not below
/// half its median, or when the median itself is negligible. Minima count
/// as significant below the geometric mean of minimum and median.
pub fn infer_period(scan: &ScanMap, trim: (f64, f64)) -> Result<PeriodInference> {
    if scan.kind != TransformKind::Translation {
        return Err(Error::InvalidArgument("period inference needs a translation scan".into()));
    }
    let dx = scan.grid().map_or(0.0, |g| g.spacing());
    let mut scores = Vec::new();
    for (row, &shift) in scan.rows.iter().zip(&scan.parameters) {
        if shift.abs() < dx {
            continue;
        }
        let score = match convergence_measure(row, trim) {
            Ok(e) => e,
            Err(Error::DegenerateProfile(_)) => 0.0,
            Err(e) => return Err(e),
        };
        scores.push((shift, score));
    }
    if scores.is_empty() {
        return Err(Error::InvalidArgument("scan has no usable rows".into()));
    }
    let mut sorted: Vec<f64> = scores.iter().map(|s| s.1).collect();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let minimum = sorted[0];
    let flat = median < 1e-12 || minimum >= 0.5 * median;
    let mut minima = Vec::new();
    if !flat {
        let threshold = (minimum * median).sqrt().min(0.5 * median);
        let n = scores.len();
        for i in 0..n {
            let s = scores[i].1;
            let left = i == 0 || s <= scores[i - 1].1;
            let right = i + 1 == n || s < scores[i + 1].1;
            if left && right && s <= threshold {
                minima.push(scores[i].0);
            }
        }
    }
    let period = minima.iter().copied().min_by(|a, b| a.abs().total_cmp(&b.abs()));
    Ok(PeriodInference { scores, minima, period, flat })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Grid;
    use crate::invariants::CurrentKind;

    fn profile(values: Vec<Complex64>, x_min: f64, x_max: f64, periodic: bool) -> CurrentProfile {
        let grid = Grid::new(x_min, x_max, values.len()).unwrap();
        let period = periodic.then(|| x_max - x_min);
        CurrentProfile::from_values(grid, values, SymmetryTransform::translation(5.0), CurrentKind::Static, period)
            .unwrap()
    }

    /// Smooth steps of height `h` centred at `c` with width ~0.2.
    fn steps(x: f64, edges: &[(f64, f64)]) -> Complex64 {
        let v: f64 = edges.iter().map(|&(c, h)| h * 0.5 * (1.0 + ((x - c) / 0.2).tanh())).sum();
        Complex64::new(1.0 + v, 0.5 * v)
    }

    #[test]
    fn constant_profile_is_one_plateau() {
        let p = profile(vec![Complex64::new(1.0, 2.0); 101], -12.5, 12.5, true);
        let report = segment_constancy(&p, default_floor(&p)).unwrap();
        assert_eq!(report.plateaus.len(), 1);
        assert!(report.deviations.is_empty());
        assert!((report.plateaus[0].interval.length() - 25.0).abs() < 1e-12);
        let located = locate_defects(&report, 1.0, 0.0).unwrap();
        assert!(located.defects.is_empty());
    }

    #[test]
    fn three_valued_step_profile() {
        let grid = Grid::new(-20.0, 20.0, 801).unwrap();
        let values: Vec<Complex64> = grid.points().map(|x| steps(x, &[(-5.0, 0.5), (0.0, -0.8)])).collect();
        let p = profile(values, -20.0, 20.0, false);
        let report = segment_constancy(&p, 1e-6).unwrap();
        assert_eq!(report.plateaus.len(), 3);
        assert_eq!(report.deviations.len(), 2);
        let values: Vec<Complex64> = report.plateaus.iter().map(|p| p.value).collect();
        assert!((values[0] - Complex64::new(1.0, 0.0)).norm() < 1e-6);
        assert!((values[1] - Complex64::new(1.5, 0.25)).norm() < 1e-6);
        assert!((values[2] - Complex64::new(0.7, -0.15)).norm() < 1e-6);
        // intervals tile the line
        let total: f64 = report
            .plateaus
            .iter()
            .map(|p| p.interval.length())
            .chain(report.deviations.iter().map(|d| d.interval.length()))
            .sum();
        assert!((total - 40.0).abs() < 1e-9);
    }

    #[test]
    fn bump_pair_gives_one_defect() {
        // bumps at X - L = -5 and X = 0 for a defect at 0
        let grid = Grid::new(-12.5, 12.5, 501).unwrap();
        let values: Vec<Complex64> = grid.points().map(|x| steps(x, &[(-5.0, 0.5), (0.0, -0.5)])).collect();
        let p = profile(values, -12.5, 12.5, true);
        let report = analyze_translation(&p, Some(1e-8), 4.0, 0.0).unwrap();
        assert_eq!(report.deviations.len(), 1);
        assert_eq!(report.defects.len(), 1);
        assert!(report.defects[0].position.abs() < 0.1);
        assert!(!report.defects[0].flagged);
        assert_eq!(report.plateaus.len(), 1);
    }

    #[test]
    fn adjacent_defects_are_paired_in_order() {
        // defects at -30 and -20 with L = 5: bumps at -35, -30, -25, -20
        let grid = Grid::new(-62.5, 62.5, 2501).unwrap();
        let edges = [(-35.0, 0.3), (-30.0, -0.2), (-25.0, 0.4), (-20.0, 0.1), (10.0, 0.2), (15.0, -0.5)];
        // close the loop so the profile is periodic
        let mut values: Vec<Complex64> = grid.points().map(|x| steps(x, &edges)).collect();
        let end = steps(100.0, &edges) - Complex64::new(1.0, 0.0);
        let ramp: Vec<Complex64> = grid.points().map(|x| end * 0.5 * (1.0 + ((x - 40.0) / 0.2).tanh())).collect();
        values.iter_mut().zip(ramp).for_each(|(v, r)| *v -= r);
        let p = profile(values, -62.5, 62.5, true);
        let report = analyze_translation(&p, Some(1e-8), 4.0, 0.0).unwrap();
        let positions = report.defect_positions();
        assert_eq!(positions.len(), 3, "{report:#?}");
        for (found, expected) in positions.iter().zip([-30.0, -20.0, 15.0]) {
            assert!((found - expected).abs() < 0.2, "{positions:?}");
        }
        // the closing ramp is a lone bump
        assert_eq!(report.unresolved.len(), 1);
    }

    #[test]
    fn long_deviation_is_unresolved() {
        let grid = Grid::new(-50.0, 50.0, 1001).unwrap();
        let values: Vec<Complex64> =
            grid.points().map(|x| Complex64::new(if x.abs() < 20.0 { (x * 0.3).sin() + 2.0 } else { 1.0 }, 0.0)).collect();
        let p = profile(values, -50.0, 50.0, false);
        let report = analyze_translation(&p, Some(1e-8), 4.0, 0.0).unwrap();
        assert!(report.defects.is_empty());
        assert_eq!(report.unresolved.len(), 1);
    }

    #[test]
    fn segmentation_is_idempotent() {
        let grid = Grid::new(-20.0, 20.0, 801).unwrap();
        let values: Vec<Complex64> = grid.points().map(|x| steps(x, &[(-5.0, 0.5), (3.0, -0.8)])).collect();
        let p = profile(values.clone(), -20.0, 20.0, false);
        let first = segment_constancy(&p, 1e-6).unwrap();
        let rebuilt: Vec<Complex64> = grid
            .points()
            .zip(&values)
            .map(|(x, v)| {
                first
                    .plateaus
                    .iter()
                    .find(|pl| x >= pl.interval.start && x <= pl.interval.end)
                    .map_or(*v, |pl| pl.value)
            })
            .collect();
        let second = segment_constancy(&profile(rebuilt, -20.0, 20.0, false), 1e-6).unwrap();
        assert_eq!(first.plateaus.len(), second.plateaus.len());
        for (a, b) in first.plateaus.iter().zip(&second.plateaus) {
            assert!((a.value - b.value).norm() <= a.spread + 1e-12);
        }
    }

    #[test]
    fn too_short_profile_rejected() {
        let p = profile(vec![Complex64::new(1.0, 0.0); 5], 0.0, 1.0, false);
        assert!(segment_constancy(&p, 0.0).is_err());
    }
}
