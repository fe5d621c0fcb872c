//! Brute-force checks of the pair-learning theory on finite binary problems.
//!
//! A [`FiniteProblem`] lists a handful of inputs with a joint pmf over
//! `inputs × {−, +}` and a set of candidate hidden maps, each given directly
//! by the representation point (on the radius-`r` sphere) it assigns to every
//! input. Every quantity is an exact finite sum over the pmf.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Values closer than this are treated as tied.
pub const TIE_TOL: f64 = 1e-12;
/// Points closer than this are treated as identical.
pub const POINT_TOL: f64 = 1e-12;
/// Direction samples used by the grid-search cross-checks.
pub const GRID_DIRECTIONS: usize = 10_000;

/// Probability mass of one input under each class.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mass {
    pub neg: f64,
    pub pos: f64,
}

impl Mass {
    pub fn total(&self) -> f64 {
        self.neg + self.pos
    }
}

/// A candidate hidden map, given by its (normalized) value on every input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub name: String,
    pub points: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteProblem {
    pub inputs: Vec<Vec<f64>>,
    pub pmf: Vec<Mass>,
    pub radius: f64,
    pub dim: usize,
    pub hypotheses: Vec<Hypothesis>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn same_point(a: &[f64], b: &[f64]) -> bool {
    dist2(a, b).sqrt() <= POINT_TOL
}

/// Indices attaining the minimum of `values` within [`TIE_TOL`].
fn argmin_set(values: &[f64]) -> Vec<usize> {
    let best = values.iter().copied().fold(f64::INFINITY, f64::min);
    (0..values.len()).filter(|&i| values[i] - best <= TIE_TOL).collect()
}

fn intersect(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter().copied().filter(|i| b.contains(i)).collect()
}

impl FiniteProblem {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        let m = self.inputs.len();
        if m == 0 || self.pmf.len() != m {
            return bad(format!("pmf has {} entries for {m} inputs", self.pmf.len()));
        }
        if self.dim < 2 || !(self.radius > 0.0 && self.radius.is_finite()) {
            return bad("representation needs dimension ≥ 2 and positive radius".into());
        }
        if self.pmf.iter().any(|p| !(p.neg >= 0.0 && p.pos >= 0.0)) {
            return bad("pmf entries must be nonnegative".into());
        }
        let total: f64 = self.pmf.iter().map(Mass::total).sum();
        if (total - 1.0).abs() > 1e-12 {
            return bad(format!("pmf sums to {total}"));
        }
        let alpha = self.alpha();
        if !(alpha > 0.0 && alpha < 1.0) {
            return bad(format!("Pr(Y=+) = {alpha} must lie strictly inside (0, 1)"));
        }
        for i in 0..m {
            for j in i + 1..m {
                if self.inputs[i] == self.inputs[j] {
                    return bad(format!("inputs {i} and {j} coincide"));
                }
            }
        }
        if self.hypotheses.is_empty() {
            return bad("empty hypothesis set".into());
        }
        for h in &self.hypotheses {
            if h.points.len() != m {
                return bad(format!("hypothesis {} has {} points for {m} inputs", h.name, h.points.len()));
            }
            for p in &h.points {
                let norm = dot(p, p).sqrt();
                if p.len() != self.dim || (norm - self.radius).abs() > 1e-9 * self.radius.max(1.0) {
                    return bad(format!("hypothesis {} has a point off the radius-{} sphere", h.name, self.radius));
                }
            }
        }
        Ok(())
    }

    /// `Pr(Y = +)`.
    pub fn alpha(&self) -> f64 {
        self.pmf.iter().map(|p| p.pos).sum()
    }

    /// `E[Y·φ(X)]` with `Y = ±1`.
    pub fn signed_mean(&self, h: usize) -> Vec<f64> {
        let mut e = vec![0.0; self.dim];
        for (p, point) in self.pmf.iter().zip(&self.hypotheses[h].points) {
            let s = p.pos - p.neg;
            for (ek, xk) in e.iter_mut().zip(point) {
                *ek += s * xk;
            }
        }
        e
    }

    /// Number of distinct representation points over inputs with positive mass.
    pub fn support_size(&self, h: usize) -> usize {
        let mut seen: Vec<&[f64]> = Vec::new();
        for (p, point) in self.pmf.iter().zip(&self.hypotheses[h].points) {
            if p.total() > 0.0 && !seen.iter().any(|q| same_point(q, point)) {
                seen.push(point);
            }
        }
        seen.len()
    }

    /// `E[−‖φ(X) − φ(X′)‖² | Y ≠ Y′]` for independent copies.
    pub fn different_class_objective(&self, h: usize) -> f64 {
        let pts = &self.hypotheses[h].points;
        let mut sum = 0.0;
        for (i, pi) in self.pmf.iter().enumerate() {
            for (j, pj) in self.pmf.iter().enumerate() {
                let w = pi.pos * pj.neg + pi.neg * pj.pos;
                if w > 0.0 {
                    sum -= w * dist2(&pts[i], &pts[j]);
                }
            }
        }
        let alpha = self.alpha();
        sum / (2.0 * alpha * (1.0 - alpha))
    }
}

/// `min_{‖w‖ ≤ 1/r} −E[Y⟨w, φ(X)⟩] = −‖E[Yφ(X)]‖ / r`.
pub fn min_head_risk(prob: &FiniteProblem, h: usize) -> f64 {
    let e = prob.signed_mean(h);
    -dot(&e, &e).sqrt() / prob.radius
}

/// Unit directions covering the sphere in `dim` dimensions: evenly spaced
/// angles in 2-D, a Fibonacci lattice in 3-D, Gaussian draws otherwise.
pub fn grid_directions(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    match dim {
        2 => (0..count)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / count as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        3 => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                    let rho = (1.0 - z * z).sqrt();
                    let a = golden * k as f64;
                    vec![rho * a.cos(), rho * a.sin(), z]
                })
                .collect()
        }
        _ => {
            let mut g = rng::stream(seed, rng::TRIAL, dim as u64);
            (0..count)
                .map(|_| {
                    let v: Vec<f64> = (0..dim).map(|_| g.sample(StandardNormal)).collect();
                    let n = dot(&v, &v).sqrt();
                    v.into_iter().map(|x| x / n).collect()
                })
                .collect()
        }
    }
}

/// Head risk minimized over `‖w‖ ≤ radius_w` by searching `w = radius_w·u`
/// over the given directions (and `w = 0`).
pub fn grid_head_risk(prob: &FiniteProblem, h: usize, dirs: &[Vec<f64>], radius_w: f64) -> f64 {
    let e = prob.signed_mean(h);
    dirs.iter().map(|u| -radius_w * dot(u, &e)).fold(0.0, f64::min)
}

pub fn compute_d(prob: &FiniteProblem) -> Vec<usize> {
    let v: Vec<f64> = (0..prob.hypotheses.len()).map(|h| prob.different_class_objective(h)).collect();
    argmin_set(&v)
}

/// Hypotheses sending each class's support to one point, distinct across classes.
pub fn compute_s(prob: &FiniteProblem) -> Vec<usize> {
    (0..prob.hypotheses.len())
        .filter(|&h| {
            let pts = &prob.hypotheses[h].points;
            let class_point = |pos: bool| -> Option<Option<&[f64]>> {
                let mut found: Option<&[f64]> = None;
                for (p, x) in prob.pmf.iter().zip(pts) {
                    let m = if pos { p.pos } else { p.neg };
                    if m > 0.0 {
                        match found {
                            None => found = Some(x),
                            Some(q) if !same_point(q, x) => return None,
                            _ => {}
                        }
                    }
                }
                Some(found)
            };
            match (class_point(true), class_point(false)) {
                (Some(Some(a)), Some(Some(b))) => !same_point(a, b),
                _ => false,
            }
        })
        .collect()
}

pub fn compute_fstar(prob: &FiniteProblem) -> Vec<usize> {
    let v: Vec<f64> = (0..prob.hypotheses.len()).map(|h| min_head_risk(prob, h)).collect();
    argmin_set(&v)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapseReport {
    pub d: Vec<usize>,
    pub s: Vec<usize>,
    pub fstar: Vec<usize>,
    pub d_and_s: Vec<usize>,
    /// `𝔻 ∩ 𝕊 ≠ ∅`.
    pub intersection_nonempty: bool,
    /// Every hypothesis outside `𝕊` has more than four support points.
    pub support_condition: bool,
    pub support_violations: Vec<usize>,
    /// `Some(𝔽₁* = 𝔻 ∩ 𝕊)` when both assumptions hold, else `None`.
    pub equality: Option<bool>,
}

/// Checks `𝔽₁* = 𝔻 ∩ 𝕊` along with the two assumptions it rests on.
pub fn verify_collapse(prob: &FiniteProblem) -> CollapseReport {
    let d = compute_d(prob);
    let s = compute_s(prob);
    let fstar = compute_fstar(prob);
    let d_and_s = intersect(&d, &s);
    let support_violations: Vec<usize> =
        (0..prob.hypotheses.len()).filter(|h| !s.contains(h) && prob.support_size(*h) <= 4).collect();
    let intersection_nonempty = !d_and_s.is_empty();
    let support_condition = support_violations.is_empty();
    let equality = (intersection_nonempty && support_condition).then(|| fstar == d_and_s);
    CollapseReport { d, s, fstar, d_and_s, intersection_nonempty, support_condition, support_violations, equality }
}

/// Smallest head-norm bound under which the risk can reach `gamma`:
/// `−γ / ‖E[Yφ(X)]‖`.
pub fn t_of_f1(prob: &FiniteProblem, h: usize, gamma: f64) -> Result<f64> {
    if gamma >= 0.0 || gamma.is_nan() {
        return Err(Error::TrivialRisk(gamma));
    }
    let e = prob.signed_mean(h);
    let norm = dot(&e, &e).sqrt();
    let limit = 1.0 / prob.radius;
    let required = if norm > 0.0 { -gamma / norm } else { f64::INFINITY };
    if required > limit * (1.0 + 1e-12) {
        return Err(Error::RiskBelowCapacity { gamma, required, limit });
    }
    Ok(required)
}

/// `t` found by bisection on the head-norm bound `A`, with the inner
/// minimization done by grid search over `dirs`.
pub fn t_by_bisection(prob: &FiniteProblem, h: usize, gamma: f64, dirs: &[Vec<f64>]) -> Option<f64> {
    let limit = 1.0 / prob.radius;
    if grid_head_risk(prob, h, dirs, limit) > gamma {
        return None;
    }
    let (mut lo, mut hi) = (0.0, limit);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if grid_head_risk(prob, h, dirs, mid) <= gamma {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MinNormVerdict {
    Equal,
    NotEqual,
    AssumptionViolated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinNormReport {
    pub gamma: f64,
    /// `t` per hypothesis; `None` where `gamma` is out of reach.
    pub t: Vec<Option<f64>>,
    pub excluded: Vec<usize>,
    pub argmin_t: Vec<usize>,
    pub d_and_s: Vec<usize>,
    pub verdict: MinNormVerdict,
}

/// Checks that the hypotheses needing the smallest head norm to reach risk
/// `gamma` are exactly `𝔻 ∩ 𝕊`.
pub fn verify_min_norm(prob: &FiniteProblem, gamma: f64) -> Result<MinNormReport> {
    if gamma >= 0.0 || gamma.is_nan() {
        return Err(Error::TrivialRisk(gamma));
    }
    let t: Vec<Option<f64>> = (0..prob.hypotheses.len()).map(|h| t_of_f1(prob, h, gamma).ok()).collect();
    let excluded: Vec<usize> = (0..t.len()).filter(|&h| t[h].is_none()).collect();
    let included: Vec<usize> = (0..t.len()).filter(|&h| t[h].is_some()).collect();
    let values: Vec<f64> = included.iter().map(|&h| t[h].unwrap()).collect();
    let argmin_t: Vec<usize> = argmin_set(&values).into_iter().map(|k| included[k]).collect();
    let d_and_s = intersect(&compute_d(prob), &compute_s(prob));
    let verdict = if d_and_s.is_empty() {
        MinNormVerdict::AssumptionViolated
    } else if argmin_t == d_and_s {
        MinNormVerdict::Equal
    } else {
        MinNormVerdict::NotEqual
    };
    Ok(MinNormReport { gamma, t, excluded, argmin_t, d_and_s, verdict })
}

/// `2tr/√n₂ + 5tr·√(2 ln(8/δ) / n₂)`.
pub fn generalization_bound(t: f64, r: f64, n2: u64, delta: f64) -> Result<f64> {
    if n2 == 0 {
        return Err(Error::InvalidConfig("n2 must be at least 1".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidConfig(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(t >= 0.0 && t.is_finite() && r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidConfig("t must be nonnegative and r positive".into()));
    }
    let n = n2 as f64;
    Ok(2.0 * t * r / n.sqrt() + 5.0 * t * r * (2.0 * (8.0 / delta).ln() / n).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorOptions {
    pub min_inputs: usize,
    pub max_inputs: usize,
    pub min_radius: f64,
    pub max_radius: f64,
    /// Add constant maps. Their image is a single point, so problems built
    /// with them fail the support assumption.
    pub constant_maps: bool,
}

impl Default for GeneratorOptions {
    fn default() -> Self {
        Self { min_inputs: 6, max_inputs: 12, min_radius: 0.5, max_radius: 2.0, constant_maps: false }
    }
}

fn random_unit(g: &mut rng::Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| g.sample(StandardNormal)).collect();
        let n = dot(&v, &v).sqrt();
        if n > 1e-6 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn scaled(v: &[f64], s: f64) -> Vec<f64> {
    v.iter().map(|x| x * s).collect()
}

/// Unit vector at angle `theta` from unit `u`, in a random plane through `u`.
fn at_angle(g: &mut rng::Rng, u: &[f64], theta: f64) -> Vec<f64> {
    let mut v = random_unit(g, u.len());
    let proj = dot(&v, u);
    for (vk, uk) in v.iter_mut().zip(u) {
        *vk -= proj * uk;
    }
    let n = dot(&v, &v).sqrt();
    let v = scaled(&v, 1.0 / n);
    let w: Vec<f64> = u.iter().zip(&v).map(|(a, b)| theta.cos() * a + theta.sin() * b).collect();
    let n = dot(&w, &w).sqrt();
    scaled(&w, 1.0 / n)
}

/// A random problem satisfying both assumptions of the collapse theorem
/// (unless `constant_maps` is set).
///
/// Each input belongs to one class and each class has at least two inputs.
/// Hypotheses: an antipodal class separator and a rotated copy, one to three
/// separators whose class points are not antipodal, and two to four maps
/// sending every input to its own point.
pub fn generate_problem(seed: u64, opts: &GeneratorOptions) -> Result<FiniteProblem> {
    if opts.min_inputs < 4 || opts.max_inputs < opts.min_inputs {
        return Err(Error::InvalidConfig("need 4 ≤ min_inputs ≤ max_inputs".into()));
    }
    if !(opts.min_radius > 0.0 && opts.max_radius >= opts.min_radius) {
        return Err(Error::InvalidConfig("need 0 < min_radius ≤ max_radius".into()));
    }
    let mut g = rng::stream(seed, rng::TRIAL, 0);
    let m = g.random_range(opts.min_inputs..=opts.max_inputs);
    let dim = g.random_range(2..=3);
    let radius = if opts.max_radius > opts.min_radius {
        g.random_range(opts.min_radius..opts.max_radius)
    } else {
        opts.min_radius
    };
    let n_pos = g.random_range(2..=m - 2);
    let mut classes: Vec<bool> = (0..m).map(|i| i < n_pos).collect();
    classes.shuffle(&mut g);
    let weights: Vec<f64> = (0..m).map(|_| g.random_range(0.2..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let pmf: Vec<Mass> = weights
        .iter()
        .zip(&classes)
        .map(|(w, &pos)| if pos { Mass { neg: 0.0, pos: w / total } } else { Mass { neg: w / total, pos: 0.0 } })
        .collect();
    let inputs: Vec<Vec<f64>> = (0..m).map(|i| vec![i as f64]).collect();

    let separator = |name: String, up: &[f64], un: &[f64]| Hypothesis {
        name,
        points: classes.iter().map(|&pos| scaled(if pos { up } else { un }, radius)).collect(),
    };
    let mut hyps = Vec::new();
    for k in 0..2 {
        let u = random_unit(&mut g, dim);
        hyps.push(separator(format!("antipodal-{k}"), &u, &scaled(&u, -1.0)));
    }
    for k in 0..g.random_range(1..=3) {
        let u = random_unit(&mut g, dim);
        let theta = g.random_range(0.3 * PI..0.9 * PI);
        let v = at_angle(&mut g, &u, theta);
        hyps.push(separator(format!("separator-{k}"), &u, &v));
    }
    for k in 0..g.random_range(2..=4) {
        let points = (0..m).map(|_| scaled(&random_unit(&mut g, dim), radius)).collect();
        hyps.push(Hypothesis { name: format!("split-{k}"), points });
    }
    if opts.constant_maps {
        let u = scaled(&random_unit(&mut g, dim), radius);
        hyps.push(Hypothesis { name: "constant".into(), points: vec![u; m] });
    }
    hyps.shuffle(&mut g);
    let prob = FiniteProblem { inputs, pmf, radius, dim, hypotheses: hyps };
    prob.validate()?;
    Ok(prob)
}

/// Outcome of the full oracle suite on one generated problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemCheck {
    pub seed: u64,
    pub hypotheses: usize,
    pub collapse: CollapseReport,
    pub min_norm: MinNormReport,
    /// Largest |closed form − grid search| head risk over hypotheses.
    pub head_risk_gap: f64,
    /// Largest |closed form − bisection| `t` over hypotheses in reach.
    pub t_gap: f64,
}

impl ProblemCheck {
    pub fn passed(&self, tol: f64) -> bool {
        self.collapse.equality == Some(true)
            && self.min_norm.verdict == MinNormVerdict::Equal
            && self.head_risk_gap < tol
            && self.t_gap < tol
    }
}

/// Generates the problem for `seed` and runs every check at
/// `γ = ½ · (best achievable risk)`.
pub fn check_problem(seed: u64, opts: &GeneratorOptions) -> Result<ProblemCheck> {
    let prob = generate_problem(seed, opts)?;
    let dirs = grid_directions(prob.dim, GRID_DIRECTIONS, seed);
    let collapse = verify_collapse(&prob);
    let n = prob.hypotheses.len();
    let best = (0..n).map(|h| min_head_risk(&prob, h)).fold(f64::INFINITY, f64::min);
    let gamma = 0.5 * best;
    let min_norm = verify_min_norm(&prob, gamma)?;
    let mut head_risk_gap: f64 = 0.0;
    let mut t_gap: f64 = 0.0;
    for h in 0..n {
        let closed = min_head_risk(&prob, h);
        head_risk_gap = head_risk_gap.max((closed - grid_head_risk(&prob, h, &dirs, 1.0 / prob.radius)).abs());
        if let Some(t) = min_norm.t[h] {
            match t_by_bisection(&prob, h, gamma, &dirs) {
                Some(tb) => t_gap = t_gap.max((t - tb).abs()),
                None => t_gap = f64::INFINITY,
            }
        }
    }
    Ok(ProblemCheck { seed, hypotheses: n, collapse, min_norm, head_risk_gap, t_gap })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two inputs per class, α = 0.5, in the plane.
    fn toy(hyps: Vec<Hypothesis>) -> FiniteProblem {
        FiniteProblem {
            inputs: (0..4).map(|i| vec![i as f64]).collect(),
            pmf: vec![
                Mass { neg: 0.0, pos: 0.25 },
                Mass { neg: 0.0, pos: 0.25 },
                Mass { neg: 0.25, pos: 0.0 },
                Mass { neg: 0.25, pos: 0.0 },
            ],
            radius: 1.0,
            dim: 2,
            hypotheses: hyps,
        }
    }

    fn sep() -> Hypothesis {
        Hypothesis {
            name: "sep".into(),
            points: vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![-1.0, 0.0], vec![-1.0, 0.0]],
        }
    }

    fn constant() -> Hypothesis {
        Hypothesis { name: "const".into(), points: vec![vec![0.0, 1.0]; 4] }
    }

    #[test]
    fn head_risk_cases() {
        let p = toy(vec![sep(), constant()]);
        p.validate().unwrap();
        assert!((min_head_risk(&p, 0) + 1.0).abs() < 1e-15);
        assert_eq!(min_head_risk(&p, 1), 0.0);
        assert!((p.different_class_objective(0) + 4.0).abs() < 1e-15);
        assert_eq!(p.different_class_objective(1), 0.0);
        assert_eq!(compute_d(&p), vec![0]);
        assert_eq!(compute_s(&p), vec![0]);
        assert_eq!(compute_fstar(&p), vec![0]);
    }

    #[test]
    fn t_cases() {
        let p = toy(vec![sep()]);
        assert!((t_of_f1(&p, 0, -0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(t_of_f1(&p, 0, -2.0), Err(Error::RiskBelowCapacity { .. })));
        assert!(matches!(t_of_f1(&p, 0, 0.0), Err(Error::TrivialRisk(_))));
        let a = t_of_f1(&p, 0, -0.3).unwrap();
        let b = t_of_f1(&p, 0, -0.6).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-15);
    }

    #[test]
    fn bound_value() {
        let b = generalization_bound(1.0, 1.0, 100, 0.1).unwrap();
        assert!((b - 1.6803).abs() < 1e-4, "{b}");
        assert!(generalization_bound(1.0, 1.0, 0, 0.1).is_err());
        assert!(generalization_bound(1.0, 1.0, 10, 1.0).is_err());
    }

    #[test]
    fn generator_meets_assumptions() {
        for seed in 0..20 {
            let p = generate_problem(seed, &GeneratorOptions::default()).unwrap();
            let r = verify_collapse(&p);
            assert!(r.intersection_nonempty && r.support_condition, "seed {seed}");
        }
        let p = generate_problem(0, &GeneratorOptions { constant_maps: true, ..Default::default() }).unwrap();
        let r = verify_collapse(&p);
        assert!(!r.support_condition && r.equality.is_none());
    }
}
