//! Exact spectral analysis for small instances: gaps, convergence rate of
//! the cyclic product of clause checks, Friedrichs angle of layer images and
//! the associated inequalities.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::{
    clause_projectors, ground_space_projector, literal_projector, non_commuting_degree, sum_dense, Angle,
};
use crate::error::{Error, Result};
use crate::formula::{Assignment, Formula};
use crate::limits;
use crate::linalg;
use crate::phf::{self, Layer};
use crate::statevec::{product_operator, MeasurementPlan};

/// Eigenvalues below this count as zero energy.
pub const GROUND_TOL: f64 = 1e-10;

/// Exact enumeration of clause subsets up to this many clauses.
pub const UNIFORM_GAP_EXACT_MAX_M: usize = 12;

/// Random subsets drawn when the uniform gap cannot be enumerated.
pub const UNIFORM_GAP_SAMPLES: usize = 4096;

fn gap_of(n: usize, projectors: &[&crate::encoding::ClauseProjector], d_sol: usize) -> Result<f64> {
    let dim = 1usize << n;
    if d_sol == 0 {
        return Err(Error::Unsatisfiable);
    }
    if d_sol >= dim {
        return Err(Error::InvalidParameter("Hamiltonian is zero; no gap".into()));
    }
    let mut h = DMatrix::zeros(dim, dim);
    for p in projectors {
        p.add_to_dense(&mut h, 1.0);
    }
    let ev = linalg::sorted_eigenvalues(&h);
    if ev[d_sol - 1] >= GROUND_TOL {
        return Err(Error::Internal(format!("ground energy {:e} not zero for {} solutions", ev[d_sol - 1], d_sol)));
    }
    Ok(ev[d_sol])
}

/// Smallest nonzero eigenvalue of `H(θ)`.
pub fn spectral_gap(f: &Formula, theta: Angle) -> Result<f64> {
    limits::check_dense("spectral gap", f.num_vars())?;
    let d_sol = f.count_solutions()?;
    let ps = clause_projectors(f, theta)?;
    gap_of(f.num_vars(), &ps.iter().collect::<Vec<_>>(), d_sol)
}

/// `sin^{2k}θ · ((1 − cosθ)/(1 + cosθ))^n`.
pub fn gap_lower_bound(theta: Angle, n: usize, k: usize) -> f64 {
    let c = theta.cos();
    theta.sin().powi(2 * k as i32) * ((1.0 - c) / (1.0 + c)).powi(n as i32)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformGap {
    pub value: f64,
    /// False when subsets were sampled rather than enumerated.
    pub exact: bool,
    pub subsets_evaluated: usize,
}

/// Minimum gap over nonempty clause subsets.
pub fn uniform_gap(f: &Formula, theta: Angle) -> Result<UniformGap> {
    let n = f.num_vars();
    let m = f.num_clauses();
    limits::check_dense("uniform gap", n)?;
    if m == 0 {
        return Err(Error::InvalidParameter("uniform gap of an empty formula".into()));
    }
    if f.count_solutions()? == 0 {
        return Err(Error::Unsatisfiable);
    }
    let ps = clause_projectors(f, theta)?;
    let eval = |subset: &[usize]| -> Result<f64> {
        let d = f.subformula(subset).count_solutions()?;
        gap_of(n, &subset.iter().map(|&i| &ps[i]).collect::<Vec<_>>(), d)
    };
    let mut best = f64::INFINITY;
    let mut count = 0;
    let exact = m <= UNIFORM_GAP_EXACT_MAX_M;
    if exact {
        for mask in 1usize..1 << m {
            let subset: Vec<usize> = (0..m).filter(|i| mask >> i & 1 == 1).collect();
            best = best.min(eval(&subset)?);
            count += 1;
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let all: Vec<usize> = (0..m).collect();
        best = eval(&all)?;
        count = 1;
        for i in 0..m {
            best = best.min(eval(&[i])?);
            count += 1;
        }
        for _ in 0..UNIFORM_GAP_SAMPLES {
            let size = rng.random_range(2..m);
            let mut subset = sample(&mut rng, m, size).into_vec();
            subset.sort_unstable();
            best = best.min(eval(&subset)?);
            count += 1;
        }
    }
    Ok(UniformGap { value: best, exact, subsets_evaluated: count })
}

/// `‖T − P_GS‖₂` for the cyclic product `T` in plan order.
pub fn convergence_rate(f: &Formula, theta: Angle, plan: &MeasurementPlan) -> Result<f64> {
    let t = product_operator(f, theta, plan)?;
    let p = ground_space_projector(f, theta)?;
    Ok(linalg::spectral_norm(&(t - p)))
}

/// `‖T^r − P_GS‖₂` for `r = 1..=r_max`.
pub fn power_deviations(t: &DMatrix<f64>, p_gs: &DMatrix<f64>, r_max: usize) -> Vec<f64> {
    let mut pow = t.clone();
    let mut out = Vec::with_capacity(r_max);
    for r in 1..=r_max {
        if r > 1 {
            pow = &pow * t;
        }
        out.push(linalg::spectral_norm(&(&pow - p_gs)));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DlQub {
    pub gap: f64,
    pub mu_emp: f64,
    pub g: usize,
    /// `1/√(Δ/g² + 1)`, zero when `g = 0`.
    pub dl_bound: f64,
    /// `1 − 4Δ`.
    pub qub_bound: f64,
    pub dl_slack: f64,
    pub qub_slack: f64,
}

/// Upper bound on the convergence rate from the detectability lemma.
pub fn dl_upper(gap: f64, g: usize) -> f64 {
    if g == 0 {
        0.0
    } else {
        1.0 / (gap / (g * g) as f64 + 1.0).sqrt()
    }
}

/// Both sides of `1 − 4Δ ≤ μ_emp ≤ 1/√(Δ/g² + 1)` for input-order checks.
pub fn check_dl_qub(f: &Formula, theta: Angle) -> Result<DlQub> {
    let gap = spectral_gap(f, theta)?;
    let mu_emp = convergence_rate(f, theta, &MeasurementPlan::sequential(f.num_clauses()))?;
    let g = non_commuting_degree(&clause_projectors(f, theta)?);
    let dl_bound = dl_upper(gap, g);
    let qub_bound = 1.0 - 4.0 * gap;
    Ok(DlQub { gap, mu_emp, g, dl_bound, qub_bound, dl_slack: dl_bound - mu_emp, qub_slack: mu_emp - qub_bound })
}

/// Friedrichs-type constant of `ℓ ≥ 2` subspaces given by orthonormal
/// column bases: `(λ_max(G) − 1)/(ℓ − 1)` for the block Gram matrix `G`.
pub fn friedrichs_angle(subspace_bases: &[DMatrix<f64>], ambient_dim: usize) -> Result<f64> {
    let l = subspace_bases.len();
    if l < 2 {
        return Err(Error::InvalidParameter("Friedrichs angle needs at least two subspaces".into()));
    }
    let total: usize = subspace_bases.iter().map(|b| b.ncols()).sum();
    if total == 0 {
        return Ok(0.0);
    }
    let mut stacked = DMatrix::zeros(ambient_dim, total);
    let mut col = 0;
    for b in subspace_bases {
        if b.nrows() != ambient_dim {
            return Err(Error::LengthMismatch { expected: ambient_dim, got: b.nrows() });
        }
        stacked.columns_mut(col, b.ncols()).copy_from(b);
        col += b.ncols();
    }
    // BᵀB and BBᵀ share their nonzero spectrum
    let gram = if total <= ambient_dim { stacked.transpose() * &stacked } else { &stacked * stacked.transpose() };
    let lambda_max = linalg::sorted_eigenvalues(&gram).last().copied().unwrap_or(0.0);
    Ok(((lambda_max - 1.0) / (l - 1) as f64).clamp(0.0, 1.0))
}

/// Orthonormal bases of `im(Π_{i∈layer} C_i) ∩ M^⊥`, with `M` the ground space.
pub fn layer_image_bases(f: &Formula, theta: Angle, layers: &[Layer]) -> Result<Vec<DMatrix<f64>>> {
    let n = f.num_vars();
    limits::check_dense("layer images", n)?;
    let dim = 1usize << n;
    let p_gs = ground_space_projector(f, theta)?;
    layers
        .iter()
        .map(|layer| {
            let q = product_operator(
                &f.subformula(layer.clauses()),
                theta,
                &MeasurementPlan::from_groups(vec![(0..layer.len()).collect()]),
            )?;
            let vecs = linalg::eigenvectors_above(&(q - &p_gs), 0.5);
            let mut b = DMatrix::zeros(dim, vecs.len());
            for (j, v) in vecs.iter().enumerate() {
                b.set_column(j, v);
            }
            Ok(b)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedCheck {
    pub c: f64,
    pub layers: usize,
    /// `(‖T^r − P_M‖, (1 − ((1−c)/(4ℓ))²)^{r/2})` for `r = 1..`.
    pub points: Vec<(f64, f64)>,
    pub min_slack: f64,
}

/// Convergence-speed bound for the layered product.
pub fn speed_bound_check(f: &Formula, theta: Angle, r_max: usize) -> Result<SpeedCheck> {
    let layers = phf::build_layers(f)?;
    let l = layers.len();
    let bases = layer_image_bases(f, theta, &layers)?;
    let c = friedrichs_angle(&bases, 1 << f.num_vars())?;
    let t = product_operator(f, theta, &MeasurementPlan::layered(&layers))?;
    let p_gs = ground_space_projector(f, theta)?;
    let base = 1.0 - ((1.0 - c) / (4.0 * l as f64)).powi(2);
    let points: Vec<(f64, f64)> = power_deviations(&t, &p_gs, r_max)
        .into_iter()
        .enumerate()
        .map(|(i, lhs)| (lhs, base.powf((i + 1) as f64 / 2.0)))
        .collect();
    let min_slack = points.iter().map(|(a, b)| b - a).fold(f64::INFINITY, f64::min);
    Ok(SpeedCheck { c, layers: l, points, min_slack })
}

/// `H_after − H_before ⪰ 0` for the clauses surviving `var := value`, with
/// each surviving clause compared against its own pre-image.
pub fn monotone_update_check(f: &Formula, theta: Angle, var: usize, value: bool) -> Result<bool> {
    let n = f.num_vars();
    limits::check_dense("monotone update", n)?;
    if var == 0 || var > n {
        return Err(Error::LiteralOutOfRange { lit: var as i64, n });
    }
    let dim = 1usize << n;
    let mut diff = DMatrix::zeros(dim, dim);
    for c in f.clauses() {
        match c.literal_of(var) {
            Some(l) if l.eval(value) => continue,
            Some(_) => {
                let rest: Vec<_> = c.literals().iter().copied().filter(|l| l.var != var).collect();
                literal_projector(&rest, theta, n)?.add_to_dense(&mut diff, 1.0);
                literal_projector(c.literals(), theta, n)?.add_to_dense(&mut diff, -1.0);
            }
            None => {}
        }
    }
    Ok(linalg::sorted_eigenvalues(&diff).first().is_none_or(|&e| e >= -GROUND_TOL))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AvgOverlap {
    /// `((1 + cosθ)/2)^n`.
    pub analytic: f64,
    /// `Σ_ℓ C(n,ℓ) 2^{−n} cos^ℓ θ`.
    pub binomial_sum: f64,
    /// Mean of `cos^{D_xy} θ` over random pairs.
    pub monte_carlo: f64,
    pub std_err: f64,
}

pub fn avg_overlap_identity<R: Rng + ?Sized>(n: usize, theta: Angle, samples: usize, rng: &mut R) -> AvgOverlap {
    let c = theta.cos();
    let analytic = ((1.0 + c) / 2.0).powi(n as i32);
    let mut binom = 1.0f64;
    let mut binomial_sum = 0.0;
    for l in 0..=n {
        binomial_sum += binom * 0.5f64.powi(n as i32) * c.powi(l as i32);
        binom = binom * (n - l) as f64 / (l + 1) as f64;
    }
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..samples {
        let d = (0..n).filter(|_| rng.random::<bool>() != rng.random::<bool>()).count();
        let v = c.powi(d as i32);
        sum += v;
        sum_sq += v * v;
    }
    let s = samples.max(1) as f64;
    let mean = sum / s;
    let var = (sum_sq / s - mean * mean).max(0.0);
    AvgOverlap { analytic, binomial_sum, monte_carlo: mean, std_err: (var / s).sqrt() }
}

/// Per-angle summary for reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub theta: f64,
    pub n: usize,
    pub m: usize,
    pub d_sol: usize,
    pub gap: f64,
    pub uniform_gap: Option<UniformGap>,
    pub mu_emp: f64,
    pub g: usize,
    pub friedrichs_c: Option<f64>,
    pub dl_slack: f64,
    pub qub_slack: f64,
    pub gap_bound_slack: f64,
    pub speed_slack: Option<f64>,
}

pub fn spectral_report(f: &Formula, theta: Angle, with_uniform_gap: bool) -> Result<SpectralReport> {
    let dq = check_dl_qub(f, theta)?;
    let uniform = if with_uniform_gap { Some(uniform_gap(f, theta)?) } else { None };
    let layers = phf::build_layers(f)?;
    let speed = if layers.len() >= 2 { Some(speed_bound_check(f, theta, 10)?) } else { None };
    Ok(SpectralReport {
        theta: theta.radians(),
        n: f.num_vars(),
        m: f.num_clauses(),
        d_sol: f.count_solutions()?,
        gap: dq.gap,
        uniform_gap: uniform,
        mu_emp: dq.mu_emp,
        g: dq.g,
        friedrichs_c: speed.as_ref().map(|s| s.c),
        dl_slack: dq.dl_slack,
        qub_slack: dq.qub_slack,
        gap_bound_slack: dq.gap - gap_lower_bound(theta, f.num_vars(), f.k()),
        speed_slack: speed.map(|s| s.min_slack),
    })
}

/// Rank of `P_GS`, counted as eigenvalues above one half.
pub fn ground_space_rank(f: &Formula, theta: Angle) -> Result<usize> {
    let p = ground_space_projector(f, theta)?;
    Ok(linalg::sorted_eigenvalues(&p).iter().filter(|&&e| e > 0.5).count())
}

/// Overlap `⟨Θ_x|Θ_y⟩` in closed form.
pub fn gram_closed_form(x: &Assignment, y: &Assignment, theta: Angle) -> f64 {
    theta.cos().powi(x.hamming(y) as i32)
}

/// Smallest eigenvalue of `H(θ)`.
pub fn ground_energy(f: &Formula, theta: Angle) -> Result<f64> {
    limits::check_dense("ground energy", f.num_vars())?;
    let h = sum_dense(f.num_vars(), &clause_projectors(f, theta)?);
    Ok(linalg::sorted_eigenvalues(&h)[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{generate, GeneratorKind};
    use approx::assert_abs_diff_eq;

    fn frac(x: f64) -> Angle {
        Angle::from_fraction(x).unwrap()
    }

    fn satisfiable_random(n: usize, m: usize, seed: u64) -> Formula {
        (seed..)
            .map(|s| generate(GeneratorKind::RandomKsat, n, m, 3, s).unwrap())
            .find(|f| f.count_solutions().unwrap() > 0)
            .unwrap()
    }

    #[test]
    fn single_clause_gap_is_one() {
        let f = Formula::from_dimacs_clauses(4, &[&[1, -2, 4]]).unwrap();
        for t in [0.2, 0.6, 1.0] {
            assert_abs_diff_eq!(spectral_gap(&f, frac(t)).unwrap(), 1.0, epsilon = 1e-10);
            let u = uniform_gap(&f, frac(t)).unwrap();
            assert!(u.exact);
            assert_abs_diff_eq!(u.value, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn unsat_gap_errors() {
        let f = Formula::from_dimacs_clauses(1, &[&[1], &[-1]]).unwrap();
        assert!(matches!(spectral_gap(&f, frac(0.5)), Err(Error::Unsatisfiable)));
    }

    #[test]
    fn gap_bound_and_uniform_gap() {
        for seed in 0..4 {
            let f = satisfiable_random(5, 8, seed * 10);
            for t in [0.25, 0.5, 1.0] {
                let gap = spectral_gap(&f, frac(t)).unwrap();
                assert!(gap - gap_lower_bound(frac(t), 5, 3) >= -1e-9);
                let u = uniform_gap(&f, frac(t)).unwrap();
                assert!(u.value <= gap + 1e-12);
            }
        }
    }

    #[test]
    fn unate_gap_at_least_one_at_right_angle() {
        let f = generate(GeneratorKind::Unate, 6, 10, 3, 2).unwrap();
        assert!(spectral_gap(&f, Angle::right()).unwrap() >= 1.0 - 1e-10);
    }

    #[test]
    fn convergence_rate_cases() {
        let f = satisfiable_random(6, 12, 100);
        let seq = MeasurementPlan::sequential(f.num_clauses());
        assert!(convergence_rate(&f, Angle::right(), &seq).unwrap() < 1e-12);
        let u = generate(GeneratorKind::Unate, 6, 10, 3, 3).unwrap();
        assert!(convergence_rate(&u, frac(0.3), &MeasurementPlan::sequential(10)).unwrap() < 1e-10);
        let mu = convergence_rate(&f, frac(0.5), &seq).unwrap();
        assert!(mu > 0.0 && mu < 1.0, "{mu}");
        let t = product_operator(&f, frac(0.5), &seq).unwrap();
        let p = ground_space_projector(&f, frac(0.5)).unwrap();
        for (r, d) in power_deviations(&t, &p, 10).into_iter().enumerate() {
            assert!(d <= mu.powi(r as i32 + 1) + 1e-12);
        }
    }

    #[test]
    fn dl_qub_hold() {
        for seed in 0..5 {
            let f = satisfiable_random(5, 10, seed * 7);
            for t in [0.2, 0.5, 0.8, 1.0] {
                let r = check_dl_qub(&f, frac(t)).unwrap();
                assert!(r.dl_slack >= -1e-9 && r.qub_slack >= -1e-9, "{r:?}");
                assert!(r.dl_bound <= 1.0 - r.gap / (4 * r.g * r.g).max(1) as f64 + 1e-12 || r.g == 0);
            }
        }
    }

    #[test]
    fn friedrichs_two_lines() {
        for alpha in [0.1, 0.7, 1.3, 2.5] {
            let a = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
            let b = DMatrix::from_column_slice(2, 1, &[f64::cos(alpha), f64::sin(alpha)]);
            let c = friedrichs_angle(&[a, b], 2).unwrap();
            assert_abs_diff_eq!(c, f64::cos(alpha).abs(), epsilon = 1e-12);
        }
        let a = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let b = DMatrix::from_column_slice(3, 1, &[0.0, 1.0, 0.0]);
        assert_abs_diff_eq!(friedrichs_angle(&[a, b], 3).unwrap(), 0.0, epsilon = 1e-15);
        assert!(friedrichs_angle(&[DMatrix::zeros(3, 1)], 3).is_err());
        assert_eq!(friedrichs_angle(&[DMatrix::zeros(3, 0), DMatrix::zeros(3, 0)], 3).unwrap(), 0.0);
    }

    #[test]
    fn speed_bound_on_small_instance() {
        let f = satisfiable_random(5, 10, 40);
        let s = speed_bound_check(&f, frac(0.5), 10).unwrap();
        assert!(s.layers >= 2);
        assert!(s.min_slack >= -1e-9);
    }

    #[test]
    fn monotone_updates() {
        let f = satisfiable_random(5, 9, 11);
        for var in 1..=5 {
            for val in [false, true] {
                assert!(monotone_update_check(&f, frac(0.4), var, val).unwrap());
            }
        }
        let g = Formula::from_dimacs_clauses(3, &[&[1, 2]]).unwrap();
        assert!(monotone_update_check(&g, frac(0.4), 3, true).unwrap());
    }

    #[test]
    fn average_overlap() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = avg_overlap_identity(1, frac(0.3), 10, &mut rng);
        assert_abs_diff_eq!(a.binomial_sum, (1.0 + frac(0.3).cos()) / 2.0, epsilon = 1e-15);
        let a = avg_overlap_identity(7, Angle::right(), 10, &mut rng);
        assert_abs_diff_eq!(a.binomial_sum, 0.5f64.powi(7), epsilon = 1e-15);
        let t = Angle::new(std::f64::consts::PI / 3.0).unwrap();
        let a = avg_overlap_identity(10, t, 20000, &mut rng);
        assert_abs_diff_eq!(a.binomial_sum, 0.75f64.powi(10), epsilon = 1e-12);
        assert!((a.monte_carlo - a.analytic).abs() <= 3.0 * a.std_err);
    }

    #[test]
    fn rank_matches_solution_count() {
        let f = satisfiable_random(6, 14, 5);
        for t in [0.1, 0.5, 1.0] {
            assert_eq!(ground_space_rank(&f, frac(t)).unwrap(), f.count_solutions().unwrap());
        }
    }
}
