//! The rational functions `r_{l,j} = p_{l,j} / p_hat` that characterize one
//! dG(q) step, derived symbolically by Cramer's rule from the local system
//! `(D + e0 e0^T) + z Q` with exact fraction arithmetic, plus a spectral
//! oracle solver built from them.
//!
//! For the homogeneous step `U_l = r_{l,0}(-k Delta) U_in`; for the forced
//! step the interval moments enter as `U_l = k sum_j r_{l,j}(-k Delta) f_j`.
//! `r_{q,0}` is the subdiagonal Pade approximant of `exp(-z)`.

use crate::error::{Error, Result};
use crate::exact::{self, q_int, QPoly, Q};
use crate::spatial::{DiscreteFunction, FeSpace};
use crate::stepper::{DgSolution, TemporalBasis};
use crate::time_partition::TimePartition;
use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use std::sync::Arc;

/// Safe `BigRational -> f64` for ratios whose numerator/denominator digits
/// exceed the f64 range (the exact Pade defects do).
pub fn q_to_f64(x: &Q) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    let num = x.numer();
    let den = x.denom();
    let nbits = num.bits() as i64;
    let dbits = den.bits() as i64;
    // scale the integer quotient to roughly 80 bits
    let shift = 80 - (nbits - dbits);
    let q: BigInt = if shift >= 0 {
        (num << shift as u64) / den
    } else {
        num / (den << (-shift) as u64)
    };
    q.to_f64().unwrap_or(f64::NAN) * 2f64.powi(-shift as i32)
}

#[derive(Debug, Clone)]
pub struct RationalFamily {
    pub q: usize,
    /// Common denominator, degree `q + 1`, normalized so `p_hat(0) = 1`.
    pub p_hat: QPoly,
    /// Numerators of `r_{l,0}`, degree `<= q`.
    pub homog: Vec<QPoly>,
    /// Numerators of `r_{l,j}`, degree `<= q`.
    pub force: Vec<Vec<QPoly>>,
    p_hat_f: Vec<f64>,
    homog_f: Vec<Vec<f64>>,
    force_f: Vec<Vec<Vec<f64>>>,
}

/// Derive the family for temporal degree `q` (tested through `q = 3`).
pub fn derive_family(q: usize) -> Result<RationalFamily> {
    let tabs = exact::temporal_tables(q);
    let n = q + 1;
    // L(z)[j][l] = D[j][l] + e0[l] e0[j] + z Q[j][l]
    let l_mat: Vec<Vec<QPoly>> = (0..n)
        .map(|j| {
            (0..n)
                .map(|l| {
                    QPoly::new(vec![
                        &tabs.d[j][l] + &tabs.e0[l] * &tabs.e0[j],
                        tabs.q_mat[j][l].clone(),
                    ])
                })
                .collect()
        })
        .collect();
    let det = exact::poly_det(&l_mat);
    let adj = exact::poly_adjugate(&l_mat);
    let c0 = det.coeff(0);
    if c0.is_zero() {
        return Err(Error::Solver(format!(
            "local dG system singular at z = 0 for q = {q}"
        )));
    }
    let inv_c0 = BigRational::new(BigInt::from(1), 1.into()) / &c0;
    let p_hat = det.scale(&inv_c0);
    let homog: Vec<QPoly> = (0..n)
        .map(|l| {
            // row l of the inverse applied to e0
            let mut acc = QPoly::zero();
            for j in 0..n {
                acc = acc.add(&adj[l][j].scale(&tabs.e0[j]));
            }
            acc.scale(&inv_c0)
        })
        .collect();
    let force: Vec<Vec<QPoly>> = (0..n)
        .map(|l| (0..n).map(|j| adj[l][j].scale(&inv_c0)).collect())
        .collect();

    // exact structural identities
    debug_assert!(p_hat.coeff(0) == q_int(1));
    for h in &homog {
        if h.coeff(0) != q_int(1) {
            return Err(Error::Solver(format!(
                "derived r_l0(0) != 1 for q = {q}; local system inconsistent"
            )));
        }
    }

    let fam = RationalFamily {
        q,
        p_hat_f: p_hat.to_f64_coeffs(),
        homog_f: homog.iter().map(|p| p.to_f64_coeffs()).collect(),
        force_f: force
            .iter()
            .map(|row| row.iter().map(|p| p.to_f64_coeffs()).collect())
            .collect(),
        p_hat,
        homog,
        force,
    };

    // The denominator must have all roots strictly in the left half-plane;
    // flag any q violating this instead of silently accepting it.
    for root in fam.p_hat_roots() {
        if root.re >= -1e-9 {
            return Err(Error::Solver(format!(
                "p_hat root {root} not in the open left half-plane for q = {q}"
            )));
        }
    }
    Ok(fam)
}

fn horner(coeffs: &[f64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::ZERO;
    for c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

fn horner_real(coeffs: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

impl RationalFamily {
    pub fn eval_homog(&self, l: usize, z: Complex64) -> Result<Complex64> {
        let den = horner(&self.p_hat_f, z);
        if den.norm() < 1e-14 {
            return Err(Error::Pole {
                z,
                magnitude: den.norm(),
            });
        }
        Ok(horner(&self.homog_f[l], z) / den)
    }

    pub fn eval_force(&self, l: usize, j: usize, z: Complex64) -> Result<Complex64> {
        let den = horner(&self.p_hat_f, z);
        if den.norm() < 1e-14 {
            return Err(Error::Pole {
                z,
                magnitude: den.norm(),
            });
        }
        Ok(horner(&self.force_f[l][j], z) / den)
    }

    /// Real evaluation on `lambda >= 0`, where `p_hat` has no roots.
    pub fn eval_homog_real(&self, l: usize, lambda: f64) -> f64 {
        horner_real(&self.homog_f[l], lambda) / horner_real(&self.p_hat_f, lambda)
    }

    pub fn eval_force_real(&self, l: usize, j: usize, lambda: f64) -> f64 {
        horner_real(&self.force_f[l][j], lambda) / horner_real(&self.p_hat_f, lambda)
    }

    /// Roots of `p_hat` from the companion matrix.
    pub fn p_hat_roots(&self) -> Vec<Complex64> {
        let deg = self.p_hat.degree();
        let lead = q_to_f64(&self.p_hat.coeff(deg));
        let mut companion = DMatrix::<f64>::zeros(deg, deg);
        for i in 1..deg {
            companion[(i, i - 1)] = 1.0;
        }
        for i in 0..deg {
            companion[(i, deg - 1)] = -q_to_f64(&self.p_hat.coeff(i)) / lead;
        }
        companion
            .complex_eigenvalues()
            .iter()
            .map(|c| Complex64::new(c.re, c.im))
            .collect()
    }

    /// Least-squares slope of `log |r_{q,0}(lambda) - exp(-lambda)|` against
    /// `log lambda` over 12 log-spaced points in `[1e-3, 1e-1]`. The defect is
    /// evaluated in exact fraction arithmetic (with a truncated exponential
    /// series) because in f64 the subtraction drowns in rounding already for
    /// `q = 2` on this window.
    pub fn pade_defect_order(&self) -> Result<f64> {
        let samples: Vec<f64> = (0..12)
            .map(|i| 10f64.powf(-3.0 + 2.0 * i as f64 / 11.0))
            .collect();
        let mut pts = Vec::with_capacity(samples.len());
        let mut any_above_floor = false;
        for &lam in &samples {
            let lam_q = BigRational::from_float(lam).unwrap();
            let r = self.homog[self.q].eval_q(&lam_q) / self.p_hat.eval_q(&lam_q);
            let e = exact::exp_taylor(&(-&lam_q), 0.1, 1e-45);
            let defect = q_to_f64(&(r - e).abs());
            if defect > 1e-15 {
                any_above_floor = true;
            }
            pts.push((lam.ln(), defect.max(f64::MIN_POSITIVE).ln()));
        }
        if !any_above_floor {
            return Err(Error::Precision(
                "Pade defect below 1e-15 at all sample points".to_string(),
            ));
        }
        Ok(crate::lab::fit_slope(&pts))
    }

    /// Sup of `|r_{q,0}|` over the samples and the value at the largest one.
    pub fn stability_profile(&self, lambda_samples: &[f64]) -> Result<StabilityProfile> {
        if !lambda_samples.iter().any(|&l| l == 0.0)
            || !lambda_samples.iter().any(|&l| l >= 1e6)
        {
            return Err(Error::Usage(
                "stability samples must include lambda = 0 and lambda >= 1e6".to_string(),
            ));
        }
        let mut sup = 0.0f64;
        let mut sup_at = 0.0;
        let mut largest = 0.0f64;
        let mut tail = 0.0;
        for &lam in lambda_samples {
            if lam < 0.0 {
                return Err(Error::Domain {
                    name: "lambda",
                    detail: format!("stability samples must be nonnegative, got {lam}"),
                });
            }
            let v = self.eval_homog_real(self.q, lam).abs();
            if v > sup {
                sup = v;
                sup_at = lam;
            }
            if lam >= largest {
                largest = lam;
                tail = v;
            }
        }
        Ok(StabilityProfile {
            sup,
            sup_at,
            tail_lambda: largest,
            tail_value: tail,
        })
    }

    /// Exact fraction rendering (with decimal coefficients) for display.
    pub fn pretty(&self) -> String {
        let line = |name: &str, p: &QPoly| {
            format!("{name} = {}   [decimals: {:?}]\n", p.pretty("z"), p.to_f64_coeffs())
        };
        let mut out = String::new();
        out.push_str(&format!("dG({}) rational kernels\n", self.q));
        out.push_str(&line("p_hat(z)  ", &self.p_hat));
        for (l, p) in self.homog.iter().enumerate() {
            out.push_str(&line(&format!("p_{l},0(z)  "), p));
        }
        for (l, row) in self.force.iter().enumerate() {
            for (j, p) in row.iter().enumerate() {
                out.push_str(&line(&format!("p_{l},{j}^f(z)"), p));
            }
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let poly_json = |p: &QPoly| {
            serde_json::json!({
                "fractions": p.coeffs().iter().map(|c| format!("{c}")).collect::<Vec<_>>(),
                "decimals": p.to_f64_coeffs(),
            })
        };
        serde_json::json!({
            "q": self.q,
            "p_hat": poly_json(&self.p_hat),
            "homogeneous_numerators": self.homog.iter().map(poly_json).collect::<Vec<_>>(),
            "forcing_numerators": self.force.iter()
                .map(|row| row.iter().map(poly_json).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityProfile {
    pub sup: f64,
    pub sup_at: f64,
    pub tail_lambda: f64,
    pub tail_value: f64,
}

/// Per-interval forcing moments expressed in eigen coordinates: `[m][j][mode]`.
pub type ModeMoments = Vec<Vec<Vec<f64>>>;

/// Eigen coordinates of a coefficient vector: `c_i = v_i' M x`.
pub fn eigen_coordinates(
    space: &FeSpace,
    pairs: &[(f64, DiscreteFunction)],
    x: &DVector<f64>,
) -> Vec<f64> {
    let mx = space.mass.matvec(x);
    pairs.iter().map(|(_, v)| v.values.dot(&mx)).collect()
}

/// Eigen coordinates of a load (dual) vector: `c_i = v_i' F`.
pub fn load_coordinates(pairs: &[(f64, DiscreteFunction)], load: &DVector<f64>) -> Vec<f64> {
    pairs.iter().map(|(_, v)| v.values.dot(load)).collect()
}

/// Diagonal one-step recursion over a complete `M`-orthonormal eigenbasis:
/// per mode `i` and interval `m`, with `z = k_m lambda_i`,
/// `c^m_l = r_{l,0}(z) c^{m-1}_q + k_m sum_j r_{l,j}(z) f^m_{j,i}`.
pub fn spectral_solve(
    space: &Arc<FeSpace>,
    pairs: &[(f64, DiscreteFunction)],
    part: &TimePartition,
    q: usize,
    u0_modes: &[f64],
    f_modes: Option<&ModeMoments>,
) -> Result<DgSolution> {
    let n = space.num_interior();
    if pairs.len() != n {
        return Err(Error::IncompleteEigenbasis {
            expected: n,
            got: pairs.len(),
        });
    }
    if u0_modes.len() != n {
        return Err(Error::Domain {
            name: "u0_modes",
            detail: format!("expected {n} mode coefficients, got {}", u0_modes.len()),
        });
    }
    if let Some(f) = f_modes {
        if f.len() != part.num_intervals() {
            return Err(Error::Domain {
                name: "f_modes",
                detail: format!(
                    "expected {} intervals, got {}",
                    part.num_intervals(),
                    f.len()
                ),
            });
        }
    }
    let fam = derive_family(q)?;
    let basis_mat = {
        let mut v = DMatrix::<f64>::zeros(n, n);
        for (i, (_, vi)) in pairs.iter().enumerate() {
            v.set_column(i, &vi.values);
        }
        v
    };
    let m_count = part.num_intervals();
    let mut coeffs: Vec<Vec<DVector<f64>>> = Vec::with_capacity(m_count);
    let mut prev: Vec<f64> = u0_modes.to_vec();
    for m in 1..=m_count {
        let k = part.step(m);
        let mut c_l: Vec<Vec<f64>> = vec![vec![0.0; n]; q + 1];
        for (i, (lambda, _)) in pairs.iter().enumerate() {
            let z = k * lambda;
            for (l, cl) in c_l.iter_mut().enumerate() {
                let mut val = fam.eval_homog_real(l, z) * prev[i];
                if let Some(f) = f_modes {
                    for j in 0..=q {
                        val += k * fam.eval_force_real(l, j, z) * f[m - 1][j][i];
                    }
                }
                cl[i] = val;
            }
        }
        prev = c_l[q].clone();
        coeffs.push(
            c_l.into_iter()
                .map(|c| &basis_mat * DVector::from_vec(c))
                .collect(),
        );
    }
    let initial = &basis_mat * DVector::from_vec(u0_modes.to_vec());
    DgSolution::from_parts(space.clone(), part.clone(), TemporalBasis::new(q), coeffs, initial)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::q_ratio;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    #[test]
    fn dg0_kernel_is_backward_euler() {
        let fam = derive_family(0).unwrap();
        // r_00(z) = 1/(1+z)
        assert_eq!(fam.p_hat.coeffs(), &[q_int(1), q_int(1)]);
        assert_eq!(fam.homog[0].coeffs(), &[q_int(1)]);
        let v = fam.eval_homog(0, Complex64::new(1.0, 0.0)).unwrap();
        assert_relative_eq!(v.re, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn dg1_kernels_exact() {
        let fam = derive_family(1).unwrap();
        // p_hat = 1 + 2z/3 + z^2/6
        assert_eq!(
            fam.p_hat.coeffs(),
            &[q_int(1), q_ratio(2, 3), q_ratio(1, 6)]
        );
        assert_eq!(fam.homog[0].coeffs(), &[q_int(1), q_ratio(2, 3)]);
        assert_eq!(fam.homog[1].coeffs(), &[q_int(1), q_ratio(-1, 3)]);
    }

    /// The final-node kernel is the subdiagonal Pade approximant of
    /// `exp(-z)`; at q = 2 its closed form (numerator/denominator
    /// coefficients from the factorial formula for Pade(2,3)) pins the whole
    /// exact derivation chain.
    #[test]
    fn dg2_final_node_kernel_is_pade_2_3() {
        let fam = derive_family(2).unwrap();
        assert_eq!(
            fam.p_hat.coeffs(),
            &[q_int(1), q_ratio(3, 5), q_ratio(3, 20), q_ratio(1, 60)]
        );
        assert_eq!(
            fam.homog[2].coeffs(),
            &[q_int(1), q_ratio(-2, 5), q_ratio(1, 20)]
        );
    }

    #[test]
    fn homog_kernels_are_one_at_zero() {
        for q in 0..=3 {
            let fam = derive_family(q).unwrap();
            for l in 0..=q {
                assert_eq!(fam.homog[l].coeff(0), q_int(1), "q={q} l={l}");
                let v = fam.eval_homog(l, Complex64::ZERO).unwrap();
                assert_eq!(v, Complex64::new(1.0, 0.0));
            }
        }
    }

    #[test]
    fn dg1_value_at_three_vanishes_for_l1() {
        let fam = derive_family(1).unwrap();
        let v = fam.eval_homog(1, Complex64::new(3.0, 0.0)).unwrap();
        assert!(v.norm() < 1e-15);
    }

    #[test]
    fn pole_detected() {
        let fam = derive_family(1).unwrap();
        let roots = fam.p_hat_roots();
        let res = fam.eval_homog(0, roots[0]);
        assert!(matches!(res, Err(Error::Pole { .. })));
    }

    #[test]
    fn denominator_roots_left_half_plane() {
        for q in 0..=3 {
            let fam = derive_family(q).unwrap();
            let roots = fam.p_hat_roots();
            assert_eq!(roots.len(), q + 1);
            for r in roots {
                assert!(r.re <= -0.5, "q={q}: root {r}");
            }
        }
    }

    #[test]
    fn pade_defect_orders() {
        for (q, expect) in [(0, 2.0), (1, 4.0), (2, 6.0)] {
            let fam = derive_family(q).unwrap();
            let slope = fam.pade_defect_order().unwrap();
            assert!(
                (slope - expect).abs() <= 0.1,
                "q={q}: slope {slope} vs {expect}"
            );
        }
    }

    #[test]
    fn stability_profiles() {
        let mut samples: Vec<f64> = (0..200)
            .map(|i| 10f64.powf(-3.0 + 9.0 * i as f64 / 199.0))
            .collect();
        samples.push(0.0);
        for q in 0..=3 {
            let fam = derive_family(q).unwrap();
            let prof = fam.stability_profile(&samples).unwrap();
            assert!(prof.sup <= 1.0 + 1e-12, "q={q}: sup {}", prof.sup);
            assert_relative_eq!(fam.eval_homog_real(q, 0.0), 1.0, epsilon = 1e-15);
            // strong A-stability: vanishing tail
            assert!(prof.tail_value < 1e-5, "q={q}: tail {}", prof.tail_value);
        }
        let fam0 = derive_family(0).unwrap();
        let prof0 = fam0.stability_profile(&samples).unwrap();
        assert_relative_eq!(prof0.tail_value, 1.0 / (1.0 + 1e6), max_relative = 1e-10);
        let fam1 = derive_family(1).unwrap();
        let prof1 = fam1.stability_profile(&samples).unwrap();
        assert!(prof1.tail_value <= 3e-6);
        assert!(fam1.stability_profile(&[1.0, 2.0]).is_err());
    }

    /// The exact kernels agree with numerically inverting the local system.
    #[test]
    fn kernels_match_numerical_inverse() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for q in 0..=3usize {
            let fam = derive_family(q).unwrap();
            let tabs = exact::temporal_tables(q);
            let n = q + 1;
            for _ in 0..50 {
                let z = Complex64::new(rng.gen_range(-2.0..8.0), rng.gen_range(-4.0..4.0));
                let mut l_mat = DMatrix::<Complex64>::zeros(n, n);
                for j in 0..n {
                    for l in 0..n {
                        let a = q_to_f64(&tabs.d[j][l])
                            + q_to_f64(&tabs.e0[l]) * q_to_f64(&tabs.e0[j]);
                        let b = q_to_f64(&tabs.q_mat[j][l]);
                        l_mat[(j, l)] = Complex64::new(a, 0.0) + z * b;
                    }
                }
                let Some(inv) = l_mat.clone().try_inverse() else {
                    continue;
                };
                for l in 0..n {
                    for j in 0..n {
                        let Ok(r) = fam.eval_force(l, j, z) else {
                            continue;
                        };
                        assert!(
                            (r - inv[(l, j)]).norm() <= 1e-10 * (1.0 + inv[(l, j)].norm()),
                            "q={q} l={l} j={j} z={z}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn spectral_solve_single_mode_closed_form() {
        use crate::spatial::{build_space, DomainKind};
        use crate::time_partition::TimePartition;
        let space = std::sync::Arc::new(build_space(DomainKind::UnitInterval, 16, 1).unwrap());
        let n = space.num_interior();
        let pairs = crate::spatial::ops::generalized_eigenpairs(&space, n).unwrap();
        let part = TimePartition::uniform(1.0, 8).unwrap();
        let mode = 2usize;
        let (lambda, ref v) = pairs[mode];
        let mut u0_modes = vec![0.0; n];
        u0_modes[mode] = 1.0;
        let sol = spectral_solve(&space, &pairs, &part, 0, &u0_modes, None).unwrap();
        let k = 0.125;
        for m in 1..=8 {
            let expect = &v.values * (1.0 + k * lambda).powi(-(m as i32));
            let diff = (&sol.interval_coeffs(m)[0] - expect).amax();
            assert!(diff <= 1e-12, "m={m}: {diff}");
        }
        // incomplete basis is rejected
        let err = spectral_solve(&space, &pairs[..n - 1], &part, 0, &u0_modes, None);
        assert!(matches!(err, Err(Error::IncompleteEigenbasis { .. })));
    }

    /// `sum_l psi_l'(s) r_{l,0}(z)` vanishes at `z = 0` for every `s`.
    #[test]
    fn derivative_identity_at_zero() {
        for q in 0..=3usize {
            let fam = derive_family(q).unwrap();
            let tabs = exact::temporal_tables(q);
            for i in 0..10 {
                let s = (i as f64 + 0.5) / 10.0;
                let total: f64 = (0..=q)
                    .map(|l| {
                        tabs.dpsi[l].eval_f64(s)
                            * fam.eval_homog(l, Complex64::ZERO).unwrap().re
                    })
                    .sum();
                assert!(total.abs() < 1e-12, "q={q} s={s}: {total}");
            }
        }
    }
}
