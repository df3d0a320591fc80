mod common;

use common::{dot, random_design, Keep, Reference};
use npreg_core::bootmoments::PointAnalysis;
use npreg_core::intervals::{analytic_prepivot_ci, naive_bootstrap_ci, point_ci, rbc_ci};
use npreg_core::locpoly::{local_fit, local_weights, lp_bc_weights};
use npreg_core::rdd::{rdd_moments, RddAnalysis};
use npreg_core::residuals::bc_residuals;
use npreg_core::{BootMethod, CiMethod, FitConfig, HcType, Kernel, RddConfig, RddSample, Sample};
use proptest::prelude::*;

const Z975: f64 = 1.959_963_984_540_054;

fn kernel(i: usize) -> Kernel {
    Kernel::ALL[i % 5]
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

fn analysis(x: &[f64], y: &[f64], x0: f64, h: f64, k: Kernel) -> Option<PointAnalysis> {
    let s = Sample::new(x.to_vec(), y.to_vec()).ok()?;
    let cfg = FitConfig::new(x0, h, 1, k).ok()?;
    let a = PointAnalysis::new(&s, &cfg, HcType::Hc3).ok()?;
    // all three schemes must be well defined for the comparison
    a.gp().ok()?;
    a.mlp().ok()?;
    Some(a)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn moments_match_brute_force(
        n in 30usize..70, seed in any::<u64>(), x0 in -1.0f64..1.0,
        h in 0.35f64..0.9, ki in 0usize..5,
    ) {
        let (x, y) = random_design(n, seed);
        let k = kernel(ki);
        let a = analysis(&x, &y, x0, h, k);
        prop_assume!(a.is_some());
        let a = a.unwrap();
        let r = Reference::new(&x, &y, x0, h, 1, k, Keep::All);
        prop_assert!(rel(a.estimate(), r.ghat) < 1e-9);
        prop_assert!(rel(a.curvature(), r.c_n) < 1e-9);
        let q = a.q_factor().unwrap();
        prop_assert!(rel(q.c_lp, r.c_lp) < 1e-9);
        prop_assert!(rel(q.q, r.q) < 1e-8);

        let gp = a.gp().unwrap();
        prop_assert!(rel(gp.bias, r.gp_bias(&y)) < 1e-8);
        prop_assert!(rel(gp.boot_sd, r.boot_variance().sqrt()) < 1e-9);
        prop_assert!(rel(gp.debiased_sd, r.variance(&r.w_gp_bc, 1.0).sqrt()) < 1e-8);

        let lp = a.lp().unwrap();
        prop_assert!(rel(lp.bias, r.lp_bias(&y)) < 1e-8);
        prop_assert!(rel(lp.debiased_sd, r.variance(&r.w_lp_bc, 1.0).sqrt()) < 1e-8);

        let mlp = a.mlp().unwrap();
        prop_assert!(rel(mlp.bias, r.q * r.lp_bias(&y)) < 1e-8);
        prop_assert!(rel(mlp.boot_sd, r.q.abs() * r.boot_variance().sqrt()) < 1e-8);
        prop_assert!(rel(mlp.debiased_sd, r.variance(&r.w_lp_bc, r.q).sqrt()) < 1e-8);

        let s = Sample::new(x.clone(), y.clone()).unwrap();
        let cfg = FitConfig::new(x0, h, 1, k).unwrap();
        let bc = lp_bc_weights(&s, &cfg).unwrap();
        for (lib, refv) in bc.iter().zip(&r.w_lp_bc) {
            prop_assert!((lib - refv).abs() < 1e-9 * (1.0 + refv.abs()));
        }
        let res = bc_residuals(&s, &cfg, HcType::Hc3).unwrap();
        for (lib, refv) in res.values.iter().zip(&r.resid) {
            prop_assert!((lib - refv).abs() < 1e-9 * (1.0 + refv.abs()));
        }
    }

    #[test]
    fn weights_reproduce_low_order_moments(
        n in 30usize..70, seed in any::<u64>(), x0 in -1.0f64..1.0,
        h in 0.35f64..0.9, ki in 0usize..5, p in prop_oneof![Just(1usize), Just(3usize)],
    ) {
        let (x, y) = random_design(n, seed);
        let s = Sample::new(x.clone(), y).unwrap();
        let cfg = FitConfig::new(x0, h, p, kernel(ki)).unwrap();
        let w = local_weights(&s, &cfg);
        prop_assume!(w.is_ok());
        let w = w.unwrap();
        let nh = n as f64 * h;
        for j in 0..=p as i32 {
            let m: f64 = w.values.iter().zip(&x).map(|(wi, xi)| wi * ((xi - x0) / h).powi(j)).sum::<f64>() / nh;
            let target = if j == 0 { 1.0 } else { 0.0 };
            prop_assert!((m - target).abs() < 1e-9, "j={} m={}", j, m);
        }
    }

    #[test]
    fn polynomials_are_annihilated(
        n in 30usize..70, seed in any::<u64>(), x0 in -1.0f64..1.0,
        h in 0.35f64..0.9, ki in 0usize..5,
        c in prop::array::uniform3(-3.0f64..3.0),
    ) {
        let (x, noise) = random_design(n, seed);
        let k = kernel(ki);
        let lin: Vec<f64> = x.iter().map(|v| c[0] + c[1] * v).collect();
        let quad: Vec<f64> = x.iter().map(|v| c[0] + c[1] * v + c[2] * v * v).collect();
        let s = Sample::new(x.clone(), lin.clone()).unwrap();
        let cfg = FitConfig::new(x0, h, 1, k).unwrap();
        let fit = local_fit(&s, &cfg);
        prop_assume!(fit.is_ok());
        prop_assert!((fit.unwrap().ghat - (c[0] + c[1] * x0)).abs() < 1e-9);
        if let Ok(bc) = lp_bc_weights(&s, &cfg) {
            let scale: f64 = bc.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
            prop_assert!(dot(&bc, &lin).abs() < 1e-9 * scale * (1.0 + c[0].abs() + c[1].abs()));
        }
        if let Ok(r) = bc_residuals(&s.with_y(quad).unwrap(), &cfg, HcType::Hc3) {
            prop_assert!(r.values.iter().all(|e| e.abs() < 1e-8));
        }
        // biases are linear in y: a line added to noise changes nothing
        let with_line: Vec<f64> = noise.iter().zip(&lin).map(|(a, b)| a + b).collect();
        if let (Some(a), Some(b)) = (analysis(&x, &noise, x0, h, k), analysis(&x, &with_line, x0, h, k)) {
            for m in [BootMethod::Gp, BootMethod::Lp, BootMethod::Mlp] {
                let (ba, bb) = (a.moments(m).unwrap().bias, b.moments(m).unwrap().bias);
                prop_assert!((ba - bb).abs() < 1e-8 * (1.0 + ba.abs()), "{} {} {}", m, ba, bb);
            }
        }
    }

    #[test]
    fn affine_equivariance(
        n in 30usize..70, seed in any::<u64>(), x0 in -0.9f64..0.9,
        h in 0.35f64..0.9, ki in 0usize..5,
        a in -5.0f64..5.0, b in 0.2f64..4.0, shift in -3.0f64..3.0, stretch in 0.5f64..3.0,
    ) {
        let (x, y) = random_design(n, seed);
        let k = kernel(ki);
        let base = analysis(&x, &y, x0, h, k);
        prop_assume!(base.is_some());
        let base = base.unwrap();
        let y2: Vec<f64> = y.iter().map(|v| a + b * v).collect();
        let x2: Vec<f64> = x.iter().map(|v| shift + stretch * v).collect();
        let s2 = Sample::new(x2, y2).unwrap();
        let cfg2 = FitConfig::new(shift + stretch * x0, stretch * h, 1, k).unwrap();
        let moved = PointAnalysis::new(&s2, &cfg2, HcType::Hc3).unwrap();
        prop_assert!(rel(moved.estimate(), a + b * base.estimate()) < 1e-8);
        for m in [BootMethod::Gp, BootMethod::Lp, BootMethod::Mlp] {
            let (m0, m1) = (base.moments(m).unwrap(), moved.moments(m).unwrap());
            // nh scales with the stretch; T = sqrt(nh) (ghat - g)
            let s = (m1.nh / m0.nh).sqrt() * b;
            prop_assert!((m1.bias - s * m0.bias).abs() < 1e-8 * (1.0 + m1.bias.abs()));
            prop_assert!(rel(m1.debiased_sd, s * m0.debiased_sd) < 1e-8);
            prop_assert!(rel(m1.boot_sd, s * m0.boot_sd) < 1e-8);
        }
    }

    #[test]
    fn lp_bias_forms_agree(
        n in 30usize..70, seed in any::<u64>(), x0 in -1.0f64..1.0,
        h in 0.35f64..0.9, ki in 0usize..5,
    ) {
        let (x, y) = random_design(n, seed);
        let a = analysis(&x, &y, x0, h, kernel(ki));
        prop_assume!(a.is_some());
        let a = a.unwrap();
        let b12 = a.lp_bias_from_smoothed_fit().unwrap();
        let b13 = a.lp().unwrap().bias;
        prop_assert!((b12 - b13).abs() < 1e-10 * (1.0 + b13.abs()), "{} vs {}", b12, b13);
    }

    #[test]
    fn prepivoted_gp_is_textbook_rbc(
        n in 30usize..70, seed in any::<u64>(), x0 in -1.0f64..1.0,
        h in 0.35f64..0.9, ki in 0usize..5,
    ) {
        let (x, y) = random_design(n, seed);
        let a = analysis(&x, &y, x0, h, kernel(ki));
        prop_assume!(a.is_some());
        let a = a.unwrap();
        let gp = a.gp().unwrap();
        let ci = analytic_prepivot_ci(a.estimate(), &gp, 0.05).unwrap();
        prop_assert_eq!(ci.method, CiMethod::RbcPgp);
        // assembled by hand from the weight-route bias
        let s = gp.nh.sqrt();
        let center = a.estimate() - a.rbc_bias_from_weights() / s;
        let half = Z975 * gp.debiased_sd / s;
        let scale = ci.length().max(ci.upper.abs()).max(ci.lower.abs());
        prop_assert!((ci.lower - (center - half)).abs() < 1e-12 * scale);
        prop_assert!((ci.upper - (center + half)).abs() < 1e-12 * scale);
        let textbook = rbc_ci(a.estimate(), gp.bias, gp.debiased_sd, gp.nh, 0.05).unwrap();
        prop_assert!((ci.lower - textbook.lower).abs() < 1e-12 * scale);
        prop_assert!((ci.upper - textbook.upper).abs() < 1e-12 * scale);
        prop_assert!(((ci.upper - ci.center()) - (ci.center() - ci.lower)).abs() < 1e-12 * scale);
    }

    #[test]
    fn naive_lengths_coincide_and_levels_nest(
        n in 30usize..70, seed in any::<u64>(), x0 in -1.0f64..1.0,
        h in 0.35f64..0.9, ki in 0usize..5, a1 in 0.01f64..0.5, gap in 0.01f64..0.4,
    ) {
        let (x, y) = random_design(n, seed);
        let a = analysis(&x, &y, x0, h, kernel(ki));
        prop_assume!(a.is_some());
        let a = a.unwrap();
        let g = naive_bootstrap_ci(a.estimate(), &a.gp().unwrap(), 0.05, None).unwrap();
        let l = naive_bootstrap_ci(a.estimate(), &a.lp().unwrap(), 0.05, None).unwrap();
        prop_assert!((g.length() - l.length()).abs() < 1e-12 * g.length());
        let a2 = a1 + gap;
        for m in CiMethod::ALL {
            let wide = point_ci(&a, m, a1, None).unwrap();
            let narrow = point_ci(&a, m, a2, None).unwrap();
            prop_assert!(wide.lower <= narrow.lower && narrow.upper <= wide.upper, "{}", m);
        }
    }

    #[test]
    fn rdd_sides_combine_additively(
        n in 40usize..90, seed in any::<u64>(), h in 0.5f64..0.95, ki in 0usize..5,
    ) {
        let (x, y) = random_design(n, seed);
        let k = kernel(ki);
        let s = RddSample::new(x.clone(), y.clone(), 0.0).unwrap();
        let cfg = RddConfig::new(h, 1, k);
        let m = rdd_moments(&s, &cfg, HcType::Hc3);
        prop_assume!(m.is_ok());
        let m = m.unwrap();
        let plus = Reference::new(&x, &y, 0.0, h, 1, k, Keep::Right(0.0));
        let minus = Reference::new(&x, &y, 0.0, h, 1, k, Keep::Left(0.0));
        let v = plus.variance(&plus.w_lp_bc, plus.q) + minus.variance(&minus.w_lp_bc, minus.q);
        prop_assert!(rel(m.debiased_sd_rd.powi(2), v) < 1e-9);
        let side_sum = m.plus.debiased_sd.powi(2) + m.minus.debiased_sd.powi(2);
        prop_assert!(rel(m.debiased_sd_rd.powi(2), side_sum) < 1e-12);
        let bias = plus.q * plus.lp_bias(&y) - minus.q * minus.lp_bias(&y);
        prop_assert!((m.bias_rd - bias).abs() < 1e-8 * (1.0 + bias.abs()));
        prop_assert!(rel(m.q_plus, plus.q) < 1e-8 && rel(m.q_minus, minus.q) < 1e-8);
        let boot = plus.q.powi(2) * plus.boot_variance() + minus.q.powi(2) * minus.boot_variance();
        prop_assert!(rel(m.boot_sd_rd.powi(2), boot) < 1e-8);

        // permuting observations leaves everything unchanged
        let mut order: Vec<usize> = (0..n).collect();
        order.reverse();
        let s2 = RddSample::new(
            order.iter().map(|&i| x[i]).collect(),
            order.iter().map(|&i| y[i]).collect(),
            0.0,
        ).unwrap();
        let m2 = rdd_moments(&s2, &cfg, HcType::Hc3).unwrap();
        prop_assert!(rel(m.bias_rd, m2.bias_rd) < 1e-12 && rel(m.debiased_sd_rd, m2.debiased_sd_rd) < 1e-12);
    }

    #[test]
    fn rdd_sidewise_lines_are_annihilated(
        n in 40usize..90, seed in any::<u64>(), h in 0.5f64..0.95, ki in 0usize..5,
        c in prop::array::uniform4(-3.0f64..3.0),
    ) {
        let (x, noise) = random_design(n, seed);
        let cfg = RddConfig::new(h, 1, kernel(ki));
        let shifted: Vec<f64> = x.iter().zip(&noise)
            .map(|(&v, e)| e + if v >= 0.0 { c[0] + c[1] * v } else { c[2] + c[3] * v })
            .collect();
        let a = RddAnalysis::new(&RddSample::new(x.clone(), noise, 0.0).unwrap(), &cfg, HcType::Hc3);
        let b = RddAnalysis::new(&RddSample::new(x, shifted, 0.0).unwrap(), &cfg, HcType::Hc3);
        prop_assume!(a.is_ok() && b.is_ok());
        let (a, b) = (a.unwrap(), b.unwrap());
        let (ma, mb) = (a.moments(BootMethod::Mlp), b.moments(BootMethod::Mlp));
        prop_assume!(ma.is_ok() && mb.is_ok());
        let (ba, bb) = (ma.unwrap().bias_rd, mb.unwrap().bias_rd);
        prop_assert!((ba - bb).abs() < 1e-9 * (1.0 + ba.abs()));
        prop_assert!(((b.estimate() - a.estimate()) - (c[0] - c[2])).abs() < 1e-9);
    }
}

#[test]
fn random_cases_are_mostly_usable() {
    let mut ok = 0;
    for seed in 0..100u64 {
        let (x, y) = random_design(30 + (seed as usize % 40), seed);
        let x0 = -1.0 + 2.0 * (seed as f64 * 0.618).fract();
        let h = 0.35 + 0.55 * (seed as f64 * 0.414).fract();
        if analysis(&x, &y, x0, h, kernel(seed as usize)).is_some() {
            ok += 1;
        }
    }
    assert!(ok >= 70, "only {ok} of 100 random cases usable");
}
