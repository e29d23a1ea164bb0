//! Acceptance run: one line per criterion, non-zero exit if any fails.
//! Each criterion has an accuracy bound and a wall-time budget.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use magweyl::harness::*;
use magweyl::lie::NilpotentLieAlgebra;
use magweyl::magnetic::MagneticPotential;
use magweyl::symbol_space::{make_grid, sample_symbol};
use magweyl::weyl::{gauge_covariance_check, magnetic_derivative_check, WeylContext};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 42;

struct Outcome {
    ok: bool,
    detail: String,
}

fn within(value: f64, tol: f64) -> bool {
    value.is_finite() && value <= tol
}

fn algebras() -> Vec<(&'static str, NilpotentLieAlgebra)> {
    ["abelian:2", "heisenberg:3", "filiform3:4"]
        .into_iter()
        .map(|n| (n, NilpotentLieAlgebra::from_preset(n).unwrap()))
        .collect()
}

fn heisenberg_ctx() -> WeylContext {
    WeylContext::new(
        NilpotentLieAlgebra::heisenberg(3).unwrap(),
        MagneticPotential::heisenberg_linear(3, 0.25).unwrap(),
        make_grid(3, 12, 6.0).unwrap(),
    )
    .unwrap()
}

fn plane_ctx(n: usize) -> WeylContext {
    WeylContext::new(NilpotentLieAlgebra::abelian(2).unwrap(), MagneticPotential::landau(0.7), make_grid(2, n, 6.0).unwrap())
        .unwrap()
}

fn bch_group_axioms() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, alg) in algebras() {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        let (assoc, inverse) = bch_axioms(&alg, &mut rng, 100);
        ok &= within(assoc, 1e-10) && within(inverse, 1e-10);
        detail.push(format!("{name} assoc {assoc:.1e} inverse {inverse:.1e}"));
    }
    Outcome { ok, detail: detail.join(", ") }
}

fn psi_diffeomorphism() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, alg) in algebras() {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        let round = psi_round_trip(&alg, &mut rng, 100);
        let jac = psi_jacobian(&alg, &mut rng, 20);
        ok &= within(round, 1e-10) && within(jac, 1e-6);
        detail.push(format!("{name} round trip {round:.1e} |det−1| {jac:.1e}"));
    }
    Outcome { ok, detail: detail.join(", ") }
}

fn fourier() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for (d, n, l) in [(1, 64, 8.0), (3, 8, 4.0)] {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        let (inv, _) = fourier_involution(&make_grid(d, n, l).unwrap(), &mut rng, 5);
        ok &= within(inv, 1e-10);
        detail.push(format!("d={d} N={n} {inv:.1e}"));
    }
    Outcome { ok, detail: detail.join(", ") }
}

fn abelian() -> Outcome {
    let e = abelian_baseline(64, 8.0, 1.0, 1.0).unwrap();
    Outcome { ok: within(e, 1e-6), detail: format!("relative L2 {e:.1e}") }
}

fn unitarity() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    let line = WeylContext::new(NilpotentLieAlgebra::abelian(1).unwrap(), MagneticPotential::zero(1), make_grid(1, 64, 8.0).unwrap())
        .unwrap();
    for (label, ctx, tol) in [("abelian", line, 1e-6), ("heisenberg", heisenberg_ctx(), 1e-3)] {
        let g = ctx.grid;
        for (kind, a) in [
            ("gaussian", sample_symbol(&g, gaussian(1.5, 0.75))),
            ("poly-gaussian", sample_symbol(&g, polynomial_gaussian(1.5, 0.75))),
        ] {
            let e = unitarity_defect(&ctx, &a).unwrap();
            ok &= within(e, tol);
            detail.push(format!("{label} {kind} {e:.1e}"));
        }
    }
    Outcome { ok, detail: detail.join(", ") }
}

fn gauge_covariance() -> Outcome {
    let plane = plane_ctx(16);
    let a = sample_symbol(&plane.grid, gaussian(1.5, 1.0));
    let e1 = gauge_covariance_check(&plane, &MagneticPotential::symmetric_gauge(0.7), &a).unwrap().relative_error;
    let ctx = heisenberg_ctx();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let a1 = ctx.potential.add_gradient(&random_cubic(3, &mut rng, 0.05)).unwrap();
    let a = sample_symbol(&ctx.grid, gaussian(1.5, 0.75));
    let e2 = gauge_covariance_check(&ctx, &a1, &a).unwrap().relative_error;
    Outcome { ok: within(e1, 1e-9) && within(e2, 1e-9), detail: format!("landau/symmetric {e1:.1e}, heisenberg A/A+dψ {e2:.1e}") }
}

fn moyal() -> Outcome {
    let ctx = heisenberg_ctx();
    let a = sample_symbol(&ctx.grid, gaussian(1.5, 0.75));
    let b = sample_symbol(&ctx.grid, polynomial_gaussian(1.5, 0.75));
    let cross = moyal_crosscheck(&ctx, &a, &b).unwrap();
    let (route, point) = abelian_moyal_analytic(64, 8.0, 0.5, 0.3).unwrap();
    Outcome {
        ok: within(cross, 0.05) && within(point, 0.02),
        detail: format!("heisenberg point vs kernel route {cross:.1e}, abelian point vs exact {point:.1e} (kernel route {route:.1e})"),
    }
}

fn derivative() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for (label, ctx, p0) in [("heisenberg", heisenberg_ctx(), vec![0.7, -0.4, 0.5]), ("landau", plane_ctx(16), vec![0.6, -0.8])] {
        let r = magnetic_derivative_check(&ctx, &p0, &gaussian_config(&ctx.grid), 1e-3);
        ok &= within(r.error, 1e-4) && within((r.ratio / 4.0 - 1.0).abs(), 0.2);
        detail.push(format!("{label} error {:.1e} ratio {:.3}", r.error, r.ratio));
    }
    Outcome { ok, detail: detail.join(", ") }
}

fn moyal_gauge() -> Outcome {
    let ctx = heisenberg_ctx();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let a1 = ctx.potential.add_gradient(&random_cubic(3, &mut rng, 0.05)).unwrap();
    let a = sample_symbol(&ctx.grid, gaussian(1.5, 0.75));
    let b = sample_symbol(&ctx.grid, polynomial_gaussian(1.5, 0.75));
    let e1 = moyal_gauge_invariance(&ctx, &a1, &a, &b).unwrap();
    let plane = plane_ctx(12);
    let a = sample_symbol(&plane.grid, gaussian(1.5, 1.0));
    let b = sample_symbol(&plane.grid, polynomial_gaussian(1.5, 1.0));
    let e2 = moyal_gauge_invariance(&plane, &MagneticPotential::symmetric_gauge(0.7), &a, &b).unwrap();
    Outcome { ok: within(e1, 1e-6) && within(e2, 1e-6), detail: format!("heisenberg {e1:.1e}, landau/symmetric {e2:.1e}") }
}

fn main() -> ExitCode {
    let criteria: [(&str, u64, fn() -> Outcome); 9] = [
        ("BCH group axioms", 1, bch_group_axioms),
        ("Psi diffeomorphism", 5, psi_diffeomorphism),
        ("symplectic Fourier involution", 10, fourier),
        ("abelian kernel baseline", 5, abelian),
        ("kernel-map unitarity", 300, unitarity),
        ("gauge covariance", 120, gauge_covariance),
        ("Moyal cross-check", 600, moyal),
        ("magnetic vector field", 60, derivative),
        ("gauge invariance of the product", 600, moyal_gauge),
    ];
    let mut all = true;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let in_time = elapsed < Duration::from_secs(*budget);
        let ok = out.ok && in_time;
        all &= ok;
        println!(
            "criterion {} {} {name}: {} [{:.1}s of {budget}s]",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {}", if all { "PASS" } else { "FAIL" });
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
