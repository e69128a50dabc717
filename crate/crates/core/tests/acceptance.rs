//! Acceptance suite on the reference grids: z-grid n = 128, s = 8; k-grid
//! n = 128, k_max = 8; radial bump conductivity c = 1, R = 3.
//!
//! Prints one PASS or FAIL line per criterion with the measured values and
//! exits successfully either way, so that `cargo test` reports the suite
//! without hiding the individual outcomes. Expensive pipeline stages are
//! computed once and shared between criteria.

use std::cell::OnceCell;
use std::time::Instant;

use num_complex::Complex64;
use nvism::dbar::DbarOptions;
use nvism::evolution::{compose_evolution, evolve, EvolutionParams};
use nvism::faddeev::{
    faddeev_convolve, scattering_annulus, scattering_grid, solve_cgo, ForwardOptions,
};
use nvism::nvpde::ism_nv_residual;
use nvism::pipeline::{annulus_relative_error, complete_roundtrip, reconstruct, Reconstruction, RoundTripOptions};
use nvism::potentials::{gamma_to_potential, lp_convergence_study, radial_bump_gamma, radial_bump_potential, weighted_cutoff_norm};
use nvism::spectral::{apply_multiplier, spectral_derivative, DiffOp};
use nvism::symmetry::{check_q_symmetries, check_radial_real, check_rotational, decay_fit, CheckReport, FourierInterpolant};
use nvism::{ComplexField, Grid2D, Plane, Potential, ScatteringData, Variant};

const N: usize = 128;
const S: f64 = 8.0;
const K_MAX: f64 = 8.0;
const BUMP_C: f64 = 1.0;
const BUMP_R: f64 = 3.0;
const TAU_B: f64 = 1e-3;
const TAU_C: f64 = 1e-2;
/// Evolution time of the fivefold symmetry check.
const TAU_FIVEFOLD: f64 = 1e-4;
/// Window applied to reconstructed potentials before the direct solver.
const WINDOW: (f64, f64) = (3.25, 3.75);

fn zgrid() -> Grid2D {
    Grid2D::new(N, S, Plane::Z).unwrap()
}

fn kgrid() -> Grid2D {
    Grid2D::new(N, K_MAX, Plane::K).unwrap()
}

fn timed<T>(what: &str, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    println!("    [{what}: {:.1} s]", start.elapsed().as_secs_f64());
    out
}

/// Pipeline stages shared between criteria, each computed on first use.
#[derive(Default)]
struct Fixtures {
    q0: OnceCell<Potential>,
    t0: OnceCell<ScatteringData>,
    rec_a: OnceCell<Reconstruction>,
    rec_b: OnceCell<Reconstruction>,
    rec_c: OnceCell<Reconstruction>,
    restart: OnceCell<Reconstruction>,
}

impl Fixtures {
    fn q0(&self) -> &Potential {
        self.q0
            .get_or_init(|| radial_bump_potential(&zgrid(), BUMP_C, BUMP_R).unwrap())
    }

    fn t0(&self) -> &ScatteringData {
        self.t0.get_or_init(|| {
            timed("forward transform of q0", || {
                scattering_grid(self.q0(), &kgrid(), K_MAX, Variant::Plus, ForwardOptions::default())
                    .unwrap()
                    .0
            })
        })
    }

    fn t_at(&self, tau: f64) -> ScatteringData {
        evolve(self.t0(), EvolutionParams::nv(tau).unwrap()).unwrap()
    }

    fn invert(&self, t: &ScatteringData, label: &str) -> Reconstruction {
        timed(&format!("D-bar reconstruction {label}"), || {
            reconstruct(t, &zgrid(), DbarOptions::default()).unwrap()
        })
    }

    fn rec_a(&self) -> &Reconstruction {
        self.rec_a.get_or_init(|| self.invert(self.t0(), "tau = 0"))
    }

    fn rec_b(&self) -> &Reconstruction {
        self.rec_b.get_or_init(|| self.invert(&self.t_at(TAU_B), "tau = 1e-3"))
    }

    fn rec_c(&self) -> &Reconstruction {
        self.rec_c.get_or_init(|| self.invert(&self.t_at(TAU_C), "tau = 1e-2"))
    }

    /// Restart: the reconstruction at `TAU_B` taken as new initial data,
    /// transformed, evolved by `TAU_C - TAU_B` and inverted.
    fn restart(&self) -> &Reconstruction {
        self.restart.get_or_init(|| {
            let q = self.rec_b().q_formula.windowed(WINDOW.0, WINDOW.1).unwrap();
            let t_restart = timed("forward transform of the restart potential", || {
                scattering_grid(&q, &kgrid(), K_MAX, Variant::Plus, ForwardOptions::default())
                    .unwrap()
                    .0
            });
            let t = evolve(&t_restart, EvolutionParams::nv(TAU_C - TAU_B).unwrap()).unwrap();
            self.invert(&t, "restarted at tau = 1e-3")
        })
    }
}

/// Outcome of one criterion.
struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

/// Conjunction of several named sub-checks `(name, value, tolerance, pass)`.
fn all_of(parts: &[(&str, f64, f64, bool)]) -> Verdict {
    let pass = parts.iter().all(|p| p.3);
    let detail = parts
        .iter()
        .map(|(name, value, tol, ok)| format!("{name} {value:.3e} (tol {tol:.1e}{})", if *ok { "" } else { ", over" }))
        .collect::<Vec<_>>()
        .join("; ");
    Verdict::new(pass, detail)
}

fn at_most(name: &'static str, value: f64, tol: f64) -> (&'static str, f64, f64, bool) {
    (name, value, tol, value <= tol)
}

fn report_part(r: &CheckReport) -> (&str, f64, f64, bool) {
    (r.name.as_str(), r.relative_violation, r.tolerance, r.pass)
}

fn rel_l2(a: &ComplexField, b: &ComplexField) -> f64 {
    a.rel_l2_error(b).unwrap()
}

/// Sixth-order central difference of `-Laplacian f - 4ik dbar f` at an
/// interior sample.
fn faddeev_operator_fd(f: &ComplexField, k: Complex64, i: usize, j: usize) -> Complex64 {
    let h = f.grid().spacing();
    let c1 = [0.0, 3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0];
    let c2 = [-49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0];
    let (mut dx, mut dy, mut dxx, mut dyy) = (Complex64::default(), Complex64::default(), Complex64::default(), Complex64::default());
    dxx += c2[0] * f.get(i, j);
    dyy += c2[0] * f.get(i, j);
    for m in 1..4 {
        dx += c1[m] * (f.get(i + m, j) - f.get(i - m, j));
        dy += c1[m] * (f.get(i, j + m) - f.get(i, j - m));
        dxx += c2[m] * (f.get(i + m, j) + f.get(i - m, j));
        dyy += c2[m] * (f.get(i, j + m) + f.get(i, j - m));
    }
    let lap = (dxx + dyy) / (h * h);
    let dbar = 0.5 * (dx + Complex64::i() * dy) / h;
    -lap - 4.0 * Complex64::i() * k * dbar
}

fn c1_zero_fixed_point(_: &Fixtures) -> Verdict {
    let zero = Potential::zero(zgrid()).unwrap();
    let (t, _) = scattering_grid(&zero, &kgrid(), K_MAX, Variant::Plus, ForwardOptions::default()).unwrap();
    let t_tau = evolve(&t, EvolutionParams::nv(TAU_C).unwrap()).unwrap();
    let rec = reconstruct(&t_tau, &zgrid(), DbarOptions::default()).unwrap();
    let q_cond = rec.q_conductivity.as_ref().map(|q| q.field().max_abs()).unwrap_or(f64::INFINITY);
    let mu0 = rec.sweep.mu0.map(|v| v - 1.0).max_abs();
    all_of(&[
        at_most("max|t|", t.field().max_abs(), 1e-12),
        at_most("max|t_tau|", t_tau.field().max_abs(), 1e-12),
        at_most("max|q_formula|", rec.q_formula.field().max_abs(), 1e-12),
        at_most("max|q_conductivity|", q_cond, 1e-12),
        at_most("max|mu0 - 1|", mu0, 1e-12),
    ])
}

fn c2_faddeev_kernel(_: &Fixtures) -> Verdict {
    let g = zgrid();
    let h = ComplexField::from_real_fn(g, |z| (-2.0 * z.norm_sqr()).exp());
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for &r in &[0.5, 1.0, 2.0] {
        for &angle in &[0.3, 2.0] {
            let k = Complex64::from_polar(r, angle);
            let u = faddeev_convolve(k, &h).unwrap();
            let (mut num, mut den) = (0.0, 0.0);
            for j in 3..N - 3 {
                for i in 3..N - 3 {
                    if g.point(i, j).norm() > S / 2.0 {
                        continue;
                    }
                    num += (faddeev_operator_fd(&u, k, i, j) - h.get(i, j)).norm_sqr();
                    den += h.get(i, j).norm_sqr();
                }
            }
            let err = (num / den).sqrt();
            worst = worst.max(err);
            parts.push(format!("|k|={r},arg={angle}: {err:.2e}"));
        }
    }
    Verdict::new(
        worst <= 1e-3,
        format!("worst relative L2 {worst:.3e} (tol 1.0e-3; sixth-order finite differences on |z| <= 4): {}", parts.join(", ")),
    )
}

fn c3_cgo_residual(fx: &Fixtures) -> Verdict {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for &r in &[0.25, 0.5, 1.0, 2.0, 4.0, 6.0, 8.0] {
        for &angle in &[0.0, 0.7, 2.4, 4.0] {
            let k = Complex64::from_polar(r, angle);
            for variant in [Variant::Plus, Variant::Minus] {
                let sol = solve_cgo(fx.q0(), k, variant).unwrap();
                worst = worst.max(sol.residual);
                count += 1;
            }
        }
    }
    Verdict::new(
        worst <= 1e-4,
        format!("worst relative PDE residual {worst:.3e} over {count} solves (tol 1.0e-4)"),
    )
}

fn c4_born_limit(_: &Fixtures) -> Verdict {
    let q = radial_bump_potential(&zgrid(), 1e-2, BUMP_R).unwrap();
    let (t, _) = scattering_annulus(&q, &kgrid(), 0.5, 2.0, Variant::Plus, ForwardOptions::default()).unwrap();
    // Oracle: the Fourier integral of q against exp(i(kz + conj(kz))), by
    // direct quadrature over the z-grid.
    let zg = zgrid();
    let kg = kgrid();
    let oracle = ComplexField::from_fn(kg, |k| {
        let r = k.norm();
        if !(0.5..=2.0).contains(&r) {
            return Complex64::default();
        }
        let sum: Complex64 = (0..zg.len())
            .map(|i| q.field().values()[i] * Complex64::from_polar(1.0, 2.0 * (k * zg.point_flat(i)).re))
            .sum();
        sum * zg.cell_area()
    });
    let err = annulus_relative_error(t.field(), &oracle, 0.5, 2.0).unwrap();
    all_of(&[at_most("relative L2 against the Fourier integral on 0.5 <= |k| <= 2", err, 3e-2)])
}

fn c5_radial_real(fx: &Fixtures) -> Verdict {
    let t0 = fx.t0();
    let r = check_radial_real(t0, 1e-6);
    let scale = t0.field().max_abs();
    let meta = |key: &str| -> f64 {
        r.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.parse().unwrap()).unwrap()
    };
    all_of(&[
        at_most("max|Im t0| / max|t0|", meta("max_abs_im") / scale, 1e-6),
        at_most("ring deviation / max|t0|", meta("ring_deviation") / scale, 1e-6),
    ])
}

fn c6_near_origin(fx: &Fixtures) -> Verdict {
    let t0 = fx.t0();
    let g = t0.grid();
    let pts: Vec<(f64, f64)> = (0..g.len())
        .filter_map(|i| {
            let r = g.point_flat(i).norm();
            let v = t0.field().values()[i].norm();
            ((0.1..=0.4).contains(&r) && v > 0.0).then(|| (r.ln(), v.ln()))
        })
        .collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    // |t0| / |k|^2 at the innermost and outermost samples of the range shows
    // how far the range is from the asymptotic regime.
    let ratio = |p: &(f64, f64)| (p.1 - 2.0 * p.0).exp();
    let inner = pts.iter().min_by(|a, b| a.0.total_cmp(&b.0)).unwrap();
    let outer = pts.iter().max_by(|a, b| a.0.total_cmp(&b.0)).unwrap();
    Verdict::new(
        slope >= 1.8,
        format!(
            "log-log slope of |t0| on 0.1 <= |k| <= 0.4: {slope:.4} over {} samples (need >= 1.8); |t0|/|k|^2 is {:.3} at |k| = {:.3} and {:.3} at |k| = {:.3}",
            pts.len(),
            ratio(inner),
            inner.0.exp(),
            ratio(outer),
            outer.0.exp()
        ),
    )
}

fn c7_roundtrip_tau0(fx: &Fixtures) -> Verdict {
    let q0 = fx.q0().field();
    let rec = fx.rec_a();
    let err = rel_l2(rec.q_formula.field(), q0);
    // Diagnostic: the data on |k| <= k_max only determine the frequencies
    // |xi| <= 2 k_max of q0.
    let cut = 2.0 * K_MAX;
    let low_pass = apply_multiplier(q0, |(x1, _), (x2, _)| {
        if x1 * x1 + x2 * x2 <= cut * cut {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::default()
        }
    });
    let mut v = all_of(&[at_most("||Q+(T+ q0) - q0|| / ||q0||", err, 5e-2)]);
    v.detail.push_str(&format!(
        "; diagnostics: error against q0 band-limited to |xi| <= {cut} is {:.3e}, band-limited q0 differs from q0 by {:.3e}",
        rel_l2(rec.q_formula.field(), &low_pass),
        rel_l2(&low_pass, q0)
    ));
    v
}

fn c8_scattering_roundtrip(fx: &Fixtures) -> Verdict {
    let options = RoundTripOptions {
        dbar: DbarOptions::default(),
        forward: ForwardOptions::default(),
        window: WINDOW,
        k_min: 0.5,
        k_max: 4.0,
    };
    let mut errors = Vec::new();
    let mut cut = Vec::new();
    for (tau, rec) in [(TAU_B, fx.rec_b()), (TAU_C, fx.rec_c())] {
        let rt = timed(&format!("forward transform on the annulus, tau = {tau}"), || {
            complete_roundtrip(&fx.t_at(tau), rec.clone(), options).unwrap()
        });
        errors.push(rt.error);
        cut.push(rel_l2(rt.q.field(), rec.q_formula.field()));
    }
    let mut v = all_of(&[
        at_most("||T+(Q+ t) - t|| / ||t|| on 0.5 <= |k| <= 4 at tau=1e-3", errors[0], 5e-2),
        at_most("same at tau=1e-2", errors[1], 5e-2),
    ]);
    v.detail.push_str(&format!(
        "; info: the window ({}, {}) removes {:.3e} (tau=1e-3) and {:.3e} (tau=1e-2) of ||q_tau||",
        WINDOW.0, WINDOW.1, cut[0], cut[1]
    ));
    v
}

fn c9_q_symmetries(fx: &Fixtures) -> Verdict {
    let mut parts = Vec::new();
    for (rec, label) in [(fx.rec_b(), "tau=1e-3"), (fx.rec_c(), "tau=1e-2")] {
        let r = check_q_symmetries(&rec.q_formula, 1e-3);
        let meta = |key: &str| -> f64 {
            r.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.parse().unwrap()).unwrap()
        };
        parts.push((label, meta("imaginary"), meta("threefold"), meta("reflection")));
    }
    let mut checks = Vec::new();
    let names = [
        ["Im q (tau=1e-3)", "threefold (tau=1e-3)", "reflection (tau=1e-3)"],
        ["Im q (tau=1e-2)", "threefold (tau=1e-2)", "reflection (tau=1e-2)"],
    ];
    for (p, n) in parts.iter().zip(names.iter()) {
        checks.push(at_most(n[0], p.1, 1e-3));
        checks.push(at_most(n[1], p.2, 1e-3));
        checks.push(at_most(n[2], p.3, 1e-3));
    }
    let mut v = all_of(&checks);
    let threefold = |q: &Potential| {
        let r = check_q_symmetries(q, 1e-3);
        r.metadata.iter().find(|(k, _)| k == "threefold").map(|(_, v)| v.clone()).unwrap()
    };
    v.detail.push_str(&format!(
        "; info: threefold violation of the input q0 samples {}, of the tau = 0 reconstruction {}; restricted to |z| <= s/2: {:.3e} (tau=1e-3), {:.3e} (tau=1e-2)",
        threefold(fx.q0()),
        threefold(&fx.rec_a().q_formula),
        inner_threefold(&fx.rec_b().q_formula),
        inner_threefold(&fx.rec_c().q_formula)
    ));
    v
}

/// Threefold violation of `q` over `|z| <= s/2`, relative to `max |q|`,
/// with rotated values from the trigonometric interpolant.
fn inner_threefold(q: &Potential) -> f64 {
    let f = q.field();
    let g = f.grid();
    let interp = FourierInterpolant::new(f);
    let mut worst: f64 = 0.0;
    for i in 0..g.len() {
        let z = g.point_flat(i);
        if z.norm() > S / 2.0 {
            continue;
        }
        for sign in [1.0, -1.0] {
            let w = z * Complex64::from_polar(1.0, sign * 2.0 * std::f64::consts::PI / 3.0);
            worst = worst.max((interp.eval(w) - f.values()[i]).norm());
        }
    }
    worst / f.max_abs()
}

fn c10_conductivity_type(fx: &Fixtures) -> Verdict {
    let gamma = radial_bump_gamma(&zgrid(), BUMP_C, BUMP_R).unwrap();
    let mut checks = Vec::new();
    let names = [
        ["Im mu0 (tau=0)", "min mu0 (tau=0)", "conductivity vs formula q (tau=0)"],
        ["Im mu0 (tau=1e-3)", "min mu0 (tau=1e-3)", "conductivity vs formula q (tau=1e-3)"],
        ["Im mu0 (tau=1e-2)", "min mu0 (tau=1e-2)", "conductivity vs formula q (tau=1e-2)"],
    ];
    for (rec, n) in [fx.rec_a(), fx.rec_b(), fx.rec_c()].into_iter().zip(names.iter()) {
        let mu0 = &rec.sweep.mu0;
        checks.push(at_most(n[0], mu0.max_abs_im() / mu0.max_abs(), 1e-4));
        let min = mu0.values().iter().fold(f64::INFINITY, |m, v| m.min(v.re));
        checks.push((n[1], min, 0.1, min >= 0.1));
        let gap = match &rec.q_conductivity {
            Ok(q) => rel_l2(q.field(), rec.q_formula.field()),
            Err(_) => f64::INFINITY,
        };
        checks.push(at_most(n[2], gap, 5e-2));
    }
    let gamma0 = fx.rec_a().sweep.mu0.map(|v| v * v);
    checks.push(at_most("mu0^2 vs input gamma (tau=0)", rel_l2(&gamma0, &gamma), 5e-2));
    all_of(&checks)
}

fn c11_decay(fx: &Fixtures) -> Verdict {
    let mut checks = Vec::new();
    let mut plateaus = Vec::new();
    let names = [
        ["(mu0 - 1)<z> slope (tau=0)", "|grad mu0|<z>^2 slope (tau=0)", "q<z>^2 slope (tau=0)"],
        ["(mu0 - 1)<z> slope (tau=1e-2)", "|grad mu0|<z>^2 slope (tau=1e-2)", "q<z>^2 slope (tau=1e-2)"],
    ];
    for (rec, n) in [fx.rec_a(), fx.rec_c()].into_iter().zip(names.iter()) {
        let mu0 = &rec.sweep.mu0;
        let dx = spectral_derivative(mu0, DiffOp::Dx);
        let dy = spectral_derivative(mu0, DiffOp::Dy);
        let grad = dx.zip_map(&dy, |a, b| Complex64::new((a.norm_sqr() + b.norm_sqr()).sqrt(), 0.0)).unwrap();
        let deviation = mu0.map(|v| v - 1.0);
        let reports = [decay_fit(&deviation, 1), decay_fit(&grad, 2), decay_fit(rec.q_formula.field(), 2)];
        let g = deviation.grid();
        let ring_sup = |lo: f64, hi: f64| {
            (0..g.len())
                .filter(|&i| (lo..hi).contains(&g.point_flat(i).norm()))
                .map(|i| deviation.values()[i].norm())
                .fold(0.0, f64::max)
        };
        plateaus.push([ring_sup(4.0, 5.0), ring_sup(6.0, 7.0), ring_sup(7.0, 8.0)]);
        for (r, name) in reports.iter().zip(n.iter()) {
            let (_, value, tol, pass) = report_part(r);
            checks.push((*name, value, tol, pass));
        }
    }
    let mut v = all_of(&checks);
    v.detail.push_str(&format!(
        "; info: sup |mu0 - 1| on the rings 4-5, 6-7, 7-8 is {:.2e}, {:.2e}, {:.2e} (tau=0) and {:.2e}, {:.2e}, {:.2e} (tau=1e-2)",
        plateaus[0][0], plateaus[0][1], plateaus[0][2], plateaus[1][0], plateaus[1][1], plateaus[1][2]
    ));
    v
}

fn c12_cutoff_convergence(_: &Fixtures) -> Verdict {
    let g = zgrid();
    let gamma = radial_bump_gamma(&g, BUMP_C, BUMP_R).unwrap();
    let mu = gamma.map(|v| v.sqrt());
    let q = gamma_to_potential(&gamma).unwrap();
    let eps = [0.4, 0.2, 0.1, 0.05];
    let mut detail = Vec::new();
    let mut pass = true;
    for p in [1.2, 1.5] {
        let table = lp_convergence_study(&mu, q.field(), p, &eps).unwrap();
        pass &= table.is_strictly_decreasing();
        let rows: Vec<String> = table.rows.iter().map(|(e, v)| format!("{e}:{v:.3e}")).collect();
        detail.push(format!("p={p} [{}] decreasing={}", rows.join(" "), table.is_strictly_decreasing()));
    }
    let wide = Grid2D::new(256, 16.0, Plane::Z).unwrap();
    let (power, p, e) = (1.0, 2.0, 0.5);
    let lhs = weighted_cutoff_norm(&wide, power, p, e).unwrap();
    let rhs = e.powf(-power - 2.0 / p) * weighted_cutoff_norm(&wide, power, p, 1.0).unwrap();
    let scaling = (lhs - rhs).abs() / rhs;
    pass &= scaling <= 1e-4;
    detail.push(format!("cutoff scaling identity relative error {scaling:.3e} (tol 1.0e-4)"));
    Verdict::new(pass, detail.join("; "))
}

fn c13_evolution_algebra(fx: &Fixtures) -> Verdict {
    let kg = kgrid();
    let mut unimodular: f64 = 0.0;
    for n in [3, 5] {
        let params = EvolutionParams::new(TAU_C, n).unwrap();
        for i in 0..kg.len() {
            unimodular = unimodular.max((params.multiplier(kg.point_flat(i)).norm() - 1.0).abs());
        }
    }
    let t0 = fx.t0();
    let two_step = compose_evolution(&fx.t_at(TAU_B), TAU_C - TAU_B).unwrap();
    let semigroup = two_step.field().sub(fx.t_at(TAU_C).field()).unwrap().max_abs() / t0.field().max_abs();
    // Rotation invariance of the multipliers themselves at arbitrary k, with
    // no interpolation involved.
    let mut rotation: f64 = 0.0;
    for n in [3u32, 5] {
        let params = EvolutionParams::new(TAU_C, n).unwrap();
        let turn = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / n as f64);
        for i in 0..kg.len() {
            let k = kg.point_flat(i);
            if k.norm() <= K_MAX {
                rotation = rotation.max((params.multiplier(turn * k) - params.multiplier(k)).norm());
                rotation = rotation.max((params.multiplier(turn.conj() * k) - params.multiplier(k)).norm());
            }
        }
    }
    // The same symmetry seen through the grid, on exactly radial data. The
    // fifth-order phase `2 tau Re(k^5)` varies by `10 |k|^4 tau h` per cell,
    // so the n = 5 flow runs for a shorter time that keeps it below half a
    // radian per cell wherever the data are not negligible.
    let radial = ScatteringData::new(
        ComplexField::from_real_fn(kg, |k| {
            let r2 = k.norm_sqr();
            r2 * (-r2 / 4.0).exp()
        }),
        Variant::Plus,
        K_MAX,
    )
    .unwrap();
    let three = evolve(&radial, EvolutionParams::new(TAU_C, 3).unwrap()).unwrap();
    let five = evolve(&radial, EvolutionParams::new(TAU_FIVEFOLD, 5).unwrap()).unwrap();
    let r3 = check_rotational(&three, 3, 1e-4);
    let r5 = check_rotational(&five, 5, 1e-4);
    let control3 = check_rotational(&three, 5, 1e-4);
    let control5 = check_rotational(&five, 3, 1e-4);
    let mut v = all_of(&[
        at_most("max ||multiplier| - 1|", unimodular, 1e-14),
        at_most("semigroup max deviation / max|t0|", semigroup, 1e-12),
        at_most("multiplier rotation invariance (n=3, n=5)", rotation, 1e-10),
        report_part(&r3),
        report_part(&r5),
        ("flow n=3 is not fivefold (negative control)", control3.relative_violation, 1e-4, !control3.pass),
        ("flow n=5 is not threefold (negative control)", control5.relative_violation, 1e-4, !control5.pass),
    ]);
    let pipeline = check_rotational(&fx.t_at(TAU_C), 3, 1e-4);
    v.detail.push_str(&format!(
        "; info: threefold check on the pipeline data t_tau (tau=1e-2) gives {:.3e}",
        pipeline.relative_violation
    ));
    v
}

fn c14_restart(fx: &Fixtures) -> Verdict {
    let t0 = fx.t0();
    let composed = evolve(&fx.t_at(TAU_B), EvolutionParams::nv(TAU_C - TAU_B).unwrap()).unwrap();
    let algebra = composed.field().sub(fx.t_at(TAU_C).field()).unwrap().max_abs() / t0.field().max_abs();
    let restarted = fx.restart();
    let gap = rel_l2(restarted.q_formula.field(), fx.rec_c().q_formula.field());
    all_of(&[
        at_most("evolve(tau') then evolve(tau) vs evolve(tau' + tau)", algebra, 1e-12),
        at_most("restarted q vs direct q at tau=1e-2", gap, 5e-2),
    ])
}

fn c15_nv_residual(_: &Fixtures) -> Verdict {
    // Exploratory: computed on a coarser grid pair so that the seven
    // reconstructions it needs stay affordable.
    let zg = Grid2D::new(64, S, Plane::Z).unwrap();
    let kg = Grid2D::new(64, K_MAX, Plane::K).unwrap();
    let q = radial_bump_potential(&zg, BUMP_C, BUMP_R).unwrap();
    let (t0, _) = scattering_grid(&q, &kg, K_MAX, Variant::Plus, ForwardOptions::default()).unwrap();
    let pipeline = |tau: f64| {
        let t = evolve(&t0, EvolutionParams::nv(tau)?)?;
        Ok(reconstruct(&t, &zg, DbarOptions::default())?.q_formula.field().clone())
    };
    let study = timed("NV residual study (seven reconstructions, n = 64)", || {
        ism_nv_residual(pipeline, 1e-4, 1e-5, 2).unwrap()
    });
    let levels: Vec<String> = study
        .deltas
        .iter()
        .zip(study.residuals.iter().zip(&study.reversed_residuals))
        .zip(&study.projections)
        .map(|((d, (r, rr)), p)| {
            format!("delta={d:.2e}: residual {r:.3e}, opposite time orientation {rr:.3e}, projection on the right-hand side {p:.3}")
        })
        .collect();
    let ratios: Vec<String> = study.richardson_ratios().iter().map(|r| format!("{r:.2}")).collect();
    Verdict::new(
        true,
        format!(
            "informative only: {}; Richardson ratios of the central differences [{}] (4 expected for a smooth family)",
            levels.join("; "),
            ratios.join(", ")
        ),
    )
}

fn main() {
    let fx = Fixtures::default();
    type Criterion = (u32, &'static str, fn(&Fixtures) -> Verdict);
    let criteria: [Criterion; 15] = [
        (1, "zero-potential fixed point", c1_zero_fixed_point),
        (2, "Faddeev kernel inverts the operator", c2_faddeev_kernel),
        (3, "CGO PDE residual on the bump", c3_cgo_residual),
        (4, "Born limit", c4_born_limit),
        (5, "radial and real scattering data", c5_radial_real),
        (6, "vanishing of t0 near the origin", c6_near_origin),
        (7, "tau = 0 potential round trip", c7_roundtrip_tau0),
        (8, "scattering round trip at tau = 1e-3, 1e-2", c8_scattering_roundtrip),
        (9, "reality and symmetries of q_tau", c9_q_symmetries),
        (10, "conductivity type is preserved", c10_conductivity_type),
        (11, "decay of mu0, grad mu0 and q_tau", c11_decay),
        (12, "Gaussian cutoff convergence", c12_cutoff_convergence),
        (13, "evolution algebra", c13_evolution_algebra),
        (14, "restart diagram", c14_restart),
        (15, "NV residual (exploratory)", c15_nv_residual),
    ];
    let filter: Option<Vec<u32>> = std::env::var("NVISM_ACCEPTANCE")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    println!("acceptance suite: z-grid {N} x {N} on [-{S}, {S})^2, k-grid {N} x {N}, k_max = {K_MAX}, bump c = {BUMP_C}, R = {BUMP_R}");
    let mut failed = Vec::new();
    let start = Instant::now();
    for (id, name, run) in criteria {
        if let Some(f) = &filter {
            if !f.contains(&id) {
                continue;
            }
        }
        let v = run(&fx);
        let status = if id == 15 {
            "INFO"
        } else if v.pass {
            "PASS"
        } else {
            failed.push(id);
            "FAIL"
        };
        println!("criterion {id:>2} {status} {name}: {}", v.detail);
    }
    println!(
        "acceptance summary: {} failing criteria {:?}; total {:.0} s",
        failed.len(),
        failed,
        start.elapsed().as_secs_f64()
    );
}
