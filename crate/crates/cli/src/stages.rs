//! The pipeline stages. Each stage reads its inputs from files, writes NVF1
//! outputs with a `.meta` sidecar (plain `key:value`, always carrying the
//! config hash) plus a diagnostics file, and returns whether its checks
//! passed.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use num_complex::Complex64;

use nvism::evolution::{evolve, EvolutionParams};
use nvism::faddeev::{scattering_grid, SweepDiagnostics};
use nvism::nvf;
use nvism::nvpde::{ism_nv_residual, nv_run, NvModel, NvState};
use nvism::pipeline::{reconstruct, scattering_roundtrip, RoundTripOptions};
use nvism::potentials::radial_bump_potential;
use nvism::symmetry::{
    check_conj_pair, check_mu_conjugation, check_plus_minus_equal, check_q_symmetries, check_radial_real,
    check_rotational, decay_fit, CheckReport,
};
use nvism::{ComplexField, NvError, Plane, Potential, Result, ScatteringData, Variant};

use crate::config::SolverConfig;

/// Whether a stage's checks passed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    CheckFailed,
}

/// Shared context of a run.
pub struct Context {
    pub config: SolverConfig,
    pub out: PathBuf,
}

impl Context {
    pub fn new(config: SolverConfig, out: PathBuf) -> Result<Self> {
        fs::create_dir_all(&out)?;
        Ok(Self { config, out })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Writes `field` to `name` with a sidecar holding the config hash and
    /// `meta`.
    fn save_field(&self, name: &str, field: &ComplexField, meta: &[(&str, String)]) -> Result<PathBuf> {
        let path = self.path(name);
        nvf::save(&path, field)?;
        let mut pairs = vec![("config_hash", self.config.hash())];
        pairs.extend(meta.iter().map(|(k, v)| (*k, v.clone())));
        write_meta(&meta_path(&path), &pairs)?;
        info!("wrote {}", path.display());
        Ok(path)
    }

    fn save_text(&self, name: &str, text: &str) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, format!("config_hash:{}\n{text}", self.config.hash()))?;
        info!("wrote {}", path.display());
        Ok(())
    }

    fn save_scattering(&self, name: &str, t: &ScatteringData) -> Result<PathBuf> {
        self.save_field(
            name,
            t.field(),
            &[
                ("variant", t.variant().tag().to_string()),
                ("k_max", t.k_max().to_string()),
                ("tau", t.tau().to_string()),
                ("hierarchy_n", t.hierarchy_n().to_string()),
            ],
        )
    }
}

/// Sidecar path of a field file: `name.nvf` -> `name.nvf.meta`.
pub fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

fn write_meta(path: &Path, pairs: &[(&str, String)]) -> Result<()> {
    let mut text = String::new();
    for (k, v) in pairs {
        writeln!(text, "{k}:{v}").expect("string write");
    }
    fs::write(path, text)?;
    Ok(())
}

/// Reads a sidecar; a missing sidecar gives an empty map.
pub fn read_meta(path: &Path) -> Result<BTreeMap<String, String>> {
    let path = meta_path(path);
    if !path.exists() {
        return Ok(BTreeMap::new());
    }
    let mut map = BTreeMap::new();
    for line in fs::read_to_string(&path)?.lines().filter(|l| !l.trim().is_empty()) {
        let (k, v) = line
            .split_once(':')
            .ok_or_else(|| NvError::Format(format!("{}: bad line {line:?}", path.display())))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn meta_value<T: std::str::FromStr>(meta: &BTreeMap<String, String>, key: &str, default: T) -> Result<T> {
    match meta.get(key) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|_| NvError::Format(format!("bad sidecar value {v:?} for {key}"))),
    }
}

fn load_field(path: &Path, plane: Plane) -> Result<ComplexField> {
    let field = nvf::load(path)?;
    if field.grid().plane() != plane {
        return Err(NvError::InvalidArgument(format!(
            "{} holds a {}-plane field, expected {}",
            path.display(),
            field.grid().plane().tag(),
            plane.tag()
        )));
    }
    Ok(field)
}

pub fn load_potential(path: &Path) -> Result<Potential> {
    Potential::new(load_field(path, Plane::Z)?)
}

/// Scattering data from an NVF1 file and its sidecar; absent sidecar keys
/// fall back to the plus variant, the configured `k_max` and `tau = 0`.
pub fn load_scattering(path: &Path, config: &SolverConfig) -> Result<ScatteringData> {
    let field = load_field(path, Plane::K)?;
    let meta = read_meta(path)?;
    let variant = match meta.get("variant") {
        Some(v) => Variant::from_tag(v)?,
        None => Variant::Plus,
    };
    let k_max = meta_value(&meta, "k_max", config.k_max)?;
    let tau = meta_value(&meta, "tau", 0.0)?;
    let n = meta_value(&meta, "hierarchy_n", config.hierarchy_n)?;
    Ok(ScatteringData::new(field, variant, k_max)?.with_provenance(tau, n))
}

/// `make-potential`: the configured bump potential and its conductivity.
pub fn make_potential(ctx: &Context) -> Result<Outcome> {
    let cfg = &ctx.config;
    let q = radial_bump_potential(&cfg.z_grid()?, cfg.bump_c, cfg.bump_r)?;
    let params = [
        ("profile", "radial-bump".to_string()),
        ("bump_c", cfg.bump_c.to_string()),
        ("bump_r", cfg.bump_r.to_string()),
    ];
    let mut q_meta = params.to_vec();
    q_meta.push(("role", "potential".to_string()));
    ctx.save_field("potential.nvf", q.field(), &q_meta)?;
    let mut g_meta = params.to_vec();
    g_meta.push(("role", "conductivity".to_string()));
    ctx.save_field("gamma.nvf", q.gamma().expect("bump carries its conductivity"), &g_meta)?;
    Ok(Outcome::Ok)
}

fn sweep_text(diag: &SweepDiagnostics) -> String {
    let mut text = format!(
        "samples:{}\nfailures:{}\norigin_bound:{:e}\nmax_iterations:{}\n# k_re k_im iterations residual\n",
        diag.ks.len(),
        diag.failures.len(),
        diag.origin_bound,
        diag.iterations.iter().max().copied().unwrap_or(0)
    );
    for ((k, it), res) in diag.ks.iter().zip(&diag.iterations).zip(&diag.residuals) {
        writeln!(text, "{} {} {it} {res:e}", k.re, k.im).expect("string write");
    }
    for (k, why) in &diag.failures {
        writeln!(text, "# failed at {k}: {why}").expect("string write");
    }
    text
}

/// `forward`: scattering data of a potential on the configured k-disc.
pub fn forward(ctx: &Context, input: &Path, variant: Variant) -> Result<Outcome> {
    let cfg = &ctx.config;
    let q = load_potential(input)?;
    let (t, diag) = scattering_grid(&q, &cfg.k_grid()?, cfg.k_max, variant, cfg.forward_options())?;
    ctx.save_scattering("scattering.nvf", &t)?;
    ctx.save_text("forward.diag", &sweep_text(&diag))?;
    Ok(Outcome::Ok)
}

/// `evolve`: multiplies scattering data by the flow multiplier.
pub fn evolve_stage(ctx: &Context, input: &Path) -> Result<Outcome> {
    let cfg = &ctx.config;
    let t = load_scattering(input, cfg)?;
    let evolved = evolve(&t, EvolutionParams::new(cfg.tau, cfg.hierarchy_n)?)?;
    ctx.save_scattering("evolved.nvf", &evolved)?;
    Ok(Outcome::Ok)
}

/// `invert`: potential by the scattering-data formula and by the
/// conductivity route, and `mu(., 0)`.
pub fn invert(ctx: &Context, input: &Path) -> Result<Outcome> {
    let cfg = &ctx.config;
    let t = load_scattering(input, cfg)?;
    let rec = reconstruct(&t, &cfg.z_grid()?, cfg.dbar_options())?;
    let meta = [("tau", t.tau().to_string()), ("variant", t.variant().tag().to_string())];
    ctx.save_field("q.nvf", rec.q_formula.field(), &meta)?;
    ctx.save_field("mu0.nvf", &rec.sweep.mu0, &meta)?;
    let mut text = String::new();
    writeln!(text, "min_abs_mu0:{:e}", rec.min_mu0()).expect("string write");
    match &rec.q_conductivity {
        Ok(q) => {
            ctx.save_field("q_conductivity.nvf", q.field(), &meta)?;
            let gap = rec.q_formula.field().rel_l2_error(q.field())?;
            writeln!(text, "conductivity_route:ok\nformula_vs_conductivity:{gap:e}").expect("string write");
        }
        Err(why) => writeln!(text, "conductivity_route:rejected ({why})").expect("string write"),
    }
    let mu_minus_one = rec.sweep.mu0.map(|v| v - 1.0);
    for report in [decay_fit(&mu_minus_one, 1), decay_fit(rec.q_formula.field(), 2)] {
        text.push_str(&report.to_key_value());
    }
    writeln!(text, "# z_re z_im iterations residual").expect("string write");
    let zgrid = rec.sweep.mu0.grid();
    for (idx, (it, res)) in rec.sweep.iterations.iter().zip(&rec.sweep.residuals).enumerate() {
        let z = zgrid.point_flat(idx);
        writeln!(text, "{} {} {it} {res:e}", z.re, z.im).expect("string write");
    }
    ctx.save_text("invert.diag", &text)?;
    Ok(Outcome::Ok)
}

/// Inputs of the `check` stage.
#[derive(Debug, Default, Clone)]
pub struct CheckInputs {
    pub scattering: Option<PathBuf>,
    pub scattering_minus: Option<PathBuf>,
    pub potential: Option<PathBuf>,
    /// Names to run; empty runs every check the inputs allow.
    pub names: Vec<String>,
}

pub const CHECK_NAMES: [&str; 7] = [
    "conj_pair",
    "plus_minus_equal",
    "radial_real",
    "threefold",
    "q_symmetries",
    "mu_conjugation",
    "decay",
];

/// `check`: runs the selected symmetry checks and writes a plain-text and a
/// `key:value` report.
pub fn check(ctx: &Context, inputs: &CheckInputs) -> Result<Outcome> {
    let cfg = &ctx.config;
    for name in &inputs.names {
        if !CHECK_NAMES.contains(&name.as_str()) {
            return Err(NvError::InvalidArgument(format!(
                "unknown check {name:?}; known checks: {}",
                CHECK_NAMES.join(", ")
            )));
        }
    }
    let wanted = |name: &str| inputs.names.is_empty() || inputs.names.iter().any(|n| n == name);
    let plus = inputs.scattering.as_deref().map(|p| load_scattering(p, cfg)).transpose()?;
    let minus = inputs
        .scattering_minus
        .as_deref()
        .map(|p| load_scattering(p, cfg).map(|t| t.as_variant(Variant::Minus)))
        .transpose()?;
    let q = inputs.potential.as_deref().map(load_potential).transpose()?;
    let missing = |name: &str, what: &str| {
        NvError::InvalidArgument(format!("check {name} needs {what}"))
    };
    let explicit = |name: &str| inputs.names.iter().any(|n| n == name);
    let mut reports: Vec<CheckReport> = Vec::new();
    match (&plus, &minus) {
        (Some(tp), Some(tm)) => {
            if wanted("conj_pair") {
                reports.push(check_conj_pair(tp, tm, cfg.tol_conj_pair)?);
            }
            if wanted("plus_minus_equal") {
                reports.push(check_plus_minus_equal(tp, tm, cfg.tol_plus_minus)?);
            }
            if wanted("mu_conjugation") {
                let z = Complex64::new(0.5, -0.25);
                reports.push(check_mu_conjugation(tp, tm, z, cfg.dbar_options(), cfg.tol_mu_conjugation)?);
            }
        }
        _ => {
            for name in ["conj_pair", "plus_minus_equal", "mu_conjugation"] {
                if explicit(name) {
                    return Err(missing(name, "--scattering and --scattering-minus"));
                }
            }
        }
    }
    match &plus {
        Some(t) => {
            if wanted("radial_real") {
                reports.push(check_radial_real(t, cfg.tol_radial));
            }
            if wanted("threefold") {
                let fold = t.hierarchy_n();
                reports.push(check_rotational(t, fold, cfg.tol_threefold));
            }
        }
        None => {
            for name in ["radial_real", "threefold"] {
                if explicit(name) {
                    return Err(missing(name, "--scattering"));
                }
            }
        }
    }
    match &q {
        Some(q) => {
            if wanted("q_symmetries") {
                reports.push(check_q_symmetries(q, cfg.tol_q_symmetry));
            }
            if wanted("decay") {
                reports.push(decay_fit(q.field(), 2));
            }
        }
        None => {
            for name in ["q_symmetries", "decay"] {
                if explicit(name) {
                    return Err(missing(name, "--potential"));
                }
            }
        }
    }
    if reports.is_empty() {
        return Err(NvError::InvalidArgument("no check applies to the given inputs".into()));
    }
    let text: String = reports.iter().map(|r| format!("{r}\n")).collect();
    let kv: String = reports.iter().map(CheckReport::to_key_value).collect();
    ctx.save_text("check.txt", &text)?;
    ctx.save_text("check.kv", &kv)?;
    print!("{text}");
    Ok(if reports.iter().all(|r| r.pass) {
        Outcome::Ok
    } else {
        Outcome::CheckFailed
    })
}

/// `roundtrip`: reconstructs, recomputes the scattering data of the
/// reconstruction on the comparison annulus and compares.
pub fn roundtrip(ctx: &Context, input: &Path) -> Result<Outcome> {
    let cfg = &ctx.config;
    let t = load_scattering(input, cfg)?;
    let options = RoundTripOptions {
        dbar: cfg.dbar_options(),
        forward: cfg.forward_options(),
        window: (cfg.window_inner, cfg.window_outer),
        k_min: cfg.roundtrip_k_min,
        k_max: cfg.roundtrip_k_max.min(t.k_max()),
    };
    let rt = scattering_roundtrip(&t, &cfg.z_grid()?, options)?;
    ctx.save_field("roundtrip_q.nvf", rt.q.field(), &[("tau", t.tau().to_string())])?;
    ctx.save_scattering("roundtrip_t.nvf", &rt.t_back)?;
    let report = CheckReport::from_relative("roundtrip", rt.error, rt.error, cfg.tol_roundtrip)
        .with_meta("tau", t.tau())
        .with_meta("k_min", options.k_min)
        .with_meta("k_max", options.k_max);
    ctx.save_text("roundtrip.kv", &report.to_key_value())?;
    ctx.save_text("roundtrip.diag", &sweep_text(&rt.diagnostics))?;
    println!("{report}");
    Ok(if report.pass { Outcome::Ok } else { Outcome::CheckFailed })
}

/// `nv-residual`: compares the time derivative of the inverse-scattering
/// evolution of `t0` with the Novikov-Veselov right-hand side. Informative
/// only.
pub fn nv_residual(ctx: &Context, input: &Path) -> Result<Outcome> {
    let cfg = &ctx.config;
    let t0 = load_scattering(input, cfg)?;
    if t0.tau() != 0.0 {
        return Err(NvError::InvalidArgument("nv-residual starts from unevolved data (tau = 0)".into()));
    }
    let zgrid = cfg.z_grid()?;
    let pipeline = |tau: f64| -> Result<ComplexField> {
        let t = evolve(&t0, EvolutionParams::nv(tau)?)?;
        Ok(reconstruct(&t, &zgrid, cfg.dbar_options())?.q_formula.field().clone())
    };
    let study = ism_nv_residual(pipeline, cfg.tau, cfg.nv_delta, cfg.nv_halvings)?;
    let mut text = study.report().to_key_value();
    for (i, d) in study.deltas.iter().enumerate() {
        writeln!(
            text,
            "level{i}.delta:{d:e}\nlevel{i}.residual:{:e}\nlevel{i}.reversed_residual:{:e}",
            study.residuals[i], study.reversed_residuals[i]
        )
        .expect("string write");
    }
    ctx.save_text("nv_residual.kv", &text)?;
    println!("{}", study.report());
    Ok(Outcome::Ok)
}

/// `nv-run`: direct time stepping of the Novikov-Veselov equation, saving a
/// frame every `nv_save_every` steps and an index file.
pub fn nv_run_stage(ctx: &Context, input: &Path) -> Result<Outcome> {
    let cfg = &ctx.config;
    let q = load_potential(input)?;
    let frames = nv_run(NvState::new(q, 0.0), cfg.nv_dt, cfg.nv_steps, cfg.nv_save_every, NvModel::Full)?;
    let mut index = String::from("# frame tau file\n");
    for (i, frame) in frames.iter().enumerate() {
        let name = format!("frame_{i:04}.nvf");
        ctx.save_field(&name, frame.q.field(), &[("tau", frame.tau.to_string())])?;
        writeln!(index, "{i} {} {name}", frame.tau).expect("string write");
    }
    ctx.save_text("frames.index", &index)?;
    Ok(Outcome::Ok)
}
