//! The ten numbered acceptance checks, shared by the `acceptance` test target and
//! the `verify` subcommand.
//!
//! Each check returns a [`CriterionResult`] whose [`line`](CriterionResult::line)
//! is a one-line pass/fail summary; the `details` carry every measured value.

use crate::blocks::{make_helical, make_pipe, random_shear, shear, HelicalSpec, PipeSpec};
use crate::error::{Error, Result};
use crate::geometry::{base_set, cone_radius_estimate, decompose, identity_plus, reconstruct, sample_unit_ball, RationalDirection, Sym3};
use crate::helicity::{helicity_classical, helicity_fourier, helicity_mollified, shell_matrix};
use crate::kernels::{ClassAKernel, Mollifier, MollifierProfile, ShellFamily};
use crate::spectral::random::random_solenoidal;
use crate::spectral::{Grid, VectorField3};
use crate::toy::{beltrami_background, perturb, step0, PerturbReport, ProfilePair, ToyParams};
use crate::transport::{pushforward_helicity, solve_flow, solve_points, transported_pipe_identity, FnBackground, Mat3};
use nalgebra::{Matrix6, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use std::f64::consts::PI;
use std::sync::OnceLock;
use std::time::Instant;

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: usize,
    pub name: String,
    pub pass: bool,
    pub summary: String,
    pub details: Value,
    pub seconds: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2} {}: {} ({:.1} s)",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.summary,
            self.seconds
        )
    }
}

pub const NAMES: [&str; 10] = [
    "helicity calculus",
    "shear nullity",
    "shell completeness",
    "pipe normalizations",
    "helical block",
    "geometric lemma",
    "transport",
    "initial step",
    "toy perturbation",
    "spectral localization",
];

/// Criterion ids of a named suite: `all`, `helicity`, `blocks`, `geometry`, `transport`, `toy`.
pub fn suite(name: &str) -> Result<Vec<usize>> {
    Ok(match name {
        "all" => (1..=10).collect(),
        "helicity" => vec![1, 2, 3],
        "blocks" => vec![4, 5],
        "geometry" => vec![6],
        "transport" => vec![7],
        "toy" => vec![8, 9, 10],
        other => return Err(Error::InvalidParams(format!("unknown suite {other:?}"))),
    })
}

type Outcome = (bool, String, Value);

/// Runs criterion `id`; construction errors are reported as failures.
pub fn run(id: usize) -> CriterionResult {
    let start = Instant::now();
    let out: Result<Outcome> = match id {
        1 => helicity_calculus(),
        2 => shear_nullity(),
        3 => shell_completeness(),
        4 => pipe_normalizations(),
        5 => helical_block(),
        6 => geometric_lemma(),
        7 => transport(),
        8 => initial_step(),
        9 => toy_perturbation(),
        10 => spectral_localization(),
        _ => Err(Error::InvalidParams(format!("no criterion {id}"))),
    };
    let (pass, summary, details) = out.unwrap_or_else(|e| (false, format!("error: {e}"), json!({ "error": e.to_string(), "kind": e.kind() })));
    CriterionResult {
        id,
        name: NAMES.get(id.wrapping_sub(1)).copied().unwrap_or("unknown").to_string(),
        pass,
        summary,
        details,
        seconds: start.elapsed().as_secs_f64(),
    }
}

pub fn run_all(ids: &[usize]) -> Vec<CriterionResult> {
    ids.iter().map(|&i| run(i)).collect()
}

fn unit_beltrami(grid: Grid) -> VectorField3 {
    beltrami_background(grid, 1.0)
}

fn helicity_calculus() -> Result<Outcome> {
    let g = Grid::new(64)?;
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let u = random_solenoidal(g, 8, seed);
        let scale = 1.0 + u.sobolev_norm(0.5).powi(2);
        let d = (helicity_classical(&u) - helicity_fourier(&u)).abs() / scale;
        worst = worst.max(d);
    }
    let b = unit_beltrami(g);
    let hb = [helicity_classical(&b), helicity_fourier(&b)];
    let beltrami_err = hb.iter().map(|h| (h - 2.0 * PI).abs()).fold(0.0, f64::max);
    let mut reflect: f64 = 0.0;
    for seed in 100..105 {
        let u = random_solenoidal(g, 6, seed);
        let u = u.scale(1.0 / u.l2_norm());
        let h = helicity_fourier(&u);
        reflect = reflect.max((helicity_fourier(&u.reflect_x()) + h).abs() / h.abs().max(1.0));
    }
    let pass = worst <= 1e-10 && beltrami_err <= 1e-10 && reflect <= 1e-12;
    Ok((
        pass,
        format!("classical vs Fourier {worst:.1e}, Beltrami {beltrami_err:.1e}, reflection {reflect:.1e}"),
        json!({ "classical_vs_fourier": worst, "beltrami": hb, "beltrami_error": beltrami_err, "reflection": reflect }),
    ))
}

fn shear_nullity() -> Result<Outcome> {
    let g = Grid::new(64)?;
    let kernels = [ClassAKernel::default(), ClassAKernel::new(0.4, 1.2)?];
    let mut profiles = vec![MollifierProfile::Gaussian];
    profiles.extend(kernels.iter().map(|k| MollifierProfile::ClassA(*k)));
    let (mut moll, mut shells): (f64, f64) = (0.0, 0.0);
    for seed in 0..20 {
        let u = shear(g, &random_shear(8, seed));
        for p in &profiles {
            for eps in [0.02, 0.05, 0.1, 0.3] {
                moll = moll.max(helicity_mollified(&u, &Mollifier::new(*p, eps)?)?.abs());
            }
        }
        for k in &kernels {
            shells = shells.max(shell_matrix(&u, &ShellFamily::new(*k), 6).max_abs());
        }
    }
    let pass = moll <= 1e-12 && shells <= 1e-12;
    Ok((
        pass,
        format!("max mollified {moll:.1e}, max shell entry {shells:.1e}"),
        json!({ "mollified": moll, "shell_entries": shells, "fields": 20 }),
    ))
}

fn shell_completeness() -> Result<Outcome> {
    let g = Grid::new(64)?;
    let band = 8.0;
    let raw = random_solenoidal(g, 8, 7).to_spectral().map_modes(|k, c| {
        if (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64 <= band * band {
            c
        } else {
            Default::default()
        }
    });
    let u = raw.to_physical();
    let u = u.scale(1.0 / u.l2_norm());
    let h = helicity_classical(&u);
    let fam = ShellFamily::new(ClassAKernel::default());
    let mut rows = Vec::new();
    let mut pass = true;
    let mut first = None;
    for m in 0..=6 {
        let d = (shell_matrix(&u, &fam, m).total() - h).abs();
        let resolved = fam.base.delta() * 2f64.powi(m as i32) >= band;
        if resolved {
            pass &= d <= 1e-10;
            first.get_or_insert(m);
        }
        rows.push(json!({ "M": m, "error": d, "resolved": resolved }));
    }
    let last = rows.last().and_then(|r| r["error"].as_f64()).unwrap_or(f64::NAN);
    Ok((
        pass,
        format!("exact from M = {} on, error at M = 6: {last:.1e}", first.unwrap_or(usize::MAX)),
        json!({ "helicity": h, "rows": rows }),
    ))
}

fn pipe_normalizations() -> Result<Outcome> {
    let g = Grid::new(128)?;
    let mut rows = Vec::new();
    let mut pass = true;
    let mut worst = [0.0f64; 4];
    for xi in [RationalDirection::axis(2), RationalDirection::new([0, 3, 4], 5)?] {
        for r in [0.5, 0.25] {
            let d = make_pipe(&PipeSpec::new(xi, 8, r), g)?.diagnostics();
            let lp_ok = d.lp_ratios.iter().all(|v| (0.25..=4.0).contains(v));
            let ok = d.mean_ww_error <= 1e-6
                && (d.rho_l2_squared - 1.0).abs() <= 1e-8
                && d.curl_residual <= 1e-8
                && lp_ok
                && d.helicity.abs() <= 1e-10;
            pass &= ok;
            worst[0] = worst[0].max(d.mean_ww_error);
            worst[1] = worst[1].max((d.rho_l2_squared - 1.0).abs());
            worst[2] = worst[2].max(d.curl_residual);
            worst[3] = worst[3].max(d.helicity.abs());
            rows.push(json!({ "xi": xi.num, "r": r, "pass": ok, "diagnostics": d }));
        }
    }
    Ok((
        pass,
        format!(
            "mean(WxW) {:.1e}, L2 {:.1e}, curl {:.1e}, helicity {:.1e}",
            worst[0], worst[1], worst[2], worst[3]
        ),
        json!({ "pipes": rows }),
    ))
}

fn helical_block() -> Result<Outcome> {
    let g = Grid::new(128)?;
    let mut rows = Vec::new();
    let mut pass = true;
    let mut c_rho: f64 = 0.0;
    for sign in [1i8, -1] {
        let spec = HelicalSpec { base: PipeSpec::new(RationalDirection::axis(1), 16, 0.5), lambda_star: 4, sign };
        let d = make_helical(&spec, g)?.diagnostics();
        let ok = d.det_error <= 1e-12
            && d.e_twist_error <= 1e-8
            && (d.normalized_helicity - sign as f64).abs() <= 1e-3
            && d.containment <= 10.0;
        pass &= ok;
        c_rho = c_rho.max(d.containment);
        rows.push(json!({ "sign": sign, "pass": ok, "diagnostics": d }));
    }
    Ok((pass, format!("C_rho = {c_rho:.3}"), json!({ "blocks": rows })))
}

fn brute_identity_solve() -> [f64; 6] {
    let dirs = base_set().xi_f64();
    let pairs = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];
    let a = Matrix6::from_fn(|row, col| dirs[col][pairs[row].0] * dirs[col][pairs[row].1]);
    let b = Vector6::from_fn(|row, _| if pairs[row].0 == pairs[row].1 { 1.0 } else { 0.0 });
    let x = a.lu().solve(&b).expect("nonsingular system");
    [x[0], x[1], x[2], x[3], x[4], x[5]]
}

fn geometric_lemma() -> Result<Outcome> {
    let cone = cone_radius_estimate(0, 1000);
    let eps = 0.5 * cone.eps;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut residual: f64 = 0.0;
    let mut rejected_inside = 0;
    for _ in 0..10_000 {
        let r = identity_plus(eps, &sample_unit_ball(&mut rng));
        match decompose(&r) {
            Ok(d) => residual = residual.max(d.residual),
            Err(_) => rejected_inside += 1,
        }
    }
    let dirs = base_set().xi_f64();
    let mut caught = 0;
    for i in 0..1000 {
        let mut c = [0.0; 6];
        for v in c.iter_mut() {
            *v = rng.gen_range(0.1..1.0);
        }
        c[i % 6] = -rng.gen_range(0.01..1.0);
        let r: Sym3 = reconstruct(&dirs, &c);
        if matches!(decompose(&r), Err(Error::OutOfCone { .. })) {
            caught += 1;
        }
    }
    let id = decompose(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])?;
    let brute = brute_identity_solve();
    let id_err = id.coefficients.iter().zip(&brute).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let pass = cone.eps >= 1e-3 && rejected_inside == 0 && residual <= 1e-12 && caught == 1000 && id_err <= 1e-12;
    Ok((
        pass,
        format!("cone radius {:.3e}, residual {residual:.1e}, {caught}/1000 violations caught, Id error {id_err:.1e}", cone.eps),
        json!({
            "cone_radius": cone.eps,
            "test_radius": eps,
            "residual": residual,
            "rejected_inside": rejected_inside,
            "violations_caught": caught,
            "identity_coefficients": id.coefficients,
            "identity_brute_force": brute,
            "identity_error": id_err,
        }),
    ))
}

fn abc(x: [f64; 3], amp: f64) -> ([f64; 3], Mat3) {
    let k = 2.0 * PI;
    let (sx, cx) = (k * x[0]).sin_cos();
    let (sy, cy) = (k * x[1]).sin_cos();
    let (sz, cz) = (k * x[2]).sin_cos();
    let v = [amp * (sz + cy), amp * (sx + cz), amp * (sy + cx)];
    let g = [
        [0.0, -amp * k * sy, amp * k * cz],
        [amp * k * cx, 0.0, -amp * k * sz],
        [-amp * k * sx, amp * k * cy, 0.0],
    ];
    (v, g)
}

fn transport() -> Result<Outcome> {
    let g = Grid::new(128)?;
    let amp = 0.5;
    let abc_bg = FnBackground { f: move |x: [f64; 3], _t: f64| abc(x, amp), bound: 2.0 * PI * amp * 2f64.sqrt() };
    let t_abc = 0.1 / abc_bg.bound;
    let flow = solve_flow(&abc_bg, g, 0.0, t_abc, 16)?;
    let volume = flow.det_error();

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pts: Vec<[f64; 3]> = (0..4096).map(|_| [rng.gen(), rng.gen(), rng.gen()]).collect();
    let long = 0.5 / abc_bg.bound;
    let direct = solve_points(&abc_bg, &pts, 0.0, long, 60)?;
    let mid: Vec<[f64; 3]> = solve_points(&abc_bg, &pts, 0.5 * long, long, 23)?.into_iter().map(|p| p.0).collect();
    let composed = solve_points(&abc_bg, &mid, 0.0, 0.5 * long, 17)?;
    let semigroup = direct
        .iter()
        .zip(&composed)
        .map(|(a, b)| (0..3).map(|i| (a.0[i] - b.0[i]).abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max);

    let sa = 0.5;
    let shear_bg = FnBackground {
        f: move |x: [f64; 3], _t: f64| {
            let (s, c) = (2.0 * PI * x[2]).sin_cos();
            ([sa * s, 0.0, 0.0], [[0.0, 0.0, 2.0 * PI * sa * c], [0.0; 3], [0.0; 3]])
        },
        bound: 2.0 * PI * sa,
    };
    let shear_flow = solve_flow(&shear_bg, g, 0.0, 0.1 / shear_bg.bound, 16)?;
    let pipe = make_pipe(&PipeSpec::new(RationalDirection::axis(2), 8, 0.5), g)?;
    let pipe_identity = transported_pipe_identity(&pipe, &shear_flow)?;

    let u = random_solenoidal(g, 3, 11);
    let u = u.scale(1.0 / u.l2_norm());
    let push = pushforward_helicity(&u.to_spectral().curl(), &flow)?;

    let pass = volume <= 1e-6 && semigroup <= 1e-5 && pipe_identity <= 1e-4 && push.relative_change <= 1e-3;
    Ok((
        pass,
        format!(
            "volume {volume:.1e}, semigroup {semigroup:.1e}, pipe identity {pipe_identity:.1e}, push-forward {:.1e}",
            push.relative_change
        ),
        json!({
            "volume": volume,
            "semigroup": semigroup,
            "pipe_identity": pipe_identity,
            "pushforward": push,
            "abc_duration": t_abc,
            "shear_deformation": shear_flow.deformation(),
        }),
    ))
}

fn initial_step() -> Result<Outcome> {
    let p = ToyParams::default();
    let mut rows = Vec::new();
    let mut pass = true;
    let mut parts = Vec::new();
    for h in [1.0, -1.0] {
        let (_, r) = step0(&ProfilePair::constant(1.0, h), &p, 0.0)?;
        pass &= r.energy_pass && r.gap_pass;
        parts.push(format!("h={h:+}: energy err {:.3}δ, gap ratio {:.3}", r.energy_error, r.gap_ratio));
        rows.push(serde_json::to_value(&r)?);
    }
    Ok((pass, parts.join("; "), json!({ "params": p, "reports": rows })))
}

/// Background and profiles of the toy perturbation: `u` Beltrami with `‖u‖² = 1/2`,
/// `e = 1`, `h = H(u) + 1`.
pub fn toy_setup() -> Result<(VectorField3, ProfilePair, ToyParams)> {
    let p = ToyParams::default();
    let u = beltrami_background(p.grid()?, 0.5f64.sqrt());
    Ok((u, ProfilePair::constant(1.0, PI + 1.0), p))
}

fn toy_report() -> Result<&'static PerturbReport> {
    static CELL: OnceLock<std::result::Result<PerturbReport, String>> = OnceLock::new();
    CELL.get_or_init(|| {
        let (u, prof, p) = toy_setup().map_err(|e| e.to_string())?;
        perturb(&u, &prof, &p, 0.0).map(|r| r.1).map_err(|e| e.to_string())
    })
    .as_ref()
    .map_err(|e| Error::InvalidParams(e.clone()))
}

fn toy_perturbation() -> Result<Outcome> {
    let r = toy_report()?;
    let pass = r.energy.pass && r.cancellation.pass && r.helical.pass && r.cross_helicity.pass;
    Ok((
        pass,
        format!(
            "energy {:.4}/{:.4}, helical {:.4}/{:.4}, cancellation {:.1e}, H(u,w) {:.1e}",
            r.energy.measured, r.energy.target, r.helical.measured, r.helical.target, r.cancellation.measured, r.cross_helicity.measured
        ),
        serde_json::to_value(r)?,
    ))
}

fn spectral_localization() -> Result<Outcome> {
    let r = toy_report()?;
    let pass = r.localization.measured <= 1e-4;
    Ok((
        pass,
        format!("mass outside the shell {:.1e}", r.localization.measured),
        json!({ "outside_fraction": r.localization.measured, "band": [r.localization.target, 1e-4] }),
    ))
}
