//! Acceptance suite. Runs every criterion, prints one line per criterion and
//! exits non-zero if any fails.

use rand::Rng;
use rand_distr::StandardNormal;
use sqclock_core::atom::{
    evolve_bloch, quadrature_decay_rates, ramsey_probability, BlochVector, RamseyGeometry,
    SqueezedReservoir, TwoLevelAtom,
};
use sqclock_core::clock::{
    reference_fountain, run_clock, run_comparison, sample_detected_atoms, CountSampler,
};
use sqclock_core::detection::{
    noise_denominator, snr_coherent, snr_squeezed, snr_squeezed_from, squeezing_spectrum,
    AtomicResponse, DetectionConfig, PhotonBudget,
};
use sqclock_core::rng::{stream, Purpose};
use sqclock_core::stability::{allan_deviation, allan_deviation_samples, fit_slope, predicted_sigma};
use std::f64::consts::{PI, SQRT_2};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }
}

fn snr_algebra() -> Outcome {
    let mut rng = stream(11, 0, Purpose::Test);
    let mut worst_eq = 0.0f64;
    let mut worst_ratio = 0.0f64;
    for _ in 0..100 {
        let budget = PhotonBudget {
            alpha: rng.gen_range(0.1..10.0),
            t_meas: rng.gen_range(1e-3..10.0),
            beta: rng.gen_range(0.1..10.0),
            a_amp: rng.gen_range(1.0..1e4),
            bandwidth: rng.gen_range(1e-2..1e3),
        };
        let delta = rng.gen_range(1e-3..1.0);
        let resp = AtomicResponse::symmetric(delta);
        let mut cfg = DetectionConfig {
            eta_s: rng.gen_range(0.1..1.0),
            eta_0: rng.gen_range(0.1..1.0),
            p_lo: rng.gen_range(0.1..10.0),
            p_x: rng.gen_range(0.1..10.0),
            phi_minus: rng.gen_range(0.0..PI),
            omega_0: rng.gen_range(0.0..5.0),
            xi: 0.0,
            f_width: rng.gen_range(0.1..5.0),
            c_scale: rng.gen_range(1e-8..1e-6),
            coupling: Default::default(),
            shape: Default::default(),
            projection: Default::default(),
        };
        let flux = rng.gen_range(1e3..1e6);
        let coherent = snr_coherent(&budget, &resp).map_err(|e| e.to_string())?;
        let squeezed = snr_squeezed(&budget, &resp, &cfg, flux).map_err(|e| e.to_string())?;
        worst_eq = worst_eq.max(rel(squeezed, coherent));

        // |ξS| < 0.95, sign set by the spectrum.
        let s = squeezing_spectrum(&cfg, flux).map_err(|e| e.to_string())?;
        cfg.xi = rng.gen_range(0.0..0.95) / s.abs().max(1e-300);
        noise_denominator(&cfg, flux).map_err(|e| e.to_string())?;
        let xi_s = cfg.xi * squeezing_spectrum(&cfg, flux).map_err(|e| e.to_string())?;
        let squeezed = snr_squeezed(&budget, &resp, &cfg, flux).map_err(|e| e.to_string())?;
        worst_ratio = worst_ratio.max(rel(squeezed / coherent, 1.0 / (1.0 + xi_s)));
        let direct = snr_squeezed_from(
            sqclock_core::detection::photon_number(&budget).map_err(|e| e.to_string())?,
            delta,
            xi_s,
        )
        .map_err(|e| e.to_string())?;
        worst_ratio = worst_ratio.max(rel(direct / coherent, 1.0 / (1.0 + xi_s)));
    }
    ensure!(worst_eq <= 1e-12, "xi=0 mismatch {worst_eq:e}");
    ensure!(worst_ratio <= 1e-12, "ratio mismatch {worst_ratio:e}");
    Ok(format!("max rel err: equality {worst_eq:.1e}, ratio {worst_ratio:.1e}"))
}

fn evolve_steps(
    mut s: BlochVector,
    atom: &TwoLevelAtom,
    res: &SqueezedReservoir,
    dt: f64,
    steps: usize,
) -> Result<BlochVector, String> {
    for _ in 0..steps {
        s = evolve_bloch(s, atom, res, 0.0, dt).map_err(|e| e.to_string())?;
    }
    Ok(s)
}

fn quadrature_decay() -> Outcome {
    let gamma = 2.0;
    let vac = quadrature_decay_rates(&SqueezedReservoir::vacuum(), gamma).map_err(|e| e.to_string())?;
    ensure!(
        vac.slow == gamma / 2.0 && vac.fast == gamma / 2.0 && vac.longitudinal == gamma,
        "vacuum rates {vac:?}"
    );

    let mut checked = 0;
    for i in 0..20 {
        let n = 3.0 * i as f64 / 19.0;
        let bound = (n * (n + 1.0)).sqrt();
        for j in 0..20 {
            let m = bound * j as f64 / 19.0;
            let res = SqueezedReservoir::new(n, m, 0.3).map_err(|e| e.to_string())?;
            let r = quadrature_decay_rates(&res, gamma).map_err(|e| e.to_string())?;
            ensure!((r.slow < gamma / 2.0) == (m > n), "ordering at N={n}, M={m}: {r:?}");
            checked += 1;
        }
    }

    // Closed forms over t = 1/γ with the slow axis along u.
    let atom = TwoLevelAtom { gamma, detuning: 0.0 };
    let mut worst = 0.0f64;
    for (n, frac) in [(0.0, 0.0), (0.5, 0.5), (1.0, 1.0), (2.0, 0.8)] {
        let m = frac * f64::sqrt(n * (n + 1.0));
        let res = SqueezedReservoir::new(n, m, 0.0).map_err(|e| e.to_string())?;
        let r = quadrature_decay_rates(&res, gamma).map_err(|e| e.to_string())?;
        let dt = 0.01 / r.longitudinal.max(r.fast);
        let steps = (1.0 / (gamma * dt)).ceil() as usize;
        let t = dt * steps as f64;
        let u = evolve_steps(BlochVector { u: 1.0, v: 0.0, w: 0.0 }, &atom, &res, dt, steps)?;
        let v = evolve_steps(BlochVector { u: 0.0, v: 1.0, w: 0.0 }, &atom, &res, dt, steps)?;
        let w = evolve_steps(BlochVector { u: 0.0, v: 0.0, w: 1.0 }, &atom, &res, dt, steps)?;
        let wss = res.steady_state_inversion();
        worst = worst
            .max(rel(u.u, (-r.slow * t).exp()))
            .max(rel(v.v, (-r.fast * t).exp()))
            .max(rel(w.w, wss + (1.0 - wss) * (-r.longitudinal * t).exp()));
    }
    ensure!(worst < 1e-5, "integrator rel err {worst:e}");
    Ok(format!("{checked} grid points, integrator max rel err {worst:.1e}"))
}

fn ramsey_fringe() -> Outcome {
    let geom = RamseyGeometry::fountain(PI / 2.0, 0.5);
    let atom = TwoLevelAtom { gamma: 1.0, detuning: 0.0 };
    let res = SqueezedReservoir::vacuum();
    let t = geom.free_time;
    let p = |d: f64| ramsey_probability(&geom, &atom, d, &res).map_err(|e| e.to_string());
    let p0 = p(0.0)?;
    let p_pi = p(PI / t)?;
    let p_half = p(PI / (2.0 * t))?;
    ensure!((p0 - 1.0).abs() <= 1e-9, "p(0) = {p0}");
    ensure!(p_pi.abs() <= 1e-9, "p(pi/T) = {p_pi}");
    ensure!((p_half - 0.5).abs() <= 1e-9, "p(pi/2T) = {p_half}");
    let span = 4.0 * PI / t;
    let mut worst = 0.0f64;
    for i in 0..1001 {
        let d = -span + 2.0 * span * i as f64 / 1000.0;
        worst = worst.max((p(d)? - p(-d)?).abs());
    }
    ensure!(worst <= 1e-9, "asymmetry {worst:e}");
    Ok(format!("p(0)={p0:.12}, p(pi/T)={p_pi:.1e}, asymmetry {worst:.1e}"))
}

fn projection_sampling() -> Outcome {
    let (p, n, draws) = (0.5, 1_000_000u64, 10_000);
    let base = n as f64 * p * (1.0 - p);
    let xi_s = -0.75f64;
    let mut passes = [0usize; 2];
    for seed in 0..20u64 {
        for (k, (sampler, scale)) in
            [(CountSampler::Binomial, 1.0), (CountSampler::Gaussian, (1.0 + xi_s).sqrt())].into_iter().enumerate()
        {
            let mut rng = stream(seed, k as u64, Purpose::Test);
            let xs: Vec<f64> = (0..draws)
                .map(|_| sample_detected_atoms(p, n, sampler, scale, &mut rng))
                .collect::<Result<_, _>>()
                .map_err(|e| e.to_string())?;
            let mean = xs.iter().sum::<f64>() / draws as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
            let target = base * scale * scale;
            if rel(var, target) <= 0.03 {
                passes[k] += 1;
            }
        }
    }
    ensure!(passes[0] >= 19 && passes[1] >= 19, "seeds within 3%: coherent {}, squeezed {}", passes[0], passes[1]);
    Ok(format!("seeds within 3%: coherent {}/20, squeezed {}/20", passes[0], passes[1]))
}

fn closed_loop_stability() -> Outcome {
    let cfg = reference_fountain();
    let record = run_clock(&cfg, 100_000).map_err(|e| e.to_string())?;
    let tau0 = record.tau0;
    let taus: Vec<f64> = [1.0, 4.0, 16.0, 64.0].iter().map(|m| m * tau0).collect();
    let curve = allan_deviation(&record, &taus);
    ensure!(curve.len() == 4, "omitted taus {:?}", curve.omitted);
    let fit = fit_slope(&curve, (taus[0], taus[3])).map_err(|e| e.to_string())?;
    let snr = cfg.projection_snr().map_err(|e| e.to_string())?;
    let ratios: Vec<f64> = curve
        .taus
        .iter()
        .zip(&curve.sigmas)
        .map(|(&t, &s)| predicted_sigma(&cfg.line, snr, t).map(|p| s / p))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let spread = ratios.iter().map(|r| rel(*r, mean)).fold(0.0, f64::max);
    ensure!((-0.55..=-0.45).contains(&fit.exponent), "slope {:.4}", fit.exponent);
    ensure!(spread <= 0.2, "ratio spread {spread:.3} (ratios {ratios:?})");
    Ok(format!(
        "slope {:.4}, sigma_sim/predicted = {mean:.4} (max dev {:.1}%)",
        fit.exponent,
        spread * 100.0
    ))
}

fn squeezing_benefit() -> Outcome {
    let cfg = reference_fountain();
    let cmp = run_comparison(&cfg, 100_000).map_err(|e| e.to_string())?;
    let tau0 = cmp.coherent.tau0;
    let coh = allan_deviation(&cmp.coherent, &[tau0]).sigma_at(tau0).ok_or("no coherent point")?;
    let sq = allan_deviation(&cmp.squeezed, &[tau0]).sigma_at(tau0).ok_or("no squeezed point")?;
    let ratio = sq / coh;
    ensure!((ratio - 0.5).abs() <= 0.05, "ratio {ratio:.4}");
    Ok(format!("sigma_sq/sigma_coh at tau0 = {ratio:.4}"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run_binary(args: &[&str], config: &Path, out: &Path) -> Result<(), String> {
    let res = Command::new(env!("CARGO_BIN_EXE_sqclock"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(res.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&res.stderr));
    Ok(())
}

fn data_files(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|name| name != "manifest.json")
        .map(|name| {
            let bytes = std::fs::read(dir.join(&name)).unwrap_or_default();
            (name, bytes)
        })
        .collect();
    files.sort();
    Ok(files)
}

fn determinism() -> Outcome {
    let root = std::env::temp_dir().join(format!("sqclock-acceptance-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&root);
    std::fs::create_dir_all(&root).map_err(|e| e.to_string())?;
    let text = std::fs::read_to_string(configs().join("fountain.toml"))
        .map_err(|e| e.to_string())?
        .replace("n_cycles = 20000", "n_cycles = 4000");
    let config = root.join("fountain.toml");
    std::fs::write(&config, text).map_err(|e| e.to_string())?;

    let mut compared = 0;
    for cmd in ["fringe", "spectrum", "snr", "clock", "allan"] {
        let a = root.join(format!("{cmd}-a"));
        let b = root.join(format!("{cmd}-b"));
        run_binary(&[cmd, "--plot"], &config, &a)?;
        run_binary(&[cmd, "--plot"], &config, &b)?;
        let fa = data_files(&a)?;
        let fb = data_files(&b)?;
        ensure!(!fa.is_empty(), "{cmd} wrote nothing");
        ensure!(
            fa.iter().map(|f| &f.0).eq(fb.iter().map(|f| &f.0)),
            "{cmd}: file sets differ"
        );
        for ((name, x), (_, y)) in fa.iter().zip(&fb) {
            ensure!(x == y, "{cmd}: {name} differs");
            compared += 1;
        }
    }
    let _ = std::fs::remove_dir_all(&root);
    Ok(format!("5 commands, {compared} files byte-identical"))
}

fn allan_golden() -> Outcome {
    let tau0 = 1.0;
    let constant = allan_deviation_samples(&[3.7e-13; 1000], tau0, &[1.0, 2.0, 16.0]);
    ensure!(constant.sigmas.iter().all(|&s| s == 0.0), "constant gives {:?}", constant.sigmas);

    let a = 2.5e-12;
    let alt: Vec<f64> = (0..1000).map(|i| if i % 2 == 0 { a } else { -a }).collect();
    let s = allan_deviation_samples(&alt, tau0, &[1.0]).sigmas[0];
    ensure!(rel(s, a * SQRT_2) <= 1e-12, "alternating gives {s:e}");

    let mut rng = stream(5, 0, Purpose::Test);
    let white: Vec<f64> = (0..100_000).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let ms = [1.0, 2.0, 4.0, 8.0, 16.0];
    let curve = allan_deviation_samples(&white, tau0, &ms);
    let mut worst = 0.0f64;
    for (&m, &sig) in ms.iter().zip(&curve.sigmas) {
        worst = worst.max(rel(sig, m.powf(-0.5)));
    }
    ensure!(worst <= 0.05, "white FM deviation {worst:.3}");
    Ok(format!("alternating err {:.1e}, white FM max dev {:.1}%", rel(s, a * SQRT_2), worst * 100.0))
}

struct Criterion {
    id: u8,
    name: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "S/N algebra", limit: Duration::from_secs(1), run: snr_algebra },
        Criterion { id: 2, name: "quadrature decay", limit: Duration::from_secs(10), run: quadrature_decay },
        Criterion { id: 3, name: "Ramsey fringe", limit: Duration::from_secs(5), run: ramsey_fringe },
        Criterion { id: 4, name: "projection-noise sampling", limit: Duration::from_secs(60), run: projection_sampling },
        Criterion { id: 5, name: "closed-loop stability", limit: Duration::from_secs(600), run: closed_loop_stability },
        Criterion { id: 6, name: "squeezing benefit", limit: Duration::from_secs(600), run: squeezing_benefit },
        Criterion { id: 7, name: "determinism", limit: Duration::from_secs(120), run: determinism },
        Criterion { id: 8, name: "Allan golden cases", limit: Duration::from_secs(30), run: allan_golden },
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for c in &criteria {
        if !filter.is_empty() && !filter.iter().any(|f| c.name.contains(f.as_str()) || c.id.to_string() == *f) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(c.run))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        let elapsed = start.elapsed();
        let result = match result {
            Ok(msg) if elapsed > c.limit => Err(format!("{msg}; too slow ({:.2?} > {:?})", elapsed, c.limit)),
            other => other,
        };
        match result {
            Ok(msg) => println!("PASS  {}. {}: {msg} [{:.2?}]", c.id, c.name, elapsed),
            Err(msg) => {
                failed += 1;
                println!("FAIL  {}. {}: {msg} [{:.2?}]", c.id, c.name, elapsed);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
