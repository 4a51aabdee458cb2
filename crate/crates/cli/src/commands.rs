//! The work behind each subcommand, separated from argument plumbing.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::path::PathBuf;

use anyhow::{bail, Context};
use serde::Serialize;
use serde_json::{json, Value};

use mazer_core::engine::{scattering_steady_state, AUTO_STEP_LIMIT};
use mazer_core::mesa::mesa_resonance_position;
use mazer_core::photon::{
    conventional_emission, conventional_rabi_angle, ensemble_average, field_weights,
    steady_state_adaptive, FieldState, PhotonDistribution, VISIBLE_PEAK,
};
use mazer_core::resonance::{
    find_resonances, predicted_positions, resonance_condition_roots, Observable, ResonanceInfo,
    SearchOptions,
};
use mazer_core::scattering::Quantity;
use mazer_core::semiclassical::resonance_integral;
use mazer_core::{
    evaluate_point, evaluate_points, rabi_wavenumber, Engine, EngineOptions, ModeProfile,
    PointResult,
};

use crate::args::{
    require, EngineArg, GainSource, Globals, ProfileArg, QuantityArg, ResonanceArgs, Scalar,
    ScatterArgs, SteadyArgs, SweepArgs,
};
use crate::output::{engine_runs, fmt_f64, write_dataset, Table};

/// Most exact-engine validation points attached to a semiclassical sweep.
pub const MAX_VALIDATION_POINTS: usize = 10;

/// Resolved global settings.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub out: PathBuf,
    pub engine: Engine,
    pub options: EngineOptions,
    pub globals: Globals,
}

impl RunContext {
    pub fn new(globals: Globals) -> anyhow::Result<Self> {
        let engine = globals.engine.map(|e| e.0).unwrap_or(Engine::Auto);
        let mut options = EngineOptions {
            exact_step_limit: AUTO_STEP_LIMIT,
            ..Default::default()
        };
        if let Some(limit) = globals.exact_step_limit {
            if !(limit > 0.0) {
                bail!("--exact-step-limit must be positive");
            }
            options.exact_step_limit = limit;
        }
        if let Some(b) = globals.barrier {
            options.barrier = b.0;
        }
        if globals.threads == Some(0) {
            bail!("--threads must be at least 1");
        }
        let out = globals.out.clone().unwrap_or_else(|| PathBuf::from("."));
        let mut globals = globals;
        globals.out = Some(out.clone());
        globals.engine = Some(EngineArg(engine));
        Ok(RunContext {
            out,
            engine,
            options,
            globals,
        })
    }

    fn config(&self, command: &str, args: &impl Serialize) -> anyhow::Result<Value> {
        let mut cfg = serde_json::to_value(&self.globals)?;
        cfg[command] = serde_json::to_value(args)?;
        Ok(json!({ "config": drop_unset(cfg) }))
    }
}

/// Removes null entries so the recorded config reads back as a TOML file.
fn drop_unset(v: Value) -> Value {
    match v {
        Value::Object(map) => Value::Object(
            map.into_iter()
                .filter(|(_, v)| !v.is_null())
                .map(|(k, v)| (k, drop_unset(v)))
                .collect(),
        ),
        other => other,
    }
}

fn check_positive(name: &str, x: f64) -> anyhow::Result<f64> {
    if !(x > 0.0 && x.is_finite()) {
        bail!("{name} must be positive and finite, got {x}");
    }
    Ok(x)
}

fn point_label(p: &PointResult) -> String {
    let mut label = p.engine_label();
    if !p.converged() {
        label.push_str(":unconverged");
    }
    label
}

fn is_exact(p: &PointResult) -> bool {
    p.plus.engine.is_exact() && p.minus.engine.is_exact()
}

pub fn scatter(ctx: &RunContext, args: &ScatterArgs) -> anyhow::Result<String> {
    let profile = require(&args.profile, "profile")?.0;
    let k_l = check_positive("kl", require(&args.kl, "kl")?.0)?;
    let c = require(&args.kappa_nl, "kappa-nl")?.0;
    let p = evaluate_point(ctx.engine, profile, k_l, c, &ctx.options)?;
    let o = p.probabilities;
    let mut t = Table::new([
        "profile", "kL", "kappa_nL", "Te", "Tf", "Re", "Rf", "Pem", "T", "engine",
    ]);
    t.push(vec![
        profile.name().to_string(),
        fmt_f64(k_l),
        fmt_f64(c),
        fmt_f64(o.te),
        fmt_f64(o.tf),
        fmt_f64(o.re),
        fmt_f64(o.rf),
        fmt_f64(o.emission()),
        fmt_f64(o.transmission()),
        point_label(&p),
    ]);
    Ok(String::from_utf8(t.to_csv()?)?)
}

/// Grid of `points` values from `from` to `to` inclusive.
pub fn grid(
    from: f64,
    to: f64,
    step: Option<f64>,
    points: Option<usize>,
) -> anyhow::Result<Vec<f64>> {
    if !(from.is_finite() && to.is_finite() && to >= from) {
        bail!("window must satisfy from <= to, got ({from}, {to})");
    }
    let (n, h) = match (step, points) {
        (Some(h), _) => {
            check_positive("step", h)?;
            ((((to - from) / h) * (1.0 + 1e-12)).floor() as usize + 1, h)
        }
        (None, Some(n)) if n >= 2 => (n, (to - from) / (n - 1) as f64),
        (None, Some(1)) => (1, 0.0),
        _ => bail!("give --step or --points (at least 1)"),
    };
    Ok((0..n).map(|i| from + i as f64 * h).collect())
}

#[derive(Debug, Clone, Copy)]
enum Incident {
    Ratio(f64),
    Fixed(f64),
}

impl Incident {
    fn k_l(self, kappa0_l: f64) -> f64 {
        match self {
            Incident::Ratio(r) => r * kappa0_l,
            Incident::Fixed(k) => k,
        }
    }
}

pub fn sweep(ctx: &RunContext, args: &SweepArgs) -> anyhow::Result<PathBuf> {
    let profiles = require(&args.profile, "profile")?.0;
    let incident = match (args.k_over_kappa, args.kl) {
        (Some(r), None) => Incident::Ratio(check_positive("k-over-kappa", r)?),
        (None, Some(k)) => Incident::Fixed(check_positive("kl", k.0)?),
        _ => bail!("give exactly one of --k-over-kappa and --kl"),
    };
    let from = check_positive("from", require(&args.from, "from")?.0)?;
    let to = require(&args.to, "to")?.0;
    let xs = grid(from, to, args.step.map(|s| s.0), args.points)?;
    let fields: Vec<FieldState> = args
        .field
        .clone()
        .unwrap_or_default()
        .into_iter()
        .map(|f| f.0)
        .collect();
    let photons = args.photons.clone().unwrap_or_else(|| {
        if fields.is_empty() {
            vec![0]
        } else {
            Vec::new()
        }
    });
    let quantities: Vec<Quantity> = args
        .quantities
        .clone()
        .unwrap_or_else(|| vec![QuantityArg(Quantity::Pem)])
        .into_iter()
        .map(|q| q.0)
        .collect();
    if quantities.is_empty() || (photons.is_empty() && fields.is_empty()) {
        bail!("nothing to tabulate: give --quantities and --photons or --field");
    }
    let weights = fields
        .iter()
        .map(field_weights)
        .collect::<Result<Vec<_>, _>>()?;
    let mut needed: BTreeSet<u32> = photons.iter().copied().collect();
    for w in &weights {
        needed.extend(0..w.len() as u32);
    }
    let needed: Vec<u32> = needed.into_iter().collect();
    let slot = |n: u32| {
        needed
            .binary_search(&n)
            .expect("photon number was collected")
    };

    let mut header = vec!["kappa0L".to_string()];
    for &profile in &profiles {
        let suffix = if profiles.len() > 1 {
            format!("_{}", profile.name())
        } else {
            String::new()
        };
        for q in &quantities {
            for n in &photons {
                header.push(format!("{}_n{n}{suffix}", q.label()));
            }
            for f in args.field.iter().flatten() {
                header.push(format!("{}_{}{suffix}", q.label(), f.label()));
            }
        }
    }

    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut engines = serde_json::Map::new();
    let mut validation = Vec::new();
    for &profile in &profiles {
        let jobs: Vec<(f64, f64)> = xs
            .iter()
            .flat_map(|&x| {
                needed
                    .iter()
                    .map(move |&n| (incident.k_l(x), rabi_wavenumber(x, n)))
            })
            .collect();
        let results = evaluate_points(ctx.engine, profile, &jobs, &ctx.options)
            .with_context(|| format!("sweeping the {profile} mode"))?;
        let at = |row: usize, n: u32| &results[row * needed.len() + slot(n)];
        for q in &quantities {
            for &n in &photons {
                columns.push(
                    (0..xs.len())
                        .map(|row| at(row, n).probabilities.quantity(*q))
                        .collect(),
                );
            }
            for w in &weights {
                let col = (0..xs.len())
                    .map(|row| {
                        let per_n: Vec<f64> = (0..w.len())
                            .map(|n| at(row, n as u32).probabilities.quantity(*q))
                            .collect();
                        ensemble_average(w, &per_n)
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                columns.push(col);
            }
        }
        let mut per_photon = serde_json::Map::new();
        for &n in &needed {
            let labels: Vec<String> = (0..xs.len()).map(|row| point_label(at(row, n))).collect();
            per_photon.insert(
                format!("n{n}"),
                serde_json::to_value(engine_runs(labels.iter().map(|s| s.as_str())))?,
            );
        }
        engines.insert(profile.name().to_string(), Value::Object(per_photon));
        if ctx.engine == Engine::Auto {
            validation.extend(validate(ctx, profile, &xs, &needed, &jobs, &results)?);
        }
    }

    let mut table = Table::new(header);
    for (row, x) in xs.iter().enumerate() {
        let mut cells = vec![fmt_f64(*x)];
        cells.extend(columns.iter().map(|c| fmt_f64(c[row])));
        table.push(cells);
    }
    let mut resolved = args.clone();
    resolved.step = Some(Scalar(if xs.len() > 1 { xs[1] - xs[0] } else { 0.0 }));
    resolved.points = Some(xs.len());
    resolved.photons = Some(photons);
    resolved.quantities = Some(quantities.into_iter().map(QuantityArg).collect());
    let name = args.name.clone().unwrap_or_else(|| "sweep".into());
    resolved.name = Some(name.clone());
    let mut meta = ctx.config("sweep", &resolved)?;
    meta["engines"] = Value::Object(engines);
    meta["validation"] = Value::Array(validation);
    write_dataset(&ctx.out, &name, &table, meta)
}

/// Exact-engine checks at up to [`MAX_VALIDATION_POINTS`] evenly spaced semiclassical points.
fn validate(
    ctx: &RunContext,
    profile: ModeProfile,
    xs: &[f64],
    needed: &[u32],
    jobs: &[(f64, f64)],
    results: &[PointResult],
) -> anyhow::Result<Vec<Value>> {
    let approx: Vec<usize> = (0..results.len())
        .filter(|&i| !is_exact(&results[i]))
        .collect();
    if approx.is_empty() {
        return Ok(Vec::new());
    }
    let m = approx.len().min(MAX_VALIDATION_POINTS);
    let picks: Vec<usize> = if m == 1 {
        vec![approx[approx.len() / 2]]
    } else {
        (0..m)
            .map(|j| approx[j * (approx.len() - 1) / (m - 1)])
            .collect()
    };
    let exact_options = EngineOptions {
        exact_step_limit: f64::INFINITY,
        ..ctx.options
    };
    let checked = evaluate_points(
        Engine::ExactNumeric,
        profile,
        &picks.iter().map(|&i| jobs[i]).collect::<Vec<_>>(),
        &exact_options,
    )?;
    Ok(picks
        .iter()
        .zip(&checked)
        .map(|(&i, exact)| {
            let approx = &results[i];
            let (a, e) = (approx.probabilities, exact.probabilities);
            json!({
                "profile": profile.name(),
                "kappa0L": xs[i / needed.len()],
                "photons": needed[i % needed.len()],
                "kL": jobs[i].0,
                "kappa_nL": jobs[i].1,
                "engine": approx.engine_label(),
                "Pem": a.emission(),
                "Pem_exact": e.emission(),
                "T": a.transmission(),
                "T_exact": e.transmission(),
                "abs_diff_Pem": (a.emission() - e.emission()).abs(),
                "abs_diff_T": (a.transmission() - e.transmission()).abs(),
                "exact_converged": exact.converged(),
            })
        })
        .collect())
}

/// Coupling `kappa_n L` of the requested well-transmission resonance.
fn locate_resonance(
    ctx: &RunContext,
    profile: ModeProfile,
    ratio_n: f64,
    index: u32,
) -> anyhow::Result<(f64, ResonanceInfo)> {
    let (guess, spacing) = match profile {
        ModeProfile::Mesa => {
            if index == 0 {
                bail!("mesa resonances are counted from 1");
            }
            (mesa_resonance_position(ratio_n, index), PI)
        }
        ModeProfile::Sinusoidal => {
            let spacing = PI * PI / (2.0 * resonance_integral(ratio_n)?);
            (
                resonance_condition_roots(ratio_n, index..=index)?[0],
                spacing,
            )
        }
    };
    let window = ((guess - 0.45 * spacing).max(1e-3), guess + 0.45 * spacing);
    let opts = SearchOptions {
        engine: ctx.options,
        ..Default::default()
    };
    let found = find_resonances(profile, ratio_n, window, ctx.engine, &opts)?;
    let best = found
        .iter()
        .min_by(|a, b| {
            (a.position - guess)
                .abs()
                .total_cmp(&(b.position - guess).abs())
        })
        .with_context(|| format!("no resonance found near kappa_n L = {guess}"))?;
    Ok((best.position, *best))
}

pub fn steady_state(ctx: &RunContext, args: &SteadyArgs) -> anyhow::Result<PathBuf> {
    let profile = require(&args.profile, "profile")?.0;
    let ratio = check_positive("k-over-kappa", require(&args.k_over_kappa, "k-over-kappa")?)?;
    let n_ex = require(&args.n_ex, "n-ex")?;
    let n_b = require(&args.n_b, "n-b")?;
    let gain_source = args.gain.unwrap_or(GainSource::Scattering);
    let at = args.at_photons.unwrap_or(0);
    let scale = ((at + 1) as f64).powf(0.25);
    let mut located = None;
    let kappa0_l = match (args.kappa_l, args.kappa_nl, args.resonance) {
        (Some(c), None, None) => c.0,
        (None, Some(c), None) => c.0 / scale,
        (None, None, Some(m)) => {
            let (c, info) = locate_resonance(ctx, profile, ratio / scale, m)?;
            located = Some(info);
            c / scale
        }
        _ => bail!("give exactly one of --kappa-l, --kappa-nl and --resonance"),
    };
    check_positive("kappa_0 L", kappa0_l)?;
    let k_l = ratio * kappa0_l;

    let (dist, gain, labels): (PhotonDistribution, Vec<f64>, Vec<String>) = match gain_source {
        GainSource::Scattering => {
            let (dist, mut points) = scattering_steady_state(
                ctx.engine,
                profile,
                k_l,
                kappa0_l,
                n_ex,
                n_b,
                &ctx.options,
            )?;
            let top = rabi_wavenumber(kappa0_l, points.len() as u32);
            points.push(evaluate_point(ctx.engine, profile, k_l, top, &ctx.options)?);
            let gain = points.iter().map(|p| p.probabilities.emission()).collect();
            (dist, gain, points.iter().map(point_label).collect())
        }
        GainSource::Conventional | GainSource::Zero => {
            let g = move |n: usize| match gain_source {
                GainSource::Zero => 0.0,
                _ => conventional_emission(conventional_rabi_angle(
                    k_l,
                    rabi_wavenumber(kappa0_l, n as u32),
                )),
            };
            let (dist, mut gain) = steady_state_adaptive(n_ex, n_b, |r| Ok(r.map(g).collect()))?;
            gain.push(g(gain.len()));
            let label = match gain_source {
                GainSource::Zero => "zero",
                _ => "conventional",
            };
            let labels = vec![label.to_string(); gain.len()];
            (dist, gain, labels)
        }
    };

    let mut table = Table::new(["n", "p_n", "Pem_n"]);
    for (n, p) in dist.p.iter().enumerate() {
        table.push(vec![n.to_string(), fmt_f64(*p), fmt_f64(gain[n])]);
    }
    let name = args.name.clone().unwrap_or_else(|| "steady_state".into());
    let mut resolved = args.clone();
    resolved.name = Some(name.clone());
    resolved.gain = Some(gain_source);
    resolved.at_photons = Some(at);
    let mut meta = ctx.config("steady-state", &resolved)?;
    meta["kappa0L"] = json!(kappa0_l);
    meta["kL"] = json!(k_l);
    meta["kappa_nL_at_reference"] = json!(kappa0_l * scale);
    meta["n_max"] = json!(dist.len() - 1);
    meta["mean_photons"] = json!(dist.mean());
    meta["peaks"] = json!(dist.peaks(VISIBLE_PEAK));
    meta["peak_floor"] = json!(VISIBLE_PEAK);
    meta["engines"] = serde_json::to_value(engine_runs(labels.iter().map(|s| s.as_str())))?;
    if let Some(info) = located {
        meta["resonance"] = serde_json::to_value(info)?;
    }
    write_dataset(&ctx.out, &name, &table, meta)
}

pub fn resonances(ctx: &RunContext, args: &ResonanceArgs) -> anyhow::Result<PathBuf> {
    let profile = require(&args.profile, "profile")?.0;
    let ratio = check_positive("k-over-kappa", require(&args.k_over_kappa, "k-over-kappa")?)?;
    let from = check_positive("from", require(&args.from, "from")?.0)?;
    let to = require(&args.to, "to")?.0;
    let observable = args
        .observable
        .map(|o| o.0)
        .unwrap_or(Observable::WellTransmission);
    let opts = SearchOptions {
        observable,
        engine: ctx.options,
        ..Default::default()
    };
    let found = find_resonances(profile, ratio, (from, to), ctx.engine, &opts)?;
    let predicted = predicted_positions(profile, ratio, (from, to))?;
    let prediction = |index: i64| -> anyhow::Result<f64> {
        Ok(match profile {
            ModeProfile::Mesa => mesa_resonance_position(ratio, index.max(0) as u32),
            ModeProfile::Sinusoidal => {
                resonance_condition_roots(ratio, index.max(0) as u32..=index.max(0) as u32)?[0]
            }
        })
    };
    let mut table = Table::new([
        "index",
        "position",
        "position_over_pi",
        "fwhm",
        "parity",
        "peak",
        "shallow",
        "overlapping",
        "predicted",
    ]);
    for r in &found {
        table.push(vec![
            r.index.to_string(),
            fmt_f64(r.position),
            fmt_f64(r.position / PI),
            fmt_f64(r.fwhm),
            r.parity.name().to_string(),
            fmt_f64(r.peak),
            r.shallow.to_string(),
            r.overlapping.to_string(),
            fmt_f64(prediction(r.index)?),
        ]);
    }
    let name = args.name.clone().unwrap_or_else(|| "resonances".into());
    let mut resolved = args.clone();
    resolved.name = Some(name.clone());
    resolved.observable = Some(crate::args::ObservableArg(observable));
    let mut meta = ctx.config("resonances", &resolved)?;
    meta["predicted"] = json!(predicted
        .iter()
        .map(|(i, x)| json!({"index": i, "position": x}))
        .collect::<Vec<_>>());
    write_dataset(&ctx.out, &name, &table, meta)
}

/// Arguments behind each preset.
pub mod presets {
    use super::*;
    use crate::args::{FieldSpec, ProfileSet};

    fn pi(x: f64) -> Option<Scalar> {
        Some(Scalar(x * PI))
    }

    pub fn fig1() -> SweepArgs {
        SweepArgs {
            profile: Some(ProfileSet(ModeProfile::ALL.to_vec())),
            k_over_kappa: Some(0.01),
            from: pi(100.0),
            to: pi(104.0),
            step: Some(Scalar(0.002)),
            photons: Some(vec![0]),
            quantities: Some(vec![QuantityArg(Quantity::Pem)]),
            name: Some("fig1".into()),
            ..Default::default()
        }
    }

    fn fig2(profile: ModeProfile, name: &str) -> SteadyArgs {
        SteadyArgs {
            profile: Some(ProfileArg(profile)),
            k_over_kappa: Some(0.01),
            at_photons: Some(2),
            n_ex: Some(1000.0),
            n_b: Some(1.0),
            gain: Some(GainSource::Scattering),
            name: Some(name.into()),
            ..Default::default()
        }
    }

    pub fn fig2a() -> SteadyArgs {
        SteadyArgs {
            kappa_nl: pi(99.0),
            ..fig2(ModeProfile::Mesa, "fig2a")
        }
    }

    /// The 100th sinusoidal resonance, counted from `m = 0`.
    pub fn fig2b() -> SteadyArgs {
        SteadyArgs {
            resonance: Some(99),
            ..fig2(ModeProfile::Sinusoidal, "fig2b")
        }
    }

    pub fn fig3() -> SweepArgs {
        SweepArgs {
            profile: Some(ProfileSet(vec![ModeProfile::Sinusoidal])),
            k_over_kappa: Some(0.01),
            from: pi(30000.0),
            to: pi(30005.0),
            step: Some(Scalar(PI / 400.0)),
            photons: Some(vec![0, 1, 2, 3]),
            quantities: Some(vec![QuantityArg(Quantity::T), QuantityArg(Quantity::Pem)]),
            name: Some("fig3".into()),
            ..Default::default()
        }
    }

    /// Coherent-state transmission; the mesa grid is finer because its peaks are about ten times narrower.
    pub fn fig4(profile: ModeProfile) -> SweepArgs {
        let step = match profile {
            ModeProfile::Mesa => 0.002,
            ModeProfile::Sinusoidal => 0.02,
        };
        SweepArgs {
            profile: Some(ProfileSet(vec![profile])),
            k_over_kappa: Some(0.01),
            from: pi(100.0),
            to: pi(110.0),
            step: Some(Scalar(step)),
            photons: Some(Vec::new()),
            field: Some(vec![
                FieldSpec(FieldState::Coherent { mean: 0.25 }),
                FieldSpec(FieldState::Coherent { mean: 2.0 }),
            ]),
            quantities: Some(vec![QuantityArg(Quantity::T)]),
            name: Some(format!("fig4_{}", profile.name())),
            ..Default::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(
            grid(1.0, 2.0, Some(0.25), None).unwrap(),
            vec![1.0, 1.25, 1.5, 1.75, 2.0]
        );
        assert_eq!(grid(1.0, 2.0, None, Some(3)).unwrap(), vec![1.0, 1.5, 2.0]);
        assert_eq!(grid(1.0, 1.0, Some(0.1), None).unwrap(), vec![1.0]);
        assert_eq!(grid(0.0, 0.3, Some(0.1), None).unwrap().len(), 4);
        assert!(grid(2.0, 1.0, Some(0.1), None).is_err());
        assert!(grid(1.0, 2.0, Some(0.0), None).is_err());
        assert!(grid(1.0, 2.0, None, None).is_err());
    }
}
