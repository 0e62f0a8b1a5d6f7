use irrlab::dimension::{
    box_dimension, horseshoe_dimension, ifs_attractor, moran_dimension, product_points,
    shift_metric_dimension, HorseshoeSpec, MoranSystem,
};
use irrlab::interval::{
    birkhoff_series, bowen_entropy_estimate, find_strict_horseshoe, model_catalog, seeded_start,
    verify_certificate,
};
use irrlab::irregular::{
    build_psi, build_schedule, construct_irregular_point, suspension_entropy,
    weighted_ratio_at_checkpoints, IrregularPointProgram, OscillationReport, RoofFunction,
};
use irrlab::lorenz::{lorenz_irregular_demo, poincare_map, roof, PoincareState};
use irrlab::skewprod::{
    invariant_graph, lift_irregular_check, sample_admissible_past, sample_past, spine,
    trivial_fraction, SpineApprox,
};
use irrlab::symbolic::{mixing_time, power_spec, sft_entropy, PeriodicPoint, SubshiftSpec};
use serde_json::{json, Value};

use crate::input::{self, *};
use crate::output::{Output, Plot, Table};
use crate::CliError;

type Summary = Result<Value, CliError>;

fn f(x: f64) -> Value {
    json!(x)
}

fn build_point(cfg: &IrregularInput) -> Result<(IrregularPointProgram, RoofFunction), CliError> {
    let spec = &cfg.spec;
    let p0 = PeriodicPoint::new(spec, cfg.p0.clone())?;
    let p1 = PeriodicPoint::new(spec, cfg.p1.clone())?;
    let gap = match cfg.gap {
        Some(g) => g,
        None => mixing_time(spec)?,
    };
    let rho = cfg.roof.build(spec)?;
    if !rho.within(cfg.c) {
        return Err(CliError::Input(format!(
            "roof leaves [1/C, C] for C = {}",
            cfg.c
        )));
    }
    let schedule = build_schedule(
        gap as u64,
        p0.period() as u64,
        p1.period() as u64,
        cfg.c,
        cfg.m_count,
        cfg.delta,
    )?;
    Ok((construct_irregular_point(spec, &p0, &p1, &schedule)?, rho))
}

fn report_table(report: &OscillationReport) -> Table {
    let mut t = Table::new(&["j", "N_j", "parity", "ratio"]);
    for cp in &report.checkpoints {
        t.push(vec![
            json!(cp.j),
            json!(cp.n),
            json!(cp.parity.as_str()),
            f(cp.ratio),
        ]);
    }
    t
}

fn oscillation(report: &OscillationReport) -> Value {
    serde_json::to_value(report.summary()).unwrap_or(Value::Null)
}

pub fn irregular_construct(raw: &Value, out: &Output) -> Summary {
    let cfg: IrregularInput = input::parse(raw)?;
    let (point, _) = build_point(&cfg)?;
    out.json("program", &point)?;
    let blocks = point.blocks();
    out.finish(
        "irregular construct",
        json!({
            "blocks": blocks.len(),
            "length": blocks.last().map_or(0, |b| b.end()),
            "checkpoints": point.schedule().checkpoints,
        }),
    )
}

pub fn irregular_trace(raw: &Value, out: &Output) -> Summary {
    let cfg: IrregularInput = input::parse(raw)?;
    let (point, rho) = build_point(&cfg)?;
    let p0 = PeriodicPoint::new(&cfg.spec, cfg.p0.clone())?;
    let p1 = PeriodicPoint::new(&cfg.spec, cfg.p1.clone())?;
    let psi = build_psi(&cfg.spec, &p0, &p1, cfg.m0)?;
    let report = weighted_ratio_at_checkpoints(&point, &psi, &rho)?;
    out.table(
        "checkpoints",
        &report_table(&report),
        Some(Plot {
            x: "j",
            y: "ratio",
            log_log: false,
        }),
    )?;
    out.json(
        "report",
        &json!({ "summary": report.summary(), "report": report }),
    )?;
    let mut summary = oscillation(&report);
    summary["bound"] = f(report.bound());
    out.finish("irregular trace", summary)
}

pub fn entropy_sft(raw: &Value, out: &Output) -> Summary {
    let spec = if raw.as_object().is_some_and(|m| m.is_empty()) {
        SubshiftSpec::full_shift(2)
    } else {
        input::parse::<SubshiftSpec>(raw)?
    };
    let mixing = mixing_time(&spec).ok();
    out.finish(
        "entropy sft",
        json!({ "entropy_nats": sft_entropy(&spec), "mixing_time": mixing }),
    )
}

pub fn entropy_interval(raw: &Value, out: &Output, seed: u64) -> Summary {
    let cfg: IntervalInput = input::parse(raw)?;
    let base = model_catalog(&cfg.model, &cfg.params)?;
    let map = match cfg.exclude {
        Some((lo, hi)) => base.with_excluded(lo, hi)?,
        None => base.clone(),
    };
    let cert = find_strict_horseshoe(&map, cfg.k_max, 2)?;
    let mut summary = json!({
        "model": cfg.model,
        "bound_nats": cert.as_ref().map_or(0.0, |c| c.bound_nats),
        "k": cert.as_ref().map(|c| c.k),
        "p": cert.as_ref().map(|c| c.p),
    });
    if let Some(c) = &cert {
        summary["verified"] = json!(verify_certificate(&map, c));
        out.json("certificate", c)?;
    }
    if let Some(b) = &cfg.bowen {
        summary["bowen_estimate"] = f(bowen_entropy_estimate(&base, b.n, b.eps, b.grid)?);
    }
    if let Some(b) = &cfg.birkhoff {
        let x0 = b.x0.unwrap_or_else(|| seeded_start(&base, seed));
        let obs = b.observable;
        let series = birkhoff_series(&base, x0, |x| obs.eval(x), b.n)?;
        let mut t = Table::new(&["m", "average"]);
        let stride = b.stride.max(1);
        for (i, a) in series.iter().enumerate() {
            let m = i + 1;
            if m % stride == 0 || m == series.len() {
                t.push(vec![json!(m), f(*a)]);
            }
        }
        out.table(
            "birkhoff",
            &t,
            Some(Plot {
                x: "m",
                y: "average",
                log_log: false,
            }),
        )?;
        summary["x0"] = f(x0);
        summary["final_average"] = json!(series.last());
    }
    out.finish("entropy interval", summary)
}

pub fn entropy_suspension(raw: &Value, out: &Output) -> Summary {
    let cfg: SuspensionInput = input::parse(raw)?;
    let h = suspension_entropy(&cfg.spec, &cfg.roof)?;
    out.finish(
        "entropy suspension",
        json!({ "entropy_nats": h, "base_entropy_nats": sft_entropy(&cfg.spec) }),
    )
}

pub fn entropy_scaling(raw: &Value, out: &Output) -> Summary {
    let cfg: ScalingInput = input::parse(raw)?;
    let h = sft_entropy(&cfg.spec);
    let hk = sft_entropy(&power_spec(&cfg.spec, cfg.k)?);
    out.finish(
        "entropy scaling",
        json!({ "k": cfg.k, "entropy_nats": h, "power_entropy_nats": hk, "defect": (hk - cfg.k as f64 * h).abs() }),
    )
}

pub fn dim_moran(raw: &Value, out: &Output) -> Summary {
    let cfg: MoranInput = input::parse(raw)?;
    out.finish(
        "dim moran",
        json!({ "dimension": moran_dimension(&cfg.ratios)? }),
    )
}

pub fn dim_box(raw: &Value, out: &Output) -> Summary {
    let cfg: BoxInput = input::parse(raw)?;
    if cfg.depth < 5 {
        return Err(CliError::Input("depth must be at least 5".into()));
    }
    let system = MoranSystem::new(cfg.ratios.clone(), cfg.translations.clone(), false)?;
    let line = ifs_attractor(&system, cfg.depth)?;
    let points: Vec<Vec<f64>> = if cfg.product {
        product_points(&line, &line)
    } else {
        line.iter().map(|&x| vec![x]).collect()
    };
    let r = cfg.ratios.iter().copied().fold(0.0, f64::max);
    let eps_max = cfg.eps_max.unwrap_or(r);
    let eps_min = cfg.eps_min.unwrap_or_else(|| r.powi(cfg.depth as i32 - 1));
    let levels = cfg.levels.unwrap_or(cfg.depth - 1);
    let report = box_dimension(&points, (eps_min, eps_max), levels)?;
    let mut t = Table::new(&["epsilon", "count"]);
    for (e, c) in report.scales.iter().zip(&report.counts) {
        t.push(vec![f(*e), json!(c)]);
    }
    out.table(
        "box",
        &t,
        Some(Plot {
            x: "epsilon",
            y: "count",
            log_log: true,
        }),
    )?;
    let similarity = moran_dimension(&cfg.ratios)?;
    let reference = if cfg.product {
        2.0 * similarity
    } else {
        similarity
    };
    out.finish(
        "dim box",
        json!({ "slope": report.slope, "stderr": report.stderr, "moran": reference }),
    )
}

pub fn dim_shift_metric(raw: &Value, out: &Output) -> Summary {
    let cfg: ShiftMetricInput = input::parse(raw)?;
    let d = shift_metric_dimension(&cfg.spec, cfg.depths)?;
    let predicted = 2.0 * sft_entropy(&cfg.spec) / std::f64::consts::LN_2;
    out.finish(
        "dim shift-metric",
        json!({ "dimension": d, "entropy_prediction": predicted }),
    )
}

pub fn dim_horseshoe(raw: &Value, out: &Output) -> Summary {
    let cfg: HorseshoeInput = input::parse(raw)?;
    let dims = horseshoe_dimension(&HorseshoeSpec::new(cfg.lambda_u, cfg.mu_s, cfg.branches)?)?;
    out.finish(
        "dim horseshoe",
        serde_json::to_value(dims).unwrap_or(Value::Null),
    )
}

pub fn lorenz_map(raw: &Value, out: &Output) -> Summary {
    let cfg: LorenzMapInput = input::parse(raw)?;
    let flags = cfg.model.validate()?;
    let mut state = PoincareState::new(cfg.x, cfg.y)?;
    let mut t = Table::new(&["n", "x", "y", "roof"]);
    let mut time = 0.0;
    for n in 0..=cfg.iterates {
        let r = roof(&cfg.model, state.x)?;
        t.push(vec![json!(n), f(state.x), f(state.y), f(r)]);
        if n == cfg.iterates {
            break;
        }
        time += r;
        state = poincare_map(&cfg.model, state)?;
    }
    out.table(
        "orbit",
        &t,
        Some(Plot {
            x: "x",
            y: "y",
            log_log: false,
        }),
    )?;
    out.finish(
        "lorenz map",
        json!({ "flags": flags, "final": [state.x, state.y], "flow_time": time, "iterates": cfg.iterates }),
    )
}

pub fn lorenz_demo(raw: &Value, out: &Output) -> Summary {
    let cfg: LorenzDemoInput = input::parse(raw)?;
    let demo = lorenz_irregular_demo(&cfg.model, &cfg.config)?;
    out.table(
        "checkpoints",
        &report_table(&demo.report),
        Some(Plot {
            x: "j",
            y: "ratio",
            log_log: false,
        }),
    )?;
    out.json("certificate", &demo.horseshoe.certificate)?;
    out.json(
        "report",
        &json!({ "summary": demo.report.summary(), "model": demo.model, "demo": demo }),
    )?;
    let mut summary = oscillation(&demo.report);
    summary["model"] = serde_json::to_value(demo.model).unwrap_or(Value::Null);
    summary["C"] = f(demo.c);
    summary["roof_approx_error"] = f(demo.roof_approx_error);
    out.finish("lorenz demo", summary)
}

pub fn lorenz_validate(raw: &Value, out: &Output) -> Summary {
    let cfg: LorenzMapInput = input::parse(&json!({ "model": raw }))?;
    let flags = cfg.model.validate()?;
    out.finish(
        "lorenz validate",
        json!({ "valid": true, "flags": flags, "model": cfg.model }),
    )
}

fn spine_table(spines: &[SpineApprox]) -> Table {
    let mut t = Table::new(&["past", "lo", "hi", "length"]);
    for s in spines {
        let past: String = s.past.iter().map(|d| char::from(b'0' + *d as u8)).collect();
        t.push(vec![
            json!(past),
            f(irrlab::exact::to_f64(&s.lo)),
            f(irrlab::exact::to_f64(&s.hi)),
            f(s.length_f64()),
        ]);
    }
    t
}

pub fn porcupine_spines(raw: &Value, out: &Output, seed: u64) -> Summary {
    let cfg: SpinesInput = input::parse(raw)?;
    cfg.model.validate()?;
    let mut pasts = cfg.pasts.clone();
    pasts.extend((0..cfg.random as u64).map(|i| sample_past(seed, i, cfg.depth)));
    let spines = pasts
        .iter()
        .map(|p| spine(&cfg.model, p))
        .collect::<Result<Vec<_>, _>>()?;
    out.table("spines", &spine_table(&spines), None)?;
    let shortest = spines
        .iter()
        .map(SpineApprox::length_f64)
        .fold(f64::INFINITY, f64::min);
    out.finish(
        "porcupine spines",
        json!({ "count": spines.len(), "shortest": shortest.is_finite().then_some(shortest) }),
    )
}

pub fn porcupine_fraction(raw: &Value, out: &Output, seed: u64) -> Summary {
    let cfg: FractionInput = input::parse(raw)?;
    let mut t = Table::new(&["depth", "fraction_trivial"]);
    let mut fractions = Vec::new();
    for &d in &cfg.depths {
        let v = trivial_fraction(&cfg.model, d, cfg.samples, seed)?;
        fractions.push(v);
        t.push(vec![json!(d), f(v)]);
    }
    out.table(
        "fraction",
        &t,
        Some(Plot {
            x: "depth",
            y: "fraction_trivial",
            log_log: false,
        }),
    )?;
    let monotone = fractions.windows(2).all(|w| w[1] >= w[0]);
    out.finish(
        "porcupine fraction",
        json!({ "depths": cfg.depths, "fraction_trivial": fractions, "nondecreasing": monotone, "seed": seed }),
    )
}

pub fn skew_graph(raw: &Value, out: &Output, seed: u64) -> Summary {
    let cfg: SkewGraphInput = input::parse(raw)?;
    cfg.skew.validate()?;
    let mut t = Table::new(&["depth", "sample", "value", "error_bound", "defect"]);
    let mut worst: f64 = 0.0;
    for &depth in &cfg.depths {
        for i in 0..cfg.samples as u64 {
            let past = sample_admissible_past(&cfg.skew.base, seed, i, depth + 1);
            let (value, bound) = invariant_graph(&cfg.skew, &past, depth)?;
            let (shifted, _) = invariant_graph(&cfg.skew, &past[1..], depth)?;
            let defect = (cfg.skew.fiber_map(past[0], shifted) - value).abs();
            if bound > 0.0 {
                worst = worst.max(defect / (2.0 * bound));
            }
            t.push(vec![json!(depth), json!(i), f(value), f(bound), f(defect)]);
        }
    }
    out.table("graph", &t, None)?;
    out.finish(
        "skew graph",
        json!({ "rows": t.rows.len(), "worst_defect_ratio": worst, "within_bound": worst <= 1.0 }),
    )
}

pub fn skew_lift_check(raw: &Value, out: &Output) -> Summary {
    let cfg: LiftInput = input::parse(raw)?;
    let (point, rho) = build_point(&cfg.base)?;
    let p0 = PeriodicPoint::new(&cfg.base.spec, cfg.base.p0.clone())?;
    let p1 = PeriodicPoint::new(&cfg.base.spec, cfg.base.p1.clone())?;
    let psi = build_psi(&cfg.base.spec, &p0, &p1, cfg.base.m0)?;
    if cfg.skew.base != cfg.base.spec {
        return Err(CliError::Input(
            "skew product base differs from the irregular point's subshift".into(),
        ));
    }
    let identical = lift_irregular_check(&cfg.skew, &point, &psi, &rho, &cfg.fiber_values)?;
    let report = weighted_ratio_at_checkpoints(&point, &psi, &rho)?;
    let mut summary = oscillation(&report);
    summary["lift_identical"] = json!(identical);
    summary["fiber_values"] = json!(cfg.fiber_values);
    out.finish("skew lift-check", summary)
}
