use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use maizx_core::forecast::{forecast_values, ForecastMethod};
use maizx_core::ingest::{self, format_timestamp, load_ci_dir, load_ci_file, load_power_dir};
use maizx_core::report::{config_digest, measured_footprint, MeasuredReport, ReportMeta};
use maizx_core::simulate::{ranking_inputs, run_scenarios};
use maizx_core::{
    hourly_energy, maiz_ranking, render_report, ClusterConfigF64, ClusterF64, GapPolicy,
    RankingWeightsF64, WorkloadSpecF64,
};

use crate::{
    ConfigArgs, ForecastArgs, Method, RankArgs, RankingArgs, ReportArgs, SimulateArgs,
    ValidateArgs,
};

struct Loaded {
    config: ClusterConfigF64,
    digest: String,
    cluster: ClusterF64,
    workload: WorkloadSpecF64,
}

fn load(common: &ConfigArgs) -> Result<Loaded> {
    let (mut config, bytes) = ClusterConfigF64::load(&common.config)?;
    if let Some(g) = common.gap_fill {
        config.gap_fill = g.into();
    }
    if let Some(h) = common.horizon_hours {
        config.horizon_hours = h;
    }
    config
        .validate()
        .with_context(|| format!("config {}", common.config.display()))?;
    let series = load_ci_dir(&common.ci_dir, config.gap_fill)?;
    let cluster = config
        .cluster(series)
        .with_context(|| format!("traces in {}", common.ci_dir.display()))?;
    let workload = config.workload_spec()?;
    Ok(Loaded {
        config,
        digest: config_digest(&bytes),
        cluster,
        workload,
    })
}

fn parse_weights(raw: &str) -> Result<RankingWeightsF64> {
    let parts = raw
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| anyhow!("--weights `{raw}`: {e}"))?;
    let [w1, w2, w3, w4] = parts[..] else {
        bail!("--weights `{raw}`: expected four comma-separated numbers");
    };
    Ok(RankingWeightsF64::new(w1, w2, w3, w4)?)
}

fn method_from(flag: Option<Method>, window: Option<usize>, current: ForecastMethod) -> Result<ForecastMethod> {
    let current_window = match current {
        ForecastMethod::MovingAverage { window_hours } => Some(window_hours),
        _ => None,
    };
    let method = match flag {
        None => match (current, window) {
            (ForecastMethod::MovingAverage { .. }, Some(w)) => ForecastMethod::MovingAverage { window_hours: w },
            _ => current,
        },
        Some(Method::Persistence) => ForecastMethod::Persistence,
        Some(Method::SeasonalNaive24h) => ForecastMethod::SeasonalNaive24h,
        Some(Method::MovingAverage) => ForecastMethod::MovingAverage {
            window_hours: window
                .or(current_window)
                .ok_or_else(|| anyhow!("--forecast-method moving-average needs --window-hours"))?,
        },
    };
    method.validate()?;
    Ok(method)
}

fn apply_ranking_flags(config: &mut ClusterConfigF64, flags: &RankingArgs) -> Result<()> {
    if let Some(raw) = &flags.weights {
        config.weights = parse_weights(raw)?;
    }
    config.forecast.method = method_from(flags.forecast_method, flags.window_hours, config.forecast.method)?;
    if let Some(h) = flags.forecast_horizon_hours {
        config.forecast.horizon_hours = h;
    }
    if let Some(w) = flags.cfp_window_hours {
        config.scenario_c.cfp_window_hours = w;
    }
    Ok(())
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("create {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("write {}", path.display()))
}

pub fn validate(args: ValidateArgs) -> Result<()> {
    let loaded = load(&args.common)?;
    let mut out = String::from("kind,id,zone,hours,detail\n");
    for node in loaded.cluster.nodes() {
        let _ = writeln!(
            out,
            "node,{},{},{},pue={} idle_w={} max_w={} capacity={}",
            node.id(),
            node.zone(),
            loaded.cluster.horizon_hours(),
            node.pue(),
            node.idle_power_w(),
            node.max_power_w(),
            node.capacity_units()
        );
    }
    for s in loaded.cluster.all_series() {
        let _ = writeln!(
            out,
            "ci,{},{},{},start={} mean={:.1}",
            s.zone(),
            s.zone(),
            s.len(),
            format_timestamp(s.start()),
            s.mean()
        );
    }
    if let Some(dir) = &args.power_dir {
        for p in load_power_dir::<f64>(dir)? {
            let energy = hourly_energy(&p).with_context(|| format!("power trace of {}", p.node_id()))?;
            let node = loaded
                .cluster
                .nodes()
                .iter()
                .find(|n| n.id() == p.node_id())
                .ok_or_else(|| anyhow!("power trace for unknown node {}", p.node_id()))?;
            let _ = writeln!(
                out,
                "power,{},{},{},start={} cadence_s={} kwh={:.3}",
                p.node_id(),
                node.zone(),
                energy.len(),
                format_timestamp(p.start()),
                p.cadence_s(),
                energy.iter().sum::<f64>()
            );
        }
    }
    let _ = writeln!(out, "config,{},,,sha256", loaded.digest);
    print!("{out}");
    Ok(())
}

pub fn rank(args: RankArgs) -> Result<()> {
    let mut loaded = load(&args.common)?;
    apply_ranking_flags(&mut loaded.config, &args.ranking)?;
    let sim = loaded.config.simulation_config();
    sim.validate()?;
    let inputs = ranking_inputs(&loaded.cluster, &loaded.workload, &sim, args.hour, None)?;
    let scores = maiz_ranking(&inputs, &sim.weights)?;
    let mut out = String::from(
        "rank,node_id,cfp_g,fcfp_g,cp_ratio_w_per_unit,schedule,cfp_norm,fcfp_norm,cp_ratio_norm,schedule_norm,score\n",
    );
    for (i, s) in scores.iter().enumerate() {
        let raw = inputs
            .iter()
            .find(|r| r.node_id == s.node_id)
            .expect("every score has an input");
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            i + 1,
            s.node_id,
            raw.cfp,
            raw.fcfp,
            raw.cp_ratio,
            raw.schedule,
            s.cfp_norm,
            s.fcfp_norm,
            s.cp_ratio_norm,
            s.schedule_norm,
            s.score
        );
    }
    print!("{out}");
    Ok(())
}

pub fn forecast(args: ForecastArgs) -> Result<()> {
    let config = match &args.config {
        Some(path) => Some(ClusterConfigF64::load(path)?.0),
        None => None,
    };
    let defaults = config.as_ref().map(|c| c.forecast).unwrap_or_default();
    let gaps = args
        .gap_fill
        .map(GapPolicy::from)
        .or(config.as_ref().map(|c| c.gap_fill))
        .unwrap_or_default();
    let method = method_from(args.method, args.window_hours, defaults.method)?;
    let horizon = args.horizon_hours.unwrap_or(defaults.horizon_hours);

    let series = load_ci_file::<f64>(&args.ci, gaps)?;
    let used = args.history_hours.unwrap_or(series.len());
    if used == 0 || used > series.len() {
        bail!("--history-hours {used} outside 1..={}", series.len());
    }
    let values = forecast_values(&series.values()[..used], method, horizon)
        .with_context(|| format!("{}: zone {}", args.ci.display(), series.zone()))?;
    let mut out = String::from("timestamp,zone,forecast_gco2_per_kwh\n");
    for (i, v) in values.iter().enumerate() {
        let _ = writeln!(out, "{},{},{v}", format_timestamp(series.timestamp(used + i)), series.zone());
    }
    match &args.out {
        Some(path) => write_file(path, &out),
        None => {
            std::io::stdout().write_all(out.as_bytes())?;
            Ok(())
        }
    }
}

fn sibling(out: &Path, name: &str) -> PathBuf {
    out.parent().map_or_else(|| PathBuf::from(name), |dir| dir.join(name))
}

pub fn simulate(args: SimulateArgs) -> Result<()> {
    let mut loaded = load(&args.common)?;
    apply_ranking_flags(&mut loaded.config, &args.ranking)?;
    if let Some(s) = args.scenario {
        loaded.config.scenario = s;
    }
    if let Some(e) = args.epoch_hours {
        loaded.config.scenario_c.epoch_hours = e;
    }
    let sim = loaded.config.simulation_config();
    sim.validate()?;

    let kinds = loaded.config.scenario.kinds();
    let results = run_scenarios(&kinds, &loaded.cluster, &loaded.workload, &sim)?;
    let meta = ReportMeta {
        start: Some(loaded.cluster.start()),
        config_digest: Some(loaded.digest.clone()),
    };
    let rendered = render_report(&results, &loaded.config.projection, &meta)?;

    let hourly = args.hourly_csv.unwrap_or_else(|| sibling(&args.out, "hourly_cf.csv"));
    let totals = args.totals_csv.unwrap_or_else(|| sibling(&args.out, "totals.csv"));
    write_file(&args.out, &rendered.json)?;
    write_file(&hourly, &rendered.hourly_cf_csv)?;
    write_file(&totals, &rendered.totals_csv)?;

    let mut out = String::from("scenario,total_energy_kwh,total_kg_co2,reduction_pct\n");
    for s in &rendered.report.scenarios {
        let _ = writeln!(
            out,
            "{},{},{},{:.2}",
            s.scenario, s.total_energy_kwh, s.total_kg_co2, s.reduction_pct
        );
    }
    print!("{out}");
    Ok(())
}

pub fn report(args: ReportArgs) -> Result<()> {
    let loaded = load(&args.common)?;
    let mut params = loaded.config.projection.clone();
    if let Some(kg) = args.annual_reduction_per_unit_kg {
        params.annual_reduction_per_unit_kg = kg;
    }
    if let Some(kg) = args.target_kg {
        params.target_kg = kg;
    }
    if let Some(y) = args.years {
        params.years = y;
    }
    if args.eur_per_kg.is_some() {
        params.eur_per_kg = args.eur_per_kg;
    }

    let mut measured = Vec::new();
    for path in ingest::csv_files(&args.power_dir)? {
        let power = ingest::load_power_file::<f64>(&path)?;
        let node = loaded
            .cluster
            .nodes()
            .iter()
            .find(|n| n.id() == power.node_id())
            .ok_or_else(|| anyhow!("{}: power trace for unknown node {}", path.display(), power.node_id()))?;
        let ci = loaded.cluster.series(node.zone());
        measured.push(measured_footprint(node, &power, ci).with_context(|| path.display().to_string())?);
    }
    if measured.is_empty() {
        bail!("no power traces in {}", args.power_dir.display());
    }
    let report = MeasuredReport::new(&measured, &params)?;
    write_file(&args.out, &report.to_json()?)?;

    let mut out = String::from("node_id,zone,hours,energy_kwh,kg_co2\n");
    for n in &report.nodes {
        let _ = writeln!(out, "{},{},{},{},{}", n.node_id, n.zone, n.hours, n.energy_kwh, n.kg_co2);
    }
    print!("{out}");
    Ok(())
}
