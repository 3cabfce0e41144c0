//! One function per subcommand. Each writes its artifacts through
//! [`Output`] and returns the summary echoed in the manifest.

use std::fs::File;
use std::io::BufReader;

use isospec::calculus::{inner_product, EDGE_SKIP};
use isospec::darboux::{
    adler_delete_pair, crum_iterate, darboux_transform, darboux_transform_with, DarbouxOptions as SingularOptions,
    DarbouxSeed,
};
use isospec::eigensolve::{self, rt_coefficients, spectrum_json, EigenPair, SolveConfig};
use isospec::families::{compare_schemes, ddgr_double_darboux_check, ddgr_family_with, normalization_factor};
use isospec::krein::{jost_forward, recover_potential, JostInput};
use isospec::potential::{sample_potential, DomainCut, PotentialKind, PotentialSpec};
use isospec::record::{StepKind, TransformRecord, TransformStep};
use isospec::sampled::fmt_num;
use isospec::shapeinv::{si_spectrum, si_spectrum_json, si_wavefunction, swkb_quantization, SiPotential, SwkbConfig};
use isospec::tdse::{
    apply_intertwiner, propagate_tdse, relative_distance, tdse_darboux_forward_with, tdse_darboux_inverse,
    tdse_residual, uniform_times, SpaceTimeFunction, TdseOptions as ForwardOptions, TdseSeed,
};
use isospec::{ComplexFunction, Grid, SampledFunction};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::config::*;
use crate::error::{from_module, CliError};
use crate::output::Output;

/// Runs a resolved configuration and returns the manifest.
pub fn run(cfg: &RunConfig) -> Result<Value, CliError> {
    let mut out = Output::new(&cfg.output_dir(), cfg.emit_plot_data)?;
    let o = &cfg.command_options;
    let summary = match cfg.command {
        CommandKind::Spectrum => spectrum(cfg, &parse_options(o)?, &mut out)?,
        CommandKind::Darboux => darboux(cfg, &parse_options(o)?, &mut out)?,
        CommandKind::Crum => crum(cfg, &parse_options(o)?, &mut out)?,
        CommandKind::Ddgr => ddgr(cfg, &parse_options(o)?, &mut out)?,
        CommandKind::Compare => compare(cfg, &parse_options(o)?, &mut out)?,
        CommandKind::Si => si(cfg, &parse_options(o)?, &mut out)?,
        CommandKind::Swkb => swkb(cfg, &parse_options(o)?, &mut out)?,
        CommandKind::Tdse => tdse(cfg, &parse_options(o)?, &mut out)?,
        CommandKind::Krein => krein(cfg, &parse_options(o)?, &mut out)?,
        CommandKind::Scatter => scatter(cfg, &parse_options(o)?, &mut out)?,
    };
    out.finish(cfg, summary)
}

fn config_error(message: impl Into<String>) -> CliError {
    CliError::new("cli", "config", message)
}

struct Source {
    spec: Option<PotentialSpec>,
    u: SampledFunction,
    cut: DomainCut,
    root: String,
}

impl Source {
    fn grid(&self) -> Grid {
        *self.u.grid()
    }

    fn record(&self) -> TransformRecord {
        TransformRecord::new(self.root.clone())
    }
}

fn grid_of(cfg: &RunConfig) -> Result<Grid, CliError> {
    let g = cfg.grid.ok_or_else(|| config_error("no grid configured"))?;
    Grid::new(g.x_min, g.x_max, g.n_points).map_err(|e| config_error(e.to_string()))
}

fn source(cfg: &RunConfig) -> Result<Source, CliError> {
    let p = &cfg.potential;
    let kind = PotentialKind::parse(&p.kind).map_err(|e| config_error(e.to_string()))?;
    let root = if p.parameters.is_empty() {
        kind.name().to_string()
    } else {
        let params: Vec<String> = p.parameters.iter().map(|(k, v)| format!("{k}={}", fmt_num(*v))).collect();
        format!("{}({})", kind.name(), params.join(","))
    };
    if kind == PotentialKind::CustomSampled {
        let path = p.samples.as_ref().ok_or_else(|| config_error("custom_sampled needs a samples file"))?;
        let file = File::open(path).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
        let u = SampledFunction::<f64>::read_csv(BufReader::new(file)).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
        if let Some(g) = cfg.grid {
            let want = Grid::new(g.x_min, g.x_max, g.n_points).map_err(|e| config_error(e.to_string()))?;
            if !want.same_as(u.grid()) {
                return Err(config_error("samples file and configured grid differ"));
            }
        }
        let spec = PotentialSpec::custom(u.clone(), p.domain_cut);
        sample_potential(&spec, u.grid()).map_err(|e| config_error(e.to_string()))?;
        return Ok(Source { spec: None, u, cut: p.domain_cut, root: format!("custom_sampled({})", path.display()) });
    }
    let spec = PotentialSpec::new(kind, p.parameters.clone(), p.domain_cut).map_err(|e| config_error(e.to_string()))?;
    let u = sample_potential(&spec, &grid_of(cfg)?).map_err(|e| config_error(e.to_string()))?;
    Ok(Source { spec: Some(spec), u, cut: p.domain_cut, root })
}

fn solve_cfg(u: &SampledFunction, n: usize, cut: DomainCut) -> SolveConfig {
    SolveConfig::for_domain(u, n, cut)
}

fn levels(u: &SampledFunction, n: usize, cut: DomainCut) -> Result<Vec<EigenPair>, CliError> {
    if n == 0 {
        return Ok(Vec::new());
    }
    eigensolve::solve_levels(u, &solve_cfg(u, n, cut)).map_err(from_module("eigensolve", "solve_bound_states"))
}

fn energies(levels: &[EigenPair]) -> Vec<f64> {
    levels.iter().map(|l| l.energy).collect()
}

/// Level-by-level comparison of `got` against `want` over the first
/// `count` entries; a missing level counts as infinite drift.
fn drift(got: &[f64], want: &[f64], count: usize) -> Vec<f64> {
    (0..count).map(|n| match (got.get(n), want.get(n)) {
        (Some(a), Some(b)) => (a - b).abs(),
        _ => f64::INFINITY,
    }).collect()
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(*x))
}

/// JSON-safe number: non-finite values become null.
fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

fn nums(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|x| num(*x)).collect())
}

fn spectrum_table(out: &mut Output, rel: &str, source: &[f64], result: &[f64], drift: &[f64]) -> Result<(), CliError> {
    let rows = (0..drift.len()).map(|n| {
        vec![n as f64, source.get(n).copied().unwrap_or(f64::NAN), result.get(n).copied().unwrap_or(f64::NAN), drift[n]]
    });
    out.table(rel, "n,source,transformed,drift", rows)
}

fn xy(f: &SampledFunction) -> impl Iterator<Item = (f64, f64)> + '_ {
    f.values().iter().enumerate().map(|(i, v)| (f.grid().x(i), *v))
}

fn spectrum(cfg: &RunConfig, o: &SpectrumOptions, out: &mut Output) -> Result<Value, CliError> {
    let s = source(cfg)?;
    let mut sc = solve_cfg(&s.u, o.levels, s.cut);
    sc.bisection_tolerance = o.bisection_tolerance;
    let found = eigensolve::solve_levels(&s.u, &sc).map_err(from_module("eigensolve", "solve_bound_states"))?;
    out.json("spectrum.json", &spectrum_json(&found, &sc))?;
    out.potential("potential", &s.u, &s.record())?;
    for (n, l) in found.iter().enumerate() {
        out.function(&format!("psi_{n}.csv"), &l.wavefunction, "psi")?;
        out.plot(&format!("psi_{n}"), "x", "psi", xy(&l.wavefunction))?;
    }
    Ok(json!({
        "energies": energies(&found),
        "nodes": found.iter().map(|l| l.node_count).collect::<Vec<_>>(),
        "levels_requested": o.levels,
        "levels_found": found.len(),
    }))
}

fn darboux(cfg: &RunConfig, o: &DarbouxOptions, out: &mut Output) -> Result<Value, CliError> {
    let s = source(cfg)?;
    let seed = DarbouxSeed::from_level(&s.u, o.seed_level).map_err(from_module("darboux", "seed"))?;
    let res = darboux_transform_with(&s.u, &seed, SingularOptions { force_singular: o.force_singular })
        .map_err(from_module("darboux", "darboux_transform"))?;
    let record = s.record().with(
        TransformStep::new(StepKind::Darboux).seeds([format!("level_{}", o.seed_level)]).energy(seed.lambda1),
    );
    out.potential("partner", &res.potential, &record)?;
    out.function("seed.csv", &seed.psi1, "psi")?;
    let mut summary = json!({
        "seed_level": o.seed_level,
        "seed_energy": seed.lambda1,
        "singular_nodes": res.singular_nodes,
        "tolerance": o.tolerance,
    });
    if res.singular_nodes.is_empty() && o.levels > 0 {
        let src = energies(&levels(&s.u, o.levels + o.seed_level + 1, s.cut)?);
        let mut want = src.clone();
        want.remove(o.seed_level.min(want.len().saturating_sub(1)));
        let count = o.levels.min(want.len());
        let got = energies(&levels(&res.potential, o.levels, s.cut)?);
        let d = drift(&got, &want, count);
        spectrum_table(out, "spectra.csv", &want, &got, &d)?;
        summary["source_energies"] = nums(&src);
        summary["partner_energies"] = nums(&got);
        summary["drift"] = nums(&d);
        summary["max_drift"] = num(max_of(&d));
        summary["isospectral"] = json!(max_of(&d) <= o.tolerance);
    }
    Ok(summary)
}

fn crum(cfg: &RunConfig, o: &CrumOptions, out: &mut Output) -> Result<Value, CliError> {
    let s = source(cfg)?;
    let g = s.grid();
    let (v, record, want, extra) = if let Some(k) = o.adler {
        let v = adler_delete_pair(&s.u, k).map_err(from_module("darboux", "adler_delete_pair"))?;
        let record = s.record().with(
            TransformStep::new(StepKind::Crum).seeds([format!("level_{k}"), format!("level_{}", k + 1)]).deleting(k),
        );
        let mut want = energies(&levels(&s.u, o.levels + k + 2, s.cut)?);
        if want.len() >= k + 2 {
            want.drain(k..k + 2);
        }
        (v, record, want, json!({ "mode": "adler", "deleted_levels": [k, k + 1] }))
    } else if !o.kappas.is_empty() {
        if s.spec.as_ref().map(|p| p.kind()) != Some(PotentialKind::Free) {
            return Err(config_error("exponential seeds (kappas) solve only the free equation"));
        }
        let mut kappas = o.kappas.clone();
        kappas.sort_by(f64::total_cmp);
        let seeds: Vec<DarbouxSeed> = kappas
            .iter()
            .enumerate()
            .map(|(i, &k)| {
                let psi = if i % 2 == 0 {
                    SampledFunction::tabulate(g, move |x| (k * x).cosh())
                } else {
                    SampledFunction::tabulate(g, move |x| (k * x).sinh())
                };
                DarbouxSeed::new(psi, -k * k)
            })
            .collect();
        let ids: Vec<String> = kappas
            .iter()
            .enumerate()
            .map(|(i, k)| format!("{}({})", if i % 2 == 0 { "cosh" } else { "sinh" }, fmt_num(*k)))
            .collect();
        let v = crum_iterate(&s.u, &seeds).map_err(from_module("darboux", "crum_iterate"))?.potential;
        let record = s.record().with(TransformStep::new(StepKind::Crum).seeds(ids));
        let want: Vec<f64> = kappas.iter().rev().map(|k| -k * k).collect();
        (v, record, want, json!({ "mode": "exponential_seeds", "kappas": kappas }))
    } else {
        let mut list = o.seed_levels.clone();
        list.sort_unstable();
        list.dedup();
        let top = *list.last().expect("checked nonempty");
        let src = levels(&s.u, o.levels + top + 1, s.cut)?;
        if src.len() <= top {
            return Err(CliError::new("darboux", "seed", format!("source has only {} bound level(s)", src.len())));
        }
        let seeds: Vec<DarbouxSeed> =
            list.iter().map(|&n| DarbouxSeed::new(src[n].wavefunction.clone(), src[n].energy)).collect();
        let v = crum_iterate(&s.u, &seeds).map_err(from_module("darboux", "crum_iterate"))?.potential;
        let record = s.record().with(TransformStep::new(StepKind::Crum).seeds(list.iter().map(|n| format!("level_{n}"))));
        let want: Vec<f64> =
            src.iter().enumerate().filter(|(n, _)| !list.contains(n)).map(|(_, l)| l.energy).collect();
        let mut extra = json!({ "mode": "levels", "seed_levels": list });
        // deleting the lowest N levels can be repeated one ground state at a time
        if list.iter().enumerate().all(|(i, n)| i == *n) {
            let mut w = s.u.clone();
            for _ in 0..list.len() {
                let seed = DarbouxSeed::ground(&w).map_err(from_module("darboux", "seed"))?;
                w = darboux_transform(&w, &seed).map_err(from_module("darboux", "darboux_transform"))?.potential;
            }
            let defect = v.sup_distance(&w, EDGE_SKIP).map_err(from_module("core", "sup_distance"))?;
            out.function("sequential.csv", &w, "V")?;
            extra["sequential_defect"] = num(defect);
        }
        (v, record, want, extra)
    };
    out.potential("crum", &v, &record)?;
    let finite = v.values().iter().all(|x| x.is_finite());
    let count = o.levels.min(want.len());
    let got = if finite { energies(&levels(&v, o.levels, s.cut)?) } else { Vec::new() };
    let d = drift(&got, &want, count);
    spectrum_table(out, "spectra.csv", &want, &got, &d)?;
    let mut summary = extra;
    summary["expected_energies"] = nums(&want[..count]);
    summary["energies"] = nums(&got);
    summary["drift"] = nums(&d);
    summary["max_drift"] = num(max_of(&d));
    summary["nonsingular"] = json!(finite);
    summary["max_abs_potential"] = num(v.max_modulus());
    Ok(summary)
}

fn ddgr(cfg: &RunConfig, o: &DdgrOptions, out: &mut Output) -> Result<Value, CliError> {
    let s = source(cfg)?;
    let fam = ddgr_family_with(&s.u, &o.lambda, s.cut).map_err(from_module("families", "ddgr_family"))?;
    let vp = fam.partner().map_err(from_module("families", "partner"))?;
    let seed_id = "level_0".to_string();
    out.potential(
        "partner",
        &vp,
        &s.record().with(TransformStep::new(StepKind::Darboux).seeds([seed_id.clone()]).energy(fam.ground_energy)),
    )?;
    out.function("zero_mode.csv", &fam.zero_mode, "psi")?;
    let drifts = if o.verify { Some(fam.spectrum_drift(o.levels).map_err(from_module("families", "spectrum_drift"))?) } else { None };
    let checks = if o.verify {
        Some(ddgr_double_darboux_check(&fam).map_err(from_module("families", "ddgr_double_darboux_check"))?)
    } else {
        None
    };
    let mut members = Vec::new();
    let mut isospectral = true;
    for (k, m) in fam.members.iter().enumerate() {
        let record = s.record().with(
            TransformStep::new(StepKind::Ddgr).seeds([seed_id.clone()]).energy(fam.ground_energy).parameter(m.lambda),
        );
        out.potential(&format!("member_{k}"), &m.potential, &record)?;
        out.function(&format!("member_{k}_ground.csv"), &m.ground_state, "psi")?;
        let f = normalization_factor(m.lambda);
        let mut entry = json!({
            "lambda": m.lambda,
            "normalization": m.normalization,
            "normalization_closed_form": f,
            "normalization_numeric": m.normalization_numeric,
            "normalization_defect": num((m.normalization_numeric - f).abs()),
            "source_distance": num(m.potential.sup_distance(&s.u, EDGE_SKIP).map_err(from_module("core", "sup_distance"))?),
            "form_defect": num(m.form_defect),
            "superpotential_defect": num(m.superpotential_defect),
            "bernoulli_residual": num(m.bernoulli_residual),
            "riccati_defect": num(m.riccati_defect),
        });
        if let Some(d) = &drifts {
            let worst = max_of(&d[k]);
            isospectral &= worst <= o.tolerance;
            entry["drift"] = nums(&d[k]);
            entry["max_drift"] = num(worst);
        }
        if let Some(c) = &checks {
            entry["partner_defect"] = num(c.members[k].partner_defect);
            entry["fermionic_defect"] = num(c.members[k].fermionic_defect);
            entry["ground_energy_drift"] = num(c.members[k].ground_energy_drift);
        }
        members.push(entry);
    }
    if let Some(d) = &drifts {
        let header = std::iter::once("n".to_string()).chain((0..d.len()).map(|k| format!("drift_{k}"))).collect::<Vec<_>>().join(",");
        let rows = (0..o.levels).map(|n| {
            std::iter::once(n as f64).chain(d.iter().map(|row| row.get(n).copied().unwrap_or(f64::NAN))).collect()
        });
        out.table("drift.csv", &header, rows)?;
    }
    let mut summary = json!({
        "ground_energy": fam.ground_energy,
        "lambda_values": fam.lambda_values,
        "members": members,
        "tolerance": o.tolerance,
    });
    if o.verify {
        summary["isospectral"] = json!(isospectral);
        summary["double_darboux_failures"] = json!(checks.map(|c| c.failures).unwrap_or_default());
    }
    out.json("family.json", &summary)?;
    Ok(summary)
}

fn compare(cfg: &RunConfig, o: &CompareOptions, out: &mut Output) -> Result<Value, CliError> {
    let s = source(cfg)?;
    let ks = wavenumbers(&o.k, o.k_min, o.k_max, o.k_count);
    let cmp = compare_schemes(&s.u, o.lambda, &ks).map_err(from_module("families", "compare_schemes"))?;
    out.json("comparison.json", &cmp)?;
    let ground = "level_0".to_string();
    for r in std::iter::once(&cmp.source).chain(&cmp.schemes) {
        let step = match r.scheme.as_str() {
            "ddgr" => Some(TransformStep::new(StepKind::Ddgr).seeds([ground.clone()]).parameter(o.lambda)),
            "pursey" => Some(TransformStep::new(StepKind::Pursey).seeds([ground.clone()])),
            "abraham_moses" => Some(TransformStep::new(StepKind::AbrahamMoses).seeds([ground.clone()])),
            _ => None,
        };
        let record = match step {
            Some(st) => s.record().with(st),
            None => s.record(),
        };
        out.potential(&r.scheme, &r.potential, &record)?;
        if !ks.is_empty() {
            out.bytes(&format!("curves/{}.csv", r.scheme), cmp.curve_csv(r).as_bytes())?;
            out.plot(&format!("{}_abs_T", r.scheme), "k", "|T|", ks.iter().copied().zip(r.transmission_moduli.iter().copied()))?;
            out.plot(&format!("{}_abs_R", r.scheme), "k", "|R|", ks.iter().copied().zip(r.reflection_moduli.iter().copied()))?;
        }
    }
    Ok(json!({
        "lambda": o.lambda,
        "wavenumber_count": ks.len(),
        "source_spectrum": nums(&cmp.source.spectrum),
        "schemes": cmp.schemes.iter().map(|r| json!({
            "scheme": r.scheme,
            "spectrum": nums(&r.spectrum),
            "amplitude_match": r.amplitude_match,
            "amplitude_difference": num(r.amplitude_difference),
            "modulus_difference": num(r.modulus_difference),
        })).collect::<Vec<_>>(),
    }))
}

fn si_family(name: &str) -> Result<SiPotential, CliError> {
    match name.to_ascii_lowercase().replace('-', "_").as_str() {
        "harmonic" => Ok(SiPotential::harmonic()),
        "poschl_teller" | "pt" => Ok(SiPotential::poschl_teller()),
        other => Err(config_error(format!("unknown shape-invariant family `{other}`"))),
    }
}

fn si(cfg: &RunConfig, o: &SiOptions, out: &mut Output) -> Result<Value, CliError> {
    let p = si_family(&o.family)?;
    let g = grid_of(cfg)?;
    let e = si_spectrum(&p, o.a, o.n_max, &g).map_err(from_module("shapeinv", "si_spectrum"))?;
    out.json("si_spectrum.json", &si_spectrum_json(&p, o.a, &e))?;
    let vm = p.v_minus(&g, o.a);
    out.potential("v_minus", &vm, &TransformRecord::new(format!("{}(a={})", p.name(), fmt_num(o.a))))?;
    let mut waves = Vec::new();
    for n in 0..=o.n_max {
        let psi = si_wavefunction(&p, o.a, n, &g).map_err(from_module("shapeinv", "si_wavefunction"))?;
        out.function(&format!("psi_{n}.csv"), &psi, "psi")?;
        out.plot(&format!("psi_{n}"), "x", "psi", xy(&psi))?;
        waves.push(psi);
    }
    let mut summary = json!({ "family": p.name(), "a1": o.a, "energies": nums(&e) });
    if o.verify {
        let num_levels = levels(&vm, o.n_max + 1, DomainCut::FullLine)?;
        let d = drift(&energies(&num_levels), &e, e.len());
        let overlaps: Vec<f64> =
            waves.iter().zip(&num_levels).map(|(a, b)| inner_product(a, &b.wavefunction).abs()).collect();
        spectrum_table(out, "spectra.csv", &e, &energies(&num_levels), &d)?;
        summary["numeric_energies"] = nums(&energies(&num_levels));
        summary["drift"] = nums(&d);
        summary["max_drift"] = num(max_of(&d));
        summary["overlaps"] = nums(&overlaps);
    }
    Ok(summary)
}

fn swkb(cfg: &RunConfig, o: &SwkbOptions, out: &mut Output) -> Result<Value, CliError> {
    let p = si_family(&o.family)?;
    let g = grid_of(cfg)?;
    p.validate(o.a).map_err(from_module("shapeinv", "swkb_quantization"))?;
    let sc = SwkbConfig {
        x_range: (g.x_min(), g.x_max()),
        scan_points: g.n_points(),
        energy_tolerance: o.energy_tolerance,
        ..SwkbConfig::default()
    };
    let a = o.a;
    let w = move |x: f64| p.superpotential(x, a);
    let mut got = Vec::new();
    let mut exact = Vec::new();
    for n in 0..=o.n_max {
        got.push(swkb_quantization(&w, n, &sc).map_err(from_module("shapeinv", "swkb_quantization"))?);
        let nf = n as f64;
        exact.push(match p.family {
            isospec::shapeinv::SiFamily::Harmonic => 2.0 * a * nf,
            isospec::shapeinv::SiFamily::PoschlTeller => a * a - (a - nf).powi(2),
        });
    }
    let d = drift(&got, &exact, got.len());
    out.table("swkb.csv", "n,swkb,exact,error", (0..got.len()).map(|n| vec![n as f64, got[n], exact[n], d[n]]))?;
    Ok(json!({
        "family": p.name(),
        "a": a,
        "energies": nums(&got),
        "exact": nums(&exact),
        "max_error": num(max_of(&d)),
    }))
}

fn tdse(cfg: &RunConfig, o: &TdseOptions, out: &mut Output) -> Result<Value, CliError> {
    let s = source(cfg)?;
    let g = s.grid();
    let steps = (o.t_max / o.dt).round() as usize;
    let times = uniform_times(0.0, o.dt, steps + 1);
    let op = from_module("tdse", "tdse_darboux_forward");
    let v0 = SpaceTimeFunction::constant_in_time(&s.u, times.clone()).map_err(&op)?;
    let is_free = s.spec.as_ref().map(|p| p.kind()) == Some(PotentialKind::Free);
    let kind = match o.seed.as_str() {
        "auto" if is_free => "cosh",
        "auto" => "ground",
        k => k,
    };
    let (seed, seed_energy, seed_id) = match kind {
        "ground" => {
            let d = DarbouxSeed::ground(&s.u).map_err(from_module("darboux", "seed"))?;
            (TdseSeed::stationary(&d.psi1, d.lambda1, times.clone()).map_err(&op)?, d.lambda1, "level_0".to_string())
        }
        "cosh" => {
            let k = o.kappa;
            let phi = SampledFunction::tabulate(g, move |x| (k * x).cosh());
            (TdseSeed::stationary(&phi, -k * k, times.clone()).map_err(&op)?, -k * k, format!("cosh({})", fmt_num(k)))
        }
        _ => (TdseSeed::plane_wave(g, o.kappa, times.clone()).map_err(&op)?, o.kappa * o.kappa, format!("plane_wave({})", fmt_num(o.kappa))),
    };
    let (x0, k0, w) = (o.packet_x0, o.packet_k, o.packet_width);
    let packet: ComplexFunction = SampledFunction::tabulate(g, move |x| {
        Complex64::new(0.0, k0 * x).exp() * (-(x - x0).powi(2) / (2.0 * w * w)).exp()
    });
    let psi0 = propagate_tdse(&s.u, &packet, &times).map_err(from_module("tdse", "propagate_tdse"))?;
    let fw = tdse_darboux_forward_with(&v0, &seed, &psi0, &ForwardOptions { strict: o.strict, ..Default::default() })
        .map_err(&op)?;
    let residual = tdse_residual(&fw.v1, &fw.psi1).map_err(&op)?;
    let back = tdse_darboux_inverse(&fw.v1, &seed, &fw.psi1, None, None).map_err(from_module("tdse", "tdse_darboux_inverse"))?;
    let back_residual = tdse_residual(&v0, &back).map_err(from_module("tdse", "tdse_darboux_inverse"))?;
    let again = apply_intertwiner(&seed, &back).map_err(from_module("tdse", "tdse_darboux_inverse"))?;
    let roundtrip = relative_distance(&again, &fw.psi1).map_err(from_module("tdse", "tdse_darboux_inverse"))?;
    let norms = psi0.norms();
    out.table(
        "tdse.csv",
        "t,norm_source,residual_transformed,residual_inverse,roundtrip",
        (0..times.len()).map(|j| vec![times[j], norms[j], residual[j], back_residual[j], roundtrip[j]]),
    )?;
    let record = s.record().with(TransformStep::new(StepKind::TdseForward).seeds([seed_id.clone()]).energy(seed_energy));
    let last = times.len() - 1;
    out.potential("v1_initial", &fw.v1.slice(0).re(), &record)?;
    out.potential("v1_final", &fw.v1.slice(last).re(), &record)?;
    out.complex("psi0_final.csv", &psi0.slice(last))?;
    out.complex("psi1_initial.csv", &fw.psi1.slice(0))?;
    out.complex("psi1_final.csv", &fw.psi1.slice(last))?;
    if o.write_slices {
        for j in 0..times.len() {
            out.complex(&format!("psi1_slices/slice_{j:05}.csv"), &fw.psi1.slice(j))?;
        }
    }
    out.plot("psi1_final_abs", "x", "|psi1|", fw.psi1.slice(last).values().iter().enumerate().map(|(i, v)| (g.x(i), v.norm())))?;
    Ok(json!({
        "seed": kind,
        "seed_id": seed_id,
        "seed_energy": seed_energy,
        "instants": times.len(),
        "seed_residual": num(fw.seed_residual),
        "source_residual": num(fw.source_residual),
        "max_residual": num(max_of(&residual)),
        "max_inverse_residual": num(max_of(&back_residual)),
        "max_roundtrip": num(max_of(&roundtrip)),
        "imaginary_part": num(fw.imaginary_part),
        "reality": {
            "max_im_chi_xxx": num(fw.reality.max_im_chi_xxx),
            "l1_deviation": num(fw.reality.l1_deviation),
        },
    }))
}

fn krein(cfg: &RunConfig, o: &KreinOptions, out: &mut Output) -> Result<Value, CliError> {
    let rg = Grid::new(0.0, o.r_max, o.r_points).map_err(|e| config_error(e.to_string()))?;
    let op = from_module("krein", "recover_potential");
    let forward = |v: &SampledFunction, out: &mut Output| -> Result<JostInput, CliError> {
        let kg = Grid::new(0.0, o.k_cutoff, o.k_samples).map_err(|e| config_error(e.to_string()))?;
        let moduli = jost_forward(v, &kg.abscissae()).map_err(from_module("krein", "jost_forward"))?;
        let table = SampledFunction::new(kg, moduli).map_err(from_module("core", "sample"))?;
        out.function("jost.csv", &table, "abs_F")?;
        JostInput::from_moduli(&table).map_err(from_module("krein", "jost_forward"))
    };
    let (input, reference) = match o.source.as_str() {
        "test_well" => {
            let depth = o.depth;
            let v = SampledFunction::tabulate(rg, move |r| -depth * r * r * (-r * r).exp());
            (forward(&v, out)?, Some(v))
        }
        "potential" => {
            let s = source(cfg)?;
            let spec = s.spec.filter(|p| p.is_short_range()).ok_or_else(|| {
                CliError::new("krein", "jost_forward", "the potential source needs a short-range catalog potential")
            })?;
            let f = spec.evaluator().expect("catalog kind");
            let v = SampledFunction::tabulate(rg, f);
            (forward(&v, out)?, Some(v))
        }
        "gaussian" => {
            let depth = o.depth;
            (JostInput::from_fn(move |k| depth * (-k * k).exp()), None)
        }
        _ => (JostInput::free(), Some(SampledFunction::zeros(rg))),
    };
    let input = input.with_quadrature(o.k_cutoff, o.k_points);
    let res = recover_potential(&input, &rg).map_err(op)?;
    out.function("recovered.csv", &res.v, "V")?;
    out.function("a.csv", &res.a, "A")?;
    out.function("h.csv", &res.kernel.h, "H")?;
    out.plot("recovered", "r", "V", xy(&res.v))?;
    let mut summary = json!({
        "source": o.source,
        "summary": res.summary(),
        "max_abs_h": num(res.kernel.h.max_modulus()),
        "max_abs_gamma": num(res.kernel.gamma.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))),
        "max_abs_v": num(res.v.max_modulus()),
    });
    if let Some(v) = reference {
        out.function("reference.csv", &v, "V")?;
        out.plot("reference", "r", "V", xy(&v))?;
        let lo = 0.5f64.min(0.1 * o.r_max);
        let hi = o.r_max - lo;
        let err = (0..rg.len())
            .filter(|i| rg.x(*i) >= lo && rg.x(*i) <= hi)
            .map(|i| (res.v.at(i) - v.at(i)).abs())
            .fold(0.0, f64::max);
        summary["interior"] = json!([lo, hi]);
        summary["sup_error"] = num(err);
    }
    Ok(summary)
}

fn scatter(cfg: &RunConfig, o: &ScatterOptions, out: &mut Output) -> Result<Value, CliError> {
    let s = source(cfg)?;
    let ks = wavenumbers(&o.k, o.k_min, o.k_max, o.k_count);
    let data = rt_coefficients(&s.u, &ks).map_err(from_module("eigensolve", "rt_coefficients"))?;
    let mut buf = Vec::new();
    data.write_csv(&mut buf).map_err(from_module("eigensolve", "rt_coefficients"))?;
    out.bytes("scattering.csv", &buf)?;
    let (r, t) = (data.reflection_moduli(), data.transmission_moduli());
    out.plot("abs_R", "k", "|R|", ks.iter().copied().zip(r.iter().copied()))?;
    out.plot("abs_T", "k", "|T|", ks.iter().copied().zip(t.iter().copied()))?;
    Ok(json!({
        "wavenumbers": nums(&ks),
        "abs_R": nums(&r),
        "abs_T": nums(&t),
        "flux_defect": num(data.flux_defect()),
    }))
}
