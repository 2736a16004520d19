use crate::{Outcome, TolArgs};
use mvt_core::estimate::{
    moment_weights, mom_mixture, read_data, sample as draw, sample_moments, EstimateOptions, MixtureModel, StartSource,
};
use mvt_core::homotopy::{ed_degree, monodromy_count, MonodromyOptions, TrackerOptions};
use mvt_core::moments::{cumulants, moments as moment_seq, DistributionKind};
use mvt_core::varieties::{
    build_matrix, degree_formula, generators as minors, groebner_degree_check, hilbert_closed_form,
    secant_jacobian_rank, singular_probe, verify_kernel, verify_vanishing, FamilyId, PointSpec, Stratum,
};
use mvt_core::{Error, Result};
use rayon::prelude::*;
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

fn family(s: &str) -> Result<FamilyId> {
    s.parse()
}

fn distribution(s: &str) -> Result<DistributionKind> {
    let f = family(s)?;
    if f.is_cumulant() {
        return Err(Error::Unsupported(format!("{f} is a cumulant variety; use ig or gamma")));
    }
    Ok(f.distribution())
}

fn tracker(tol: &TolArgs) -> Result<TrackerOptions> {
    let opts = TrackerOptions { tol_corrector: tol.tol_corrector, tol_dedup: tol.tol_dedup, ..Default::default() };
    opts.validate()?;
    Ok(opts)
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports are serializable")
}

pub fn moments(fam: &str, d: usize) -> Result<Outcome> {
    let f = family(fam)?;
    let kind = f.distribution();
    let (key, polys): (&str, Vec<String>) = if f.is_cumulant() {
        ("cumulants", cumulants(kind, d)?.entries().iter().map(|p| p.to_canonical_string()).collect())
    } else {
        ("moments", moment_seq(kind, d).entries().iter().map(|p| p.to_canonical_string()).collect())
    };
    let mut text = String::new();
    let (first, name) = if f.is_cumulant() { (1, "kappa") } else { (0, "m") };
    for (i, p) in polys.iter().enumerate() {
        let _ = writeln!(text, "{name}{} = {p}", i + first);
    }
    Ok(Outcome::ok(json!({ "kind": kind, "family": f, "d": d, key: polys }), text))
}

pub fn matrix(fam: &str, d: usize) -> Result<Outcome> {
    let f = family(fam)?;
    let h = build_matrix(f, d)?;
    let rows: Vec<Vec<String>> =
        (0..h.rows()).map(|r| h.row(r).iter().map(|p| p.to_canonical_string()).collect()).collect();
    let mut text = String::new();
    for row in &rows {
        let _ = writeln!(text, "[ {} ]", row.join(" | "));
    }
    Ok(Outcome::ok(json!({ "family": f, "d": d, "rows": h.rows(), "cols": h.cols(), "matrix": rows }), text))
}

pub fn generators(fam: &str, d: usize) -> Result<Outcome> {
    let f = family(fam)?;
    let gens: Vec<String> = minors(f, d)?.iter().map(|g| g.to_canonical_string()).collect();
    let text = gens.iter().map(|g| format!("{g}\n")).collect();
    Ok(Outcome::ok(json!({ "family": f, "d": d, "count": gens.len(), "generators": gens }), text))
}

pub fn verify(fam: Option<&str>, d: Option<usize>, dmax: usize) -> Result<Outcome> {
    let families = match fam {
        Some(s) => vec![family(s)?],
        None => FamilyId::ALL.to_vec(),
    };
    let mut reports = Vec::new();
    for f in families {
        let ds: Vec<usize> = match d {
            Some(d) => vec![d],
            None => (f.min_d()..=dmax).collect(),
        };
        for d in ds {
            reports.push(verify_kernel(f, d)?);
            reports.push(verify_vanishing(f, d)?);
        }
    }
    let ok = reports.iter().all(|r| r.pass);
    let mut text = String::new();
    for r in &reports {
        let _ = writeln!(text, "{:<10} d={:<3} {:<10} {}", r.family, r.d, r.check, if r.pass { "pass" } else { "FAIL" });
    }
    Ok(Outcome { json: json!({ "pass": ok, "checks": reports }), text, ok })
}

pub fn hilbert(fam: &str, d: Option<usize>, dmax: usize) -> Result<Outcome> {
    let f = family(fam)?;
    let ds: Vec<usize> = match d {
        Some(d) => vec![d],
        None => (3..=dmax).collect(),
    };
    let with_initial = matches!(f, FamilyId::IG | FamilyId::Gamma);
    let mut rows = Vec::new();
    let mut text = String::new();
    let mut ok = true;
    for d in ds {
        let series = hilbert_closed_form(f, d)?;
        let degree = degree_formula(f, d)?;
        let check = if with_initial { Some(groebner_degree_check(f, d)?) } else { None };
        let pass = series.degree() == degree as i64 && check.as_ref().is_none_or(|c| c.pass);
        ok &= pass;
        let _ = writeln!(
            text,
            "{f} d={d}: H = {series}, degree {degree}{}",
            match &check {
                Some(c) if c.pass => ", initial ideal agrees",
                Some(_) => ", initial ideal DISAGREES",
                None => "",
            }
        );
        rows.push(json!({ "d": d, "closed_form": series, "degree": degree, "groebner_check": check, "pass": pass }));
    }
    Ok(Outcome { json: json!({ "family": f, "series": rows }), text, ok })
}

pub fn singular(fam: &str, d: usize, stratum: Option<&str>, points: u64, seed: u64) -> Result<Outcome> {
    let f = family(fam)?;
    let strata = match stratum {
        Some(s) => vec![s.parse::<Stratum>()?],
        None => Stratum::ALL.to_vec(),
    };
    let mut reports = Vec::new();
    let mut text = String::new();
    for s in strata {
        let mut singular = 0;
        for i in 0..points {
            let r = singular_probe(f, d, &PointSpec::Stratum(s), seed.wrapping_add(i))?;
            singular += r.singular as usize;
            reports.push(r);
        }
        let last = reports.last().expect("at least one point");
        let _ = writeln!(
            text,
            "{f} d={d} {:<14} rank {} codim {}: {singular}/{points} singular",
            s.label(),
            last.rank,
            last.codim
        );
    }
    Ok(Outcome::ok(json!({ "family": f, "d": d, "seed": seed, "probes": reports }), text))
}

pub fn defect(fam: &str, dmax: usize, kmax: usize, seed: u64) -> Result<Outcome> {
    let f = family(fam)?;
    if dmax < 3 || kmax < 2 {
        return Err(Error::InvalidArgument("the sweep needs dmax >= 3 and kmax >= 2".into()));
    }
    let cells: Vec<(usize, usize)> = (3..=dmax).flat_map(|d| (2..=kmax).map(move |k| (d, k))).collect();
    let total = cells.len();
    let reports = cells
        .par_iter()
        .map(|&(d, k)| {
            let r = secant_jacobian_rank(f, d, k, seed)?;
            eprintln!("defect {f} d={d} k={k}: rank {} of {} ({} cells)", r.rank, r.expected, total);
            Ok(r)
        })
        .collect::<Result<Vec<_>>>()?;
    let ok = reports.iter().all(|r| r.nondefective);
    let mut text = format!("{:>4} {:>3} {:>5} {:>8}  ok\n", "d", "k", "rank", "expected");
    for r in &reports {
        let _ = writeln!(text, "{:>4} {:>3} {:>5} {:>8}  {}", r.d, r.k, r.rank, r.expected, if r.nondefective { "ok" } else { "DEFECTIVE" });
    }
    let rows: Vec<Value> = reports
        .iter()
        .map(|r| json!({ "d": r.d, "k": r.k, "rank": r.rank, "expected": r.expected, "ok": r.nondefective }))
        .collect();
    Ok(Outcome { json: json!({ "family": f, "dmax": dmax, "kmax": kmax, "seed": seed, "cells": rows }), text, ok })
}

pub fn eddeg(fam: &str, seed: u64, tol: &TolArgs) -> Result<Outcome> {
    let f = family(fam)?;
    let r = ed_degree(f, seed, &tracker(tol)?)?;
    let s = &r.solve;
    let mut text = format!(
        "{f}: ED degree {} ({} paths: {} converged, {} at infinity, {} failed)\n",
        r.count, s.paths_tracked, s.converged, s.at_infinity, s.failed
    );
    if let Some(w) = &s.warning {
        let _ = writeln!(text, "warning: {w}");
    }
    Ok(Outcome::ok(to_json(&r), text))
}

pub fn iddeg(fam: &str, k: usize, seed: u64, stall_loops: usize, max_loops: usize, tol: &TolArgs) -> Result<Outcome> {
    let kind = distribution(fam)?;
    let opts = MonodromyOptions { tracker: tracker(tol)?, stall_loops, max_loops };
    let r = monodromy_count(kind, k, &opts, seed)?;
    let text = format!(
        "{kind} k={k}: at least {} solutions up to relabeling ({} raw) after {} loops, {}\n",
        r.class_count,
        r.raw_count,
        r.loops,
        if r.stalled { "stalled" } else { "loop limit reached" }
    );
    Ok(Outcome::ok(to_json(&r), text))
}

fn parse_floats(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| Error::InvalidArgument(format!("bad {what} `{v}`: {e}"))))
        .collect()
}

fn parse_model(kind: DistributionKind, params: &str, weights: Option<&str>) -> Result<MixtureModel> {
    let comps: Vec<Vec<f64>> = params.split(';').map(|c| parse_floats(c, "parameter")).collect::<Result<_>>()?;
    if let Some(c) = comps.iter().find(|c| c.len() != kind.arity()) {
        return Err(Error::InvalidArgument(format!("{kind} takes {} parameters per component, got {c:?}", kind.arity())));
    }
    let w = match weights {
        Some(w) => parse_floats(w, "weight")?,
        None => vec![1.0 / comps.len() as f64; comps.len()],
    };
    MixtureModel::new(kind, comps, w)
}

pub fn sample(fam: &str, params: &str, weights: Option<&str>, n: usize, seed: u64) -> Result<Outcome> {
    let kind = distribution(fam)?;
    let model = parse_model(kind, params, weights)?;
    let data = draw(&model, n, seed)?;
    let mut text = String::with_capacity(data.len() * 20);
    for x in &data {
        let _ = writeln!(text, "{x}");
    }
    Ok(Outcome::ok(json!({ "kind": kind, "model": model, "n": n, "seed": seed, "data": data }), text))
}

pub struct EstimateArgs<'a> {
    pub family: &'a str,
    pub k: usize,
    pub d: Option<usize>,
    pub input: Option<&'a Path>,
    pub cache_dir: Option<PathBuf>,
    pub seed: u64,
    pub efficient_weights: bool,
    pub least_squares_fallback: bool,
    pub reality_tol: f64,
    pub positivity_margin: f64,
    pub tol: &'a TolArgs,
}

pub fn estimate(a: &EstimateArgs) -> Result<Outcome> {
    let kind = distribution(a.family)?;
    let data = match a.input {
        Some(p) if p != Path::new("-") => {
            let f = std::fs::File::open(p).map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", p.display())))?;
            read_data(f)?
        }
        _ => read_data(std::io::stdin().lock())?,
    };
    let square = (kind.arity() + 1) * a.k.max(1) - 1;
    let d = a.d.unwrap_or(if a.k > 1 { square + 1 } else { kind.arity() });
    let m = sample_moments(&data, d)?;
    let opts = EstimateOptions {
        tracker: tracker(a.tol)?,
        cache_dir: a.cache_dir.clone(),
        weight_matrix: if a.efficient_weights { Some(moment_weights(&data, d)?) } else { None },
        reality_tol: a.reality_tol,
        positivity_margin: a.positivity_margin,
        least_squares_fallback: a.least_squares_fallback,
        seed: a.seed,
        ..Default::default()
    };
    let report = mom_mixture(kind, a.k, &m, &opts)?;
    if report.start_source == Some(StartSource::Built) {
        eprintln!("built the {kind} k={} start set by monodromy ({} solutions)", a.k, report.start_count);
    }

    let mut text = format!(
        "{kind} k={} from n={} with d={}: {} candidate(s) among {} complex solutions\n",
        a.k,
        data.len(),
        d,
        report.candidates.len(),
        report.complex_count
    );
    for c in &report.candidates {
        let comps: Vec<String> = c
            .components
            .iter()
            .map(|p| p.iter().map(|(k, v)| format!("{k}={v:.6}")).collect::<Vec<_>>().join(" "))
            .collect();
        let weights: Vec<String> = c.weights.iter().map(|w| format!("{w:.6}")).collect();
        let _ = writeln!(
            text,
            "#{} residual {:.3e}{}  weights [{}]  {}",
            c.rank,
            c.residual,
            if c.admissible { "" } else { " (least squares)" },
            weights.join(", "),
            comps.join(" ; ")
        );
    }
    for w in &report.warnings {
        let _ = writeln!(text, "warning: {w}");
    }
    let mut json = to_json(&report);
    json["n"] = json!(data.len());
    json["moments"] = json!(m.values);
    json["efficient_weights"] = json!(a.efficient_weights);
    Ok(Outcome::ok(json, text))
}
