//! The commands. Each returns a [`Summary`]; input problems come back as
//! [`Failure`] and map to exit code 2.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ddvv_core::catalog::{builtin_components, builtin_names};
use ddvv_core::construction::phi_jets_with;
use ddvv_core::geometry::{austere_test, canonical_frame_lenient, fundamental_forms_with};
use ddvv_core::surface::check_isotropy;
use ddvv_core::transforms::{
    apply_map, associated_compare, austere_map_for, holo_invert, model_space_normal, quadric_value, shape_law_check,
    MapKind, QuadricKind,
};
use ddvv_core::{
    ddvv_residual, fundamental_forms, phi_jets, sample_grid, AmbientMap, ChartPoint, DdvvReport, Domain, Error,
    GridSpec, HolomorphicCurve, PhiJet, ShapeData, Tolerances,
};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{ConfigError, RunConfig};
use crate::summary::Summary;

/// Double inversion must return the curve to this relative accuracy.
const INVOLUTION_TOL: f64 = 1e-10;

#[derive(Debug)]
pub enum Failure {
    Config(ConfigError),
    Input(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "config error: {e}"),
            Failure::Input(m) => write!(f, "input error: {m}"),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::Input(format!("cannot write {}: {e}", path.display()))
}

pub struct Context {
    pub cfg: RunConfig,
    pub out: Option<PathBuf>,
    pub pool: rayon::ThreadPool,
}

impl Context {
    fn tol(&self) -> &Tolerances {
        &self.cfg.tol.core
    }

    fn curve(&self) -> &HolomorphicCurve {
        &self.cfg.curve
    }

    fn par_map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        // Indexed collect keeps the input order.
        self.pool.install(|| items.par_iter().map(f).collect())
    }

    fn grid_points(&self) -> Result<Vec<ChartPoint>, Failure> {
        sample_grid(&self.cfg.grid, &self.curve().domain).map_err(grid_failure)
    }

    /// `(u, v)` nodes only, for checks on the curve itself.
    fn base_points(&self) -> Result<Vec<Complex64>, Failure> {
        let spec = GridSpec { n: 2, ..self.cfg.grid.clone() };
        let pts = sample_grid(&spec, &self.curve().domain).map_err(grid_failure)?;
        Ok(pts.iter().map(ChartPoint::z).collect())
    }

    /// Path for the main artifact: `--out` first, then the config entry.
    fn artifact(&self, configured: &Option<PathBuf>) -> Option<PathBuf> {
        self.out.clone().or_else(|| configured.clone())
    }

    /// Construction commands need `n >= 3` and an isotropic curve.
    fn require_construction(&self) -> Result<(), Failure> {
        let n = self.curve().n();
        if n < 3 {
            return Err(Failure::Config(
                self.cfg.error_at("curve", format!("construction commands need n >= 3, the curve has n = {n}")),
            ));
        }
        let zs = self.base_points()?;
        let worst = isotropy_scan(self.curve(), &zs);
        if let Some((rel, z)) = worst {
            if rel.is_nan() || rel > self.cfg.tol.isotropy {
                return Err(Failure::Input(format!(
                    "curve {:?} is not isotropic: |<<G', G'>>| / |G'|^2 = {rel:.3e} > {:.3e} at z = {}",
                    self.curve().name,
                    self.cfg.tol.isotropy,
                    fmt_z(z)
                )));
            }
        }
        Ok(())
    }
}

fn grid_failure(e: Error) -> Failure {
    match e {
        Error::EmptyGrid => Failure::Input("EmptyGrid: no grid point lies inside the curve domain".into()),
        e => Failure::Input(e.to_string()),
    }
}

fn fmt_point(p: &ChartPoint) -> String {
    let theta: Vec<String> = p.theta.iter().map(|t| format!("{t:.6}")).collect();
    format!("(u={:.6}, v={:.6}, theta=[{}])", p.u, p.v, theta.join(", "))
}

fn fmt_z(z: Complex64) -> String {
    format!("{:.6}{:+.6}i", z.re, z.im)
}

/// Worst relative isotropy and where it occurs. Evaluation errors count as
/// infinitely bad.
fn isotropy_scan(c: &HolomorphicCurve, zs: &[Complex64]) -> Option<(f64, Complex64)> {
    let mut worst: Option<(f64, Complex64)> = None;
    for &z in zs {
        let rel = match c.isotropy_at(z) {
            Ok((q, speed)) if speed > 0.0 => q.norm() / (speed * speed),
            Ok(_) | Err(_) => f64::INFINITY,
        };
        if worst.is_none_or(|(w, _)| rel > w) {
            worst = Some((rel, z));
        }
    }
    worst
}

// ---- sample records ----

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct Flags {
    pub regular: bool,
    pub singular: bool,
    pub minimal: bool,
    pub umbilic: bool,
    pub degenerate: bool,
}

/// One line of the sample file.
#[derive(Debug, Clone, Serialize)]
pub struct SampleRecord {
    pub index: usize,
    pub u: f64,
    pub v: f64,
    pub theta: Vec<f64>,
    pub phi: Option<Vec<f64>>,
    pub s: Option<f64>,
    pub s_n: Option<f64>,
    pub h2: Option<f64>,
    pub residual: Option<f64>,
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    pub flags: Flags,
    pub rank_margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub canonical_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape_law: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub austere: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SampleRecord {
    fn new(index: usize, p: &ChartPoint) -> Self {
        Self {
            index,
            u: p.u,
            v: p.v,
            theta: p.theta.clone(),
            phi: None,
            s: None,
            s_n: None,
            h2: None,
            residual: None,
            lambda: None,
            mu: None,
            flags: Flags::default(),
            rank_margin: None,
            canonical_residual: None,
            shape_law: None,
            austere: None,
            error: None,
        }
    }

    fn fill(&mut self, r: &DdvvReport) {
        self.s = Some(r.s);
        self.s_n = Some(r.s_n);
        self.h2 = Some(r.h2);
        self.residual = Some(r.residual);
        self.lambda = r.lambda.is_finite().then_some(r.lambda);
        self.mu = r.mu.is_finite().then_some(r.mu);
        self.flags.minimal = r.flags.minimal_point;
        self.flags.umbilic = r.flags.umbilic_point;
        self.flags.degenerate = r.flags.degenerate;
    }
}

/// Measured quantities of one sample: `(check, value, limit)`.
type Measures = Vec<(&'static str, f64, f64)>;

struct Sample {
    record: SampleRecord,
    measures: Measures,
}

/// `phi` and its fundamental forms. `None` for the forms at singular points.
fn construct(
    c: &HolomorphicCurve,
    p: &ChartPoint,
    tol: &Tolerances,
    rec: &mut SampleRecord,
) -> Option<(PhiJet, ShapeData)> {
    let pj = match phi_jets(c, p, tol) {
        Ok(pj) => pj,
        Err(e) => {
            rec.flags.degenerate = matches!(e, Error::DegeneratePoint(_) | Error::NullConjugate(_));
            rec.error = Some(e.to_string());
            return None;
        }
    };
    rec.phi = Some(pj.phi.value());
    rec.rank_margin = Some(pj.rank_margin);
    if pj.singular {
        rec.flags.singular = true;
        return None;
    }
    match fundamental_forms(&pj.phi, tol) {
        Ok(sd) => {
            rec.flags.regular = true;
            Some((pj, sd))
        }
        Err(e) => {
            rec.flags.singular = matches!(e, Error::SingularPoint(_));
            rec.error = Some(e.to_string());
            None
        }
    }
}

fn verify_sample(ctx: &Context, index: usize, p: &ChartPoint) -> Sample {
    let tol = ctx.tol();
    let mut record = SampleRecord::new(index, p);
    let mut measures = Vec::new();
    if let Some((_, sd)) = construct(ctx.curve(), p, tol, &mut record) {
        let r = ddvv_residual(&sd, 0.0, tol);
        record.fill(&r);
        measures.push(("equality", r.residual.abs(), r.equality_tolerance(tol)));
    }
    Sample { record, measures }
}

fn canonical_sample(ctx: &Context, index: usize, p: &ChartPoint) -> Sample {
    let tol = ctx.tol();
    let mut record = SampleRecord::new(index, p);
    let mut measures = Vec::new();
    if let Some((_, sd)) = construct(ctx.curve(), p, tol, &mut record) {
        let r = ddvv_residual(&sd, 0.0, tol);
        record.fill(&r);
        // Measure the deviation here rather than letting the frame reject it.
        let loose = Tolerances { tol_canonical: f64::INFINITY, ..*tol };
        match canonical_frame_lenient(&sd, &loose) {
            Ok(cf) => {
                record.canonical_residual = Some(cf.residual);
                record.lambda = Some(cf.lambda);
                record.mu = Some(cf.mu);
                let limit = tol.tol_canonical * (cf.lambda.abs() + cf.mu).max(1.0);
                measures.push(("form", cf.residual, limit));
            }
            Err(e) => record.error = Some(e.to_string()),
        }
    }
    Sample { record, measures }
}

fn transform_sample(ctx: &Context, m: &AmbientMap, index: usize, p: &ChartPoint) -> Sample {
    let tol = ctx.tol();
    let mut record = SampleRecord::new(index, p);
    let mut measures = Vec::new();
    let Some((pj, before)) = construct(ctx.curve(), p, tol, &mut record) else {
        return Sample { record, measures };
    };
    let mut run = || -> Result<(), Error> {
        let img = apply_map(m, &pj.phi)?;
        record.phi = Some(img.value());
        let after = fundamental_forms_with(&img, m.output_signature(), tol)?;
        // Inside S_d or H_d the inequality is checked with the radial
        // normal removed; the extrinsic curvatures then carry no ambient term.
        let inside = match model_space_normal(m, &img.value()) {
            Some(radial) => after.restrict_normals(&radial, tol.eps_rank)?,
            None => after.clone(),
        };
        let r = ddvv_residual(&inside, 0.0, tol);
        record.fill(&r);
        measures.push(("equality", r.residual.abs(), r.equality_tolerance(tol)));
        let mut worst: f64 = 0.0;
        for xi in &before.normals {
            worst = worst.max(shape_law_check(m, &before, &after, xi)?.relative);
        }
        record.shape_law = Some(worst);
        measures.push(("shape-law", worst, ctx.cfg.tol.shape_law));
        Ok(())
    };
    if let Err(e) = run() {
        record.error = Some(e.to_string());
    }
    Sample { record, measures }
}

/// `|lambda| / (|lambda| + mu)` inside the model space attached to `m`.
fn austere_sample(ctx: &Context, m: &AmbientMap, index: usize, p: &ChartPoint) -> Sample {
    let tol = ctx.tol();
    let mut record = SampleRecord::new(index, p);
    let mut measures = Vec::new();
    let Some((pj, _)) = construct(ctx.curve(), p, tol, &mut record) else {
        return Sample { record, measures };
    };
    let mut run = || -> Result<(), Error> {
        let img = apply_map(m, &pj.phi)?;
        record.phi = Some(img.value());
        let after = fundamental_forms_with(&img, m.output_signature(), tol)?;
        let inside = match model_space_normal(m, &img.value()) {
            Some(radial) => after.restrict_normals(&radial, tol.eps_rank)?,
            None => after,
        };
        let r = ddvv_residual(&inside, 0.0, tol);
        record.fill(&r);
        let cf = canonical_frame_lenient(&inside, &Tolerances { tol_canonical: f64::INFINITY, ..*tol })?;
        record.lambda = Some(cf.lambda);
        record.mu = Some(cf.mu);
        record.austere = Some(austere_test(&cf, tol.tol_canonical));
        let denom = cf.lambda.abs() + cf.mu;
        let ratio = if denom > 0.0 { cf.lambda.abs() / denom } else { 0.0 };
        measures.push(("austere", ratio, tol.tol_canonical));
        Ok(())
    };
    if let Err(e) = run() {
        record.error = Some(e.to_string());
    }
    Sample { record, measures }
}

/// Folds samples into the summary and writes the sample file if asked.
fn finish_samples(
    ctx: &Context,
    summary: &mut Summary,
    points: &[ChartPoint],
    samples: &[Sample],
    path: Option<PathBuf>,
) -> Result<(), Failure> {
    let mut regular = 0;
    let mut singular = 0;
    let mut errors = 0;
    for (p, s) in points.iter().zip(samples) {
        regular += s.record.flags.regular as usize;
        singular += s.record.flags.singular as usize;
        errors += s.record.error.is_some() as usize;
        let at = fmt_point(p);
        for &(name, value, limit) in &s.measures {
            summary.record(name, value, limit, &at);
        }
    }
    summary.note(format!(
        "curve {:?} (n = {}), {} samples: {regular} regular, {singular} singular, {errors} with errors",
        ctx.curve().name,
        ctx.curve().n(),
        points.len()
    ));
    if let Some(path) = path {
        write_ndjson(&path, samples.iter().map(|s| &s.record))?;
        summary.note(format!("wrote {} records to {}", samples.len(), path.display()));
    }
    Ok(())
}

fn write_ndjson<'a>(path: &Path, records: impl Iterator<Item = &'a SampleRecord>) -> Result<(), Failure> {
    let file = File::create(path).map_err(|e| io_failure(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|e| Failure::Input(e.to_string()))?;
        w.write_all(b"\n").map_err(|e| io_failure(path, e))?;
    }
    w.flush().map_err(|e| io_failure(path, e))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Input(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| io_failure(path, e))
}

// ---- commands ----

pub fn isotropy(ctx: &Context) -> Result<Summary, Failure> {
    let mut summary = Summary::new("isotropy");
    summary.expect("curve", "|<<G', G'>>| / |G'|^2");
    let zs = ctx.base_points()?;
    let c = ctx.curve();
    let per_point = ctx.par_map(&zs, |&z| c.isotropy_at(z));
    for (z, r) in zs.iter().zip(&per_point) {
        let at = format!("z = {}", fmt_z(*z));
        match r {
            Ok((q, speed)) if *speed > 0.0 => {
                summary.record("curve", q.norm() / (speed * speed), ctx.cfg.tol.isotropy, &at)
            }
            Ok(_) => summary.record("curve", f64::INFINITY, ctx.cfg.tol.isotropy, &at),
            Err(e) => {
                summary.note(format!("evaluation failed at {at}: {e}"));
                summary.record("curve", f64::INFINITY, ctx.cfg.tol.isotropy, &at);
            }
        }
    }
    let ok: Vec<Complex64> = zs.iter().zip(&per_point).filter(|(_, r)| r.is_ok()).map(|(z, _)| *z).collect();
    if let Ok(rep) = check_isotropy(c, &ok) {
        summary.note(format!(
            "curve {:?} (n = {}), {} points, max |<<G', G'>>| {:.3e}, min |G'| {:.3e}",
            c.name,
            c.n(),
            zs.len(),
            rep.max_isotropy,
            rep.min_speed
        ));
        if let Some(path) = ctx.artifact(&ctx.cfg.output.report) {
            write_json(
                &path,
                &json!({
                    "curve": c.name,
                    "points": zs.len(),
                    "max_isotropy": rep.max_isotropy,
                    "max_relative": rep.max_relative,
                    "min_speed": rep.min_speed,
                    "tolerance": ctx.cfg.tol.isotropy,
                }),
            )?;
        }
    }
    Ok(summary)
}

pub fn verify(ctx: &Context) -> Result<Summary, Failure> {
    ctx.require_construction()?;
    let points = ctx.grid_points()?;
    let samples: Vec<Sample> = ctx.par_map(&indexed(&points), |(i, p)| verify_sample(ctx, *i, p));
    let mut summary = Summary::new("verify");
    summary.expect("equality", "|s - (|H|^2 - s_N)|");
    finish_samples(ctx, &mut summary, &points, &samples, ctx.artifact(&ctx.cfg.output.samples))?;
    Ok(summary)
}

pub fn build(ctx: &Context) -> Result<Summary, Failure> {
    ctx.require_construction()?;
    let Some(path) = ctx.artifact(&ctx.cfg.output.samples) else {
        return Err(Failure::Config(ctx.cfg.error_at("output", "build needs --out or output.samples")));
    };
    let points = ctx.grid_points()?;
    let samples: Vec<Sample> = ctx.par_map(&indexed(&points), |(i, p)| verify_sample(ctx, *i, p));
    let mut summary = Summary::new("build");
    summary.expect("equality", "|s - (|H|^2 - s_N)|");
    finish_samples(ctx, &mut summary, &points, &samples, Some(path))?;
    if let Some(obj) = &ctx.cfg.output.obj {
        let (verts, faces) = write_obj_slice(ctx, obj)?;
        summary.note(format!("wrote OBJ slice with {verts} vertices and {faces} faces to {}", obj.display()));
    }
    Ok(summary)
}

pub fn canonical(ctx: &Context) -> Result<Summary, Failure> {
    ctx.require_construction()?;
    let points = ctx.grid_points()?;
    let samples: Vec<Sample> = ctx.par_map(&indexed(&points), |(i, p)| canonical_sample(ctx, *i, p));
    let mut summary = Summary::new("canonical");
    summary.expect("form", "deviation from the equality form");
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut mu_lo, mut mu_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut umbilic, mut minimal) = (0, 0);
    for s in &samples {
        if s.record.canonical_residual.is_some() {
            let (l, m) = (s.record.lambda.unwrap_or(f64::NAN), s.record.mu.unwrap_or(f64::NAN));
            lo = lo.min(l);
            hi = hi.max(l);
            mu_lo = mu_lo.min(m);
            mu_hi = mu_hi.max(m);
            umbilic += s.record.flags.umbilic as usize;
            minimal += s.record.flags.minimal as usize;
        }
    }
    if lo <= hi {
        summary.note(format!(
            "lambda in [{lo:.6}, {hi:.6}], mu in [{mu_lo:.6}, {mu_hi:.6}], {umbilic} umbilic, {minimal} minimal"
        ));
    }
    finish_samples(ctx, &mut summary, &points, &samples, ctx.artifact(&ctx.cfg.output.samples))?;
    Ok(summary)
}

pub fn transform(ctx: &Context) -> Result<Summary, Failure> {
    ctx.require_construction()?;
    let Some(m) = ctx.cfg.map.clone() else {
        return Err(Failure::Config(ctx.cfg.error_at("transform", "transform needs an ambient map in `transform`")));
    };
    match m.kind {
        MapKind::EuclideanInversion { .. } | MapKind::StereoPlaneToSphere { .. } | MapKind::StereoBallToHyp { .. } => {}
        _ => {
            return Err(Failure::Config(ctx.cfg.error_at(
                "transform",
                "the construction lives in Euclidean space; use euclidean_inversion, stereo_plane_to_sphere or stereo_ball_to_hyp",
            )))
        }
    }
    let points = ctx.grid_points()?;
    let samples: Vec<Sample> = ctx.par_map(&indexed(&points), |(i, p)| transform_sample(ctx, &m, *i, p));
    let mut summary = Summary::new("transform");
    summary.expect("equality", "|s - (|H|^2 - s_N)| after the map");
    summary.expect("shape-law", "relative shape-law residual");
    finish_samples(ctx, &mut summary, &points, &samples, ctx.artifact(&ctx.cfg.output.samples))?;
    Ok(summary)
}

fn quadric_label(kind: QuadricKind) -> &'static str {
    kind.label()
}

pub fn quadric(ctx: &Context) -> Result<Summary, Failure> {
    let c = ctx.curve();
    let d = ctx.cfg.holo_d;
    let tol = ctx.tol();
    let zs = ctx.base_points()?;
    let values: Vec<_> = ctx.par_map(&zs, |&z| quadric_value(c, z));
    let mut vals = Vec::with_capacity(values.len());
    for (z, v) in zs.iter().zip(values) {
        vals.push(v.map_err(|e| Failure::Input(format!("<<G, G>> at z = {}: {e}", fmt_z(*z))))?);
    }
    let four = 4.0 * d * d;
    let limit = tol.tol_quadric * four.max(1.0);
    // Same rule as the classifier: the candidate with the smallest worst
    // deviation wins.
    let candidates =
        [(QuadricKind::Zero, 0.0), (QuadricKind::PlusFourDSquared, four), (QuadricKind::MinusFourDSquared, -four)];
    let (kind, k, _) = candidates
        .iter()
        .map(|&(kind, k)| {
            let dev = vals.iter().map(|q| (q - k).norm()).fold(0.0, f64::max);
            (kind, k, dev)
        })
        .min_by(|a, b| a.2.total_cmp(&b.2))
        .expect("three candidates");
    let offset = ddvv_core::transforms::quadric_classify(c, &zs, d, tol.tol_quadric)
        .map_err(|e| Failure::Input(e.to_string()))?
        .offset_kind;

    let mut summary = Summary::new("quadric");
    summary.expect("constant", "|<<G, G>> - k|");
    for (z, q) in zs.iter().zip(&vals) {
        summary.record("constant", (q - k).norm(), limit, &format!("z = {}", fmt_z(*z)));
    }
    let constant = vals.iter().all(|q| (q - k).norm() <= limit);
    let shown = if constant { quadric_label(kind) } else { "nonconstant" };
    summary.note(format!(
        "curve {:?}, d = {d}: <<G, G>> is {shown} (nearest k = {k}); with the offset coordinate 2d: {}",
        c.name,
        offset.label()
    ));

    let mut report = json!({
        "curve": c.name,
        "d": d,
        "kind": shown,
        "k": if constant { Some(k) } else { None },
        "offset_kind": offset.label(),
    });
    if constant && c.n() >= 3 {
        ctx.require_construction()?;
        let m = austere_map_for(kind, d, c.ambient_dim())
            .map_err(|e| Failure::Input(e.to_string()))?
            .expect("constant kinds have a map");
        let target = match m.kind {
            MapKind::StereoPlaneToSphere { .. } => "S_d",
            MapKind::StereoBallToHyp { .. } => "H_d",
            _ => "R^{n+2} after inversion at the origin",
        };
        summary.note(format!("austere check in {target}"));
        summary.expect("austere", "|lambda| / (|lambda| + mu)");
        let points = ctx.grid_points()?;
        let samples: Vec<Sample> = ctx.par_map(&indexed(&points), |(i, p)| austere_sample(ctx, &m, *i, p));
        let hits = samples.iter().filter(|s| s.record.austere == Some(true)).count();
        let measured = samples.iter().filter(|s| s.record.austere.is_some()).count();
        summary.note(format!("{hits} of {measured} measured samples austere"));
        report["austere_in"] = json!(target);
        report["austere_samples"] = json!(hits);
        report["measured_samples"] = json!(measured);
        finish_samples(ctx, &mut summary, &points, &samples, ctx.cfg.output.samples.clone())?;
    }
    if let Some(path) = ctx.artifact(&ctx.cfg.output.report) {
        write_json(&path, &report)?;
    }
    Ok(summary)
}

pub fn invert_holo(ctx: &Context) -> Result<Summary, Failure> {
    let c = ctx.curve();
    let d = ctx.cfg.holo_d;
    let zs = ctx.base_points()?;
    let mut summary = Summary::new("invert-holo");
    summary.expect("isotropy", "|<<G', G'>>| / |G'|^2 of T_d G");
    summary.expect("involution", "|T_d T_d G - G| / max(1, |G|)");
    let inv = match holo_invert(c, d, &zs, ctx.tol()) {
        Ok(inv) => inv,
        Err(e @ Error::NullQuadricCurve) => {
            summary.note(format!("curve {:?}: {e}", c.name));
            return Ok(summary);
        }
        Err(e) => return Err(Failure::Input(e.to_string())),
    };
    let twice = holo_invert(&inv, d, &zs, ctx.tol()).map_err(|e| Failure::Input(e.to_string()))?;
    let checks = ctx.par_map(&zs, |&z| -> Result<(f64, f64), Error> {
        let (q, speed) = inv.isotropy_at(z)?;
        let iso = if speed > 0.0 { q.norm() / (speed * speed) } else { f64::INFINITY };
        let a = c.eval(z)?;
        let b = twice.eval(z)?;
        let size = a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let gap = a.iter().zip(&b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
        Ok((iso, gap / size.max(1.0)))
    });
    for (z, r) in zs.iter().zip(checks) {
        let at = format!("z = {}", fmt_z(*z));
        match r {
            Ok((iso, inv_gap)) => {
                summary.record("isotropy", iso, ctx.cfg.tol.isotropy, &at);
                summary.record("involution", inv_gap, INVOLUTION_TOL, &at);
            }
            Err(e) => {
                summary.note(format!("evaluation failed at {at}: {e}"));
                summary.record("isotropy", f64::INFINITY, ctx.cfg.tol.isotropy, &at);
            }
        }
    }
    let components: Vec<String> = inv.components.iter().map(|e| e.to_string()).collect();
    let domain = match inv.domain {
        Domain::Plane => json!("plane"),
        Domain::Disk { radius } => json!({ "disk": radius }),
    };
    let spec = json!({
        "curve": {
            "name": inv.name,
            "n": inv.n(),
            "components": components,
            "domain": domain,
        }
    });
    if let Some(path) = ctx.artifact(&ctx.cfg.output.curve) {
        write_json(&path, &spec)?;
        summary.note(format!("wrote inverted curve {:?} to {}", inv.name, path.display()));
    }
    Ok(summary)
}

pub fn associated_pair(ctx: &Context) -> Result<Summary, Failure> {
    ctx.require_construction()?;
    let c = ctx.curve();
    let d = ctx.cfg.holo_d;
    let tol = ctx.tol();
    let points = ctx.grid_points()?;
    // The comparison walks the samples in order to fix one global sign, so
    // it runs on a single thread.
    let rep = associated_compare(c, d, &points, tol).map_err(|e| Failure::Input(e.to_string()))?;
    let limit = tol.tol_canonical;
    let mut summary = Summary::new("associated-pair");
    let (s_g, s_h, residual) = rep.best;
    let sign = |s: f64| if s > 0.0 { "+" } else { "-" };
    summary.note(format!(
        "curve {:?}, d = {d}: {} samples used, {} failed; best convention g ~ {}Re T_d G, h ~ {}Im T_d G (seed sign {})",
        c.name,
        rep.used,
        rep.failed,
        sign(s_g),
        sign(s_h),
        sign(rep.seed_sign)
    ));
    for (g, h, r) in &rep.conventions {
        summary.note(format!("convention ({}Re, {}Im): residual {r:.3e}", sign(*g), sign(*h)));
    }
    summary.expect("pair", "|(g~, h~) - (Re, Im) T_d G|");
    summary.expect("fiber-g", "spread of g~ along a fiber");
    summary.expect("fiber-h", "spread of h~ along a fiber");
    summary.record_aggregate("pair", residual, limit, &fmt_point(&rep.worst_point), rep.used);
    summary.record_aggregate("fiber-g", rep.fiber_spread_g, limit, "the widest fiber", rep.used);
    summary.record_aggregate("fiber-h", rep.fiber_spread_h, limit, "the widest fiber", rep.used);
    if let Some(path) = ctx.artifact(&ctx.cfg.output.report) {
        let conventions: Vec<_> =
            rep.conventions.iter().map(|(g, h, r)| json!({ "g_sign": g, "h_sign": h, "residual": r })).collect();
        write_json(
            &path,
            &json!({
                "curve": c.name,
                "d": d,
                "seed_sign": rep.seed_sign,
                "best": { "g_sign": s_g, "h_sign": s_h, "residual": residual },
                "conventions": conventions,
                "fiber_spread_g": rep.fiber_spread_g,
                "fiber_spread_h": rep.fiber_spread_h,
                "used": rep.used,
                "failed": rep.failed,
            }),
        )?;
    }
    Ok(summary)
}

/// Lists the built-in curves on stdout.
pub fn catalog(out: Option<&Path>, w: &mut impl Write) -> Result<(), Failure> {
    let mut entries = Vec::new();
    for name in builtin_names() {
        let comps = builtin_components(name).expect("listed");
        let n = comps.len() - 2;
        writeln!(w, "{name} (n = {n}): {}", comps.join(", ")).map_err(|e| Failure::Input(e.to_string()))?;
        entries.push(json!({ "name": name, "n": n, "components": comps }));
    }
    if let Some(path) = out {
        write_json(path, &json!(entries))?;
    }
    Ok(())
}

fn indexed(points: &[ChartPoint]) -> Vec<(usize, ChartPoint)> {
    points.iter().cloned().enumerate().collect()
}

// ---- OBJ ----

fn linspace(range: (f64, f64), k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![0.5 * (range.0 + range.1)];
    }
    (0..k).map(|i| range.0 + (range.1 - range.0) * i as f64 / (k - 1) as f64).collect()
}

/// Triangulated `(u, v)` grid at fixed angles, projected on three ambient
/// axes. Nodes where `phi` fails are left out along with their triangles.
fn write_obj_slice(ctx: &Context, path: &Path) -> Result<(usize, usize), Failure> {
    let g = &ctx.cfg.grid;
    let c = ctx.curve();
    let tol = ctx.tol();
    let n_angles = c.n() - 2;
    let mut theta = ctx.cfg.output.obj_theta.clone();
    if theta.is_empty() {
        theta = vec![0.0; n_angles];
    }
    if theta.len() != n_angles {
        return Err(Failure::Config(
            ctx.cfg.error_at("obj_theta", format!("obj_theta needs {n_angles} angles, got {}", theta.len())),
        ));
    }
    let us = linspace(g.u_range, g.nu);
    let vs = linspace(g.v_range, g.nv);
    let nodes: Vec<ChartPoint> = us
        .iter()
        .flat_map(|&u| vs.iter().map(move |&v| (u, v)))
        .map(|(u, v)| ChartPoint::new(u, v, theta.clone()))
        .collect();
    // One frame gauge for the whole slice, taken from the first good node.
    let pivots =
        nodes.iter().filter(|p| c.domain.contains(p.z())).find_map(|p| phi_jets(c, p, tol).ok()).map(|pj| pj.pivots);
    let values: Vec<Option<Vec<f64>>> = ctx.par_map(&nodes, |p| {
        if !c.domain.contains(p.z()) {
            return None;
        }
        phi_jets_with(c, p, tol, pivots.as_deref()).or_else(|_| phi_jets(c, p, tol)).ok().map(|pj| pj.phi.value())
    });
    let axes = ctx.cfg.output.obj_axes;
    let file = File::create(path).map_err(|e| io_failure(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| io_failure(path, e);
    writeln!(w, "# {} slice at theta = {:?}, axes {:?}", c.name, theta, axes).map_err(io)?;
    let mut index = vec![0usize; values.len()];
    let mut count = 0;
    for (k, v) in values.iter().enumerate() {
        if let Some(v) = v {
            count += 1;
            index[k] = count;
            writeln!(w, "v {} {} {}", v[axes[0]], v[axes[1]], v[axes[2]]).map_err(io)?;
        }
    }
    let nv = vs.len();
    let mut faces = 0;
    for i in 0..us.len().saturating_sub(1) {
        for j in 0..nv.saturating_sub(1) {
            let a = index[i * nv + j];
            let b = index[(i + 1) * nv + j];
            let cc = index[(i + 1) * nv + j + 1];
            let dd = index[i * nv + j + 1];
            for tri in [[a, b, cc], [a, cc, dd]] {
                if tri.iter().all(|&x| x > 0) {
                    writeln!(w, "f {} {} {}", tri[0], tri[1], tri[2]).map_err(io)?;
                    faces += 1;
                }
            }
        }
    }
    w.flush().map_err(io)?;
    Ok((count, faces))
}
