//! One pass of cap extraction, extension, limit angle and curvature checks,
//! summarised as a JSON report.
//!
//! Exit status: 0 when everything holds, 1 for degenerate or unusable input,
//! 2 when a checked invariant fails.

use rayon::prelude::*;
use serde::Serialize;

use crate::cap::{check_disk_topology, extract_cap, Cap, CapError, CapSpec};
use crate::extend::{build_extension, DegenerateKind, ExtendError, Extension, UnboundedPolyhedron};
use crate::geom::{Point3, Tolerances, Vec3};
use crate::hull::Polyhedron;
use crate::io::generate::{fuzz_instance, Distribution, FuzzError, GeneratorConfig};
use crate::limit_angle::{limit_angle_of, limit_apex_curvature, verify_curvature_identity, LimitAngle, DEFAULT_IDENTITY_TOL};

pub const REPORT_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Cap,
    Extend,
    Limit,
    Check,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    Degenerate,
    InvalidInput,
    Violation,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::Degenerate | Status::InvalidInput => 1,
            Status::Violation => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiskCheck {
    pub pass: bool,
    pub chi: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetadata {
    pub input: Option<String>,
    pub seed: Option<u64>,
    pub n: Option<usize>,
    pub distribution: Option<Distribution>,
    pub phi_degrees: f64,
    pub tolerances: Tolerances,
    pub identity_tolerance: f64,
    pub apex: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub phi_degrees: f64,
    pub tol: Tolerances,
    pub apex: Point3,
    pub identity_tol: f64,
}

impl RunOptions {
    /// φ in degrees, default tolerances for `p`, apex at the origin.
    pub fn for_polyhedron(p: &Polyhedron, phi_degrees: f64) -> Self {
        RunOptions {
            phi_degrees,
            tol: Tolerances::for_points(p.vertices()),
            apex: Vec3::ZERO,
            identity_tol: DEFAULT_IDENTITY_TOL,
        }
    }
}

/// Counts are null when the run stopped before the stage producing them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema: u32,
    pub command: String,
    pub status: Status,
    pub metadata: RunMetadata,
    pub polyhedron_vertex_count: Option<usize>,
    pub polyhedron_face_count: Option<usize>,
    pub cap_face_count: Option<usize>,
    pub cap_vertex_count: Option<usize>,
    /// Edges on the border cycle of the cap.
    pub boundary_length: Option<usize>,
    pub boundary_face_count: Option<usize>,
    pub disk_check: Option<DiskCheck>,
    pub degenerate_extension: Option<DegenerateKind>,
    pub new_vertex_count: Option<usize>,
    pub ray_count: Option<usize>,
    pub unbounded_face_count: Option<usize>,
    pub total_curvature: Option<f64>,
    pub total_cap_curvature: Option<f64>,
    pub limit_apex_curvature: Option<f64>,
    pub identity_gap: Option<f64>,
    pub bound_margin: Option<f64>,
    pub spherical_gap: Option<f64>,
    pub containment: Option<bool>,
    pub diagnostics: Vec<String>,
}

impl Report {
    pub fn new(command: &str, metadata: RunMetadata) -> Self {
        Report {
            schema: REPORT_SCHEMA,
            command: command.to_string(),
            status: Status::Ok,
            metadata,
            polyhedron_vertex_count: None,
            polyhedron_face_count: None,
            cap_face_count: None,
            cap_vertex_count: None,
            boundary_length: None,
            boundary_face_count: None,
            disk_check: None,
            degenerate_extension: None,
            new_vertex_count: None,
            ray_count: None,
            unbounded_face_count: None,
            total_curvature: None,
            total_cap_curvature: None,
            limit_apex_curvature: None,
            identity_gap: None,
            bound_margin: None,
            spherical_gap: None,
            containment: None,
            diagnostics: Vec::new(),
        }
    }

    /// Records a problem; the worse status wins.
    pub fn fail(&mut self, status: Status, msg: impl Into<String>) {
        if status.exit_code() > self.status.exit_code() || self.status == Status::Ok {
            self.status = status;
        }
        self.diagnostics.push(msg.into());
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Everything a run built, for export.
#[derive(Debug, Clone)]
pub struct Run {
    pub report: Report,
    pub cap: Option<Cap>,
    pub extension: Option<UnboundedPolyhedron>,
    pub limit: Option<LimitAngle>,
}

pub fn run(p: &Polyhedron, stage: Stage, opts: &RunOptions, mut report: Report) -> Run {
    report.polyhedron_vertex_count = Some(p.vertices().len());
    report.polyhedron_face_count = Some(p.faces().len());
    let mut out = Run { report, cap: None, extension: None, limit: None };
    let r = &mut out.report;

    let spec = match CapSpec::from_degrees(opts.phi_degrees) {
        Ok(s) => s,
        Err(e) => {
            r.fail(Status::InvalidInput, e.to_string());
            return out;
        }
    };
    let cap = match extract_cap(p, spec, &opts.tol) {
        Ok(c) => c,
        Err(e @ CapError::LemmaViolation(_)) => {
            r.fail(Status::Violation, e.to_string());
            return out;
        }
        Err(e) => {
            r.fail(Status::Degenerate, e.to_string());
            return out;
        }
    };
    r.cap_face_count = Some(cap.face_ids().len());
    r.cap_vertex_count = Some(cap.vertex_ids().len());
    r.boundary_length = Some(cap.boundary().len());
    r.boundary_face_count = Some(cap.boundary_faces().len());
    let disk = check_disk_topology(&cap);
    r.disk_check = Some(DiskCheck { pass: disk.pass, chi: disk.chi });
    for d in &disk.diagnostics {
        r.fail(Status::Violation, format!("disk check: {d}"));
    }
    if stage == Stage::Cap || !disk.pass {
        out.cap = Some(cap);
        return out;
    }

    let ext = build_extension(&cap, &opts.tol);
    out.cap = Some(cap);
    let r = &mut out.report;
    let u = match ext {
        Ok(Extension::Unbounded(u)) => u,
        Ok(Extension::Degenerate(d)) => {
            r.degenerate_extension = Some(d.kind);
            r.fail(
                Status::Degenerate,
                format!("extension is degenerate ({:?}, {} distinct boundary planes) and has no rays", d.kind, d.planes.len()),
            );
            return out;
        }
        Err(e @ ExtendError::Invariant(_)) => {
            r.fail(Status::Violation, e.to_string());
            return out;
        }
        Err(e) => {
            r.fail(Status::Degenerate, e.to_string());
            return out;
        }
    };
    r.new_vertex_count = Some(u.new_vertices().len());
    r.ray_count = Some(u.rays().len());
    r.unbounded_face_count = Some(u.unbounded_faces().len());
    for msg in u.check(out.cap.as_ref().expect("cap is set")) {
        r.fail(Status::Violation, format!("extension: {msg}"));
    }

    if stage >= Stage::Limit {
        let v = limit_angle_of(&u, opts.apex);
        match limit_apex_curvature(&v) {
            Ok(k) => r.limit_apex_curvature = Some(k),
            Err(e) => r.fail(Status::Violation, format!("limit angle: {e}")),
        }
        if stage == Stage::Check {
            let c = verify_curvature_identity(&u, &v, opts.identity_tol);
            r.total_curvature = Some(c.total_extension);
            r.total_cap_curvature = Some(c.total_cap);
            r.identity_gap = Some(c.identity_gap);
            r.bound_margin = Some(c.bound_margin);
            r.spherical_gap = Some(c.spherical_gap);
            r.containment = c.containment;
            for f in c.failures {
                r.fail(Status::Violation, f);
            }
        }
        out.limit = Some(v);
    }
    out.extension = Some(u);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FuzzFailure {
    pub seed: u64,
    pub config: Option<GeneratorConfig>,
    pub status: Status,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FuzzMetadata {
    pub first_seed: u64,
    pub count: usize,
    pub identity_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FuzzReport {
    pub schema: u32,
    pub command: String,
    pub status: Status,
    pub metadata: FuzzMetadata,
    pub instances: usize,
    pub passed: usize,
    pub lemma_violations: usize,
    pub invariant_failures: usize,
    pub degenerate: usize,
    /// Draws skipped for an empty cap or a ray-less extension.
    pub redraws: usize,
    /// Instances with fewer unbounded faces than cap boundary faces.
    pub fewer_unbounded_faces: usize,
    pub with_new_vertices: usize,
    pub max_identity_gap: f64,
    pub min_bound_margin: f64,
    pub max_spherical_gap: f64,
    pub failures: Vec<FuzzFailure>,
}

impl FuzzReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Outcome of one fuzz seed.
#[derive(Debug, Clone)]
pub struct FuzzOutcome {
    pub seed: u64,
    pub config: Option<GeneratorConfig>,
    pub redraws: usize,
    pub report: Option<Report>,
    pub error: Option<(Status, String)>,
    pub lemma_violation: bool,
}

pub fn fuzz_one(seed: u64, identity_tol: f64) -> FuzzOutcome {
    match fuzz_instance(seed) {
        Ok(inst) => {
            let opts = RunOptions { identity_tol, ..RunOptions::for_polyhedron(&inst.polyhedron, inst.config.phi_degrees) };
            let meta = RunMetadata {
                input: None,
                seed: Some(inst.config.seed),
                n: Some(inst.config.n),
                distribution: Some(inst.config.distribution),
                phi_degrees: inst.config.phi_degrees,
                tolerances: opts.tol,
                identity_tolerance: identity_tol,
                apex: opts.apex.to_array(),
            };
            let run = run(&inst.polyhedron, Stage::Check, &opts, Report::new("check", meta));
            FuzzOutcome {
                seed,
                config: Some(inst.config),
                redraws: inst.redraws,
                report: Some(run.report),
                error: None,
                lemma_violation: false,
            }
        }
        Err(e) => {
            let (config, status, lemma, msg) = match &e {
                FuzzError::Cap { config, source: s @ CapError::LemmaViolation(_), .. } => {
                    (Some(*config), Status::Violation, true, s.to_string())
                }
                FuzzError::Cap { config, source, .. } => (Some(*config), Status::Degenerate, false, source.to_string()),
                FuzzError::Extend { config, source: s @ ExtendError::Invariant(_), .. } => {
                    (Some(*config), Status::Violation, false, s.to_string())
                }
                FuzzError::Extend { config, source, .. } => (Some(*config), Status::Degenerate, false, source.to_string()),
                FuzzError::Exhausted(_) => (None, Status::Degenerate, false, e.to_string()),
            };
            FuzzOutcome { seed, config, redraws: 0, report: None, error: Some((status, msg)), lemma_violation: lemma }
        }
    }
}

/// Checks fuzz seeds `first_seed .. first_seed + count` in parallel. The
/// report does not depend on thread scheduling.
pub fn fuzz(first_seed: u64, count: usize, identity_tol: f64) -> FuzzReport {
    let outcomes: Vec<FuzzOutcome> = (0..count as u64)
        .into_par_iter()
        .map(|i| fuzz_one(first_seed.wrapping_add(i), identity_tol))
        .collect();
    summarize(first_seed, identity_tol, &outcomes)
}

pub fn summarize(first_seed: u64, identity_tol: f64, outcomes: &[FuzzOutcome]) -> FuzzReport {
    let mut rep = FuzzReport {
        schema: REPORT_SCHEMA,
        command: "check".into(),
        status: Status::Ok,
        metadata: FuzzMetadata { first_seed, count: outcomes.len(), identity_tolerance: identity_tol },
        instances: outcomes.len(),
        passed: 0,
        lemma_violations: 0,
        invariant_failures: 0,
        degenerate: 0,
        redraws: 0,
        fewer_unbounded_faces: 0,
        with_new_vertices: 0,
        max_identity_gap: 0.0,
        min_bound_margin: f64::INFINITY,
        max_spherical_gap: 0.0,
        failures: Vec::new(),
    };
    for o in outcomes {
        rep.redraws += o.redraws;
        let failure = match (&o.report, &o.error) {
            (_, Some((status, msg))) => Some((*status, msg.clone())),
            (Some(r), None) => {
                if let (Some(u), Some(b)) = (r.unbounded_face_count, r.boundary_face_count) {
                    rep.fewer_unbounded_faces += usize::from(u < b);
                }
                rep.with_new_vertices += usize::from(r.new_vertex_count.is_some_and(|n| n > 0));
                rep.max_identity_gap = rep.max_identity_gap.max(r.identity_gap.unwrap_or(f64::NAN));
                rep.min_bound_margin = rep.min_bound_margin.min(r.bound_margin.unwrap_or(f64::NAN));
                rep.max_spherical_gap = rep.max_spherical_gap.max(r.spherical_gap.unwrap_or(f64::NAN));
                (r.status != Status::Ok).then(|| (r.status, r.diagnostics.join("; ")))
            }
            (None, None) => unreachable!("outcome has a report or an error"),
        };
        match failure {
            None => rep.passed += 1,
            Some((status, message)) => {
                let lemma = o.report.as_ref().is_some_and(|r| r.disk_check.is_some_and(|d| !d.pass));
                if o.lemma_violation || lemma {
                    rep.lemma_violations += 1;
                } else if status == Status::Violation {
                    rep.invariant_failures += 1;
                } else {
                    rep.degenerate += 1;
                }
                rep.failures.push(FuzzFailure { seed: o.seed, config: o.config, status, message });
            }
        }
    }
    rep.status = if rep.lemma_violations + rep.invariant_failures > 0 {
        Status::Violation
    } else if rep.degenerate > 0 {
        Status::Degenerate
    } else {
        Status::Ok
    };
    rep
}
