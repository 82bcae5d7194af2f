use std::fmt::Write as _;

use anyhow::{bail, Result};
use finsler_core::berwald::{self, DirectionSampling};
use finsler_core::expr::{Expr, Params};
use finsler_core::geometry::{
    probe_admissibility, scaled_residual, SampleGeometry, SignatureConvention, Tolerances,
};
use finsler_core::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::report::*;
use crate::scene::{Sample, Scene, Source};

/// Fit residual below which the closed forms of the family are reported.
const CLOSED_FORM_FIT: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Probe,
    Berwald,
    Obstruction,
    Causal,
    Nonmetricity,
    /// Everything that applies to the scene.
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Probe => "probe",
            Command::Berwald => "berwald",
            Command::Obstruction => "obstruction",
            Command::Causal => "causal",
            Command::Nonmetricity => "nonmetricity",
            Command::Report => "report",
        }
    }

    fn local(self) -> bool {
        matches!(self, Command::Probe | Command::Report)
    }

    fn obstruction(self) -> bool {
        matches!(self, Command::Obstruction | Command::Report)
    }

    fn causal(self) -> bool {
        matches!(self, Command::Causal | Command::Report)
    }

    fn nonmetricity(self) -> bool {
        matches!(self, Command::Nonmetricity | Command::Report)
    }

    fn berwald(self) -> bool {
        self.obstruction() || self.nonmetricity() || self == Command::Berwald
    }
}

/// Command-line overrides; anything left `None` comes from the scene or the
/// defaults.
#[derive(Debug, Clone, Default)]
pub struct Flags {
    pub tol_berwald: Option<f64>,
    pub tol_sym: Option<f64>,
    pub directions: Option<usize>,
    pub seed: Option<u64>,
    pub signature_convention: Option<SignatureConvention>,
    /// Worker threads; `None` or `0` lets rayon decide.
    pub threads: Option<usize>,
}

struct Context<'a> {
    scene: &'a Scene,
    command: Command,
    tol: Tolerances,
    convention: SignatureConvention,
    directions: usize,
    seed: u64,
    reference: Option<(String, &'a [Vec<Expr>], &'a Params)>,
}

pub fn run(command: Command, scene: &Scene, flags: &Flags) -> Result<Report> {
    let mut tol = scene.options.tolerances();
    if let Some(v) = flags.tol_berwald {
        tol.berwald = v;
    }
    if let Some(v) = flags.tol_sym {
        tol.sym = v;
    }
    if !(tol.berwald > 0.0 && tol.sym > 0.0) {
        bail!("tolerances must be positive");
    }
    let directions = flags.directions.or(scene.options.directions).unwrap_or(16);
    if directions < 2 {
        bail!("at least two directions are needed");
    }
    let family = scene.def.family();
    if command == Command::Causal && family.is_none() {
        bail!("causal classification needs an (alpha, beta) family Lagrangian");
    }
    let reference = match (&scene.reference_metric, family) {
        (Some((g, params)), _) => Some(("scene".to_string(), g.as_slice(), params)),
        (None, Some(f)) => Some(("alpha".to_string(), f.alpha.as_slice(), &f.params)),
        (None, None) => None,
    };
    if command == Command::Nonmetricity && reference.is_none() {
        bail!("non-metricity needs options.reference_metric for a non-family Lagrangian");
    }
    let ctx = Context {
        scene,
        command,
        tol,
        convention: flags
            .signature_convention
            .or(scene.options.signature_convention)
            .unwrap_or_default(),
        directions,
        seed: flags.seed.or(scene.options.seed).unwrap_or(0),
        reference,
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(flags.threads.unwrap_or(0))
        .build()?;
    let samples: Vec<SampleReport> = pool.install(|| {
        scene
            .samples
            .par_iter()
            .enumerate()
            .map(|(i, s)| process(&ctx, i, s))
            .collect()
    });
    Ok(assemble(&ctx, samples))
}

fn error_kind(e: &Error) -> String {
    match e {
        Error::Parse(_) => "parse".into(),
        Error::UnknownParameter(_) => "unknown-parameter".into(),
        Error::JetOrder { .. } => "jet-order".into(),
        Error::Dimension(_) => "dimension".into(),
        Error::NoAdmissibleDirections { .. } => "no-admissible-directions".into(),
        Error::NotBerwald { .. } => "not-berwald".into(),
        Error::UnknownCatalogEntry(_) => "unknown-catalog-entry".into(),
        Error::InvalidOverride(_) => "invalid-override".into(),
        Error::Unsupported(_) => "unsupported".into(),
        other => other.reason_tag(),
    }
}

fn stage_error(stage: &str, e: &Error) -> StageError {
    StageError {
        stage: stage.into(),
        kind: error_kind(e),
        message: e.to_string(),
    }
}

fn local_report(g: &SampleGeometry) -> LocalReport {
    let m = &g.metric;
    let r = &g.residuals;
    LocalReport {
        lagrangian: Real(g.lagrangian),
        metric: MetricSummary {
            det: Real(m.det),
            signature: [m.signature.0, m.signature.1, m.signature.2],
            eigenvalues: vector(&m.eigenvalues),
        },
        spray: vector(&g.connection.spray),
        nonlinear_connection: matrix(&g.connection.nonlinear),
        chern_rund: tensor3(&g.connection.chern_rund),
        cartan_trace: vector(&g.connection.cartan_trace),
        ricci: matrix(&g.curvature.ricci),
        skew_ricci: matrix(&g.curvature.skew_ricci),
        residuals: Residuals {
            euler: Real(r.euler),
            spray_contraction: Real(r.spray_contraction),
            nonlinear_euler: Real(r.nonlinear_euler),
            cartan_contraction: Real(r.cartan_contraction),
            skew_identity: Real(r.skew_identity),
            commutator: Real(r.commutator),
        },
    }
}

fn process(ctx: &Context, index: usize, sample: &Sample) -> SampleReport {
    let def = &ctx.scene.def;
    let s = &sample.point;
    let x = s.x();
    let tol = &ctx.tol;
    let family = def.family();
    let mut errors = Vec::new();

    let v = probe_admissibility(def, s, ctx.convention, tol);
    let admissibility = Admissibility {
        in_a: v.in_a,
        in_n: v.in_n,
        in_a0: v.in_a0,
        in_t: v.in_t,
        l_value: Real(v.l_value),
        signature: v.signature.map(|(p, q, z)| [p, q, z]),
        failure_reason: v.failure_reason,
    };

    let local = if ctx.command.local() {
        match finsler_core::geometry::evaluate(def, s, tol) {
            Ok(g) => Some(local_report(&g)),
            Err(e) => {
                errors.push(stage_error("local", &e));
                None
            }
        }
    } else {
        None
    };

    let fit = family.map(|f| f.check_berwald_condition(x));
    let berwald_condition = match (&fit, ctx.command.local() || ctx.command.obstruction()) {
        (Some(Ok(fit)), true) => Some(BerwaldConditionReport {
            residual: Real(fit.residual),
            h: Real(fit.h),
            dh: vector(&fit.dh),
        }),
        (Some(Err(e)), true) => {
            errors.push(stage_error("berwald_condition", e));
            None
        }
        _ => None,
    };

    let mut verdict = None;
    if ctx.command.berwald() {
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
        rng.set_stream(index as u64);
        let sampling = DirectionSampling {
            count: ctx.directions,
            max_attempts: ctx.directions.max(16) * 12,
            ..DirectionSampling::around(s.xdot().to_vec())
        };
        match berwald::detect_berwald(def, x, &sampling, tol, &mut rng) {
            Ok(v) => verdict = Some(v),
            Err(e) => errors.push(stage_error("berwald", &e)),
        }
    }
    let berwald_report = verdict.as_ref().map(|v| BerwaldReport {
        is_berwald: v.is_berwald,
        max_gamma_deviation: Real(v.max_gamma_deviation),
        directions_tested: v.directions_tested,
        directions_rejected: v.directions_rejected,
        affine_connection: tensor3(&v.affine_connection.gamma),
    });
    let berwald_ok = verdict.as_ref().filter(|v| v.is_berwald);

    let obstruction = match (ctx.command.obstruction(), berwald_ok) {
        (false, _) => None,
        (true, None) => {
            if let Some(v) = &verdict {
                errors.push(stage_error(
                    "obstruction",
                    &Error::NotBerwald {
                        deviation: v.max_gamma_deviation,
                    },
                ));
            }
            None
        }
        (true, Some(v)) => match berwald::obstruction_for(def, x, v.clone(), tol) {
            Ok(r) => {
                let closed_form = match (family, &fit) {
                    (Some(f), Some(Ok(fit))) if f.dim == 4 && fit.residual < CLOSED_FORM_FIT => {
                        match f.closed_form_ricci(x) {
                            Ok(cf) => Some(ClosedFormReport {
                                ricci: matrix(&cf.ricci),
                                skew: matrix(&cf.skew),
                                f: Real(cf.f),
                                h: Real(cf.h),
                                dh: vector(&cf.dh),
                                proves_non_metrizable: cf.proves_non_metrizable(tol.sym),
                                ricci_residual: Real(scaled_residual(
                                    r.ricci.iter(),
                                    cf.ricci.iter(),
                                )),
                            }),
                            Err(e) => {
                                errors.push(stage_error("closed_form", &e));
                                None
                            }
                        }
                    }
                    _ => None,
                };
                Some(ObstructionSummary {
                    ricci: matrix(&r.ricci),
                    skew: matrix(&r.skew),
                    skew_max_abs: Real(r.skew_max_abs),
                    metrizability_necessary_condition_met: r.metrizability_necessary_condition_met,
                    phi_constancy_residual: Real(r.phi_constancy_residual),
                    hh_ricci_residual: Real(r.hh_ricci_residual),
                    closed_form,
                })
            }
            Err(e) => {
                errors.push(stage_error("obstruction", &e));
                None
            }
        },
    };

    let causal = match (ctx.command.causal(), family) {
        (true, Some(f)) => match f.classify_causal(s, tol.degenerate) {
            Ok(c) => Some(CausalReport {
                p_case: c.p_case.tag().into(),
                det_zeta: Real(c.det_zeta),
                det_formula: Real(c.det_formula),
                zeta_signature: [c.zeta_signature.0, c.zeta_signature.1, c.zeta_signature.2],
                viable: c.viable,
            }),
            Err(e) => {
                errors.push(stage_error("causal", &e));
                None
            }
        },
        _ => None,
    };

    let nonmetricity = match (ctx.command.nonmetricity(), &ctx.reference) {
        (true, Some((name, g_ref, params))) => match berwald_ok {
            Some(v) => match berwald::nonmetricity(&v.affine_connection, g_ref, params) {
                Ok(q) => Some(NonMetricitySummary {
                    reference: name.clone(),
                    q: tensor3(&q.q),
                    q_norm: Real(q.q_norm),
                    direct_residual: Real(q.direct_residual),
                }),
                Err(e) => {
                    errors.push(stage_error("nonmetricity", &e));
                    None
                }
            },
            None => {
                if let Some(v) = &verdict {
                    if !ctx.command.obstruction() {
                        errors.push(stage_error(
                            "nonmetricity",
                            &Error::NotBerwald {
                                deviation: v.max_gamma_deviation,
                            },
                        ));
                    }
                }
                None
            }
        },
        _ => None,
    };

    SampleReport {
        index,
        label: sample.label.clone(),
        x: vector(x),
        xdot: vector(s.xdot()),
        admissibility,
        local,
        berwald_condition,
        berwald: berwald_report,
        obstruction,
        causal,
        nonmetricity,
        errors,
    }
}

fn assemble(ctx: &Context, samples: Vec<SampleReport>) -> Report {
    let scene = ctx.scene;
    let mut warnings = Vec::new();
    for s in &samples {
        for e in &s.errors {
            warnings.push(format!(
                "sample {}: {} failed: {}",
                s.index, e.stage, e.message
            ));
        }
        if let Some(c) = &s.causal {
            if !c.viable {
                warnings.push(format!(
                    "sample {}: the family is not a viable Finsler spacetime here (p case {})",
                    s.index, c.p_case
                ));
            }
        }
    }

    let verdicts: Vec<&BerwaldReport> = samples.iter().filter_map(|s| s.berwald.as_ref()).collect();
    let obstructions: Vec<&ObstructionSummary> = samples
        .iter()
        .filter_map(|s| s.obstruction.as_ref())
        .collect();
    let causal: Vec<&CausalReport> = samples.iter().filter_map(|s| s.causal.as_ref()).collect();
    let non_metrizable = obstructions.iter().any(|o| {
        !o.metrizability_necessary_condition_met
            || o.closed_form
                .as_ref()
                .is_some_and(|c| c.proves_non_metrizable)
    });
    let max_of = |v: Vec<f64>| v.into_iter().reduce(f64::max).map(Real);
    let geometry = GeometrySummary {
        is_berwald: (!verdicts.is_empty()).then(|| verdicts.iter().all(|v| v.is_berwald)),
        max_gamma_deviation: max_of(verdicts.iter().map(|v| v.max_gamma_deviation.0).collect()),
        max_skew: max_of(obstructions.iter().map(|o| o.skew_max_abs.0).collect()),
        non_metrizable,
        causal_viable: (!causal.is_empty()).then(|| causal.iter().all(|c| c.viable)),
        samples_with_errors: samples.iter().filter(|s| !s.errors.is_empty()).count(),
    };

    let (name, overrides) = match &scene.source {
        Source::Catalog { name, overrides } => (Some(name.clone()), overrides.clone()),
        _ => (None, Default::default()),
    };
    Report {
        tool: Tool {
            name: "finsler".into(),
            version: env!("CARGO_PKG_VERSION").into(),
        },
        command: ctx.command.name().into(),
        scene: SceneSummary {
            kind: scene.source.kind().into(),
            name,
            overrides,
            dim: scene.dim,
            aliases: scene.aliases.clone(),
            reference_metric: ctx.reference.as_ref().map(|r| r.0.clone()),
        },
        settings: Settings {
            seed: ctx.seed,
            directions: ctx.directions,
            signature_convention: ctx.convention.label().into(),
            tolerances: TolerancesReport {
                degenerate: Real(ctx.tol.degenerate),
                null: Real(ctx.tol.null),
                berwald: Real(ctx.tol.berwald),
                sym: Real(ctx.tol.sym),
            },
        },
        samples,
        geometry,
        warnings,
        exit_code: if non_metrizable { 2 } else { 0 },
    }
}

fn fmt_opt(v: Option<Real>) -> String {
    v.map_or_else(|| "-".into(), |r| format!("{:.3e}", r.0))
}

/// Human-readable table, one row per sample.
pub fn summary(report: &Report) -> String {
    let mut out = String::new();
    let scene = &report.scene;
    let what = scene.name.clone().unwrap_or_else(|| scene.kind.clone());
    let _ = writeln!(
        out,
        "{} on {} ({}-dimensional, seed {})",
        report.command, what, scene.dim, report.settings.seed
    );
    let _ = writeln!(
        out,
        "{:>3}  {:<12} {:>4} {:>4} {:>12} {:>10} {:>12}  {}",
        "#", "label", "A0", "T", "L", "berwald", "skew", "notes"
    );
    for s in &report.samples {
        let a = &s.admissibility;
        let berwald = match &s.berwald {
            Some(b) if b.is_berwald => "yes".to_string(),
            Some(_) => "no".to_string(),
            None => "-".to_string(),
        };
        let skew = fmt_opt(s.obstruction.as_ref().map(|o| o.skew_max_abs));
        let mut notes = Vec::new();
        if let Some(r) = &a.failure_reason {
            notes.push(r.clone());
        }
        if let Some(c) = &s.causal {
            notes.push(format!(
                "{}{}",
                c.p_case,
                if c.viable { "" } else { " non-viable" }
            ));
        }
        if let Some(q) = &s.nonmetricity {
            notes.push(format!("|Q|={:.3e}", q.q_norm.0));
        }
        notes.extend(s.errors.iter().map(|e| format!("{}: {}", e.stage, e.kind)));
        let _ = writeln!(
            out,
            "{:>3}  {:<12} {:>4} {:>4} {:>12} {:>10} {:>12}  {}",
            s.index,
            s.label.as_deref().unwrap_or("-"),
            if a.in_a0 { "yes" } else { "no" },
            if a.in_t { "yes" } else { "no" },
            fmt_opt(Some(a.l_value)),
            berwald,
            skew,
            notes.join("; ")
        );
    }
    let g = &report.geometry;
    if g.non_metrizable {
        let _ = writeln!(
            out,
            "not metrizable: the affine Ricci tensor is not symmetric"
        );
    } else if g.is_berwald == Some(true) && g.max_skew.is_some() {
        let _ = writeln!(out, "Berwald with symmetric Ricci tensor at every sample");
    }
    for w in &report.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}
