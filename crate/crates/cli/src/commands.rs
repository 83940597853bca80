use std::fmt::Write as _;
use std::path::PathBuf;

use nalgebra::DMatrix;
use serde::Deserialize;
use serde_json::json;

use soft_floer::carnot::{check_simple_spectrum, limit_measure_b, limit_measure_r, CarnotAlgebra, MeasureOptions};
use soft_floer::degree::{ls_degree, DegreeOptions, FiniteRankMap};
use soft_floer::forms::{relative_signature, FnFamily, SymmetricForm, ZeroTol};
use soft_floer::galerkin::{index_galerkin, GalerkinOptions, DEFAULT_CUTOFFS, DEFAULT_QUADRATURE_TOL, DEFAULT_WINDOW};
use soft_floer::morse::{morse_report, MorseOptions};
use soft_floer::symplectic::{
    index_corollary1_report, maslov_index, theorem3_path, FamilySpec, TimeSymmetricFamily, DEFAULT_DET_TOL,
};
use soft_floer::torus::{OrbitSearch, TorusHamiltonian};

use crate::report::{envelope, parse, read_input, require_positive, write_json, write_text, CliError};
use crate::Common;

fn read_family(text: &str) -> Result<TimeSymmetricFamily, CliError> {
    let spec: FamilySpec = parse(text)?;
    Ok(TimeSymmetricFamily::try_from(spec)?)
}

fn check_cutoffs(cutoffs: &[usize]) -> Result<(), CliError> {
    if cutoffs.is_empty() || cutoffs[0] == 0 || cutoffs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Usage("--cutoffs must be a positive increasing list".into()));
    }
    Ok(())
}

pub fn index(
    common: &Common,
    cutoffs: Option<Vec<usize>>,
    grid: usize,
    epsilon: f64,
    steps: usize,
) -> Result<(), CliError> {
    let text = read_input(&common.input)?;
    let family = read_family(&text)?;
    let det_tol = require_positive("tol", common.tol.unwrap_or(DEFAULT_DET_TOL))?;
    require_positive("epsilon", epsilon)?;
    let cutoffs = cutoffs.unwrap_or_else(|| DEFAULT_CUTOFFS.to_vec());
    check_cutoffs(&cutoffs)?;

    let path = theorem3_path(&family, epsilon, steps)?;
    let maslov = maslov_index(&path, det_tol)?;
    let maslov_value = maslov.value()?;
    let opts = GalerkinOptions {
        cutoffs: cutoffs.clone(),
        ..Default::default()
    };
    let galerkin = index_galerkin(&family, &opts)?;
    // the eigenvalue-one formula is reported, not required to succeed
    let corollary = index_corollary1_report(&family, grid);
    let (corollary_value, corollary_trace) = match &corollary {
        Ok(r) => match r.value() {
            Ok(v) => (Some(v), json!(r)),
            Err(e) => (
                None,
                json!({ "report": r, "error": e.kind(), "message": e.to_string() }),
            ),
        },
        Err(e) => (None, json!({ "error": e.kind(), "message": e.to_string() })),
    };
    if corollary_value.is_some_and(|v| v != maslov_value) {
        log::warn!("eigenvalue-one formula gives {corollary_value:?}, crossing count {maslov_value}");
    }
    let result = json!({
        "maslov": maslov_value,
        "corollary1": corollary_value,
        "galerkin": galerkin.value,
        "agree": maslov_value == galerkin.value,
        "corollary1_agrees": corollary_value.map(|v| v == maslov_value),
        "traces": {
            "crossings": maslov.crossings,
            "corollary1": corollary_trace,
            "galerkin": galerkin.relative.trace,
        },
    });
    let params = json!({ "cutoffs": cutoffs, "grid": grid, "epsilon": epsilon, "steps": steps });
    let tolerances = json!({
        "det_tol": det_tol,
        "galerkin_zero_tol": "auto",
        "galerkin_window": DEFAULT_WINDOW,
        "quadrature_tol": DEFAULT_QUADRATURE_TOL,
    });
    write_json(
        common.output.as_deref(),
        &envelope("index", &text, common.seed, params, tolerances, result)?,
    )
}

pub fn morse(common: &Common, cutoffs: Option<Vec<usize>>, grid: usize) -> Result<(), CliError> {
    let text = read_input(&common.input)?;
    let h: TorusHamiltonian = parse(&text)?;
    let mut opts = MorseOptions::default();
    opts.search = OrbitSearch {
        seeds_per_axis: grid,
        newton_tol: require_positive("tol", common.tol.unwrap_or(opts.search.newton_tol))?,
        ..opts.search
    };
    if let Some(c) = cutoffs {
        check_cutoffs(&c)?;
        opts.galerkin = Some(GalerkinOptions {
            cutoffs: c,
            ..Default::default()
        });
    }
    let report = morse_report(&h, &opts)?;
    let params = json!({
        "seeds_per_axis": opts.search.seeds_per_axis,
        "flow_steps": opts.search.steps,
        "epsilon": opts.epsilon,
        "path_steps": opts.path_steps,
        "cutoffs": opts.galerkin.as_ref().map(|g| g.cutoffs.clone()),
    });
    let tolerances = json!({
        "newton_tol": opts.search.newton_tol,
        "nondegeneracy_tol": opts.nondegeneracy_tol,
        "det_tol": DEFAULT_DET_TOL,
    });
    write_json(
        common.output.as_deref(),
        &envelope("morse", &text, common.seed, params, tolerances, report)?,
    )
}

pub fn carnot(
    common: &Common,
    grid: usize,
    horizon: f64,
    w: Vec<f64>,
    points: usize,
    summary: Option<PathBuf>,
) -> Result<(), CliError> {
    let text = read_input(&common.input)?;
    let algebra: CarnotAlgebra = parse(&text)?;
    require_positive("horizon", horizon)?;
    if points < 2 {
        return Err(CliError::Usage("--points must be at least 2".into()));
    }
    let opts = MeasureOptions {
        horizon,
        grid,
        cdf_tol: require_positive("tol", common.tol.unwrap_or(1e-3))?,
        ..Default::default()
    };
    let b = limit_measure_b(&algebra, &w, &opts)?;
    let r = limit_measure_r(&algebra, &w, &opts)?;
    let spectrum = check_simple_spectrum(&algebra, 64, common.seed)?;
    let mut warnings = Vec::new();
    if !spectrum.simple {
        let msg = "simple-spectrum hypothesis not verified on 64 random covectors";
        log::warn!("{msg}");
        warnings.push(msg.to_string());
    }
    if !b.converged {
        warnings.push(format!(
            "b-measure CDF still moved by {:e} at {} cells",
            b.cdf_change, b.grid
        ));
    }

    let mut csv = String::from("t,cdf_b,cdf_r\n");
    for k in 0..points {
        let t = horizon * k as f64 / (points - 1) as f64;
        writeln!(csv, "{t},{},{}", b.measure.cdf(t), r.measure.cdf(t)).expect("string write");
    }
    write_text(common.output.as_deref(), &csv)?;

    let result = json!({
        "min_phi": r.min_phi,
        "argmin_tau": r.argmin_tau,
        "mass_r": r.measure.mass(),
        "mass_b": b.measure.mass(),
        "horizon": horizon,
        "w": w,
        "tau_range": b.tau_range,
        "grid": b.grid,
        "cdf_change": b.cdf_change,
        "converged": b.converged,
        "simple_spectrum": spectrum,
        "normalization": { "rho": "1/s", "r": "i/s" },
        "warnings": warnings,
    });
    let params = json!({ "grid": grid, "horizon": horizon, "w": w, "points": points, "spectrum_samples": 64 });
    let tolerances = json!({ "cdf_tol": opts.cdf_tol, "max_refinements": opts.max_refinements });
    let report = envelope("carnot", &text, common.seed, params, tolerances, result)?;
    let summary = summary.or_else(|| {
        common.output.as_ref().map(|p| match p.extension() {
            Some(e) if e == "json" => p.with_extension("summary.json"),
            _ => p.with_extension("json"),
        })
    });
    match summary {
        Some(p) => write_json(Some(&p), &report),
        None => Ok(()),
    }
}

pub fn degree(common: &Common, dims: Option<Vec<usize>>, grid: usize) -> Result<(), CliError> {
    let text = read_input(&common.input)?;
    let map: FiniteRankMap = parse(&text)?;
    if grid == 0 {
        return Err(CliError::Usage("--grid must be positive".into()));
    }
    let dims = dims.unwrap_or_else(|| vec![map.ambient_dim()]);
    let opts = DegreeOptions {
        starts: grid,
        seed: common.seed,
        ..Default::default()
    };
    let result = ls_degree(&map, &dims, &opts)?;
    let params = json!({
        "dims": dims,
        "starts": opts.starts,
        "values": opts.values,
        "regular_value_trials": opts.regular_value_trials,
        "max_batches": opts.max_batches,
    });
    let tolerances = json!({
        "preimage_merge": soft_floer::degree::PREIMAGE_MERGE,
        "regularity_tol": soft_floer::degree::REGULARITY_TOL,
    });
    write_json(
        common.output.as_deref(),
        &envelope("degree", &text, common.seed, params, tolerances, result)?,
    )
}

/// `{"kind": "matrices", "b0": [[..]], "b1": [[..]]}` truncated to leading
/// principal blocks, or `{"kind": "galerkin", "family": {..}}`.
#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum SignatureInput {
    Matrices { b0: Vec<Vec<f64>>, b1: Vec<Vec<f64>> },
    Galerkin { family: FamilySpec },
}

fn square(rows: &[Vec<f64>], name: &str) -> Result<DMatrix<f64>, CliError> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(CliError::Schema(format!("{name} must be a nonempty square matrix")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

pub fn signature(common: &Common, cutoffs: Option<Vec<usize>>, window: usize) -> Result<(), CliError> {
    let text = read_input(&common.input)?;
    let input: SignatureInput = parse(&text)?;
    let zero_tol = match common.tol {
        Some(t) => ZeroTol::Absolute(require_positive("tol", t)?),
        None => ZeroTol::Auto,
    };
    if window == 0 {
        return Err(CliError::Usage("--window must be positive".into()));
    }
    let (result, cutoffs) = match input {
        SignatureInput::Matrices { b0, b1 } => {
            let (m0, m1) = (square(&b0, "b0")?, square(&b1, "b1")?);
            let dim = m0.nrows().min(m1.nrows());
            let cutoffs = cutoffs.unwrap_or_else(|| (1..=dim).collect());
            check_cutoffs(&cutoffs)?;
            if *cutoffs.last().expect("nonempty") > dim {
                return Err(CliError::Usage(format!("cutoffs exceed the matrix size {dim}")));
            }
            let leading = |m: &DMatrix<f64>| {
                let m = m.clone();
                FnFamily(move |n: usize| SymmetricForm::new(m.view((0, 0), (n, n)).into_owned()))
            };
            let rel = relative_signature(
                &leading(&m0),
                &leading(&m1),
                &cutoffs,
                zero_tol,
                window.min(cutoffs.len()),
            )?;
            (json!({ "value": rel.value, "trace": rel.trace }), cutoffs)
        }
        SignatureInput::Galerkin { family } => {
            let family = TimeSymmetricFamily::try_from(family)?;
            let cutoffs = cutoffs.unwrap_or_else(|| DEFAULT_CUTOFFS.to_vec());
            check_cutoffs(&cutoffs)?;
            let g = index_galerkin(
                &family,
                &GalerkinOptions {
                    cutoffs: cutoffs.clone(),
                    zero_tol,
                    window,
                    ..Default::default()
                },
            )?;
            (
                json!({ "value": g.relative.value, "index": g.value, "trace": g.relative.trace }),
                cutoffs,
            )
        }
    };
    let params = json!({ "cutoffs": cutoffs, "window": window });
    let tolerances = json!({ "zero_tol": common.tol.map_or(json!("auto"), |t| json!(t)) });
    write_json(
        common.output.as_deref(),
        &envelope("signature", &text, common.seed, params, tolerances, result)?,
    )
}
