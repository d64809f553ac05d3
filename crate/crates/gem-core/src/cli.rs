//! Pipeline commands behind the `gem` binary: fit, analyze, simulate and the
//! PCA-vs-PLS demo. Each command reads a [`RunConfig`] (JSON-serializable;
//! CLI flags override file values), writes tables and SVG plots under the
//! output directory and returns a short human-readable summary.
//!
//! Output layout: `fit/`, `pca/`, `pls/`, `enet/`, `demo/` for tables and
//! `plots/` for figures. Identical config and seed reproduce every file
//! byte for byte; nothing here writes timestamps.

use crate::cv::CvScheme;
use crate::dataset::{load_dataset, save_dataset, validate_dataset, Dataset, ResponseSelector,
    Schema, VarKind};
use crate::design::{parse_formula, Term};
use crate::enet::{cv_enet, Family};
use crate::error::{Error, Result};
use crate::gem::{fit_gem_dataset, target_variable, GemFit, GemFitDocument};
use crate::pca::{correlation_loadings, fit_pca};
use crate::pls::{
    cross_validate, encode_target, fit_pls, jackknife, majority_class_error, shave, TargetKind,
};
use crate::report::svg::{SvgPlot, BLACK, GRAY, PALETTE};
use crate::report::{num, write_csv, write_text};
use crate::rng::Rng;
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnalysisKind {
    Pca,
    Pls,
    Enet,
}

impl AnalysisKind {
    pub fn parse(text: &str) -> Result<AnalysisKind> {
        match text.trim().to_ascii_lowercase().as_str() {
            "pca" => Ok(AnalysisKind::Pca),
            "pls" => Ok(AnalysisKind::Pls),
            "enet" => Ok(AnalysisKind::Enet),
            other => Err(Error::InvalidArgument(format!(
                "analysis {other:?} is not pca, pls or enet"
            ))),
        }
    }
}

fn default_cv() -> String {
    "loo".into()
}

fn default_alpha() -> f64 {
    0.5
}

fn default_nlambda() -> usize {
    100
}

/// Everything one run needs; JSON-serializable so a run can be replayed from
/// a config file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub data: PathBuf,
    /// Response selector: prefix, `a:b` header range or comma list.
    pub responses: String,
    #[serde(default)]
    pub id_column: Option<String>,
    /// Variables forced categorical / continuous instead of inferred.
    #[serde(default)]
    pub categorical: Vec<String>,
    #[serde(default)]
    pub continuous: Vec<String>,
    pub model: String,
    /// Effect term(s) to analyze; several terms combine their ER matrices
    /// (PCA only).
    #[serde(default)]
    pub effect: Vec<String>,
    #[serde(default)]
    pub analysis: Option<AnalysisKind>,
    #[serde(default)]
    pub ncomp: Option<usize>,
    #[serde(default = "default_cv")]
    pub cv: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub family: Option<String>,
    #[serde(default = "default_nlambda")]
    pub nlambda: usize,
    #[serde(default)]
    pub shave: Option<f64>,
    #[serde(default)]
    pub jackknife: bool,
    pub out: PathBuf,
    /// Preprocessing applied to Y before the fit.
    #[serde(default)]
    pub log_transform: bool,
    #[serde(default)]
    pub scale_responses: bool,
    /// Add the grand-mean row back when exporting ER matrices.
    #[serde(default)]
    pub add_intercept_to_er: bool,
    #[serde(default)]
    pub embed_matrices: bool,
    /// Write per-term ER matrices as CSV during `fit`.
    #[serde(default)]
    pub write_er: bool,
    /// PCA: autoscale columns of the analyzed ER matrix.
    #[serde(default)]
    pub scale_er: bool,
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }

    fn schema(&self) -> Schema {
        let mut forced = BTreeMap::new();
        for name in &self.categorical {
            forced.insert(name.clone(), VarKind::Categorical);
        }
        for name in &self.continuous {
            forced.insert(name.clone(), VarKind::Continuous);
        }
        Schema {
            responses: ResponseSelector::parse(&self.responses),
            id_column: self.id_column.clone(),
            forced_kinds: forced,
            response_block: None,
        }
    }

    fn cv_scheme(&self) -> Result<CvScheme> {
        CvScheme::parse(&self.cv, self.seed)
    }
}

fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Load the dataset and apply the preprocessing flags.
fn load_prepared(config: &RunConfig) -> Result<Dataset> {
    let mut d = load_dataset(&config.data, &config.schema())?;
    if config.log_transform {
        for ((i, j), v) in d.y.indexed_iter_mut() {
            if *v <= 0.0 {
                return Err(Error::InvalidData(format!(
                    "log preprocessing needs positive responses; ({i}, {}) is {v}",
                    d.response_names[j]
                )));
            }
            *v = v.ln();
        }
    }
    if config.scale_responses {
        let n = d.y.nrows();
        for j in 0..d.y.ncols() {
            let mean = d.y.column(j).sum() / n as f64;
            let var = d
                .y
                .column(j)
                .iter()
                .map(|&v| (v - mean) * (v - mean))
                .sum::<f64>()
                / (n as f64 - 1.0);
            if var == 0.0 {
                return Err(Error::InvalidData(format!(
                    "response {} is constant; cannot scale",
                    d.response_names[j]
                )));
            }
            let sd = var.sqrt();
            for i in 0..n {
                d.y[[i, j]] /= sd;
            }
        }
    }
    Ok(d)
}

fn fit_path(out: &Path) -> PathBuf {
    out.join("fit").join("gemfit.json")
}

/// `gem fit`: fit the model, persist it and write the variance summary.
pub fn cmd_fit(config: &RunConfig) -> Result<String> {
    let dataset = load_prepared(config)?;
    let spec = parse_formula(&config.model)?;
    let fit = fit_gem_dataset(&spec, &dataset)?;

    let fit_dir = config.out.join("fit");
    ensure_dir(&fit_dir)?;
    let doc = GemFitDocument::from_fit(&fit, &dataset, config.embed_matrices);
    doc.save(&fit_path(&config.out))?;

    let report = validate_dataset(&dataset);
    let (fractions, resid) = fit.variance_explained();
    let mut rows: Vec<Vec<String>> = fractions
        .iter()
        .map(|(t, f)| vec![t.to_string(), num(*f)])
        .collect();
    rows.push(vec!["(residual)".into(), num(resid)]);
    rows.push(vec![
        "(balanced)".into(),
        if report.balanced { "yes" } else { "no" }.into(),
    ]);
    write_csv(
        &fit_dir.join("variance_explained.csv"),
        &["term", "fraction_of_centered_variance"],
        &rows,
    )?;

    if config.write_er {
        for (term, _) in &fit.effects {
            let mut er = fit.er_matrix(term)?;
            if config.add_intercept_to_er {
                for mut row in er.rows_mut() {
                    row += &fit.mu;
                }
            }
            let mut header: Vec<&str> = vec!["sample_id"];
            header.extend(dataset.response_names.iter().map(String::as_str));
            let rows: Vec<Vec<String>> = (0..er.nrows())
                .map(|i| {
                    let mut row = vec![dataset.sample_ids[i].clone()];
                    row.extend((0..er.ncols()).map(|j| num(er[[i, j]])));
                    row
                })
                .collect();
            let name = format!("er_{}.csv", term.to_string().replace(':', "_"));
            write_csv(&fit_dir.join(name), &header, &rows)?;
        }
    }

    let mut summary = format!(
        "fitted {} on {} samples x {} responses",
        spec.formula(),
        dataset.n_samples(),
        dataset.n_responses()
    );
    if !report.balanced {
        summary.push_str("; design is unbalanced");
    }
    for (t, f) in &fractions {
        summary.push_str(&format!("\n  {t}: {:.1}% of centered variance", f * 100.0));
    }
    summary.push_str(&format!("\n  residual: {:.1}%", resid * 100.0));
    Ok(summary)
}

/// Resolve the analyzed terms and the combined ER matrix.
fn resolve_effect(fit: &GemFit, config: &RunConfig) -> Result<(Vec<Term>, Array2<f64>)> {
    if config.effect.is_empty() {
        return Err(Error::InvalidArgument(
            "no --effect term given for the analysis".into(),
        ));
    }
    let terms: Vec<Term> = config
        .effect
        .iter()
        .map(|t| Ok(fit.spec.term(t)?.clone()))
        .collect::<Result<Vec<Term>>>()?;
    let er = fit.combined_er(&terms)?;
    Ok((terms, er))
}

/// Load the persisted fit when it matches the requested model, otherwise
/// fit inline.
fn fit_for_analysis(config: &RunConfig, dataset: &Dataset) -> Result<GemFit> {
    let spec = parse_formula(&config.model)?;
    let path = fit_path(&config.out);
    if path.exists() {
        let doc = GemFitDocument::load(&path)?;
        if doc.formula == spec.formula() {
            return doc.into_fit(dataset);
        }
    }
    fit_gem_dataset(&spec, dataset)
}

/// `gem analyze`: PCA, PLS or elastic-net analysis of the selected effect.
pub fn cmd_analyze(config: &RunConfig) -> Result<String> {
    let dataset = load_prepared(config)?;
    let fit = fit_for_analysis(config, &dataset)?;
    let (terms, er) = resolve_effect(&fit, config)?;
    let analysis = config.analysis.ok_or_else(|| {
        Error::InvalidArgument("no --analysis given (pca, pls or enet)".into())
    })?;
    ensure_dir(&config.out.join("plots"))?;
    match analysis {
        AnalysisKind::Pca => analyze_pca(config, &dataset, &er, &terms),
        AnalysisKind::Pls => analyze_pls(config, &dataset, &er, &terms),
        AnalysisKind::Enet => analyze_enet(config, &dataset, &er, &terms),
    }
}

fn effect_label(terms: &[Term]) -> String {
    terms
        .iter()
        .map(Term::to_string)
        .collect::<Vec<_>>()
        .join("+")
}

fn analyze_pca(
    config: &RunConfig,
    dataset: &Dataset,
    er: &Array2<f64>,
    terms: &[Term],
) -> Result<String> {
    let dir = config.out.join("pca");
    ensure_dir(&dir)?;
    let max_comp = (er.nrows() - 1).min(er.ncols());
    let ncomp = config.ncomp.unwrap_or(2).min(max_comp).max(1);
    let model = fit_pca(er, ncomp, config.scale_er)?;
    let label = effect_label(terms);

    let comp_header: Vec<String> = (1..=ncomp).map(|a| format!("PC{a}")).collect();
    let mut header: Vec<&str> = vec!["sample_id"];
    header.extend(comp_header.iter().map(String::as_str));
    let rows: Vec<Vec<String>> = (0..model.t.nrows())
        .map(|i| {
            let mut row = vec![dataset.sample_ids[i].clone()];
            row.extend((0..ncomp).map(|a| num(model.t[[i, a]])));
            row
        })
        .collect();
    write_csv(&dir.join("scores.csv"), &header, &rows)?;

    let mut header: Vec<&str> = vec!["response"];
    header.extend(comp_header.iter().map(String::as_str));
    let rows: Vec<Vec<String>> = (0..model.p.nrows())
        .map(|j| {
            let mut row = vec![dataset.response_names[j].clone()];
            row.extend((0..ncomp).map(|a| num(model.p[[j, a]])));
            row
        })
        .collect();
    write_csv(&dir.join("loadings.csv"), &header, &rows)?;

    let rows: Vec<Vec<String>> = (0..ncomp)
        .map(|a| vec![(a + 1).to_string(), num(model.explvar_x[a])])
        .collect();
    write_csv(&dir.join("explvar.csv"), &["component", "explvar_x"], &rows)?;

    let corr = correlation_loadings(er, &model.t)?;
    let mut header: Vec<&str> = vec!["response"];
    header.extend(comp_header.iter().map(String::as_str));
    let rows: Vec<Vec<String>> = (0..corr.nrows())
        .map(|j| {
            let mut row = vec![dataset.response_names[j].clone()];
            row.extend((0..ncomp).map(|a| num(corr[[j, a]])));
            row
        })
        .collect();
    write_csv(&dir.join("corr_loadings.csv"), &header, &rows)?;

    // plots
    let plots = config.out.join("plots");
    let class_var = terms.iter().find_map(|t| match t {
        Term::Main(name) => dataset
            .variable(name)
            .ok()
            .filter(|v| v.kind() == VarKind::Categorical),
        _ => None,
    });
    let scores_xy = scores_points(&model.t);
    let mut plot = SvgPlot::new(
        &format!("PCA scores ({label})"),
        &score_axis_label("PC", 1, Some(model.explvar_x[0])),
        &score_axis_label(
            "PC",
            2.min(ncomp),
            (ncomp > 1).then(|| model.explvar_x[1]),
        ),
    );
    match class_var {
        Some(var) => {
            let levels = var.levels().unwrap().to_vec();
            for (li, level) in levels.iter().enumerate() {
                let pts: Vec<(f64, f64)> = (0..er.nrows())
                    .filter(|&i| var.label(i) == Some(level.as_str()))
                    .map(|i| scores_xy[i])
                    .collect();
                plot.scatter(Some(level), &pts, PALETTE[li % PALETTE.len()], true);
            }
        }
        None => {
            plot.scatter(None, &scores_xy, PALETTE[0], true);
        }
    }
    write_text(&plots.join("pca_scores.svg"), &plot.render())?;

    let loading_xy: Vec<(f64, f64)> = (0..model.p.nrows())
        .map(|j| {
            (
                model.p[[j, 0]],
                if ncomp > 1 { model.p[[j, 1]] } else { 0.0 },
            )
        })
        .collect();
    let mut plot = SvgPlot::new(&format!("PCA loadings ({label})"), "PC1", "PC2");
    plot.scatter(None, &loading_xy, PALETTE[0], false);
    write_text(&plots.join("pca_loadings.svg"), &plot.render())?;

    let ev_pts: Vec<(f64, f64)> = (0..ncomp)
        .map(|a| ((a + 1) as f64, model.explvar_x[a] * 100.0))
        .collect();
    let mut plot = SvgPlot::new(
        &format!("PCA explained variance ({label})"),
        "component",
        "% of X variance",
    );
    plot.line(None, &ev_pts, PALETTE[0], false);
    plot.scatter(None, &ev_pts, PALETTE[0], true);
    write_text(&plots.join("pca_explvar.svg"), &plot.render())?;

    let corr_xy: Vec<(f64, f64)> = (0..corr.nrows())
        .map(|j| (corr[[j, 0]], if ncomp > 1 { corr[[j, 1]] } else { 0.0 }))
        .collect();
    write_text(
        &plots.join("pca_corr_loadings.svg"),
        &correlation_plot(&format!("PCA correlation loadings ({label})"), &corr_xy, None),
    )?;

    Ok(format!(
        "PCA of ER({label}): component 1 explains {:.1}% of X variance",
        model.explvar_x[0] * 100.0
    ))
}

fn score_axis_label(prefix: &str, comp: usize, explvar: Option<f64>) -> String {
    match explvar {
        Some(ev) => format!("{prefix}{comp} ({:.1}%)", ev * 100.0),
        None => format!("{prefix}{comp}"),
    }
}

fn scores_points(t: &Array2<f64>) -> Vec<(f64, f64)> {
    (0..t.nrows())
        .map(|i| {
            (
                t[[i, 0]],
                if t.ncols() > 1 { t[[i, 1]] } else { i as f64 },
            )
        })
        .collect()
}

/// Correlation-loading scatter with the 50% and 100% explained-variance
/// circles.
fn correlation_plot(title: &str, points: &[(f64, f64)], emphasized: Option<&[bool]>) -> String {
    let mut plot = SvgPlot::new(title, "component 1", "component 2");
    plot.fixed_range(-1.1, 1.1, -1.1, 1.1);
    plot.origin_circle(0.5f64.sqrt());
    plot.origin_circle(1.0);
    match emphasized {
        Some(mask) => {
            let plain: Vec<(f64, f64)> = points
                .iter()
                .zip(mask)
                .filter(|(_, &m)| !m)
                .map(|(&p, _)| p)
                .collect();
            let strong: Vec<(f64, f64)> = points
                .iter()
                .zip(mask)
                .filter(|(_, &m)| m)
                .map(|(&p, _)| p)
                .collect();
            plot.scatter(Some("other"), &plain, GRAY, false);
            plot.scatter(Some("significant"), &strong, BLACK, true);
        }
        None => {
            plot.scatter(None, points, PALETTE[0], false);
        }
    }
    plot.render()
}

fn analyze_pls(
    config: &RunConfig,
    dataset: &Dataset,
    er: &Array2<f64>,
    terms: &[Term],
) -> Result<String> {
    if terms.len() != 1 {
        return Err(Error::InvalidArgument(
            "PLS analysis takes exactly one effect term".into(),
        ));
    }
    let variable = target_variable(dataset, &terms[0])?;
    let target = encode_target(variable)?;
    let scheme = config.cv_scheme()?;
    let dir = config.out.join("pls");
    ensure_dir(&dir)?;
    let plots = config.out.join("plots");
    let label = effect_label(terms);

    let n = er.nrows();
    let max_comp = (n - 1).min(er.ncols());
    let a_max = config.ncomp.unwrap_or(10).min(max_comp).max(1);

    let cv = cross_validate(er, &target, a_max, scheme)?;
    let fit = fit_pls(er, &target, a_max)?;
    let selected = cv.ncomp_selected;

    // cv_error.csv + plot
    let rows: Vec<Vec<String>> = (0..a_max)
        .map(|a| {
            vec![
                (a + 1).to_string(),
                num(cv.error[a]),
                num(cv.se[a]),
            ]
        })
        .collect();
    write_csv(&dir.join("cv_error.csv"), &["component", "error", "se"], &rows)?;
    let err_pts: Vec<(f64, f64)> = (0..a_max)
        .map(|a| ((a + 1) as f64, cv.error[a]))
        .collect();
    let mut plot = SvgPlot::new(
        &format!("PLS cross-validated error ({label})"),
        "components",
        if target.is_categorical() {
            "misclassification"
        } else {
            "RMSE"
        },
    );
    plot.line(Some("CV error"), &err_pts, PALETTE[0], false);
    plot.scatter(None, &err_pts, PALETTE[0], true);
    write_text(&plots.join("pls_cv_error.svg"), &plot.render())?;

    // classes.csv
    if let Some(classes) = &cv.classes {
        let comp_header: Vec<String> = (1..=a_max).map(|a| format!("comp{a}")).collect();
        let mut header: Vec<&str> = vec!["sample_id", "observed"];
        header.extend(comp_header.iter().map(String::as_str));
        let rows: Vec<Vec<String>> = (0..n)
            .map(|i| {
                let mut row = vec![
                    dataset.sample_ids[i].clone(),
                    target.levels[target.class_idx[i]].clone(),
                ];
                row.extend((0..a_max).map(|a| classes[a][i].clone()));
                row
            })
            .collect();
        write_csv(&dir.join("classes.csv"), &header, &rows)?;
    }

    // scores plot (training model at the selected component count)
    let model = fit.primary();
    let comp_header: Vec<String> = (1..=a_max).map(|a| format!("comp{a}")).collect();
    let mut header: Vec<&str> = vec!["sample_id"];
    header.extend(comp_header.iter().map(String::as_str));
    let rows: Vec<Vec<String>> = (0..n)
        .map(|i| {
            let mut row = vec![dataset.sample_ids[i].clone()];
            row.extend((0..a_max).map(|a| num(model.t[[i, a]])));
            row
        })
        .collect();
    write_csv(&dir.join("scores.csv"), &header, &rows)?;
    let mut header: Vec<&str> = vec!["response"];
    header.extend(comp_header.iter().map(String::as_str));
    let rows: Vec<Vec<String>> = (0..model.p.nrows())
        .map(|j| {
            let mut row = vec![dataset.response_names[j].clone()];
            row.extend((0..a_max).map(|a| num(model.p[[j, a]])));
            row
        })
        .collect();
    write_csv(&dir.join("loadings.csv"), &header, &rows)?;
    let scores_xy = scores_points(&model.t);
    let mut plot = SvgPlot::new(
        &format!("PLS scores ({label})"),
        &score_axis_label("comp ", 1, Some(model.explvar_x[0])),
        &score_axis_label(
            "comp ",
            2.min(a_max),
            (a_max > 1).then(|| model.explvar_x[1]),
        ),
    );
    if target.is_categorical() {
        for (li, level) in target.levels.iter().enumerate() {
            let pts: Vec<(f64, f64)> = (0..n)
                .filter(|&i| target.class_idx[i] == li)
                .map(|i| scores_xy[i])
                .collect();
            plot.scatter(Some(level), &pts, PALETTE[li % PALETTE.len()], true);
        }
    } else {
        plot.scatter(None, &scores_xy, PALETTE[0], true);
    }
    write_text(&plots.join("pls_scores.svg"), &plot.render())?;

    // jackknife + loadings plot with significance emphasis
    let mut significant: Option<Vec<bool>> = None;
    let mut jack_summary = String::new();
    if config.jackknife {
        let p = jackknife(er, &target, a_max, scheme)?;
        let comp_header: Vec<String> = (1..=a_max).map(|a| format!("p_comp{a}")).collect();
        let mut header: Vec<&str> = vec!["response"];
        header.extend(comp_header.iter().map(String::as_str));
        let rows: Vec<Vec<String>> = (0..p.nrows())
            .map(|j| {
                let mut row = vec![dataset.response_names[j].clone()];
                row.extend((0..a_max).map(|a| num(p[[j, a]])));
                row
            })
            .collect();
        write_csv(&dir.join("jackknife.csv"), &header, &rows)?;
        let mask: Vec<bool> = (0..p.nrows()).map(|j| p[[j, selected - 1]] < 0.05).collect();
        let n_sig = mask.iter().filter(|&&m| m).count();
        jack_summary = format!("; {n_sig} responses with jackknife p < 0.05");
        significant = Some(mask);
    }

    let loading_xy: Vec<(f64, f64)> = (0..model.p.nrows())
        .map(|j| {
            (
                model.p[[j, 0]],
                if a_max > 1 { model.p[[j, 1]] } else { 0.0 },
            )
        })
        .collect();
    let mut plot = SvgPlot::new(&format!("PLS loadings ({label})"), "comp 1", "comp 2");
    match &significant {
        Some(mask) => {
            let plain: Vec<(f64, f64)> = loading_xy
                .iter()
                .zip(mask)
                .filter(|(_, &m)| !m)
                .map(|(&p, _)| p)
                .collect();
            let strong: Vec<(f64, f64)> = loading_xy
                .iter()
                .zip(mask)
                .filter(|(_, &m)| m)
                .map(|(&p, _)| p)
                .collect();
            plot.scatter(Some("other"), &plain, GRAY, false);
            plot.scatter(Some("significant"), &strong, BLACK, true);
        }
        None => {
            plot.scatter(None, &loading_xy, PALETTE[0], false);
        }
    }
    write_text(&plots.join("pls_loadings.svg"), &plot.render())?;

    // correlation loadings with 50%/100% circles
    let corr = correlation_loadings(er, &model.t)?;
    let mut header: Vec<&str> = vec!["response"];
    header.extend(comp_header.iter().map(String::as_str));
    let rows: Vec<Vec<String>> = (0..corr.nrows())
        .map(|j| {
            let mut row = vec![dataset.response_names[j].clone()];
            row.extend((0..a_max).map(|a| num(corr[[j, a]])));
            row
        })
        .collect();
    write_csv(&dir.join("corr_loadings.csv"), &header, &rows)?;
    let corr_xy: Vec<(f64, f64)> = (0..corr.nrows())
        .map(|j| (corr[[j, 0]], if a_max > 1 { corr[[j, 1]] } else { 0.0 }))
        .collect();
    write_text(
        &plots.join("pls_corr_loadings.svg"),
        &correlation_plot(
            &format!("PLS correlation loadings ({label})"),
            &corr_xy,
            significant.as_deref(),
        ),
    )?;

    // shaving
    let mut shave_summary = String::new();
    if let Some(fraction) = config.shave {
        let result = shave(er, &target, a_max.min(er.ncols().saturating_sub(1)).max(1), fraction, scheme)?;
        let labels: Vec<&str> = target
            .class_idx
            .iter()
            .map(|&c| target.levels[c].as_str())
            .collect();
        let reference = if target.is_categorical() {
            majority_class_error(&labels)
        } else {
            f64::NAN
        };
        let rows: Vec<Vec<String>> = result
            .trace
            .iter()
            .enumerate()
            .map(|(step, s)| {
                vec![
                    step.to_string(),
                    s.active.len().to_string(),
                    num(s.error),
                    s.ncomp.to_string(),
                    num(reference),
                ]
            })
            .collect();
        write_csv(
            &dir.join("shave_trace.csv"),
            &["step", "n_active", "error", "ncomp", "majority_class_error"],
            &rows,
        )?;
        let subset_names: Vec<String> = result
            .optimal_subset
            .iter()
            .map(|&j| dataset.response_names[j].clone())
            .collect();
        write_text(&dir.join("subset.txt"), &(subset_names.join("\n") + "\n"))?;

        let trace_pts: Vec<(f64, f64)> = result
            .trace
            .iter()
            .map(|s| (s.active.len() as f64, s.error))
            .collect();
        let mut plot = SvgPlot::new(
            &format!("Shaving ({label})"),
            "remaining variables",
            "error",
        );
        plot.line(Some("CV error"), &trace_pts, PALETTE[0], false);
        plot.scatter(None, &trace_pts, PALETTE[0], true);
        if target.is_categorical() {
            plot.hline(reference, Some("majority class error"), BLACK);
        }
        write_text(&plots.join("pls_shaving.svg"), &plot.render())?;
        shave_summary = format!(
            "; shaving kept {} variables at error {:.3}",
            result.optimal_subset.len(),
            result.trace[result.min_red].error
        );
    }

    let mut summary = format!(
        "PLS of {label}: CV error {:.3} at {selected} component(s){jack_summary}{shave_summary}",
        cv.error[selected - 1]
    );
    for warning in &cv.warnings {
        summary.push_str(&format!("\n  warning: {warning}"));
    }
    Ok(summary)
}

fn analyze_enet(
    config: &RunConfig,
    dataset: &Dataset,
    er: &Array2<f64>,
    terms: &[Term],
) -> Result<String> {
    if terms.len() != 1 {
        return Err(Error::InvalidArgument(
            "elastic-net analysis takes exactly one effect term".into(),
        ));
    }
    let variable = target_variable(dataset, &terms[0])?;
    let target = encode_target(variable)?;
    let (family, y): (Family, Vec<f64>) = match target.kind {
        TargetKind::TwoClass => (
            Family::Binomial,
            target.class_idx.iter().map(|&c| c as f64).collect(),
        ),
        TargetKind::Continuous => (Family::Gaussian, target.dummy.column(0).to_vec()),
        TargetKind::MultiClass => {
            return Err(Error::InvalidArgument(
                "elastic net supports two-class or continuous targets".into(),
            ))
        }
    };
    if let Some(requested) = &config.family {
        let requested = Family::parse(requested)?;
        if requested != family {
            return Err(Error::InvalidArgument(format!(
                "family {requested:?} does not match the {:?} target",
                target.kind
            )));
        }
    }
    let scheme = config.cv_scheme()?;
    let dir = config.out.join("enet");
    ensure_dir(&dir)?;
    let plots = config.out.join("plots");
    let label = effect_label(terms);

    let path = cv_enet(er, &y, config.alpha, family, config.nlambda, scheme)?;
    let lambda_opt = path.lambda_opt.expect("cv_enet fills lambda_opt");
    let cv_error = path.cv_error.as_ref().unwrap();
    let cv_se = path.cv_se.as_ref().unwrap();

    // enet_path.csv: lambda, df, intercept, per-variable coefficients
    let mut header: Vec<&str> = vec!["lambda", "df", "intercept"];
    header.extend(dataset.response_names.iter().map(String::as_str));
    let rows: Vec<Vec<String>> = (0..path.lambdas.len())
        .map(|li| {
            let (b0, slopes) = &path.coefs[li];
            let mut row = vec![num(path.lambdas[li]), path.df[li].to_string(), num(*b0)];
            row.extend(slopes.iter().map(|&c| num(c)));
            row
        })
        .collect();
    write_csv(&dir.join("enet_path.csv"), &header, &rows)?;

    let rows: Vec<Vec<String>> = (0..path.lambdas.len())
        .map(|li| vec![num(path.lambdas[li]), num(cv_error[li]), num(cv_se[li])])
        .collect();
    write_csv(&dir.join("enet_cv.csv"), &["lambda", "error", "se"], &rows)?;

    let nonzero = path.nonzero_set(lambda_opt)?;
    let names: Vec<String> = nonzero
        .iter()
        .map(|&j| dataset.response_names[j].clone())
        .collect();
    write_text(&dir.join("nonzero.txt"), &(names.join("\n") + "\n"))?;

    // coefficient paths vs log lambda
    let mut plot = SvgPlot::new(
        &format!("Elastic-net coefficient paths ({label})"),
        "ln(lambda)",
        "coefficient",
    );
    for j in 0..er.ncols() {
        let pts: Vec<(f64, f64)> = (0..path.lambdas.len())
            .map(|li| (path.lambdas[li].ln(), path.coefs[li].1[j]))
            .collect();
        if pts.iter().all(|(_, c)| *c == 0.0) {
            continue;
        }
        plot.line(None, &pts, PALETTE[j % PALETTE.len()], false);
    }
    write_text(&plots.join("enet_path.svg"), &plot.render())?;

    let cv_pts: Vec<(f64, f64)> = (0..path.lambdas.len())
        .map(|li| (path.lambdas[li].ln(), cv_error[li]))
        .collect();
    let mut plot = SvgPlot::new(
        &format!("Elastic-net cross-validation ({label})"),
        "ln(lambda)",
        if family == Family::Binomial {
            "misclassification"
        } else {
            "MSE"
        },
    );
    plot.line(Some("CV error"), &cv_pts, PALETTE[0], false);
    plot.scatter(None, &cv_pts, PALETTE[0], true);
    write_text(&plots.join("enet_cv.svg"), &plot.render())?;

    Ok(format!(
        "elastic net of {label} (alpha {}): {} nonzero coefficients at lambda_opt {:.6}",
        config.alpha,
        nonzero.len(),
        lambda_opt
    ))
}

/// `gem simulate --spec spec.json --out data.csv`
pub fn cmd_simulate(spec_path: &Path, out: &Path) -> Result<String> {
    let text = std::fs::read_to_string(spec_path).map_err(|source| Error::Io {
        path: spec_path.display().to_string(),
        source,
    })?;
    let spec: crate::oracle::SynthSpec = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidArgument(format!("bad simulation spec: {e}")))?;
    let synth = crate::oracle::plant_effects(&spec)?;
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_dir(parent)?;
        }
    }
    save_dataset(&synth.dataset, out)?;
    let truth_path = out.with_extension("truth.json");
    let truth_text = serde_json::to_string_pretty(&synth.truth)?;
    write_text(&truth_path, &truth_text)?;
    Ok(format!(
        "wrote {} samples x {} responses to {} (ground truth in {})",
        synth.dataset.n_samples(),
        synth.dataset.n_responses(),
        out.display(),
        truth_path.display()
    ))
}

/// The built-in two-variable toy: an elongated correlated cloud whose
/// response is tilted away from the major axis, so PCA and PLS pick
/// visibly different first components.
pub fn demo_toy(seed: u64, isotropic: bool) -> (Array2<f64>, Vec<f64>) {
    let n = 400;
    let mut rng = Rng::seed_from_u64(seed);
    let mut x = Array2::zeros((n, 2));
    let mut y = vec![0.0f64; n];
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..n {
        if isotropic {
            let a = rng.gaussian();
            let b = rng.gaussian();
            x[[i, 0]] = a;
            x[[i, 1]] = b;
            y[i] = a + 0.3 * rng.gaussian();
        } else {
            let major = 2.0 * rng.gaussian();
            let minor = 0.6 * rng.gaussian();
            x[[i, 0]] = (major + minor) * inv_sqrt2;
            x[[i, 1]] = (major - minor) * inv_sqrt2;
            y[i] = 0.35 * major + 1.2 * minor + 0.2 * rng.gaussian();
        }
    }
    (x, y)
}

pub struct DemoTable {
    pub pca_explvar_x: f64,
    pub pca_explvar_y: f64,
    pub pls_explvar_x: f64,
    pub pls_explvar_y: f64,
}

/// Fit both methods with one component on a toy and report the four
/// explained-variance numbers.
pub fn demo_pca_vs_pls_table(x: &Array2<f64>, y: &[f64]) -> Result<DemoTable> {
    let pca = fit_pca(x, 1, false)?;
    // explained y-variance of principal component regression with 1 component
    let t1: Vec<f64> = pca.t.column(0).to_vec();
    let pca_explvar_y = squared_correlation(&t1, y);

    let var = crate::dataset::Variable::continuous("y", y.to_vec())?;
    let coding = encode_target(&var)?;
    let fit = fit_pls(x, &coding, 1)?;
    let model = fit.primary();
    Ok(DemoTable {
        pca_explvar_x: pca.explvar_x[0],
        pca_explvar_y,
        pls_explvar_x: model.explvar_x[0],
        pls_explvar_y: model.explvar_y[0],
    })
}

fn squared_correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return 0.0;
    }
    cov * cov / (va * vb)
}

/// `gem demo pca-vs-pls`
pub fn cmd_demo_pca_vs_pls(out: &Path, seed: u64) -> Result<String> {
    let (x, y) = demo_toy(seed, false);
    let table = demo_pca_vs_pls_table(&x, &y)?;
    let dir = out.join("demo");
    ensure_dir(&dir)?;
    ensure_dir(&out.join("plots"))?;
    let rows = vec![
        vec![
            "pca".to_string(),
            num(table.pca_explvar_x),
            num(table.pca_explvar_y),
        ],
        vec![
            "pls".to_string(),
            num(table.pls_explvar_x),
            num(table.pls_explvar_y),
        ],
    ];
    write_csv(
        &dir.join("pca_vs_pls.csv"),
        &["method", "explvar_x_comp1", "explvar_y_comp1"],
        &rows,
    )?;

    let rows: Vec<Vec<String>> = (0..x.nrows())
        .map(|i| vec![num(x[[i, 0]]), num(x[[i, 1]]), num(y[i])])
        .collect();
    write_csv(&dir.join("toy.csv"), &["x1", "x2", "y"], &rows)?;

    // scatter with both component-1 axes drawn
    let pca = fit_pca(&x, 1, false)?;
    let var = crate::dataset::Variable::continuous("y", y.clone())?;
    let coding = encode_target(&var)?;
    let pls_fit = fit_pls(&x, &coding, 1)?;
    let w = &pls_fit.primary().w;
    let median = {
        let mut sorted = y.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        sorted[sorted.len() / 2]
    };
    let lo: Vec<(f64, f64)> = (0..x.nrows())
        .filter(|&i| y[i] <= median)
        .map(|i| (x[[i, 0]], x[[i, 1]]))
        .collect();
    let hi: Vec<(f64, f64)> = (0..x.nrows())
        .filter(|&i| y[i] > median)
        .map(|i| (x[[i, 0]], x[[i, 1]]))
        .collect();
    let mut plot = SvgPlot::new("PCA vs PLS, first components", "x1", "x2");
    plot.scatter(Some("low response"), &lo, PALETTE[0], false);
    plot.scatter(Some("high response"), &hi, PALETTE[1], true);
    plot.ray(pca.p[[0, 0]], pca.p[[1, 0]], "PCA comp 1", "#2255cc");
    plot.ray(w[[0, 0]], w[[1, 0]], "PLS comp 1", "#cc2222");
    write_text(&out.join("plots").join("pca_vs_pls.svg"), &plot.render())?;

    Ok(format!(
        "explvar_X comp1: PCA {:.3} vs PLS {:.3}; explvar_y comp1: PCA {:.3} vs PLS {:.3}",
        table.pca_explvar_x, table.pls_explvar_x, table.pca_explvar_y, table.pls_explvar_y
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demo_toy_inequalities_hold() {
        let (x, y) = demo_toy(424242, false);
        let t = demo_pca_vs_pls_table(&x, &y).unwrap();
        assert!(t.pca_explvar_x >= t.pls_explvar_x);
        assert!(t.pls_explvar_y >= t.pca_explvar_y);
    }

    #[test]
    fn isotropic_toy_methods_agree_on_x_variance() {
        let (x, y) = demo_toy(7, true);
        let t = demo_pca_vs_pls_table(&x, &y).unwrap();
        assert!(
            (t.pca_explvar_x - t.pls_explvar_x).abs() < 0.1,
            "PCA {} vs PLS {}",
            t.pca_explvar_x,
            t.pls_explvar_x
        );
    }
}
