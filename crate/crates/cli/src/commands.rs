use anyhow::Result;
use hillspec::arcs::{spectrum_portrait, ArcStatus, SingularPoint, SpectrumPortrait};
use hillspec::criterion::{evaluate_criterion, Verdict};
use hillspec::floquet::greens_function;
use hillspec::potential::{Potential, PotentialSpec};
use hillspec::projection::{expand, project_band, GridFunction};
use hillspec::spectra::{catalog, separation_tol, SpectraCatalog};
use hillspec::C64;
use serde::Serialize;

use crate::io::{c_str, csv_string, grid_csv, read_grid_csv, to_json};
use crate::run_config::{Format, GridInput, RunConfig};

/// Files produced by a subcommand, written by `main` once everything has been computed.
pub struct Output {
    pub files: Vec<(String, String)>,
    /// Index into `files` of what goes to stdout without `--out`, per format.
    pub json: usize,
    pub csv: usize,
    /// One-line summary printed when writing to a directory.
    pub summary: String,
    pub exit: i32,
}

impl Output {
    pub fn primary(&self, format: Format) -> &str {
        let i = match format {
            Format::Json => self.json,
            Format::Csv => self.csv,
        };
        &self.files[i].1
    }
}

#[derive(Serialize)]
struct SpectraDoc<'a> {
    potential: PotentialSpec,
    k_max: usize,
    catalog: &'a SpectraCatalog,
}

pub fn spectra(rc: &RunConfig, v: &Potential) -> Result<Output> {
    let cat = catalog(v, rc.k_max, &rc.tolerances)?;
    let json = to_json(&SpectraDoc { potential: rc.potential.clone(), k_max: rc.k_max, catalog: &cat })?;
    let mut rows = Vec::new();
    for (kind, list) in [("dirichlet", &cat.dirichlet), ("periodic", &cat.periodic), ("antiperiodic", &cat.antiperiodic)] {
        for (i, e) in list.iter().enumerate() {
            let [re, im] = c_str(e.z);
            rows.push(vec![kind.into(), (i + 1).to_string(), re, im, e.multiplicity.to_string(), String::new(), String::new()]);
        }
    }
    for (i, c) in cat.critical.iter().enumerate() {
        let [re, im] = c_str(c.delta);
        let [gr, gi] = c_str(c.gamma);
        rows.push(vec!["critical".into(), (i + 1).to_string(), re, im, c.order.to_string(), gr, gi]);
    }
    let csv = csv_string(&["kind", "index", "re", "im", "multiplicity", "gamma_re", "gamma_im"], rows)?;
    let summary = format!(
        "{} Dirichlet, {} periodic, {} antiperiodic eigenvalues and {} critical points",
        cat.dirichlet.len(),
        cat.periodic.len(),
        cat.antiperiodic.len(),
        cat.critical.len()
    );
    Ok(Output { files: vec![("spectra.json".into(), json), ("spectra.csv".into(), csv)], json: 0, csv: 1, summary, exit: 0 })
}

#[derive(Serialize)]
struct ArcSummary {
    band: usize,
    t_range: (f64, f64),
    endpoints: (C64, C64),
    samples: usize,
    regular: bool,
    status: ArcStatus,
}

#[derive(Serialize)]
struct Gap {
    k: usize,
    lower: C64,
    upper: C64,
    width: f64,
    open: bool,
}

#[derive(Serialize)]
struct PortraitDoc {
    potential: PotentialSpec,
    k_max: usize,
    /// Mean of the potential; spectral values below include it.
    mean_shift: C64,
    arcs: Vec<ArcSummary>,
    gaps: Vec<Gap>,
    open_gaps: usize,
    singular_points: Vec<SingularPoint>,
}

fn gaps(p: &SpectrumPortrait, shift: C64, rc: &RunConfig) -> Vec<Gap> {
    let per = p.catalog.periodic_expanded();
    let anti = p.catalog.antiperiodic_expanded();
    (1..p.k_max)
        .filter_map(|k| {
            let (a, b) = if k % 2 == 1 { (anti.get(k - 1)?, anti.get(k)?) } else { (per.get(k - 1)?, per.get(k)?) };
            let width = (b - a).norm();
            Some(Gap { k, lower: a + shift, upper: b + shift, width, open: width > 10.0 * separation_tol(*a, &rc.tolerances) })
        })
        .collect()
}

pub fn portrait(rc: &RunConfig, v: &Potential) -> Result<Output> {
    let (v0, shift) = v.shift_to_zero_mean();
    let p = spectrum_portrait(&v0, rc.k_max, &rc.tolerances)?;
    let mut rows = Vec::new();
    for (ai, arc) in p.arcs.iter().enumerate() {
        for i in 0..arc.len() {
            let [re, im] = c_str(arc.lambda_samples[i] + shift);
            let [dr, di] = c_str(arc.delta_dot_samples[i]);
            rows.push(vec![arc.band_index.to_string(), ai.to_string(), arc.t_samples[i].to_string(), re, im, dr, di]);
        }
    }
    let csv = csv_string(&["band", "arc", "t", "re", "im", "delta_dot_re", "delta_dot_im"], rows)?;
    let gaps = gaps(&p, shift, rc);
    let open_gaps = gaps.iter().filter(|g| g.open).count();
    let doc = PortraitDoc {
        potential: rc.potential.clone(),
        k_max: rc.k_max,
        mean_shift: shift,
        arcs: p
            .arcs
            .iter()
            .map(|a| ArcSummary {
                band: a.band_index,
                t_range: a.t_range(),
                endpoints: (a.endpoints.0 + shift, a.endpoints.1 + shift),
                samples: a.len(),
                regular: a.regular,
                status: a.status,
            })
            .collect(),
        gaps,
        open_gaps,
        singular_points: p
            .singular_points
            .iter()
            .map(|s| SingularPoint { lambda: s.lambda + shift, ..s.clone() })
            .collect(),
    };
    let summary = format!("{} arcs on bands 1..={}, {} open gaps, {} singular points", p.arcs.len(), rc.k_max, open_gaps, p.singular_points.len());
    Ok(Output { files: vec![("portrait.json".into(), to_json(&doc)?), ("portrait.csv".into(), csv)], json: 0, csv: 1, summary, exit: 0 })
}

pub fn criterion(rc: &RunConfig, v: &Potential) -> Result<Output> {
    let (report, _) = evaluate_criterion(v, rc.k_max, &rc.tolerances)?;
    let csv = csv_string(
        &["band", "sup_phi_ratio", "sup_theta_prime_ratio", "sup_delta_minus_ratio"],
        report.ratio_window_sups.iter().enumerate().map(|(i, r)| {
            let mut row = vec![(i + 1).to_string()];
            row.extend(r.iter().map(|x| x.to_string()));
            row
        }),
    )?;
    let summary = report.summary.clone();
    let exit = report.verdict.exit_code();
    Ok(Output { files: vec![("criterion.json".into(), to_json(&report)?), ("criterion.csv".into(), csv)], json: 0, csv: 1, summary, exit })
}

fn input_grid(rc: &RunConfig) -> Result<GridFunction> {
    let p = rc.tolerances.projection.points_per_cell;
    Ok(match &rc.project.input {
        GridInput::Bump { center, width } => GridFunction::gaussian(rc.project.n_cells, p, *center, *width)?,
        GridInput::Csv { path } => read_grid_csv(path)?,
    })
}

#[derive(Serialize)]
struct ProjectionDoc<'a> {
    potential: PotentialSpec,
    band: usize,
    arcs: usize,
    input_norm: f64,
    output_norm: f64,
    result: &'a GridFunction,
}

pub fn project(rc: &RunConfig, v: &Potential) -> Result<Output> {
    let (v0, _) = v.shift_to_zero_mean();
    let band = rc.project.band.max(1);
    let p = spectrum_portrait(&v0, rc.k_max.max(band), &rc.tolerances)?;
    let g = input_grid(rc)?;
    let pg = project_band(&v0, &p, band, &g, &rc.tolerances)?;
    let doc = ProjectionDoc {
        potential: rc.potential.clone(),
        band,
        arcs: p.band(band).len(),
        input_norm: g.norm(),
        output_norm: pg.norm(),
        result: &pg,
    };
    let summary = format!("band {band}: |g| = {:.6e}, |P g| = {:.6e}", doc.input_norm, doc.output_norm);
    Ok(Output { files: vec![("projection.json".into(), to_json(&doc)?), ("projection.csv".into(), grid_csv(&pg)?)], json: 0, csv: 1, summary, exit: 0 })
}

#[derive(Serialize)]
struct ExpansionDoc<'a> {
    potential: PotentialSpec,
    band_max: usize,
    /// `None` when the criterion was skipped by the override.
    verdict: Option<Verdict>,
    input_norm: f64,
    residual_norm: f64,
    band_norms: &'a [f64],
    result: &'a GridFunction,
}

pub fn expand_cmd(rc: &RunConfig, v: &Potential) -> Result<Output> {
    let (v0, _) = v.shift_to_zero_mean();
    let band_max = rc.project.band_max.max(1);
    let (portrait, verdict) = if rc.project.allow_fail {
        (spectrum_portrait(&v0, band_max, &rc.tolerances)?, None)
    } else {
        let (r, p) = evaluate_criterion(&v0, band_max, &rc.tolerances)?;
        (p, Some(r.verdict))
    };
    let g = input_grid(rc)?;
    let e = expand(&v0, &portrait, &g, band_max, verdict.unwrap_or(Verdict::Inconclusive), rc.project.allow_fail, &rc.tolerances)?;
    let doc = ExpansionDoc {
        potential: rc.potential.clone(),
        band_max,
        verdict,
        input_norm: g.norm(),
        residual_norm: e.residual_norm,
        band_norms: &e.band_norms,
        result: &e.reconstruction,
    };
    let summary = format!("bands 1..={band_max}: |g - expansion| = {:.6e}", e.residual_norm);
    Ok(Output {
        files: vec![("expansion.json".into(), to_json(&doc)?), ("expansion.csv".into(), grid_csv(&e.reconstruction)?)],
        json: 0,
        csv: 1,
        summary,
        exit: 0,
    })
}

#[derive(Serialize)]
struct GreensDoc {
    potential: PotentialSpec,
    z: C64,
    x_grid: Vec<f64>,
    /// `values[i][j] = G(z, x_i, x_j)`.
    values: Vec<Vec<C64>>,
}

pub fn greens(rc: &RunConfig, v: &Potential) -> Result<Output> {
    let gp = &rc.greens;
    let z = C64::new(gp.z[0], gp.z[1]);
    let xs: Vec<f64> = (0..gp.points).map(|i| gp.x_min + (gp.x_max - gp.x_min) * i as f64 / (gp.points - 1) as f64).collect();
    let mut values = Vec::with_capacity(xs.len());
    for &x in &xs {
        let row = xs.iter().map(|&y| greens_function(v, z, x, y, &rc.tolerances.floquet)).collect::<hillspec::Result<Vec<_>>>()?;
        values.push(row);
    }
    let mut rows = Vec::new();
    for (i, x) in xs.iter().enumerate() {
        for (j, y) in xs.iter().enumerate() {
            let [re, im] = c_str(values[i][j]);
            rows.push(vec![x.to_string(), y.to_string(), re, im]);
        }
    }
    let csv = csv_string(&["x", "y", "re", "im"], rows)?;
    let summary = format!("Green's kernel at z = {z} on a {0}x{0} grid", xs.len());
    let doc = GreensDoc { potential: rc.potential.clone(), z, x_grid: xs, values };
    Ok(Output { files: vec![("greens.json".into(), to_json(&doc)?), ("greens.csv".into(), csv)], json: 0, csv: 1, summary, exit: 0 })
}
