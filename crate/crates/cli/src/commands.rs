//! Subcommand implementations.

use std::path::Path;

use manifold_rbf::features::{
    self, candidate_grid, normalize_by_window, select_subwindows, FeatureStack, IntegralImages,
    Rect,
};
use manifold_rbf::io::{fmt_f64, Dataset};
use manifold_rbf::kernel::{
    self, cross_gram, definiteness_search, gaussian_from_sq_dist, squared_distance_matrix,
    SearchDomain,
};
use manifold_rbf::learn::{self, MulticlassMode, MulticlassSvm};
use manifold_rbf::synth::{self, median_gamma};
use manifold_rbf::{
    grassmann, linalg, Error, GrassmannPoint, KernelSpec, Manifold, Matrix, Point, SpdMatrix,
    Vector,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::output::{
    read_csv, read_dataset, read_field, read_image, write_csv, write_json, CliError, CliResult,
    Provenance,
};
use crate::{
    ClusterArgs, Command, CovdescArgs, DefinitenessArgs, FeatureKind, GramArgs, KernelArgs,
    KfdaArgs, KpcaArgs, MklTrainArgs, ModeArg, SubspaceArgs, SvmPredictArgs, SvmTrainArgs,
    SynthArgs, SynthKind,
};

pub fn run(cmd: &Command, seed: u64) -> CliResult<()> {
    match cmd {
        Command::Definiteness(a) => definiteness(a, seed),
        Command::Gram(a) => gram(a, seed),
        Command::Cluster(a) => cluster(a, seed),
        Command::Kpca(a) => kpca(a, seed),
        Command::Kfda(a) => kfda(a, seed),
        Command::SvmTrain(a) => svm_train(a, seed),
        Command::SvmPredict(a) => svm_predict(a, seed),
        Command::MklTrain(a) => mkl_train(a, seed),
        Command::Covdesc(a) => covdesc(a, seed),
        Command::Subspace(a) => subspace(a, seed),
        Command::Synth(a) => synth_cmd(a, seed),
    }
}

fn to_value(v: &impl Serialize) -> CliResult<Value> {
    Ok(serde_json::to_value(v)?)
}

fn parse_gamma(arg: &str, d2: &Matrix) -> CliResult<f64> {
    if arg.eq_ignore_ascii_case("median") {
        return Ok(median_gamma(d2));
    }
    match arg.parse::<f64>() {
        Ok(g) if g > 0.0 && g.is_finite() => Ok(g),
        _ => Err(CliError::Usage(format!(
            "gamma must be a positive number or 'median', got '{arg}'"
        ))),
    }
}

fn load(path: &Path) -> CliResult<(Dataset, Vec<Point>)> {
    let data = read_dataset(path)?;
    let points = data.to_points()?;
    if points.is_empty() {
        return Err(Error::EmptySet.into());
    }
    Ok((data, points))
}

fn require_labels(data: &Dataset) -> CliResult<Vec<i64>> {
    data.labels()
        .map(<[i64]>::to_vec)
        .ok_or_else(|| Error::Parse("dataset has no labels".into()).into())
}

/// Gaussian Gram matrix of `points` and the resolved kernel.
fn gaussian_gram(args: &KernelArgs, points: &[Point]) -> CliResult<(KernelSpec, Matrix)> {
    let manifold = args.metric.resolve(points)?;
    let d2 = squared_distance_matrix(&manifold, points)?;
    let gamma = parse_gamma(&args.gamma, &d2)?;
    Ok((
        KernelSpec::new(manifold, gamma)?,
        gaussian_from_sq_dist(&d2, gamma),
    ))
}

fn grassmann_points(points: &[Point]) -> CliResult<Vec<GrassmannPoint>> {
    points
        .iter()
        .map(|p| match p {
            Point::Grassmann(g) => Ok(g.clone()),
            _ => Err(CliError::Usage(
                "--linear-projection needs a Grassmann dataset".into(),
            )),
        })
        .collect()
}

/// Vectorized point for plain (linear) k-means: matrix entries for SPD
/// points, projector entries for subspaces.
fn vectorize(p: &Point) -> Vector {
    match p {
        Point::Spd(s) => Vector::from_column_slice(s.as_matrix().as_slice()),
        Point::Grassmann(g) => Vector::from_column_slice(g.projector().as_slice()),
        Point::Euclidean(v) => v.clone(),
    }
}

fn list(values: &[f64]) -> String {
    values
        .iter()
        .map(|&v| fmt_f64(v))
        .collect::<Vec<_>>()
        .join(",")
}

fn definiteness(a: &DefinitenessArgs, seed: u64) -> CliResult<()> {
    let domain = match a.metric.resolve(&[])? {
        Manifold::Spd(m) => SearchDomain::spd(m, a.dim),
        Manifold::Grassmann(m) => SearchDomain::grassmann(m, a.dim, a.subspace_dim),
        Manifold::Euclidean => {
            return Err(CliError::Usage(
                "definiteness search needs --manifold spd or grassmann".into(),
            ))
        }
    };
    let report = definiteness_search(domain, &a.gamma_grid, a.m, a.trials, seed)?;
    let prov = Provenance::new("definiteness", seed, a)?;
    write_json(
        a.output.as_deref(),
        &prov,
        vec![("report", to_value(&report)?)],
    )
}

fn gram(a: &GramArgs, seed: u64) -> CliResult<()> {
    let (_, points) = load(&a.input)?;
    let (k, mut extra) = if a.linear_projection {
        let k = kernel::projection_linear_gram(&grassmann_points(&points)?)?;
        (k, vec!["kernel=linear-projection".to_string()])
    } else {
        let (spec, k) = gaussian_gram(&a.kernel, &points)?;
        (
            k,
            vec![
                format!("kernel={}", spec.manifold),
                format!("gamma={}", fmt_f64(spec.gamma())),
            ],
        )
    };
    if a.audit {
        extra.push(format!(
            "min_eigen={}",
            fmt_f64(linalg::sym_eig(&k)?.min_value())
        ));
    }
    let prov = Provenance::new("gram", seed, a)?;
    write_csv(a.output.as_deref(), &prov, extra, &k)
}

fn class_indices(labels: &[i64]) -> Vec<usize> {
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    labels
        .iter()
        .map(|l| classes.binary_search(l).expect("present"))
        .collect()
}

fn cluster(a: &ClusterArgs, seed: u64) -> CliResult<()> {
    let (data, points) = load(&a.input)?;
    let (k, gamma) = if a.linear {
        let rows: Vec<Vector> = points.iter().map(vectorize).collect();
        (learn::linear_gram(&rows)?, None)
    } else {
        let (spec, k) = gaussian_gram(&a.kernel, &points)?;
        (k, Some(spec.gamma()))
    };
    let result = learn::kernel_kmeans(&k, a.k, a.restarts, a.max_iter, seed)?;
    let mut fields = vec![("gamma", to_value(&gamma)?), ("result", to_value(&result)?)];
    if let Some(labels) = data.labels() {
        let acc = learn::clustering_accuracy(&result.labels, &class_indices(labels));
        fields.push(("accuracy", json!(acc)));
    }
    let prov = Provenance::new("cluster", seed, a)?;
    write_json(a.output.as_deref(), &prov, fields)
}

fn kpca(a: &KpcaArgs, seed: u64) -> CliResult<()> {
    let (_, points) = load(&a.input)?;
    let (spec, k) = gaussian_gram(&a.kernel, &points)?;
    let emb = learn::kernel_pca(&k, a.l)?;
    let extra = vec![
        format!("gamma={}", fmt_f64(spec.gamma())),
        format!("eigenvalues={}", list(&emb.eigenvalues)),
    ];
    let prov = Provenance::new("kpca", seed, a)?;
    write_csv(a.output.as_deref(), &prov, extra, &emb.coords)
}

fn kfda(a: &KfdaArgs, seed: u64) -> CliResult<()> {
    let (data, points) = load(&a.input)?;
    let labels = require_labels(&data)?;
    let (k, gamma) = if a.linear_projection {
        (
            kernel::projection_linear_gram(&grassmann_points(&points)?)?,
            None,
        )
    } else {
        let (spec, k) = gaussian_gram(&a.kernel, &points)?;
        (k, Some(spec.gamma()))
    };
    let classes = class_indices(&labels).into_iter().max().unwrap_or(0) + 1;
    let dims = a.dims.unwrap_or(classes.saturating_sub(1));
    let model = learn::kernel_fda(&k, &labels, a.ridge, dims)?;
    let mut extra = vec![
        format!("eigenvalues={}", list(&model.eigenvalues)),
        format!("ridge={}", fmt_f64(model.ridge)),
    ];
    if let Some(g) = gamma {
        extra.push(format!("gamma={}", fmt_f64(g)));
    }
    let prov = Provenance::new("kfda", seed, a)?;
    write_csv(a.output.as_deref(), &prov, extra, &model.embedding.coords)
}

/// Self-contained SVM model file: the kernel, the training set and the
/// trained machines.
#[derive(Debug, Serialize, Deserialize)]
struct SvmFile {
    spec: KernelSpec,
    training: Dataset,
    svm: MulticlassSvm,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cv: Option<CvReport>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CvReport {
    folds: usize,
    gamma: f64,
    c: f64,
    accuracy: f64,
    /// `(γ, C, mean held-out accuracy)` for every grid point.
    grid: Vec<(f64, f64, f64)>,
}

fn sub_block(k: &Matrix, rows: &[usize], cols: &[usize]) -> Matrix {
    Matrix::from_fn(rows.len(), cols.len(), |i, j| k[(rows[i], cols[j])])
}

fn cv_accuracy(
    k: &Matrix,
    labels: &[i64],
    c: f64,
    mode: MulticlassMode,
    folds: &[Vec<usize>],
) -> CliResult<f64> {
    let m = labels.len();
    let mut correct = 0usize;
    for held in folds {
        let train: Vec<usize> = (0..m).filter(|i| !held.contains(i)).collect();
        let ytr: Vec<i64> = train.iter().map(|&i| labels[i]).collect();
        let model = learn::multiclass_svm(&sub_block(k, &train, &train), &ytr, c, mode)?;
        let pred = model.predict(&sub_block(k, &train, held))?;
        correct += pred
            .iter()
            .zip(held)
            .filter(|(p, &i)| **p == labels[i])
            .count();
    }
    Ok(correct as f64 / m as f64)
}

fn svm_train(a: &SvmTrainArgs, seed: u64) -> CliResult<()> {
    let (data, points) = load(&a.input)?;
    let labels = require_labels(&data)?;
    let mode = match a.mode {
        ModeArg::Ova => MulticlassMode::OneVsAll,
        ModeArg::Ovo => MulticlassMode::OneVsOne,
    };
    let manifold = a.kernel.metric.resolve(&points)?;
    let d2 = squared_distance_matrix(&manifold, &points)?;
    let (gamma, c, cv) = match a.cv {
        None => (parse_gamma(&a.kernel.gamma, &d2)?, a.c, None),
        Some(folds) => {
            if folds < 2 || folds > labels.len() {
                return Err(CliError::Usage(format!(
                    "--cv needs 2..={} folds",
                    labels.len()
                )));
            }
            if a.gamma_grid
                .iter()
                .chain(&a.c_grid)
                .any(|&v| v.is_nan() || v <= 0.0)
                || a.gamma_grid.is_empty()
                || a.c_grid.is_empty()
            {
                return Err(CliError::Usage(
                    "grids must be non-empty and positive".into(),
                ));
            }
            let mut order: Vec<usize> = (0..labels.len()).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let mut parts = vec![Vec::new(); folds];
            for (pos, &i) in order.iter().enumerate() {
                parts[pos % folds].push(i);
            }
            let mut grid = Vec::new();
            let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
            for &g in &a.gamma_grid {
                let k = gaussian_from_sq_dist(&d2, g);
                for &cc in &a.c_grid {
                    let acc = cv_accuracy(&k, &labels, cc, mode, &parts)?;
                    grid.push((g, cc, acc));
                    if acc > best.0 {
                        best = (acc, g, cc);
                    }
                }
            }
            let report = CvReport {
                folds,
                gamma: best.1,
                c: best.2,
                accuracy: best.0,
                grid,
            };
            (best.1, best.2, Some(report))
        }
    };
    let spec = KernelSpec::new(manifold, gamma)?;
    let svm = learn::multiclass_svm(&gaussian_from_sq_dist(&d2, gamma), &labels, c, mode)?;
    let file = SvmFile {
        spec,
        training: data,
        svm,
        cv,
    };
    let prov = Provenance::new("svm-train", seed, a)?;
    write_json(
        a.output.as_deref(),
        &prov,
        vec![("model", to_value(&file)?)],
    )
}

fn svm_predict(a: &SvmPredictArgs, seed: u64) -> CliResult<()> {
    let file: SvmFile = serde_json::from_value(read_field(&a.model, "model")?)?;
    let train = file.training.to_points()?;
    let (test_data, test) = load(&a.input)?;
    let kc = cross_gram(&file.spec, &train, &test)?;
    let pred = file.svm.predict(&kc)?;
    let mut fields = vec![("predictions", to_value(&pred)?)];
    if let Some(truth) = test_data.labels() {
        let acc =
            pred.iter().zip(truth).filter(|(p, t)| p == t).count() as f64 / truth.len() as f64;
        fields.push(("accuracy", json!(acc)));
    }
    let prov = Provenance::new("svm-predict", seed, a)?;
    write_json(a.output.as_deref(), &prov, fields)
}

fn mkl_train(a: &MklTrainArgs, seed: u64) -> CliResult<()> {
    let grams = a
        .grams
        .iter()
        .map(|p| read_csv(p))
        .collect::<CliResult<Vec<_>>>()?;
    let labels: Vec<i64> = serde_json::from_value(read_field(&a.labels, "labels")?)?;
    let model = learn::mkl_train(&grams, &labels, a.c, a.max_iter, a.tol)?;
    let prov = Provenance::new("mkl-train", seed, a)?;
    write_json(
        a.output.as_deref(),
        &prov,
        vec![("model", to_value(&model)?)],
    )
}

fn parse_rect(s: &str) -> CliResult<Rect> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("bad rectangle '{s}', expected x0,y0,w,h")))?;
    match parts[..] {
        [x0, y0, w, h] => Ok(Rect::new(x0, y0, w, h)),
        _ => Err(CliError::Usage(format!(
            "bad rectangle '{s}', expected x0,y0,w,h"
        ))),
    }
}

fn descriptor(
    integral: &IntegralImages,
    rect: &Rect,
    full: Option<&SpdMatrix>,
    eps: Option<f64>,
) -> CliResult<SpdMatrix> {
    let c = integral.covariance(rect, eps)?;
    Ok(match full {
        Some(f) => normalize_by_window(&c, f)?,
        None => c,
    })
}

fn covdesc(a: &CovdescArgs, seed: u64) -> CliResult<()> {
    let images = a
        .images
        .iter()
        .map(|p| read_image(p))
        .collect::<CliResult<Vec<_>>>()?;
    let prov = Provenance::new("covdesc", seed, a)?;
    if a.features == FeatureKind::StructureTensor {
        let field = features::structure_tensor_field(&images, a.sigma, a.epsilon)?;
        let (h, w) = images[0].shape();
        return write_json(
            a.output.as_deref(),
            &prov,
            vec![
                ("height", json!(h)),
                ("width", json!(w)),
                ("descriptors", to_value(&Dataset::from_spd(&field, None)?)?),
            ],
        );
    }
    let stacks: Vec<FeatureStack> = images
        .iter()
        .map(|img| match a.features {
            FeatureKind::Pedestrian => features::pedestrian_feature_maps(img),
            _ => features::texture_feature_maps(img),
        })
        .collect::<Result<_, _>>()?;
    let (h, w) = images[0].shape();
    let integrals: Vec<IntegralImages> = stacks.iter().map(IntegralImages::new).collect();
    let whole = Rect::new(0, 0, w, h);
    let fulls: Vec<Option<SpdMatrix>> = integrals
        .iter()
        .zip(&images)
        .map(|(ii, img)| {
            if !a.normalize {
                return Ok(None);
            }
            let (ih, iw) = img.shape();
            Ok(Some(ii.covariance(&Rect::new(0, 0, iw, ih), a.epsilon)?))
        })
        .collect::<CliResult<_>>()?;

    let (rects, selected) = match a.select {
        None => {
            let rects = if a.rects.is_empty() {
                vec![whole]
            } else {
                a.rects
                    .iter()
                    .map(|s| parse_rect(s))
                    .collect::<CliResult<Vec<_>>>()?
            };
            (rects, None)
        }
        Some(count) => {
            if images.iter().any(|img| img.shape() != (h, w)) {
                return Err(Error::BadShape("--select needs images of equal size".into()).into());
            }
            if a.positives.len() != images.len() {
                return Err(CliError::Usage(format!(
                    "--positives needs one flag per image ({} given, {} images)",
                    a.positives.len(),
                    images.len()
                )));
            }
            let candidates = candidate_grid(h, w, a.min_side);
            let descriptors = integrals
                .iter()
                .zip(&fulls)
                .map(|(ii, full)| {
                    candidates
                        .par_iter()
                        .map(|r| descriptor(ii, r, full.as_ref(), a.epsilon))
                        .collect::<CliResult<Vec<_>>>()
                })
                .collect::<CliResult<Vec<_>>>()?;
            let positives: Vec<bool> = a.positives.iter().map(|&p| p != 0).collect();
            let chosen =
                select_subwindows(&candidates, &descriptors, &positives, count, a.max_overlap)?;
            (chosen.iter().map(|s| s.rect).collect(), Some(chosen))
        }
    };
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (idx, (ii, full)) in integrals.iter().zip(&fulls).enumerate() {
        for r in &rects {
            points.push(descriptor(ii, r, full.as_ref(), a.epsilon)?);
            labels.push(idx as i64);
        }
    }
    let mut fields = vec![
        ("rects", to_value(&rects)?),
        (
            "descriptors",
            to_value(&Dataset::from_spd(&points, Some(labels))?)?,
        ),
    ];
    if let Some(chosen) = selected {
        fields.push(("selected", to_value(&chosen)?));
    }
    write_json(a.output.as_deref(), &prov, fields)
}

fn subspace(a: &SubspaceArgs, seed: u64) -> CliResult<()> {
    if !a.labels.is_empty() && a.labels.len() != a.inputs.len() {
        return Err(CliError::Usage(format!(
            "{} labels for {} inputs",
            a.labels.len(),
            a.inputs.len()
        )));
    }
    let points = a
        .inputs
        .iter()
        .map(|p| Ok(grassmann::subspace_from_vectors(&read_csv(p)?, a.r)?))
        .collect::<CliResult<Vec<_>>>()?;
    let labels = (!a.labels.is_empty()).then(|| a.labels.clone());
    let prov = Provenance::new("subspace", seed, a)?;
    write_json(
        a.output.as_deref(),
        &prov,
        vec![(
            "dataset",
            to_value(&Dataset::from_grassmann(&points, labels)?)?,
        )],
    )
}

fn synth_cmd(a: &SynthArgs, seed: u64) -> CliResult<()> {
    let to_i64 = |l: Vec<usize>| l.into_iter().map(|v| v as i64).collect::<Vec<_>>();
    let dataset = match a.kind {
        SynthKind::SpdBlobs => {
            let d = synth::SpdBlobs::default();
            let cfg = synth::SpdBlobs {
                clusters: a.clusters,
                per_cluster: a.per_cluster,
                dim: a.dim.unwrap_or(d.dim),
                separation: a.separation.unwrap_or(d.separation),
                spread: a.spread.unwrap_or(d.spread),
                noise: a.noise.unwrap_or(d.noise),
            };
            let (pts, labels) = cfg.generate(seed)?;
            Dataset::from_spd(&pts, Some(to_i64(labels)))?
        }
        SynthKind::Grassmann => {
            let d = synth::GrassmannClusters::default();
            let cfg = synth::GrassmannClusters {
                clusters: a.clusters,
                per_cluster: a.per_cluster,
                ambient_dim: a.dim.unwrap_or(d.ambient_dim),
                subspace_dim: a.subspace_dim,
                noise: a.noise.unwrap_or(d.noise),
            };
            let (pts, labels) = cfg.generate(seed)?;
            Dataset::from_grassmann(&pts, Some(to_i64(labels)))?
        }
        SynthKind::Rings => {
            let (pts, labels) = synth::rings(2 * a.per_cluster, a.noise.unwrap_or(0.1), seed);
            Dataset::from_euclidean(&pts, Some(to_i64(labels)))?
        }
    };
    let prov = Provenance::new("synth", seed, a)?;
    write_json(
        a.output.as_deref(),
        &prov,
        vec![("dataset", to_value(&dataset)?)],
    )
}
