//! Image descriptors: per-pixel feature maps, region covariance matrices via
//! integral images, subwindow selection, and spatio-temporal structure
//! tensors.
//!
//! Images are `height × width` matrices indexed `(row, column)`. The `x`
//! coordinate is the column index and `y` the row index.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::spd::{self, SpdMatrix, SpdMetric};

/// Floor for `|I_y|` in the gradient-orientation channel.
pub const DERIV_EPS: f64 = 1e-8;

/// Named feature planes sharing one image size.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStack {
    pub names: Vec<&'static str>,
    pub planes: Vec<Matrix>,
}

impl FeatureStack {
    pub fn new(names: Vec<&'static str>, planes: Vec<Matrix>) -> Result<Self> {
        if planes.len() < 2 || names.len() != planes.len() {
            return Err(Error::BadShape(format!(
                "{} names for {} planes (at least 2 needed)",
                names.len(),
                planes.len()
            )));
        }
        let shape = planes[0].shape();
        if planes.iter().any(|p| p.shape() != shape) {
            return Err(Error::BadShape("feature planes differ in size".into()));
        }
        Ok(FeatureStack { names, planes })
    }

    pub fn height(&self) -> usize {
        self.planes[0].nrows()
    }

    pub fn width(&self) -> usize {
        self.planes[0].ncols()
    }

    pub fn channels(&self) -> usize {
        self.planes.len()
    }

    /// Feature vector of pixel `(row, col)`.
    pub fn pixel(&self, row: usize, col: usize) -> Vector {
        Vector::from_iterator(self.channels(), self.planes.iter().map(|p| p[(row, col)]))
    }
}

/// Axis-aligned rectangle: top-left corner `(x0, y0)`, width `w`, height `h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x0: usize,
    pub y0: usize,
    pub w: usize,
    pub h: usize,
}

impl Rect {
    pub fn new(x0: usize, y0: usize, w: usize, h: usize) -> Self {
        Rect { x0, y0, w, h }
    }

    pub fn area(&self) -> usize {
        self.w * self.h
    }

    /// Intersection area divided by the smaller of the two areas.
    pub fn overlap(&self, other: &Rect) -> f64 {
        let ix = (self.x0 + self.w).min(other.x0 + other.w) as i64 - self.x0.max(other.x0) as i64;
        let iy = (self.y0 + self.h).min(other.y0 + other.h) as i64 - self.y0.max(other.y0) as i64;
        if ix <= 0 || iy <= 0 {
            return 0.0;
        }
        let smaller = self.area().min(other.area());
        if smaller == 0 {
            return 0.0;
        }
        (ix * iy) as f64 / smaller as f64
    }

    fn tuple(&self) -> (usize, usize, usize, usize) {
        (self.x0, self.y0, self.w, self.h)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubwindowSpec {
    pub rect: Rect,
    /// Dispersion of the positive-sample descriptors (lower is better).
    pub score: f64,
}

fn clamp_idx(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}

/// First and second central differences with replicated borders.
struct Derivatives {
    dx: Matrix,
    dy: Matrix,
    dxx: Matrix,
    dyy: Matrix,
}

fn derivatives(img: &Matrix) -> Derivatives {
    let (h, w) = img.shape();
    let at = |r: isize, c: isize| img[(clamp_idx(r, h), clamp_idx(c, w))];
    let mut d = Derivatives {
        dx: Matrix::zeros(h, w),
        dy: Matrix::zeros(h, w),
        dxx: Matrix::zeros(h, w),
        dyy: Matrix::zeros(h, w),
    };
    for r in 0..h as isize {
        for c in 0..w as isize {
            let (ru, cu) = (r as usize, c as usize);
            let mid = img[(ru, cu)];
            d.dx[(ru, cu)] = 0.5 * (at(r, c + 1) - at(r, c - 1));
            d.dy[(ru, cu)] = 0.5 * (at(r + 1, c) - at(r - 1, c));
            d.dxx[(ru, cu)] = at(r, c + 1) - 2.0 * mid + at(r, c - 1);
            d.dyy[(ru, cu)] = at(r + 1, c) - 2.0 * mid + at(r - 1, c);
        }
    }
    d
}

fn check_image(img: &Matrix) -> Result<()> {
    let (height, width) = img.shape();
    if height < 3 || width < 3 {
        return Err(Error::TooSmall { height, width });
    }
    Ok(())
}

/// `[x, y, |I_x|, |I_y|, √(I_x²+I_y²), |I_xx|, |I_yy|, arctan(|I_x|/|I_y|)]`.
pub fn pedestrian_feature_maps(img: &Matrix) -> Result<FeatureStack> {
    check_image(img)?;
    let (h, w) = img.shape();
    let d = derivatives(img);
    let ax = d.dx.abs();
    let ay = d.dy.abs();
    let mag = d.dx.zip_map(&d.dy, |a, b| (a * a + b * b).sqrt());
    let orient = ax.zip_map(&ay, |a, b| (a / b.max(DERIV_EPS)).atan());
    FeatureStack::new(
        vec![
            "x",
            "y",
            "|Ix|",
            "|Iy|",
            "|grad|",
            "|Ixx|",
            "|Iyy|",
            "atan(|Ix|/|Iy|)",
        ],
        vec![
            Matrix::from_fn(h, w, |_, c| c as f64),
            Matrix::from_fn(h, w, |r, _| r as f64),
            ax,
            ay,
            mag,
            d.dxx.abs(),
            d.dyy.abs(),
            orient,
        ],
    )
}

/// `[I, |I_x|, |I_y|, |I_xx|, |I_yy|]`.
pub fn texture_feature_maps(img: &Matrix) -> Result<FeatureStack> {
    check_image(img)?;
    let d = derivatives(img);
    FeatureStack::new(
        vec!["I", "|Ix|", "|Iy|", "|Ixx|", "|Iyy|"],
        vec![
            img.clone(),
            d.dx.abs(),
            d.dy.abs(),
            d.dxx.abs(),
            d.dyy.abs(),
        ],
    )
}

/// First- and second-order integral images of a feature stack, for
/// constant-time region covariances.
///
/// Each channel is shifted by its global mean before integration to limit
/// cancellation; covariances are unaffected.
pub struct IntegralImages {
    h: usize,
    w: usize,
    c: usize,
    /// `(h+1)(w+1)` prefix sums per channel.
    first: Vec<Vec<f64>>,
    /// Prefix sums of products, upper triangle `(a ≤ b)` in row-major order.
    second: Vec<Vec<f64>>,
}

impl IntegralImages {
    pub fn new(stack: &FeatureStack) -> Self {
        let (h, w, c) = (stack.height(), stack.width(), stack.channels());
        let centered: Vec<Matrix> = stack
            .planes
            .iter()
            .map(|p| p.add_scalar(-p.mean()))
            .collect();
        let prefix = |f: &dyn Fn(usize, usize) -> f64| {
            let mut s = vec![0.0; (h + 1) * (w + 1)];
            for r in 0..h {
                let mut row = 0.0;
                for col in 0..w {
                    row += f(r, col);
                    s[(r + 1) * (w + 1) + col + 1] = s[r * (w + 1) + col + 1] + row;
                }
            }
            s
        };
        let first = centered
            .iter()
            .map(|p| prefix(&|r, col| p[(r, col)]))
            .collect();
        let mut pairs = Vec::new();
        for a in 0..c {
            for b in a..c {
                pairs.push((a, b));
            }
        }
        let second = pairs
            .par_iter()
            .map(|&(a, b)| prefix(&|r, col| centered[a][(r, col)] * centered[b][(r, col)]))
            .collect();
        IntegralImages {
            h,
            w,
            c,
            first,
            second,
        }
    }

    fn box_sum(&self, s: &[f64], rect: &Rect) -> f64 {
        let stride = self.w + 1;
        let (x0, y0, x1, y1) = (rect.x0, rect.y0, rect.x0 + rect.w, rect.y0 + rect.h);
        s[y1 * stride + x1] - s[y0 * stride + x1] - s[y1 * stride + x0] + s[y0 * stride + x0]
    }

    /// Unregularized sample covariance (`n − 1` normalization) over `rect`.
    pub fn raw_covariance(&self, rect: &Rect) -> Result<Matrix> {
        if rect.w == 0 || rect.h == 0 || rect.x0 + rect.w > self.w || rect.y0 + rect.h > self.h {
            return Err(Error::RectOutOfBounds(rect.tuple()));
        }
        let n = rect.area();
        if n < self.c + 1 {
            return Err(Error::TooFewPixels {
                pixels: n,
                needed: self.c + 1,
            });
        }
        let nf = n as f64;
        let sums: Vec<f64> = self.first.iter().map(|s| self.box_sum(s, rect)).collect();
        let mut cov = Matrix::zeros(self.c, self.c);
        let mut k = 0;
        for a in 0..self.c {
            for b in a..self.c {
                let q = self.box_sum(&self.second[k], rect);
                let v = (q - sums[a] * sums[b] / nf) / (nf - 1.0);
                cov[(a, b)] = v;
                cov[(b, a)] = v;
                k += 1;
            }
        }
        Ok(cov)
    }

    /// Region covariance plus `εI`; `epsilon = None` uses
    /// `1e-6·(trace + 1)`.
    pub fn covariance(&self, rect: &Rect, epsilon: Option<f64>) -> Result<SpdMatrix> {
        regularize(self.raw_covariance(rect)?, epsilon)
    }
}

fn default_epsilon(raw: &Matrix) -> f64 {
    1e-6 * (raw.trace() + 1.0)
}

fn regularize(raw: Matrix, epsilon: Option<f64>) -> Result<SpdMatrix> {
    let eps = epsilon.unwrap_or_else(|| default_epsilon(&raw));
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive, got {eps}"
        )));
    }
    let d = raw.nrows();
    SpdMatrix::new(raw + Matrix::identity(d, d) * eps)
}

/// Covariance of the feature vectors inside `rect`, regularized by `εI`.
pub fn region_covariance(
    stack: &FeatureStack,
    rect: &Rect,
    epsilon: Option<f64>,
) -> Result<SpdMatrix> {
    IntegralImages::new(stack).covariance(rect, epsilon)
}

/// `D^{-1/2} C D^{-1/2}` with `D` the diagonal of the full-window covariance.
pub fn normalize_by_window(sub: &SpdMatrix, full: &SpdMatrix) -> Result<SpdMatrix> {
    if sub.dim() != full.dim() {
        return Err(Error::dims(full.dim(), sub.dim()));
    }
    let scale = full.as_matrix().diagonal().map(|v| 1.0 / v.sqrt());
    let d = sub.dim();
    let out = Matrix::from_fn(d, d, |i, j| scale[i] * sub.as_matrix()[(i, j)] * scale[j]);
    SpdMatrix::new(out)
}

/// Five sizes per axis from `n/5` to `n`, geometrically spaced, each at
/// least `min_side`.
fn side_lengths(n: usize, min_side: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (0..5)
        .map(|k| ((n as f64 / 5.0) * 5f64.powf(k as f64 / 4.0)).round() as usize)
        .map(|s| s.clamp(1, n))
        .filter(|&s| s >= min_side)
        .collect();
    out.dedup();
    out
}

/// Candidate subwindows of an `height × width` window: every combination of
/// the five per-axis sizes, placed with a stride of a quarter side.
pub fn candidate_grid(height: usize, width: usize, min_side: usize) -> Vec<Rect> {
    let mut out = Vec::new();
    for &h in &side_lengths(height, min_side) {
        for &w in &side_lengths(width, min_side) {
            let sy = (h / 4).max(1);
            let sx = (w / 4).max(1);
            let mut y0 = 0;
            while y0 + h <= height {
                let mut x0 = 0;
                while x0 + w <= width {
                    out.push(Rect::new(x0, y0, w, h));
                    x0 += sx;
                }
                y0 += sy;
            }
        }
    }
    out
}

/// Ranks candidates by the log-Euclidean dispersion of their descriptors over
/// positive samples and greedily keeps the best ones whose pairwise overlap
/// does not exceed `max_overlap`.
///
/// `descriptors[s][j]` is the descriptor of sample `s` at candidate `j`.
pub fn select_subwindows(
    candidates: &[Rect],
    descriptors: &[Vec<SpdMatrix>],
    positives: &[bool],
    count: usize,
    max_overlap: f64,
) -> Result<Vec<SubwindowSpec>> {
    if count < 1 {
        return Err(Error::InvalidParameter("count must be at least 1".into()));
    }
    if !(0.0..1.0).contains(&max_overlap) {
        return Err(Error::InvalidParameter(format!(
            "max overlap must lie in [0, 1), got {max_overlap}"
        )));
    }
    if descriptors.len() != positives.len() {
        return Err(Error::dims(
            format!("{} samples", positives.len()),
            descriptors.len(),
        ));
    }
    if let Some(bad) = descriptors.iter().find(|d| d.len() != candidates.len()) {
        return Err(Error::dims(
            format!("{} candidates", candidates.len()),
            bad.len(),
        ));
    }
    let pos: Vec<usize> = (0..positives.len()).filter(|&s| positives[s]).collect();
    if pos.is_empty() {
        return Err(Error::NoPositives);
    }
    let scores = (0..candidates.len())
        .into_par_iter()
        .map(|j| {
            let set: Vec<SpdMatrix> = pos.iter().map(|&s| descriptors[s][j].clone()).collect();
            let mean = spd::karcher_mean_log_euclidean(&set)?;
            spd::dispersion_stat(SpdMetric::LogEuclidean, &set, 1.0, &mean)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    let mut chosen: Vec<SubwindowSpec> = Vec::new();
    for j in order {
        if chosen.len() == count {
            break;
        }
        if chosen
            .iter()
            .all(|s| s.rect.overlap(&candidates[j]) <= max_overlap)
        {
            chosen.push(SubwindowSpec {
                rect: candidates[j],
                score: scores[j],
            });
        }
    }
    Ok(chosen)
}

fn gaussian_weights(sigma: f64) -> Vec<f64> {
    if !(sigma > 0.0) {
        return vec![1.0];
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let raw: Vec<f64> = (-radius..=radius)
        .map(|t| (-(t * t) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

/// Separable Gaussian smoothing with replicated borders.
fn smooth(img: &Matrix, weights: &[f64]) -> Matrix {
    if weights.len() == 1 {
        return img.clone();
    }
    let (h, w) = img.shape();
    let radius = (weights.len() / 2) as isize;
    let pass = |src: &Matrix, horizontal: bool| {
        Matrix::from_fn(h, w, |r, c| {
            weights
                .iter()
                .enumerate()
                .map(|(k, wt)| {
                    let off = k as isize - radius;
                    if horizontal {
                        wt * src[(r, clamp_idx(c as isize + off, w))]
                    } else {
                        wt * src[(clamp_idx(r as isize + off, h), c)]
                    }
                })
                .sum()
        })
    };
    pass(&pass(img, true), false)
}

/// Smoothed outer products of `(I_x, I_y, I_t)` per pixel, row-major, before
/// regularization.
///
/// Two frames use their mean for spatial derivatives and `f₂ − f₁` as `I_t`;
/// three frames use the middle frame and `(f₃ − f₁)/2`.
pub fn structure_tensor_raw(frames: &[Matrix], sigma: f64) -> Result<Vec<Matrix>> {
    if !(2..=3).contains(&frames.len()) || frames.iter().any(|f| f.shape() != frames[0].shape()) {
        return Err(Error::FrameMismatch);
    }
    check_image(&frames[0])?;
    let (spatial, it) = if frames.len() == 2 {
        ((&frames[0] + &frames[1]) * 0.5, &frames[1] - &frames[0])
    } else {
        (frames[1].clone(), (&frames[2] - &frames[0]) * 0.5)
    };
    let d = derivatives(&spatial);
    let grads = [&d.dx, &d.dy, &it];
    let weights = gaussian_weights(sigma);
    let mut products = Vec::with_capacity(6);
    for a in 0..3 {
        for b in a..3 {
            products.push((a, b));
        }
    }
    let smoothed: Vec<Matrix> = products
        .par_iter()
        .map(|&(a, b)| smooth(&grads[a].component_mul(grads[b]), &weights))
        .collect();
    let (h, w) = spatial.shape();
    Ok((0..h * w)
        .map(|p| {
            let (r, c) = (p / w, p % w);
            let mut t = Matrix::zeros(3, 3);
            for (k, &(a, b)) in products.iter().enumerate() {
                t[(a, b)] = smoothed[k][(r, c)];
                t[(b, a)] = smoothed[k][(r, c)];
            }
            t
        })
        .collect())
}

/// Structure tensors regularized by `εI` to be SPD; `epsilon = None` uses
/// `1e-6·(trace + 1)` per pixel.
pub fn structure_tensor_field(
    frames: &[Matrix],
    sigma: f64,
    epsilon: Option<f64>,
) -> Result<Vec<SpdMatrix>> {
    structure_tensor_raw(frames, sigma)?
        .into_par_iter()
        .map(|t| regularize(t, epsilon))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sym_eig;
    use crate::sample::gaussian_matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_image(seed: u64, h: usize, w: usize) -> Matrix {
        gaussian_matrix(&mut ChaCha8Rng::seed_from_u64(seed), h, w)
    }

    #[test]
    fn constant_image_maps() {
        let img = Matrix::from_element(5, 7, 3.0);
        let s = pedestrian_feature_maps(&img).unwrap();
        assert_eq!(s.channels(), 8);
        for c in 2..8 {
            assert!(s.planes[c].iter().all(|&v| v == 0.0));
        }
        assert_eq!(s.planes[0][(2, 4)], 4.0);
        assert_eq!(s.planes[1][(2, 4)], 2.0);
        let t = texture_feature_maps(&img).unwrap();
        assert!(t.planes[0].iter().all(|&v| v == 3.0));
        assert!(t.planes[1..].iter().all(|p| p.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn ramp_has_unit_x_gradient_inside() {
        let img = Matrix::from_fn(6, 6, |_, c| c as f64);
        let s = pedestrian_feature_maps(&img).unwrap();
        for r in 1..5 {
            for c in 1..5 {
                assert_eq!(s.planes[2][(r, c)], 1.0);
                assert_eq!(s.planes[3][(r, c)], 0.0);
            }
        }
        let t = texture_feature_maps(&img).unwrap();
        assert_eq!(t.planes[1][(3, 3)], 1.0);
    }

    #[test]
    fn pointwise_channels_match_direct_differences() {
        let img = random_image(2, 8, 9);
        let s = pedestrian_feature_maps(&img).unwrap();
        let t = texture_feature_maps(&img).unwrap();
        for r in 1..7 {
            for c in 1..8 {
                let ix = (img[(r, c + 1)] - img[(r, c - 1)]) / 2.0;
                let iy = (img[(r + 1, c)] - img[(r - 1, c)]) / 2.0;
                assert!((s.planes[4][(r, c)] - (ix * ix + iy * iy).sqrt()).abs() < 1e-12);
                let iyy = img[(r + 1, c)] - 2.0 * img[(r, c)] + img[(r - 1, c)];
                assert!((t.planes[4][(r, c)] - iyy.abs()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn tiny_image_rejected() {
        assert_eq!(
            texture_feature_maps(&Matrix::zeros(2, 5)).unwrap_err(),
            Error::TooSmall {
                height: 2,
                width: 5
            }
        );
    }

    #[test]
    fn constant_stack_gives_epsilon_identity() {
        let s =
            FeatureStack::new(vec!["a", "b"], vec![Matrix::from_element(4, 4, 1.0); 2]).unwrap();
        let c = region_covariance(&s, &Rect::new(0, 0, 4, 4), Some(0.01)).unwrap();
        assert!((c.as_matrix() - Matrix::identity(2, 2) * 0.01).norm() < 1e-15);
    }

    #[test]
    fn correlated_channels_floor_at_epsilon() {
        let a = random_image(3, 6, 6);
        let s = FeatureStack::new(vec!["a", "2a"], vec![a.clone(), &a * 2.0]).unwrap();
        let c = region_covariance(&s, &Rect::new(1, 1, 5, 4), Some(1e-3)).unwrap();
        let min = sym_eig(c.as_matrix()).unwrap().min_value();
        assert!((min - 1e-3).abs() < 1e-10);
    }

    #[test]
    fn bad_rects() {
        let s = texture_feature_maps(&random_image(1, 5, 5)).unwrap();
        assert!(matches!(
            region_covariance(&s, &Rect::new(3, 0, 3, 3), None),
            Err(Error::RectOutOfBounds(_))
        ));
        assert_eq!(
            region_covariance(&s, &Rect::new(0, 0, 2, 2), None).unwrap_err(),
            Error::TooFewPixels {
                pixels: 4,
                needed: 6
            }
        );
    }

    #[test]
    fn overlap_is_relative_to_smaller_window() {
        let a = Rect::new(0, 0, 4, 4);
        assert_eq!(a.overlap(&Rect::new(1, 1, 2, 2)), 1.0);
        assert_eq!(a.overlap(&Rect::new(2, 0, 4, 4)), 0.5);
        assert_eq!(a.overlap(&Rect::new(4, 0, 4, 4)), 0.0);
    }

    #[test]
    fn grid_spans_fifth_to_full() {
        let g = candidate_grid(40, 20, 1);
        assert!(g.contains(&Rect::new(0, 0, 20, 40)));
        assert!(g.contains(&Rect::new(0, 0, 4, 8)));
        assert!(g.iter().all(|r| r.x0 + r.w <= 20 && r.y0 + r.h <= 40));
    }

    #[test]
    fn selection_prefers_low_dispersion_and_respects_overlap() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rects = vec![
            Rect::new(0, 0, 4, 4),
            Rect::new(0, 0, 4, 4),
            Rect::new(5, 5, 4, 4),
        ];
        let fixed = crate::sample::random_spd(&mut rng, 3);
        let descriptors: Vec<Vec<SpdMatrix>> = (0..6)
            .map(|_| {
                vec![
                    crate::sample::random_spd(&mut rng, 3),
                    fixed.clone(),
                    crate::sample::random_spd(&mut rng, 3),
                ]
            })
            .collect();
        let sel = select_subwindows(&rects, &descriptors, &[true; 6], 3, 0.75).unwrap();
        assert_eq!(sel[0].rect, rects[1]);
        assert!(sel[0].score < 1e-9);
        assert_eq!(sel.len(), 2);
        assert_eq!(sel[1].rect, rects[2]);
        assert_eq!(
            select_subwindows(&rects, &descriptors, &[false; 6], 1, 0.5).unwrap_err(),
            Error::NoPositives
        );
    }

    #[test]
    fn constant_frames_give_epsilon_identity() {
        let f = Matrix::from_element(5, 5, 2.0);
        let field = structure_tensor_field(&[f.clone(), f], 1.0, Some(1e-4)).unwrap();
        assert_eq!(field.len(), 25);
        for t in field {
            assert!((t.as_matrix() - Matrix::identity(3, 3) * 1e-4).norm() < 1e-15);
        }
    }

    #[test]
    fn brightness_step_is_rank_one() {
        let f = Matrix::from_element(5, 6, 1.0);
        let raw = structure_tensor_raw(&[f.clone(), f.add_scalar(0.5)], 1.0).unwrap();
        for t in raw {
            assert!((t[(2, 2)] - 0.25).abs() < 1e-12);
            assert_eq!(t[(0, 0)], 0.0);
        }
    }

    #[test]
    fn random_frames_give_psd_tensors() {
        let frames: Vec<Matrix> = (0..3).map(|s| random_image(10 + s, 7, 8)).collect();
        for t in structure_tensor_raw(&frames, 1.2).unwrap() {
            assert!(sym_eig(&t).unwrap().min_value() >= -1e-12);
        }
        assert_eq!(
            structure_tensor_raw(&frames[..1], 1.0).unwrap_err(),
            Error::FrameMismatch
        );
    }
}
