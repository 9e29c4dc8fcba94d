//! Python bindings: images, LBP features, forests, the cascade and error
//! rates. Feature vectors cross the boundary as plain lists of floats.

use std::path::PathBuf;

use lbpforest::cascade::{self, CascadeConfig, CascadeModel, ScaleData};
use lbpforest::eval::{self, ScoredSample};
use lbpforest::features::{self, Scale};
use lbpforest::forest::{self, ForestKind, ForestParams, TrainSet};
use lbpforest::imagio::{self, ColorSpace};
use lbpforest::lbp;
use lbpforest::Matrix;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: lbpforest::Error) -> PyErr {
    match e {
        lbpforest::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn space(name: &str) -> PyResult<ColorSpace> {
    name.parse().map_err(py_err)
}

fn matrix(rows: &[Vec<f32>]) -> PyResult<Matrix> {
    if rows.is_empty() {
        return Err(PyValueError::new_err("no rows"));
    }
    Matrix::from_rows(rows).map_err(py_err)
}

/// Three-plane 8-bit image tagged with its color space.
#[pyclass(name = "Image", module = "lbpforest", frozen)]
pub struct PyImage {
    inner: imagio::Image,
}

#[pymethods]
impl PyImage {
    /// Decodes an RGB file. With `normalize`, resizes to 128×128 and
    /// converts to `color_space`.
    #[staticmethod]
    #[pyo3(signature = (path, color_space = "rgb", normalize = true))]
    fn load(path: PathBuf, color_space: &str, normalize: bool) -> PyResult<Self> {
        let space = space(color_space)?;
        let inner = if normalize {
            imagio::load_normalized(&path, space)
        } else {
            imagio::load_image(&path).and_then(|img| imagio::convert(&img, space))
        }
        .map_err(py_err)?;
        Ok(PyImage { inner })
    }

    /// Builds an image from interleaved 8-bit pixels.
    #[staticmethod]
    #[pyo3(signature = (width, height, data, color_space = "rgb"))]
    fn from_bytes(width: usize, height: usize, data: &[u8], color_space: &str) -> PyResult<Self> {
        let inner = imagio::Image::from_interleaved(width, height, space(color_space)?, data).map_err(py_err)?;
        Ok(PyImage { inner })
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    #[getter]
    fn color_space(&self) -> &'static str {
        self.inner.space().name()
    }

    fn pixel(&self, x: usize, y: usize) -> PyResult<(u8, u8, u8)> {
        if x >= self.inner.width() || y >= self.inner.height() {
            return Err(PyValueError::new_err("pixel outside the image"));
        }
        let [a, b, c] = self.inner.pixel(x, y);
        Ok((a, b, c))
    }

    fn resize(&self, width: usize, height: usize) -> PyResult<Self> {
        let inner = imagio::resize_bilinear(&self.inner, width, height).map_err(py_err)?;
        Ok(PyImage { inner })
    }

    /// Converts an RGB image to `color_space`.
    fn convert(&self, color_space: &str) -> PyResult<Self> {
        let inner = imagio::convert(&self.inner, space(color_space)?).map_err(py_err)?;
        Ok(PyImage { inner })
    }

    fn to_bytes(&self) -> Vec<u8> {
        self.inner.to_interleaved()
    }

    fn __repr__(&self) -> String {
        format!("Image({}x{}, {})", self.inner.width(), self.inner.height(), self.inner.space())
    }
}

/// The three scale representations of a 128×128 image.
#[pyfunction]
fn extract(py: Python<'_>, image: &PyImage) -> PyResult<(Vec<f32>, Vec<f32>, Vec<f32>)> {
    let img = image.inner.clone();
    let [a, b, c] = py.detach(move || features::extract_all_scales(&img)).map_err(py_err)?;
    Ok((a.values, b.values, c.values))
}

/// Lengths of the three scale representations.
#[pyfunction]
fn feature_lengths() -> (usize, usize, usize) {
    let [a, b, c] = Scale::ALL.map(Scale::len);
    (a, b, c)
}

/// u2 bin of every pixel of one plane; `None` inside the border margin.
#[pyfunction]
fn lbp_codes(plane: &[u8], width: usize, height: usize, neighbors: u32, radius: u32) -> PyResult<Vec<Option<usize>>> {
    let cfg = lbp::LbpConfig::new(neighbors, radius).map_err(py_err)?;
    let codes = lbp::lbp_codes(plane, width, height, &cfg).map_err(py_err)?;
    Ok((0..height)
        .flat_map(|y| (0..width).map(move |x| (x, y)))
        .map(|(x, y)| codes.code(x, y))
        .collect())
}

fn kind(name: &str) -> PyResult<ForestKind> {
    match name {
        "random" => Ok(ForestKind::Random),
        "completely_random" => Ok(ForestKind::CompletelyRandom),
        other => Err(PyValueError::new_err(format!(
            "kind must be 'random' or 'completely_random', got '{other}'"
        ))),
    }
}

/// Random or completely-random forest over two classes (0 genuine, 1 spoof).
#[pyclass(name = "Forest", module = "lbpforest", frozen)]
pub struct PyForest {
    inner: forest::Forest,
}

#[pymethods]
impl PyForest {
    #[staticmethod]
    #[pyo3(signature = (x, y, kind = "random", n_trees = 100, seed = 0, max_depth = None))]
    fn train(
        py: Python<'_>,
        x: Vec<Vec<f32>>,
        y: Vec<u8>,
        kind: &str,
        n_trees: usize,
        seed: u64,
        max_depth: Option<usize>,
    ) -> PyResult<Self> {
        let params = ForestParams {
            max_depth,
            ..ForestParams::new(self::kind(kind)?, n_trees)
        };
        let x = matrix(&x)?;
        let inner = py
            .detach(move || {
                let data = TrainSet::new(&x, &y)?;
                let all: Vec<usize> = (0..data.n_samples()).collect();
                forest::train_forest(&data, &all, &params, seed)
            })
            .map_err(py_err)?;
        Ok(PyForest { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyForest {
            inner: forest::Forest::from_json(text).map_err(py_err)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    /// `(p_genuine, p_spoof)`.
    fn predict_proba(&self, x: Vec<f32>) -> PyResult<(f64, f64)> {
        let [a, b] = self.inner.predict_proba(&x).map_err(py_err)?;
        Ok((a, b))
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind().name()
    }

    #[getter]
    fn n_trees(&self) -> usize {
        self.inner.n_trees()
    }

    #[getter]
    fn n_features(&self) -> usize {
        self.inner.n_features()
    }

    #[getter]
    fn oob_accuracy(&self) -> Option<f64> {
        self.inner.oob_accuracy()
    }
}

type Scales = (Vec<Vec<f32>>, Vec<Vec<f32>>, Vec<Vec<f32>>);

fn scale_matrices(s: &Scales) -> PyResult<[Matrix; 3]> {
    Ok([matrix(&s.0)?, matrix(&s.1)?, matrix(&s.2)?])
}

/// Multi-scale cascade forest.
#[pyclass(name = "Cascade", module = "lbpforest", frozen)]
pub struct PyCascade {
    inner: CascadeModel,
}

#[pymethods]
impl PyCascade {
    /// Trains on three scale matrices (lists of rows) with a separate
    /// validation set that decides when the cascade stops growing.
    #[staticmethod]
    #[pyo3(signature = (train, labels, val, val_labels, n_trees = 500, folds = 3, patience = 2, max_layers = 12, seed = 0))]
    #[allow(clippy::too_many_arguments)]
    fn train(
        py: Python<'_>,
        train: Scales,
        labels: Vec<u8>,
        val: Scales,
        val_labels: Vec<u8>,
        n_trees: usize,
        folds: usize,
        patience: usize,
        max_layers: usize,
        seed: u64,
    ) -> PyResult<Self> {
        let cfg = CascadeConfig {
            n_trees,
            folds,
            patience,
            max_layers,
            max_depth: None,
            seed,
        };
        let (tr, va) = (scale_matrices(&train)?, scale_matrices(&val)?);
        let inner = py
            .detach(move || {
                let t = ScaleData::new(tr.each_ref(), &labels)?;
                let v = ScaleData::new(va.each_ref(), &val_labels)?;
                cascade::train_cascade(&t, &v, &cfg)
            })
            .map_err(py_err)?;
        Ok(PyCascade { inner })
    }

    #[staticmethod]
    fn load(dir: PathBuf) -> PyResult<Self> {
        Ok(PyCascade {
            inner: CascadeModel::load(dir).map_err(py_err)?,
        })
    }

    fn save(&self, dir: PathBuf) -> PyResult<()> {
        self.inner.save(dir).map_err(py_err)
    }

    /// Spoof probability of one sample.
    fn predict_score(&self, s1: Vec<f32>, s2: Vec<f32>, s3: Vec<f32>) -> PyResult<f64> {
        self.inner.predict_score([&s1, &s2, &s3]).map_err(py_err)
    }

    #[getter]
    fn best_layer(&self) -> usize {
        self.inner.best_layer
    }

    #[getter]
    fn dev_threshold(&self) -> f64 {
        self.inner.dev_threshold
    }

    /// Scale index of every layer.
    #[getter]
    fn layer_scales(&self) -> Vec<usize> {
        self.inner.layers.iter().map(|l| l.scale).collect()
    }

    #[getter]
    fn val_accuracies(&self) -> Vec<f64> {
        self.inner.layers.iter().map(|l| l.val_accuracy).collect()
    }
}

fn samples(scores: &[f64], labels: &[u8]) -> PyResult<Vec<ScoredSample>> {
    eval::scored(scores, labels).map_err(py_err)
}

/// `(eer, threshold)`; labels are 0 genuine, 1 spoof.
#[pyfunction]
fn eer(scores: Vec<f64>, labels: Vec<u8>) -> PyResult<(f64, f64)> {
    eval::eer(&samples(&scores, &labels)?).map_err(py_err)
}

/// HTER of the test set at the development set's EER threshold.
#[pyfunction]
fn hter(dev_scores: Vec<f64>, dev_labels: Vec<u8>, test_scores: Vec<f64>, test_labels: Vec<u8>) -> PyResult<f64> {
    let h = eval::hter(&samples(&dev_scores, &dev_labels)?, &samples(&test_scores, &test_labels)?).map_err(py_err)?;
    Ok(h.hter)
}

#[pymodule]
#[pyo3(name = "lbpforest")]
pub fn lbpforest_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyImage>()?;
    m.add_class::<PyForest>()?;
    m.add_class::<PyCascade>()?;
    m.add_function(wrap_pyfunction!(extract, m)?)?;
    m.add_function(wrap_pyfunction!(feature_lengths, m)?)?;
    m.add_function(wrap_pyfunction!(lbp_codes, m)?)?;
    m.add_function(wrap_pyfunction!(eer, m)?)?;
    m.add_function(wrap_pyfunction!(hter, m)?)?;
    m.add("GENUINE", forest::GENUINE)?;
    m.add("SPOOF", forest::SPOOF)?;
    Ok(())
}
