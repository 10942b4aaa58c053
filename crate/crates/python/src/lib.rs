//! Python bindings for `wavquant`: clips, keys, embed/extract, attacks,
//! metrics and the per-group quantizer.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyOSError};
use pyo3::prelude::*;
use pyo3::types::PyList;

use wavquant::attacks::AttackSpec;
use wavquant::audio_io::{self, SynthKind};
use wavquant::codec;
use wavquant::quantizer::{self, ScalingOutcome};
use wavquant::wavelet::{self, WaveletFilter};
use wavquant::{Error, GroupParams, ScalingMode, ScalingVector, WaveletFamily};

create_exception!(
    pywavquant,
    WavquantError,
    PyException,
    "Invalid input, configuration or file format."
);
create_exception!(
    pywavquant,
    CapacityError,
    WavquantError,
    "Payload longer than the clip can carry."
);

fn py_err(err: Error) -> PyErr {
    match err {
        Error::Io { .. } => PyOSError::new_err(err.to_string()),
        Error::Capacity { .. } => CapacityError::new_err(err.to_string()),
        other => WavquantError::new_err(other.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(py_err)
}

/// Mono audio with samples in [-1, 1).
#[pyclass(name = "AudioClip", module = "pywavquant", frozen)]
struct PyAudioClip {
    inner: audio_io::AudioClip,
}

#[pymethods]
impl PyAudioClip {
    #[new]
    #[pyo3(signature = (samples, sample_rate = 44_100))]
    fn new(samples: Vec<f64>, sample_rate: u32) -> PyResult<Self> {
        let inner = audio_io::AudioClip::new(samples, sample_rate).map_err(py_err)?;
        Ok(PyAudioClip { inner })
    }

    #[staticmethod]
    fn read_wav(path: PathBuf) -> PyResult<Self> {
        Ok(PyAudioClip {
            inner: audio_io::read_wav(&path).map_err(py_err)?,
        })
    }

    fn write_wav(&self, path: PathBuf) -> PyResult<()> {
        audio_io::write_wav(&self.inner, &path).map_err(py_err)
    }

    /// Samples as floats.
    fn samples(&self) -> Vec<f64> {
        self.inner.samples().to_vec()
    }

    /// Samples rounded and saturated to 16-bit PCM.
    fn pcm16(&self) -> Vec<i16> {
        self.inner.to_pcm16()
    }

    /// The clip rounded to 16-bit PCM, as a file round trip would give.
    fn quantized(&self) -> Self {
        PyAudioClip {
            inner: self.inner.quantized(),
        }
    }

    #[getter]
    fn sample_rate(&self) -> u32 {
        self.inner.sample_rate()
    }

    #[getter]
    fn duration(&self) -> f64 {
        self.inner.duration_seconds()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "AudioClip({} samples at {} Hz)",
            self.inner.len(),
            self.inner.sample_rate()
        )
    }
}

/// Secret parameters shared by embedder and extractor.
#[pyclass(name = "EmbedKey", module = "pywavquant", frozen)]
struct PyEmbedKey {
    inner: codec::EmbedKey,
}

#[pymethods]
impl PyEmbedKey {
    #[new]
    #[pyo3(signature = (
        quant_step = 26_000.0, group_size = 4, scaling_budget = None, wavelet = "db8", levels = 7,
        pn_seed = 0x5EED, scaling_mode = "optimal", segment_count = 4, sync_length = 16, sync_max_errors = 2,
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        quant_step: f64,
        group_size: usize,
        scaling_budget: Option<f64>,
        wavelet: &str,
        levels: usize,
        pn_seed: u64,
        scaling_mode: &str,
        segment_count: usize,
        sync_length: usize,
        sync_max_errors: usize,
    ) -> PyResult<Self> {
        let inner = codec::EmbedKey {
            quant_step,
            group_size,
            scaling_budget: scaling_budget.unwrap_or(group_size as f64),
            wavelet: parse(wavelet)?,
            levels,
            pn_seed,
            scaling_mode: parse(scaling_mode)?,
            segment_count,
            sync_length,
            sync_max_errors,
        };
        inner.validate().map_err(py_err)?;
        Ok(PyEmbedKey { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyEmbedKey {
            inner: codec::EmbedKey::load(&path).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(PyEmbedKey {
            inner: codec::EmbedKey::parse(text).map_err(py_err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(py_err)
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    /// Payload bits the key can carry in a clip of `num_samples`.
    fn capacity(&self, num_samples: usize) -> PyResult<usize> {
        Ok(codec::capacity(num_samples, &self.inner).map_err(py_err)?.payload_bits)
    }

    #[getter]
    fn quant_step(&self) -> f64 {
        self.inner.quant_step
    }

    #[getter]
    fn group_size(&self) -> usize {
        self.inner.group_size
    }

    #[getter]
    fn scaling_budget(&self) -> f64 {
        self.inner.scaling_budget
    }

    #[getter]
    fn wavelet(&self) -> &'static str {
        self.inner.wavelet.name()
    }

    #[getter]
    fn levels(&self) -> usize {
        self.inner.levels
    }

    #[getter]
    fn pn_seed(&self) -> u64 {
        self.inner.pn_seed
    }

    #[getter]
    fn scaling_mode(&self) -> &'static str {
        self.inner.scaling_mode.name()
    }

    fn __repr__(&self) -> String {
        format!(
            "EmbedKey(quant_step={}, group_size={}, scaling_mode='{}')",
            self.inner.quant_step, self.inner.group_size, self.inner.scaling_mode
        )
    }
}

/// Per-group scaling factors recorded at embedding time.
#[pyclass(name = "SideInfo", module = "pywavquant", frozen)]
struct PySideInfo {
    inner: codec::SideInfo,
}

#[pymethods]
impl PySideInfo {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PySideInfo {
            inner: codec::SideInfo::load(&path).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(PySideInfo {
            inner: codec::SideInfo::parse(text).map_err(py_err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(py_err)
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    /// Factors of one group, or `None` if it was not embedded.
    fn get(&self, segment: usize, group: usize) -> Option<Vec<f64>> {
        self.inner.get(segment, group).map(|s| s.factors().to_vec())
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

#[pyclass(name = "EmbedReport", module = "pywavquant", frozen, get_all)]
struct PyEmbedReport {
    snr_db: f64,
    capacity_bits: usize,
    payload_capacity_bits: usize,
    groups_total: usize,
    groups_embedded: usize,
    payload_bits: usize,
    pad_samples: usize,
    repaired_groups: usize,
    unverified_groups: usize,
    mode_histogram: BTreeMap<String, usize>,
}

#[pymethods]
impl PyEmbedReport {
    fn __repr__(&self) -> String {
        format!(
            "EmbedReport(snr_db={:.2}, payload_bits={}, groups_embedded={})",
            self.snr_db, self.payload_bits, self.groups_embedded
        )
    }
}

#[pyclass(name = "Extraction", module = "pywavquant", frozen)]
struct PyExtraction {
    bits: Vec<u8>,
    #[pyo3(get)]
    decoder: &'static str,
    #[pyo3(get)]
    gain: f64,
    /// Per segment: the group offset of the sync match, or `None`.
    #[pyo3(get)]
    sync_offsets: Vec<Option<usize>>,
}

/// Bits as a list of ints (a `Vec<u8>` would convert to `bytes`).
fn bit_list<'py>(py: Python<'py>, bits: &[u8]) -> PyResult<Bound<'py, PyList>> {
    PyList::new(py, bits.iter().map(|&b| u32::from(b)))
}

#[pymethods]
impl PyExtraction {
    /// Every decoded payload bit, segment by segment.
    #[getter]
    fn bits<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyList>> {
        bit_list(py, &self.bits)
    }

    /// The first `length` payload bits.
    fn payload<'py>(&self, py: Python<'py>, length: usize) -> PyResult<Bound<'py, PyList>> {
        bit_list(py, &self.bits[..length.min(self.bits.len())])
    }

    fn __repr__(&self) -> String {
        format!(
            "Extraction({} bits, decoder='{}', gain={:.4})",
            self.bits.len(),
            self.decoder,
            self.gain
        )
    }
}

/// Embeds `bits` and returns the marked clip, the report and the side
/// information (`None` in fixed mode).
#[pyfunction]
fn embed(
    py: Python<'_>,
    audio: PyRef<'_, PyAudioClip>,
    bits: Vec<u8>,
    key: PyRef<'_, PyEmbedKey>,
) -> PyResult<(PyAudioClip, PyEmbedReport, Option<PySideInfo>)> {
    let payload = codec::Payload::new(bits).map_err(py_err)?;
    let (audio, key) = (&audio.inner, &key.inner);
    let (marked, report) = py.detach(|| codec::embed(audio, &payload, key)).map_err(py_err)?;
    let mode_histogram = report
        .mode_histogram
        .iter()
        .map(|(m, &c)| (m.name().to_string(), c))
        .collect();
    Ok((
        PyAudioClip { inner: marked },
        PyEmbedReport {
            snr_db: report.snr_db,
            capacity_bits: report.capacity_bits,
            payload_capacity_bits: report.payload_capacity_bits,
            groups_total: report.groups_total,
            groups_embedded: report.groups_embedded,
            payload_bits: report.payload_bits,
            pad_samples: report.pad_samples,
            repaired_groups: report.repaired_groups,
            unverified_groups: report.unverified_groups,
            mode_histogram,
        },
        report.side_info.map(|inner| PySideInfo { inner }),
    ))
}

#[pyfunction]
#[pyo3(signature = (audio, key, side_info = None))]
fn extract(
    py: Python<'_>,
    audio: PyRef<'_, PyAudioClip>,
    key: PyRef<'_, PyEmbedKey>,
    side_info: Option<PyRef<'_, PySideInfo>>,
) -> PyResult<PyExtraction> {
    let side = side_info.as_ref().map(|s| &s.inner);
    let (audio, key) = (&audio.inner, &key.inner);
    let got = py.detach(|| codec::extract(audio, key, side)).map_err(py_err)?;
    Ok(PyExtraction {
        decoder: got.decoder.name(),
        gain: got.gain,
        sync_offsets: got.segments.iter().map(|s| s.offset).collect(),
        bits: got.bits,
    })
}

/// Applies an attack written as `kind:parameter`, e.g. `"timescale:-5"`.
#[pyfunction]
fn attack(py: Python<'_>, audio: PyRef<'_, PyAudioClip>, spec: &str) -> PyResult<PyAudioClip> {
    let spec: AttackSpec = parse(spec)?;
    let audio = &audio.inner;
    let inner = py.detach(|| spec.apply(audio)).map_err(py_err)?;
    Ok(PyAudioClip { inner })
}

/// Every attack of the evaluation matrix, as `kind:parameter` strings.
#[pyfunction]
fn table_attacks() -> Vec<String> {
    AttackSpec::table_attacks().iter().map(ToString::to_string).collect()
}

#[pyfunction]
#[pyo3(signature = (kind, seconds, seed = 0))]
fn synth(kind: &str, seconds: f64, seed: u64) -> PyResult<PyAudioClip> {
    let kind = match kind {
        "tone_mix" => SynthKind::ToneMix,
        "filtered_noise" => SynthKind::FilteredNoise,
        "chirp" => SynthKind::Chirp,
        other => {
            return Err(WavquantError::new_err(format!(
                "unknown synth kind `{other}` (expected tone_mix, filtered_noise or chirp)"
            )))
        }
    };
    Ok(PyAudioClip {
        inner: audio_io::synth(kind, seconds, seed).map_err(py_err)?,
    })
}

/// The four named clips used by the evaluation harness.
#[pyfunction]
fn bundled_corpus() -> Vec<(String, PyAudioClip)> {
    audio_io::bundled_corpus()
        .into_iter()
        .map(|(name, inner)| (name, PyAudioClip { inner }))
        .collect()
}

#[pyfunction]
fn snr(original: Vec<f64>, test: Vec<f64>) -> PyResult<f64> {
    wavquant::metrics::snr(&original, &test).map_err(py_err)
}

/// BER in percent over `sent`, counting missing received bits as errors
/// against 0.
#[pyfunction]
fn ber(sent: Vec<u8>, received: Vec<u8>) -> PyResult<f64> {
    wavquant::metrics::positional_ber(&sent, &received).map_err(py_err)
}

/// Multi-level DWT; returns `(approx, details)` with details coarsest first.
#[pyfunction]
#[pyo3(signature = (signal, family = "db8", levels = 7))]
fn dwt(signal: Vec<f64>, family: &str, levels: usize) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
    let filter = WaveletFilter::new(parse::<WaveletFamily>(family)?);
    let pyr = wavelet::dwt_forward(&signal, &filter, levels).map_err(py_err)?;
    Ok((pyr.approx().to_vec(), pyr.details().to_vec()))
}

#[pyfunction]
#[pyo3(signature = (approx, details, family = "db8"))]
fn idwt(approx: Vec<f64>, details: Vec<Vec<f64>>, family: &str) -> PyResult<Vec<f64>> {
    let filter = WaveletFilter::new(parse::<WaveletFamily>(family)?);
    let len = approx.len() << details.len();
    let pyr = wavelet::DwtPyramid::from_parts(approx, details, len).map_err(py_err)?;
    wavelet::dwt_inverse(&pyr, &filter).map_err(py_err)
}

/// Embeds one bit into group magnitudes with optimal weights.
///
/// Returns `(modified_magnitudes, scaling_factors, mode)`.
#[pyfunction]
#[pyo3(signature = (magnitudes, bit, quant_step, scaling_budget = None))]
fn embed_bit_optimal(
    magnitudes: Vec<f64>,
    bit: u8,
    quant_step: f64,
    scaling_budget: Option<f64>,
) -> PyResult<(Vec<f64>, Vec<f64>, &'static str)> {
    let n = magnitudes.len();
    let params = GroupParams::new(n, quant_step, scaling_budget.unwrap_or(n as f64)).map_err(py_err)?;
    let r = quantizer::embed_bit_optimal(&magnitudes, bit, &params).map_err(py_err)?;
    Ok((r.modified_magnitudes, r.scaling.factors().to_vec(), r.mode_used.name()))
}

/// Embeds one bit with the given fixed weights by projection.
#[pyfunction]
fn embed_bit_fixed(magnitudes: Vec<f64>, weights: Vec<f64>, bit: u8, quant_step: f64) -> PyResult<Vec<f64>> {
    let weights = ScalingVector::from_factors(weights).map_err(py_err)?;
    let r = quantizer::embed_bit_fixed_scaling(&magnitudes, &weights, bit, quant_step).map_err(py_err)?;
    Ok(r.modified_magnitudes)
}

#[pyfunction]
fn extract_bit(magnitudes: Vec<f64>, weights: Vec<f64>, quant_step: f64) -> PyResult<u8> {
    let weights = ScalingVector::from_factors(weights).map_err(py_err)?;
    if weights.len() != magnitudes.len() {
        return Err(py_err(Error::Structure(format!(
            "{} magnitudes but {} weights",
            magnitudes.len(),
            weights.len()
        ))));
    }
    Ok(quantizer::extract_bit(&magnitudes, &weights, quant_step))
}

/// Optimal weights with `Σa = budget` and `a·c = gamma`, or `None`.
#[pyfunction]
fn optimal_scaling_factors(magnitudes: Vec<f64>, gamma: f64, budget: f64) -> PyResult<Option<Vec<f64>>> {
    Ok(
        match quantizer::optimal_scaling_factors(&magnitudes, gamma, budget).map_err(py_err)? {
            ScalingOutcome::Optimal(found) => Some(found.scaling.factors().to_vec()),
            ScalingOutcome::NoOptimalSolution(_) => None,
        },
    )
}

#[pymodule]
pub fn pywavquant(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("WavquantError", py.get_type::<WavquantError>())?;
    m.add("CapacityError", py.get_type::<CapacityError>())?;
    m.add(
        "SCALING_MODES",
        [ScalingMode::Optimal.name(), ScalingMode::FixedOnes.name()],
    )?;
    m.add_class::<PyAudioClip>()?;
    m.add_class::<PyEmbedKey>()?;
    m.add_class::<PySideInfo>()?;
    m.add_class::<PyEmbedReport>()?;
    m.add_class::<PyExtraction>()?;
    m.add_function(wrap_pyfunction!(embed, m)?)?;
    m.add_function(wrap_pyfunction!(extract, m)?)?;
    m.add_function(wrap_pyfunction!(attack, m)?)?;
    m.add_function(wrap_pyfunction!(table_attacks, m)?)?;
    m.add_function(wrap_pyfunction!(synth, m)?)?;
    m.add_function(wrap_pyfunction!(bundled_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(snr, m)?)?;
    m.add_function(wrap_pyfunction!(ber, m)?)?;
    m.add_function(wrap_pyfunction!(dwt, m)?)?;
    m.add_function(wrap_pyfunction!(idwt, m)?)?;
    m.add_function(wrap_pyfunction!(embed_bit_optimal, m)?)?;
    m.add_function(wrap_pyfunction!(embed_bit_fixed, m)?)?;
    m.add_function(wrap_pyfunction!(extract_bit, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_scaling_factors, m)?)?;
    Ok(())
}
