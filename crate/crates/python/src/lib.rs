use hlta::corpus::{self, CorpusFormat};
use hlta::structure::{pem_hlta, HltaOptions};
use hlta::topics::{coherence, extract_topics, heldout_loglik, TopicHierarchy};
use hlta::{BinaryDataset, Bits, LatentTreeModel};
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

create_exception!(pyhlta, HltaError, PyException);

fn py_err(e: hlta::Error) -> PyErr {
    HltaError::new_err(e.to_string())
}

/// Dataset from 0/1 rows over `words`, one row per document.
pub fn dataset_from_rows(words: Vec<String>, rows: &[Vec<u8>]) -> hlta::Result<BinaryDataset> {
    let docs = rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            if row.len() != words.len() {
                return Err(hlta::Error::VariableMismatch(format!(
                    "row {i} has {} entries for {} words",
                    row.len(),
                    words.len()
                )));
            }
            if let Some(&bad) = row.iter().find(|&&b| b > 1) {
                return Err(hlta::Error::VariableMismatch(format!("row {i} holds {bad}; entries must be 0 or 1")));
            }
            Ok(Bits::from_bools(&row.iter().map(|&b| b == 1).collect::<Vec<_>>()))
        })
        .collect::<hlta::Result<Vec<_>>>()?;
    BinaryDataset::from_documents(words, docs)
}

#[pyclass(name = "Model", module = "pyhlta", frozen)]
struct PyModel {
    inner: LatentTreeModel,
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(PyModel { inner: LatentTreeModel::from_text(text).map_err(py_err)? })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[getter]
    fn words(&self) -> Vec<String> {
        self.inner.observed_names()
    }

    #[getter]
    fn latents(&self) -> Vec<String> {
        self.inner.latents().map(|v| self.inner.name(v).to_string()).collect()
    }

    #[getter]
    fn levels(&self) -> u32 {
        self.inner.top_level()
    }

    /// Problems found in the model, empty when it is valid.
    fn validate(&self) -> Vec<String> {
        self.inner.validate().iter().map(|v| v.to_string()).collect()
    }

    /// Average log-likelihood per document.
    fn loglik(&self, words: Vec<String>, rows: Vec<Vec<u8>>) -> PyResult<f64> {
        let data = dataset_from_rows(words, &rows).map_err(py_err)?;
        heldout_loglik(&self.inner, &data).map_err(py_err)
    }

    /// Topic hierarchy as the JSON topic document.
    #[pyo3(signature = (words, rows, words_per_topic = 5))]
    fn topics(&self, words: Vec<String>, rows: Vec<Vec<u8>>, words_per_topic: usize) -> PyResult<String> {
        let data = dataset_from_rows(words, &rows).map_err(py_err)?;
        Ok(extract_topics(&self.inner, &data, words_per_topic).map_err(py_err)?.to_json())
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(words={}, latents={}, levels={})",
            self.inner.observed().count(),
            self.inner.latents().count(),
            self.inner.top_level()
        )
    }
}

/// Learn a hierarchical latent tree model from 0/1 document rows.
#[pyfunction]
#[pyo3(signature = (words, rows, tau = 30, delta = 3.0, kappa = 50, batches = 1, seed = 0, max_levels = None))]
#[allow(clippy::too_many_arguments)]
fn learn(
    py: Python<'_>,
    words: Vec<String>,
    rows: Vec<Vec<u8>>,
    tau: usize,
    delta: f64,
    kappa: usize,
    batches: usize,
    seed: u64,
    max_levels: Option<u32>,
) -> PyResult<PyModel> {
    let data = dataset_from_rows(words, &rows).map_err(py_err)?;
    let opts = HltaOptions { tau, delta, kappa, batches, seed, max_levels, ..HltaOptions::default() };
    let outcome = py.detach(|| pem_hlta(&data, &opts)).map_err(py_err)?;
    Ok(PyModel { inner: outcome.model })
}

/// Average topic coherence of a JSON topic document over 0/1 rows.
#[pyfunction]
#[pyo3(signature = (topics_json, words, rows, m = 4))]
fn topic_coherence(topics_json: &str, words: Vec<String>, rows: Vec<Vec<u8>>, m: usize) -> PyResult<f64> {
    let topics = TopicHierarchy::from_json(topics_json).map_err(py_err)?;
    let data = dataset_from_rows(words, &rows).map_err(py_err)?;
    Ok(coherence(&topics, &data, m).map_err(py_err)?.average)
}

/// Load a corpus ("plain-dir" or "uci-bow") and binarize it over the
/// `size` words with the highest average TF-IDF. Returns (words, rows).
#[pyfunction]
#[pyo3(signature = (path, format = "plain-dir", size = 1000))]
fn load_corpus(path: &str, format: &str, size: usize) -> PyResult<(Vec<String>, Vec<Vec<u8>>)> {
    let format: CorpusFormat = format.parse().map_err(py_err)?;
    let raw = corpus::load_corpus(std::path::Path::new(path), format).map_err(py_err)?;
    let vocab = corpus::select_vocabulary(&raw, size).map_err(py_err)?;
    let rows = corpus::document_bits(&raw, &vocab)
        .into_iter()
        .map(|(_, bits)| bits.to_bools().into_iter().map(u8::from).collect())
        .collect();
    Ok((vocab.words().to_vec(), rows))
}

#[pymodule]
fn pyhlta(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("HltaError", m.py().get_type::<HltaError>())?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(learn, m)?)?;
    m.add_function(wrap_pyfunction!(topic_coherence, m)?)?;
    m.add_function(wrap_pyfunction!(load_corpus, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_become_a_deduplicated_dataset() {
        let words = vec!["a".to_string(), "b".to_string()];
        let data = dataset_from_rows(words, &[vec![1, 0], vec![1, 0], vec![0, 1]]).unwrap();
        assert_eq!(data.total_weight(), 3);
        assert_eq!(data.rows().len(), 2);
    }

    #[test]
    fn malformed_rows_are_rejected() {
        let words = vec!["a".to_string(), "b".to_string()];
        assert!(dataset_from_rows(words.clone(), &[vec![1]]).is_err());
        assert!(dataset_from_rows(words, &[vec![1, 2]]).is_err());
    }
}
