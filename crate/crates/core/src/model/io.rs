use std::path::Path;

use super::{ModelConfig, ModelParams};
use crate::error::{Error, Result};
use crate::nn::{read_params, write_params};

pub fn save_params(params: &ModelParams, path: &Path) -> Result<()> {
    let tensors: Vec<_> = params
        .named_tensors()
        .into_iter()
        .map(|(name, t)| (name, &t.value))
        .collect();
    write_params(path, &tensors)
}

/// Loads an `ACNP` blob and checks every tensor against the shapes `config`
/// implies.
pub fn load_params(path: &Path, config: &ModelConfig) -> Result<ModelParams> {
    let stored = read_params(path)?;
    let mut params = ModelParams::zeros(config)?;
    let expected: Vec<(String, (usize, usize))> = params
        .named_tensors()
        .into_iter()
        .map(|(n, t)| (n, t.shape()))
        .collect();
    if stored.len() != expected.len() {
        return Err(Error::ShapeMismatch(format!(
            "file has {} tensors, config implies {}",
            stored.len(),
            expected.len()
        )));
    }
    for ((name, shape), (stored_name, m)) in expected.iter().zip(&stored) {
        if name != stored_name || *shape != m.shape() {
            return Err(Error::ShapeMismatch(format!(
                "expected {name} {shape:?}, found {stored_name} {:?}",
                m.shape()
            )));
        }
    }
    for (t, (_, m)) in params.tensors_mut().into_iter().zip(stored) {
        t.value = m;
    }
    Ok(params)
}

/// Writes `model.json` (config) and `model.acnp` (weights) into `dir`.
pub fn save_model(params: &ModelParams, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let json = serde_json::to_vec_pretty(&params.config)?;
    crate::io_util::write_atomic(&dir.join("model.json"), &json)?;
    save_params(params, &dir.join("model.acnp"))
}

pub fn load_model(dir: &Path) -> Result<ModelParams> {
    let config: ModelConfig = serde_json::from_slice(&std::fs::read(dir.join("model.json"))?)?;
    load_params(&dir.join("model.acnp"), &config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{init_model, Variant};

    fn cfg() -> ModelConfig {
        ModelConfig {
            kernel_widths: vec![2, 3],
            kernels_per_width: 3,
            ..ModelConfig::new(4, 40, Variant::AcnnMv)
        }
    }

    #[test]
    fn save_load_save_identical() {
        let dir = tempfile::tempdir().unwrap();
        let p = init_model(&cfg(), 9).unwrap();
        let a = dir.path().join("a.acnp");
        let b = dir.path().join("b.acnp");
        save_params(&p, &a).unwrap();
        let loaded = load_params(&a, &cfg()).unwrap();
        assert_eq!(loaded, p);
        save_params(&loaded, &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn wrong_magic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.acnp");
        std::fs::write(&path, b"ACNF\x01\x00\x00\x00\x00\x00\x00\x00").unwrap();
        assert!(matches!(load_params(&path, &cfg()), Err(Error::Format(_))));
    }

    #[test]
    fn shape_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.acnp");
        save_params(&init_model(&cfg(), 9).unwrap(), &path).unwrap();
        let other = ModelConfig {
            kernels_per_width: 4,
            ..cfg()
        };
        assert!(matches!(load_params(&path, &other), Err(Error::ShapeMismatch(_))));
        let sv = ModelConfig {
            multi_view: false,
            ..cfg()
        };
        assert!(matches!(load_params(&path, &sv), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn model_dir_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = init_model(&cfg(), 3).unwrap();
        save_model(&p, dir.path()).unwrap();
        assert_eq!(load_model(dir.path()).unwrap(), p);
    }
}
