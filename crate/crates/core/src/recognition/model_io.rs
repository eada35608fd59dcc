//! Binary model file.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! "AOCR" u16:version
//! tensor:pca_mean  tensor:pca_components  tensor:variance_ratios
//! u32:layers  (tensor:W  tensor:b) per layer
//! tensor = u32:ndim  u32:dim × ndim  f32 × product(dims), row-major
//! ```
//!
//! The class map lives next to the model as `<model>.classes.json`.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};

use super::mlp::{Layer, MlpModel};
use super::pca::PcaModel;
use super::Classifier;
use crate::classmap::ClassMap;
use crate::error::{OcrError, Result};

pub const MAGIC: &[u8; 4] = b"AOCR";
pub const FORMAT_VERSION: u16 = 1;

pub fn sidecar_path(model: &Path) -> PathBuf {
    let mut name = model.file_name().unwrap_or_default().to_os_string();
    name.push(".classes.json");
    model.with_file_name(name)
}

fn put_tensor(out: &mut Vec<u8>, dims: &[usize], values: impl Iterator<Item = f64>) {
    out.extend((dims.len() as u32).to_le_bytes());
    for &d in dims {
        out.extend((d as u32).to_le_bytes());
    }
    for v in values {
        out.extend((v as f32).to_le_bytes());
    }
}

fn row_major(m: &DMatrix<f64>) -> impl Iterator<Item = f64> + '_ {
    (0..m.nrows()).flat_map(move |i| (0..m.ncols()).map(move |j| m[(i, j)]))
}

pub fn encode(c: &Classifier) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend(MAGIC);
    out.extend(FORMAT_VERSION.to_le_bytes());
    put_tensor(&mut out, &[c.pca.dim()], c.pca.mean.iter().copied());
    put_tensor(&mut out, &[c.pca.k(), c.pca.dim()], row_major(&c.pca.components));
    put_tensor(&mut out, &[c.pca.k()], c.pca.explained_variance_ratio.iter().copied());
    out.extend((c.mlp.layers.len() as u32).to_le_bytes());
    for l in &c.mlp.layers {
        put_tensor(&mut out, &[l.w.nrows(), l.w.ncols()], row_major(&l.w));
        put_tensor(&mut out, &[l.b.len()], l.b.iter().copied());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| OcrError::ModelFormat(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")) as usize)
    }

    fn tensor(&mut self, what: &str, ndim: usize) -> Result<(Vec<usize>, Vec<f64>)> {
        let n = self.u32()?;
        if n != ndim {
            return Err(OcrError::ModelFormat(format!("{what}: {n} dimensions, expected {ndim}")));
        }
        let dims: Vec<usize> = (0..n).map(|_| self.u32()).collect::<Result<_>>()?;
        let count = dims
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .ok_or_else(|| OcrError::ModelFormat(format!("{what}: size overflow")))?;
        let raw = self.take(count.checked_mul(4).ok_or_else(|| OcrError::ModelFormat(format!("{what}: size overflow")))?)?;
        let values = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
            .collect();
        Ok((dims, values))
    }
}

pub fn decode(bytes: &[u8]) -> Result<Classifier> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4).ok() != Some(MAGIC.as_slice()) {
        return Err(OcrError::ModelFormat("bad magic".into()));
    }
    let version = u16::from_le_bytes(r.take(2)?.try_into().expect("2 bytes"));
    if version != FORMAT_VERSION {
        return Err(OcrError::ModelFormat(format!("unsupported version {version}")));
    }
    let (md, mean) = r.tensor("pca mean", 1)?;
    let (cd, comps) = r.tensor("pca components", 2)?;
    let (rd, ratios) = r.tensor("variance ratios", 1)?;
    if cd[1] != md[0] || rd[0] != cd[0] {
        return Err(OcrError::ModelFormat("inconsistent PCA shapes".into()));
    }
    let pca = PcaModel {
        mean: DVector::from_vec(mean),
        components: DMatrix::from_row_slice(cd[0], cd[1], &comps),
        explained_variance_ratio: ratios,
    };
    let n_layers = r.u32()?;
    let mut layers = Vec::with_capacity(n_layers.min(64));
    for i in 0..n_layers {
        let (wd, w) = r.tensor(&format!("layer {i} weights"), 2)?;
        let (bd, b) = r.tensor(&format!("layer {i} bias"), 1)?;
        if bd[0] != wd[0] {
            return Err(OcrError::ModelFormat(format!("layer {i}: bias length mismatch")));
        }
        layers.push(Layer {
            w: DMatrix::from_row_slice(wd[0], wd[1], &w),
            b: DVector::from_vec(b),
        });
    }
    if r.pos != bytes.len() {
        return Err(OcrError::ModelFormat(format!("{} trailing byte(s)", bytes.len() - r.pos)));
    }
    let mlp = MlpModel { layers };
    mlp.validate().map_err(|e| OcrError::ModelFormat(e.to_string()))?;
    if mlp.n_inputs() != pca.k() {
        return Err(OcrError::ModelFormat(format!(
            "network takes {} inputs but PCA yields {}",
            mlp.n_inputs(),
            pca.k()
        )));
    }
    Ok(Classifier { pca, mlp })
}

/// Writes the model and its class-map sidecar.
pub fn save_model(path: impl AsRef<Path>, c: &Classifier, classes: &ClassMap) -> Result<()> {
    let path = path.as_ref();
    if classes.len() != c.mlp.n_outputs() {
        return Err(OcrError::invalid(format!(
            "{} classes for a network with {} outputs",
            classes.len(),
            c.mlp.n_outputs()
        )));
    }
    std::fs::write(path, encode(c)).map_err(|e| OcrError::io(path, e))?;
    classes.save(sidecar_path(path))
}

/// Reads a model and its class-map sidecar.
pub fn load_model(path: impl AsRef<Path>) -> Result<(Classifier, ClassMap)> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| OcrError::io(path, e))?;
    let c = decode(&bytes)?;
    let classes = ClassMap::load(sidecar_path(path))?;
    if classes.len() != c.mlp.n_outputs() {
        return Err(OcrError::ModelFormat(format!(
            "sidecar lists {} classes, network has {} outputs",
            classes.len(),
            c.mlp.n_outputs()
        )));
    }
    Ok((c, classes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_classifier() -> Classifier {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut pca = PcaModel {
            mean: DVector::from_fn(12, |_, _| rng.gen()),
            components: DMatrix::from_fn(4, 12, |_, _| rng.gen_range(-1.0..1.0)),
            explained_variance_ratio: vec![0.5, 0.2, 0.1, 0.05],
        };
        pca.round_to_f32();
        let mut mlp = MlpModel::he_init(&[4, 6, 3], &mut rng);
        mlp.round_to_f32();
        Classifier { pca, mlp }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let c = random_classifier();
        let bytes = encode(&c);
        let back = decode(&bytes).unwrap();
        assert_eq!(back, c);
        assert_eq!(encode(&back), bytes);
    }

    #[test]
    fn file_round_trip_with_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.aocr");
        let c = random_classifier();
        let classes = ClassMap {
            classes: vec!["ا".into(), "ب".into(), "لا".into()],
            ..ClassMap::default()
        };
        save_model(&p, &c, &classes).unwrap();
        assert!(dir.path().join("m.aocr.classes.json").exists());
        let (back, map) = load_model(&p).unwrap();
        assert_eq!(back, c);
        assert_eq!(map, classes);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let bytes = encode(&random_classifier());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode(&bad), Err(OcrError::ModelFormat(_))));
        assert!(matches!(decode(&bytes[..bytes.len() - 3]), Err(OcrError::ModelFormat(_))));
        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(decode(&long), Err(OcrError::ModelFormat(_))));
        let mut version = bytes;
        version[4] = 9;
        assert!(matches!(decode(&version), Err(OcrError::ModelFormat(_))));
    }
}
