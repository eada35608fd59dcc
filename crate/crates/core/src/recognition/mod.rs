//! Character classifier: 24×24 glyph normalization, PCA compression and a
//! feed-forward network with softmax output.

pub mod glyph;
pub mod mlp;
pub mod model_io;
pub mod pca;
pub mod train;

pub use glyph::{normalize_glyph, GLYPH_DIM, GLYPH_SIDE};
pub use mlp::{Adam, Layer, MlpModel};
pub use model_io::{load_model, save_model};
pub use pca::{pca_fit, IncrementalPca, PcaModel};
pub use train::{train, EpochMetrics, TrainConfig, TrainOutcome};

use serde::Serialize;

use crate::error::Result;
use crate::raster::BinaryImage;

/// A normalized glyph with its class and end-of-word flag.
#[derive(Clone, Debug, PartialEq)]
pub struct GlyphSample {
    /// Flattened 24×24 raster, 1.0 = ink.
    pub pixels: Vec<f32>,
    pub label: usize,
    pub eow: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Prediction {
    pub class_id: usize,
    pub confidence: f64,
    pub probabilities: Vec<f64>,
}

/// Fitted PCA plus network; immutable after loading.
#[derive(Clone, Debug, PartialEq)]
pub struct Classifier {
    pub pca: PcaModel,
    pub mlp: MlpModel,
}

impl Classifier {
    pub fn predict_vector(&self, pixels: &[f32]) -> Result<Prediction> {
        let z = self.pca.project(pixels)?;
        let probabilities = self.mlp.forward(z.as_slice())?;
        let class_id = train::argmax(probabilities.iter().copied());
        Ok(Prediction {
            class_id,
            confidence: probabilities[class_id],
            probabilities,
        })
    }

    pub fn predict(&self, crop: &BinaryImage) -> Result<Prediction> {
        self.predict_vector(&normalize_glyph(crop)?)
    }
}

/// Fits PCA on the samples' pixels, rounds it to file precision, then
/// trains the network on the rounded projection.
pub fn fit(
    samples: &[GlyphSample],
    components: usize,
    pca_batch: usize,
    cfg: &TrainConfig,
    n_classes: usize,
) -> Result<(Classifier, TrainOutcome)> {
    let pixels: Vec<Vec<f32>> = samples.iter().map(|s| s.pixels.clone()).collect();
    let mut pca = pca_fit(&pixels, components, pca_batch)?;
    drop(pixels);
    pca.round_to_f32();
    let outcome = train(samples, cfg, &pca, n_classes)?;
    let clf = Classifier {
        pca,
        mlp: outcome.model.clone(),
    };
    Ok((clf, outcome))
}
