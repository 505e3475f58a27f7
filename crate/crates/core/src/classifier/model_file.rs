//! Model persistence.
//!
//! Layout (all text lines end in `\n`):
//!
//! ```text
//! BINSORT-MODEL v1
//! categories <slug>,<slug>,...
//! dim <feature dimension>
//! <centroids: categories x dim little-endian f64, in the listed order>
//! ```

use std::fs;
use std::path::Path;

use super::{BaselineModel, ClassifierError, TrashCategory};

pub const MODEL_MAGIC: &str = "BINSORT-MODEL v1";

pub fn encode_model(model: &BaselineModel) -> Vec<u8> {
    let centroids = model.centroids();
    let names: Vec<&str> = centroids.iter().map(|(c, _)| c.slug()).collect();
    let dim = centroids.first().map_or(0, |(_, v)| v.len());
    let mut out = format!("{MODEL_MAGIC}\ncategories {}\ndim {dim}\n", names.join(",")).into_bytes();
    for (_, v) in centroids {
        for x in v {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

pub fn decode_model(bytes: &[u8]) -> Result<BaselineModel, ClassifierError> {
    let bad = |msg: &str| ClassifierError::Format(msg.to_string());
    let mut rest = bytes;
    let mut line = || -> Result<&str, ClassifierError> {
        let end = rest.iter().position(|&b| b == b'\n').ok_or_else(|| bad("truncated header"))?;
        let text = std::str::from_utf8(&rest[..end]).map_err(|_| bad("header is not UTF-8"))?;
        rest = &rest[end + 1..];
        Ok(text)
    };
    if line()? != MODEL_MAGIC {
        return Err(bad("missing `BINSORT-MODEL v1` header"));
    }
    let categories = line()?
        .strip_prefix("categories ")
        .ok_or_else(|| bad("expected `categories` line"))?
        .split(',')
        .map(str::parse::<TrashCategory>)
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| ClassifierError::Format(e.to_string()))?;
    let dim: usize = line()?
        .strip_prefix("dim ")
        .and_then(|d| d.parse().ok())
        .ok_or_else(|| bad("expected `dim` line"))?;
    if rest.len() != categories.len() * dim * 8 {
        return Err(bad(&format!("expected {} centroid bytes, found {}", categories.len() * dim * 8, rest.len())));
    }
    let values: Vec<f64> = rest.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect();
    let centroids = categories.into_iter().zip(values.chunks(dim.max(1))).map(|(c, v)| (c, v.to_vec())).collect();
    BaselineModel::from_centroids(centroids).map_err(|e| ClassifierError::Format(e.to_string()))
}

pub fn write_model(path: impl AsRef<Path>, model: &BaselineModel) -> Result<(), ClassifierError> {
    fs::write(path, encode_model(model))?;
    Ok(())
}

pub fn read_model(path: impl AsRef<Path>) -> Result<BaselineModel, ClassifierError> {
    decode_model(&fs::read(path)?)
}
