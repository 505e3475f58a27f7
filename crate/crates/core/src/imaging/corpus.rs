//! Directory-per-category corpora: `<root>/<category>/<source_id>.pgm|ppm`.

use std::fs;
use std::path::Path;

use super::{read_pnm, write_pnm, Image, ImagingError, LabeledImage, Result};
use crate::classifier::TrashCategory;

/// `<source_id>.pgm` for grayscale, `<source_id>.ppm` for RGB.
pub fn image_file_name(source_id: &str, img: &Image) -> String {
    let ext = if img.channels() == 1 { "pgm" } else { "ppm" };
    format!("{source_id}.{ext}")
}

/// Loads every `.pgm`/`.ppm` file under the category directories of `root`.
/// Items come back in category ordinal order, then by file name. Unknown
/// directory names are an error; missing category directories are not.
pub fn read_corpus(root: impl AsRef<Path>) -> Result<Vec<LabeledImage>> {
    let root = root.as_ref();
    for entry in fs::read_dir(root)? {
        let entry = entry?;
        if entry.file_type()?.is_dir() {
            let name = entry.file_name();
            let name = name.to_string_lossy();
            if name.parse::<TrashCategory>().is_err() {
                return Err(ImagingError::InvalidArgument(format!("`{name}` is not a trash category")));
            }
        }
    }

    let mut items = Vec::new();
    for category in TrashCategory::ALL {
        let dir = root.join(category.slug());
        if !dir.is_dir() {
            continue;
        }
        let mut files: Vec<_> = fs::read_dir(&dir)?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<_>>()?;
        files.retain(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("pgm" | "ppm")));
        files.sort();
        for path in files {
            let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            items.push(LabeledImage::new(read_pnm(&path)?, category, id));
        }
    }
    Ok(items)
}

/// Writes `items` under `root`, creating category directories as needed.
pub fn write_corpus(root: impl AsRef<Path>, items: &[LabeledImage]) -> Result<()> {
    let root = root.as_ref();
    for item in items {
        if item.source_id.is_empty() || item.source_id.contains(['/', '\\']) || item.source_id.starts_with('.') {
            return Err(ImagingError::InvalidArgument(format!("`{}` is not usable as a file name", item.source_id)));
        }
        let dir = root.join(item.label.slug());
        fs::create_dir_all(&dir)?;
        write_pnm(dir.join(image_file_name(&item.source_id, &item.image)), &item.image)?;
    }
    Ok(())
}
