//! Debug raster dump: label images as binary PPM, semantic classes in
//! fixed colors with per-instance brightness variation; ignore regions in
//! dark gray.

use std::io::Write;
use std::path::Path;

use maplabel_core::primitives::SemanticClass;
use maplabel_core::render::LabelImage;

use crate::error::Result;

fn color_of(class: SemanticClass, instance: u32) -> [u8; 3] {
    let base = match class {
        SemanticClass::Background => [20, 20, 20],
        SemanticClass::Pole => [70, 130, 255],
        SemanticClass::TrafficLight => [255, 90, 60],
        SemanticClass::TrafficSign => [250, 220, 40],
    };
    if instance == 0 {
        return base;
    }
    // Instance-dependent brightness so adjacent segments are separable.
    let scale = 0.6 + 0.4 * ((instance.wrapping_mul(2654435761) >> 24) as f32 / 255.0);
    base.map(|c| ((c as f32) * scale) as u8)
}

pub fn write_label_ppm(path: &Path, image: &LabelImage) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    write!(out, "P6\n{} {}\n255\n", image.width, image.height)?;
    for idx in 0..image.pixel_count() {
        let rgb = if image.ignore[idx] {
            [60, 60, 60]
        } else {
            color_of(image.semantic[idx], image.instance[idx])
        };
        out.write_all(&rgb)?;
    }
    out.flush()?;
    Ok(())
}
