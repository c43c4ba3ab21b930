//! Compute the 29 radiomic features of a single tile and print them by
//! name, together with the Otsu mask statistics they were computed over.
//!
//!     cargo run --example radiomics_features [image.png]

use histofuse::radiomics::{compute_mask, extract, feature_names, gray_from_rgb};

fn main() {
    let img = match std::env::args().nth(1) {
        Some(path) => image::open(&path)
            .unwrap_or_else(|e| panic!("cannot open {path}: {e}"))
            .to_rgb8(),
        None => {
            // procedural demo tile: dark nuclei-like dots on a pink field
            let config = histofuse::dataset::SynthConfig {
                tile_size: 96,
                ..Default::default()
            };
            histofuse::dataset::render_tile(&config, 0, 0, 2)
        }
    };

    let gray = gray_from_rgb(&img);
    let mask = compute_mask(&gray);
    println!(
        "tile {}x{}, foreground {} px ({:.1}%)",
        img.width(),
        img.height(),
        mask.count(),
        100.0 * mask.count() as f64 / (img.width() * img.height()) as f64
    );

    let features = extract(&img).expect("extraction succeeds");
    for (name, value) in feature_names().iter().zip(&features.values) {
        println!("{name:<42} {value:>14.4}");
    }
}
