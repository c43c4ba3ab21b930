//! First-order intensity statistics over the masked pixel set.

use super::{ForegroundMask, GrayscaleTile};
use crate::error::{Error, Result};

pub const FIRST_ORDER_NAMES: [&str; 19] = [
    "firstorder_Energy",
    "firstorder_TotalEnergy",
    "firstorder_Entropy",
    "firstorder_Minimum",
    "firstorder_10Percentile",
    "firstorder_90Percentile",
    "firstorder_Maximum",
    "firstorder_Mean",
    "firstorder_Median",
    "firstorder_InterquartileRange",
    "firstorder_Range",
    "firstorder_MeanAbsoluteDeviation",
    "firstorder_RobustMeanAbsoluteDeviation",
    "firstorder_RootMeanSquared",
    "firstorder_StandardDeviation",
    "firstorder_Skewness",
    "firstorder_Kurtosis",
    "firstorder_Variance",
    "firstorder_Uniformity",
];

/// Histogram bin width for Entropy and Uniformity.
pub const BIN_WIDTH: f64 = 25.0;

/// Variance below this is treated as zero for Skewness/Kurtosis.
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// Linear-interpolation percentile on an already sorted slice
/// (rank `q/100 * (n-1)`, interpolated between neighbors).
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let rank = q / 100.0 * (n - 1) as f64;
    let lo = rank.floor() as usize;
    let frac = rank - lo as f64;
    if lo + 1 >= n {
        sorted[n - 1]
    } else {
        sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac
    }
}

/// Computes the 19 first-order features over the mask. Values come back in
/// [`FIRST_ORDER_NAMES`] order.
pub fn first_order_features(gray: &GrayscaleTile, mask: &ForegroundMask) -> Result<Vec<f64>> {
    if gray.pixels.shape() != mask.mask.shape() {
        return Err(Error::Shape(format!(
            "tile {:?} vs mask {:?}",
            gray.pixels.shape(),
            mask.mask.shape()
        )));
    }
    let values: Vec<f64> = gray
        .pixels
        .iter()
        .zip(mask.mask.iter())
        .filter_map(|(&v, &m)| if m { Some(v) } else { None })
        .collect();
    if values.is_empty() {
        return Err(Error::EmptyMask);
    }
    let n = values.len() as f64;

    let mut sorted = values.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let minimum = sorted[0];
    let maximum = sorted[sorted.len() - 1];
    let p10 = percentile_sorted(&sorted, 10.0);
    let p25 = percentile_sorted(&sorted, 25.0);
    let p75 = percentile_sorted(&sorted, 75.0);
    let p90 = percentile_sorted(&sorted, 90.0);
    let median = percentile_sorted(&sorted, 50.0);

    let sum: f64 = values.iter().sum();
    let mean = sum / n;
    let energy: f64 = values.iter().map(|v| v * v).sum();
    let total_energy = gray.spacing * gray.spacing * energy;
    let rms = (energy / n).sqrt();

    let m2: f64 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m3: f64 = values.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
    let m4: f64 = values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    let variance = m2;
    let std_dev = variance.sqrt();
    let (skewness, kurtosis) = if variance < VARIANCE_FLOOR {
        (0.0, 0.0)
    } else {
        (m3 / variance.powf(1.5), m4 / (variance * variance))
    };

    let mad = values.iter().map(|v| (v - mean).abs()).sum::<f64>() / n;

    // robust MAD: restricted to values within [P10, P90], deviations taken
    // from the mean of that subset
    let robust: Vec<f64> = values
        .iter()
        .copied()
        .filter(|&v| v >= p10 && v <= p90)
        .collect();
    let rmad = if robust.is_empty() {
        0.0
    } else {
        let rmean = robust.iter().sum::<f64>() / robust.len() as f64;
        robust.iter().map(|v| (v - rmean).abs()).sum::<f64>() / robust.len() as f64
    };

    // fixed-width histogram (bin = floor(v / BIN_WIDTH)); zero bins skipped
    let mut counts = std::collections::BTreeMap::new();
    for &v in &values {
        *counts.entry((v / BIN_WIDTH).floor() as i64).or_insert(0u64) += 1;
    }
    let mut entropy = 0.0;
    let mut uniformity = 0.0;
    for &c in counts.values() {
        let p = c as f64 / n;
        entropy -= p * p.log2();
        uniformity += p * p;
    }

    Ok(vec![
        energy,
        total_energy,
        entropy,
        minimum,
        p10,
        p90,
        maximum,
        mean,
        median,
        p75 - p25,
        maximum - minimum,
        mad,
        rmad,
        rms,
        std_dev,
        skewness,
        kurtosis,
        variance,
        uniformity,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn features_of(values: Array2<f64>) -> Vec<f64> {
        let mask = ForegroundMask {
            mask: Array2::from_elem(values.raw_dim(), true),
        };
        let gray = GrayscaleTile::new(values).unwrap();
        first_order_features(&gray, &mask).unwrap()
    }

    fn get(features: &[f64], name: &str) -> f64 {
        let idx = FIRST_ORDER_NAMES.iter().position(|&n| n == name).unwrap();
        features[idx]
    }

    #[test]
    fn constant_tile_closed_forms() {
        let f = features_of(Array2::from_elem((5, 5), 7.0));
        assert!((get(&f, "firstorder_Mean") - 7.0).abs() < 1e-12);
        assert!(get(&f, "firstorder_Variance").abs() < 1e-12);
        assert!(get(&f, "firstorder_Entropy").abs() < 1e-12);
        assert!((get(&f, "firstorder_Uniformity") - 1.0).abs() < 1e-12);
        assert!(get(&f, "firstorder_Skewness").abs() < 1e-12);
        assert!(get(&f, "firstorder_Kurtosis").abs() < 1e-12);
    }

    #[test]
    fn two_pixel_hand_computation() {
        let values = Array2::from_shape_vec((1, 2), vec![0.0, 100.0]).unwrap();
        let f = features_of(values);
        assert!((get(&f, "firstorder_Mean") - 50.0).abs() < 1e-12);
        assert!((get(&f, "firstorder_Variance") - 2500.0).abs() < 1e-12);
        assert!((get(&f, "firstorder_Range") - 100.0).abs() < 1e-12);
        assert!((get(&f, "firstorder_RootMeanSquared") - 70.71067811865476).abs() < 1e-9);
    }

    #[test]
    fn empty_mask_is_an_error() {
        let gray = GrayscaleTile::new(Array2::from_elem((3, 3), 1.0)).unwrap();
        let mask = ForegroundMask {
            mask: Array2::from_elem((3, 3), false),
        };
        assert!(matches!(
            first_order_features(&gray, &mask),
            Err(Error::EmptyMask)
        ));
    }

    #[test]
    fn percentile_interpolation() {
        let sorted = [1.0, 2.0, 3.0, 4.0];
        assert!((percentile_sorted(&sorted, 50.0) - 2.5).abs() < 1e-12);
        assert!((percentile_sorted(&sorted, 0.0) - 1.0).abs() < 1e-12);
        assert!((percentile_sorted(&sorted, 100.0) - 4.0).abs() < 1e-12);
        assert!((percentile_sorted(&sorted, 25.0) - 1.75).abs() < 1e-12);
    }

    #[test]
    fn variance_identity_mean_of_squares() {
        let values =
            Array2::from_shape_vec((1, 6), vec![3.0, 17.0, 44.0, 9.0, 220.0, 131.0]).unwrap();
        let f = features_of(values.clone());
        let n = 6.0;
        let mean = values.iter().sum::<f64>() / n;
        let mean_sq = values.iter().map(|v| v * v).sum::<f64>() / n;
        let expected = mean_sq - mean * mean;
        let got = get(&f, "firstorder_Variance");
        assert!((got - expected).abs() / expected < 1e-12);
    }
}
