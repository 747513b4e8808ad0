use std::io::{self, BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: usize,
}

/// Two unit-variance Gaussian blobs centred at (-2, 0) (label 0) and (2, 0)
/// (label 1). Labels alternate, so any prefix is balanced to within one.
pub fn two_blobs(count: usize, seed: u64) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let label = i % 2;
            let cx = if label == 0 { -2.0 } else { 2.0 };
            let x = cx + rng.sample::<f64, _>(StandardNormal);
            let y = rng.sample::<f64, _>(StandardNormal);
            Sample {
                features: vec![x, y],
                label,
            }
        })
        .collect()
}

/// One sample per line: features then the integer label, space separated.
pub fn write_dataset<W: Write>(mut out: W, samples: &[Sample]) -> io::Result<()> {
    for s in samples {
        for f in &s.features {
            write!(out, "{f} ")?;
        }
        writeln!(out, "{}", s.label)?;
    }
    Ok(())
}

/// Reads the format produced by [`write_dataset`]. Blank lines and lines
/// starting with `#` are skipped. All samples must have the same number of
/// features.
pub fn read_dataset<R: BufRead>(input: R) -> Result<Vec<Sample>> {
    let mut samples: Vec<Sample> = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::invalid(format!("reading dataset: {e}")))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let bad = |what: &str| Error::invalid(format!("dataset line {}: {what}", lineno + 1));
        let (label, features) = fields.split_last().ok_or_else(|| bad("empty"))?;
        if features.is_empty() {
            return Err(bad("no features"));
        }
        let label: usize = label.parse().map_err(|_| bad("label is not a non-negative integer"))?;
        let features = features
            .iter()
            .map(|f| f.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| bad("feature is not a finite number"))?;
        if let Some(first) = samples.first() {
            if first.features.len() != features.len() {
                return Err(bad("feature count differs from the first sample"));
            }
        }
        samples.push(Sample { features, label });
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn blobs_are_balanced_and_centred() {
        let data = two_blobs(500, 1);
        assert_eq!(data.len(), 500);
        assert_eq!(data.iter().filter(|s| s.label == 1).count(), 250);
        let mean_x1: f64 = data.iter().filter(|s| s.label == 1).map(|s| s.features[0]).sum::<f64>() / 250.0;
        assert!((mean_x1 - 2.0).abs() < 0.2, "{mean_x1}");
        assert_eq!(data, two_blobs(500, 1));
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(read_dataset("1.0 2.0 x\n".as_bytes()).is_err());
        assert!(read_dataset("1\n".as_bytes()).is_err());
        assert!(read_dataset("1.0 nan 0\n".as_bytes()).is_err());
        assert!(read_dataset("1.0 2.0 0\n1.0 1\n".as_bytes()).is_err());
        let ok = read_dataset("# header\n\n1.5 -2 1\n".as_bytes()).unwrap();
        assert_eq!(ok, vec![Sample { features: vec![1.5, -2.0], label: 1 }]);
    }

    proptest! {
        #[test]
        fn text_format_round_trips(count in 1usize..40, seed in any::<u64>()) {
            let data = two_blobs(count, seed);
            let mut buf = Vec::new();
            write_dataset(&mut buf, &data).unwrap();
            prop_assert_eq!(read_dataset(buf.as_slice()).unwrap(), data);
        }
    }
}
