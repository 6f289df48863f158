//! Summary statistics for repeated runs.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); 0 when undefined.
    pub std: f64,
    /// False when n < 2 and `std` is a placeholder.
    pub std_defined: bool,
}

pub fn summarize(xs: &[f64]) -> Summary {
    let n = xs.len();
    let mean = if n == 0 { 0.0 } else { xs.iter().sum::<f64>() / n as f64 };
    if n < 2 {
        return Summary {
            n,
            mean,
            std: 0.0,
            std_defined: false,
        };
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    Summary {
        n,
        mean,
        std: var.sqrt(),
        std_defined: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_std_by_hand() {
        // mean 0.8, squared deviations 0.01 + 0 + 0.01, over n - 1 = 2
        let s = summarize(&[0.7, 0.8, 0.9]);
        assert!((s.mean - 0.8).abs() < 1e-12);
        assert!((s.std - 0.1).abs() < 1e-12);
        assert!(s.std_defined);
        let one = summarize(&[0.5]);
        assert_eq!((one.mean, one.std, one.std_defined), (0.5, 0.0, false));
    }
}
