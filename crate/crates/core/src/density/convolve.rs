use std::cell::RefCell;
use std::cmp::Ordering;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::grid::GridDensity;
use crate::error::{Error, Result};

/// FFT outputs below this fraction of the peak are treated as round-off and zeroed.
const FFT_NOISE_FLOOR: f64 = 1e-14;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Which algorithm [`convolve_sequences`] should use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvolutionMethod {
    Auto,
    Direct,
    Fft,
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

fn direct(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len() + b.len() - 1;
    let mut out = vec![0.0; n];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (o, &y) in out[i..i + b.len()].iter_mut().zip(b) {
            *o += x * y;
        }
    }
    out
}

/// Linear convolution of two real sequences packed into one complex transform.
fn fft(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n_out = a.len() + b.len() - 1;
    let n = (a.len() + b.len()).next_power_of_two();
    let (forward, inverse) = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(n), p.plan_fft_inverse(n))
    });
    let mut z = vec![Complex64::new(0.0, 0.0); n];
    for (zi, &x) in z.iter_mut().zip(a) {
        zi.re = x;
    }
    for (zi, &y) in z.iter_mut().zip(b) {
        zi.im = y;
    }
    forward.process(&mut z);
    // A_k = (Z_k + conj Z_{n-k}) / 2, B_k = (Z_k - conj Z_{n-k}) / 2i
    let mut prod = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n {
        let zk = z[k];
        let zc = z[(n - k) % n].conj();
        let ak = (zk + zc) * 0.5;
        let bk = (zk - zc) * Complex64::new(0.0, -0.5);
        prod[k] = ak * bk;
    }
    inverse.process(&mut prod);
    let scale = 1.0 / n as f64;
    let mut out: Vec<f64> = prod[..n_out].iter().map(|c| c.re * scale).collect();
    let peak = out.iter().copied().fold(0.0, f64::max);
    let floor = FFT_NOISE_FLOOR * peak;
    for v in &mut out {
        if *v < floor {
            *v = 0.0;
        }
    }
    out
}

fn prefer_direct(a: usize, b: usize) -> bool {
    let n = (a + b).next_power_of_two() as f64;
    (a.min(b) as f64) * (a.max(b) as f64) <= 10.0 * n * n.log2()
}

/// Linear convolution `c_j = sum_i a_i b_{j-i}` of two nonnegative sequences.
///
/// Operands are put in a canonical order first, so the result does not depend
/// on argument order.
pub fn convolve_sequences(a: &[f64], b: &[f64], method: ConvolutionMethod) -> Vec<f64> {
    assert!(!a.is_empty() && !b.is_empty());
    let (a, b) = if lex_cmp(a, b) == Ordering::Greater {
        (b, a)
    } else {
        (a, b)
    };
    let use_direct = match method {
        ConvolutionMethod::Direct => true,
        ConvolutionMethod::Fft => false,
        ConvolutionMethod::Auto => prefer_direct(a.len(), b.len()),
    };
    if use_direct {
        direct(a, b)
    } else {
        fft(a, b)
    }
}

/// Density of `X + Y` for independent `X ~ f`, `Y ~ g` on a common step.
pub fn convolve(f: &GridDensity, g: &GridDensity) -> Result<GridDensity> {
    convolve_with(f, g, ConvolutionMethod::Auto)
}

pub fn convolve_with(
    f: &GridDensity,
    g: &GridDensity,
    method: ConvolutionMethod,
) -> Result<GridDensity> {
    let (hf, hg) = (f.grid_step(), g.grid_step());
    if (hf - hg).abs() > 1e-12 * hf.max(hg) {
        return Err(Error::GridMismatch(format!(
            "convolution needs equal steps, got {hf} and {hg}"
        )));
    }
    let step = 0.5 * (hf + hg);
    let mut values = convolve_sequences(f.values(), g.values(), method);
    values.iter_mut().for_each(|v| *v *= step);
    let tail = f.tail_mass() + g.tail_mass() - f.tail_mass() * g.tail_mass();
    let mut out =
        GridDensity::from_parts_unchecked(f.grid_start() + g.grid_start(), step, values, tail);
    out.normalize()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_and_fft_agree() {
        let a: Vec<f64> = (0..300)
            .map(|i| ((i as f64) * 0.37).sin().abs() + 0.1)
            .collect();
        let b: Vec<f64> = (0..211)
            .map(|i| (-(i as f64 - 100.0).powi(2) / 500.0).exp())
            .collect();
        let d = convolve_sequences(&a, &b, ConvolutionMethod::Direct);
        let f = convolve_sequences(&a, &b, ConvolutionMethod::Fft);
        let peak = d.iter().copied().fold(0.0, f64::max);
        for (x, y) in d.iter().zip(&f) {
            assert!((x - y).abs() <= 1e-12 * peak);
        }
    }

    #[test]
    fn bernoulli_pair() {
        let c = convolve_sequences(&[0.5, 0.5], &[0.5, 0.5], ConvolutionMethod::Fft);
        assert!(
            (c[0] - 0.25).abs() < 1e-16
                && (c[1] - 0.5).abs() < 1e-16
                && (c[2] - 0.25).abs() < 1e-16
        );
    }

    #[test]
    fn symmetric_bitwise() {
        let a: Vec<f64> = (0..600).map(|i| 1.0 + ((i * 7) % 13) as f64).collect();
        let b: Vec<f64> = (0..600).map(|i| 1.0 + ((i * 5) % 11) as f64).collect();
        assert_eq!(
            convolve_sequences(&a, &b, ConvolutionMethod::Fft),
            convolve_sequences(&b, &a, ConvolutionMethod::Fft)
        );
    }

    #[test]
    fn step_mismatch_is_an_error() {
        let f = GridDensity::new(0.0, 0.1, vec![1.0; 10]).unwrap();
        let g = GridDensity::new(0.0, 0.1 + 1e-9, vec![1.0; 10]).unwrap();
        assert!(matches!(convolve(&f, &g), Err(Error::GridMismatch(_))));
    }
}
