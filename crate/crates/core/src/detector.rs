//! Pilot cancellation, LMMSE equalization, hard demapping and BER scoring.

use faer::linalg::solvers::Solve;
use faer::{Mat, MatRef, Side};

use crate::c64;
use crate::error::{Error, Result};
use crate::lattice::FrameLayout;

/// Gray-labelled unit-energy constellation.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    points: Vec<c64>,
    bits_per_symbol: usize,
}

impl Constellation {
    /// 4-QAM with label `b0 b1` mapped to `((1-2b0) + j(1-2b1))/√2`.
    pub fn qam4() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let points = (0..4)
            .map(|label| {
                let b0 = (label >> 1) & 1;
                let b1 = label & 1;
                c64::new(s * (1.0 - 2.0 * b0 as f64), s * (1.0 - 2.0 * b1 as f64))
            })
            .collect();
        Constellation {
            points,
            bits_per_symbol: 2,
        }
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    /// Points indexed by label, most significant bit first.
    pub fn points(&self) -> &[c64] {
        &self.points
    }

    pub fn label_bits(&self, label: usize) -> Vec<u8> {
        (0..self.bits_per_symbol)
            .map(|i| ((label >> (self.bits_per_symbol - 1 - i)) & 1) as u8)
            .collect()
    }

    pub fn map(&self, bits: &[u8]) -> Result<c64> {
        if bits.len() != self.bits_per_symbol {
            return Err(Error::dim("constellation map", self.bits_per_symbol, bits.len()));
        }
        let mut label = 0usize;
        for &b in bits {
            if b > 1 {
                return Err(Error::param(format!("bit value {b} is not 0 or 1")));
            }
            label = (label << 1) | b as usize;
        }
        Ok(self.points[label])
    }

    /// Nearest point; ties go to the smallest label.
    pub fn decide(&self, z: c64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = (z - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    pub soft: Vec<c64>,
    pub hard: Vec<c64>,
    pub bits: Vec<u8>,
    pub ber: f64,
}

fn mat_vec(h: MatRef<'_, c64>, x: &[c64]) -> Vec<c64> {
    let xv = Mat::from_fn(x.len(), 1, |i, _| x[i]);
    let y = h * &xv;
    (0..y.nrows()).map(|i| y[(i, 0)]).collect()
}

/// Removes the pilot's predicted contribution, `y' = y − H·x_pilot`.
pub fn cancel_pilot(
    y: &[c64],
    h: MatRef<'_, c64>,
    layout: &FrameLayout,
    x_p: c64,
) -> Result<Vec<c64>> {
    let mn = layout.m() * layout.n();
    if y.len() != mn {
        return Err(Error::dim("cancel_pilot y", mn, y.len()));
    }
    if h.nrows() != mn || h.ncols() != mn {
        return Err(Error::dim("cancel_pilot H", mn, h.nrows().max(h.ncols())));
    }
    let col = layout.pilot_index();
    Ok((0..mn).map(|i| y[i] - h[(i, col)] * x_p).collect())
}

/// `x̂_d = E_s H_dᴴ (E_s H_d H_dᴴ + C_n)⁻¹ y'` through a Cholesky solve.
pub fn lmmse_equalize(
    y_prime: &[c64],
    h: MatRef<'_, c64>,
    data_indices: &[usize],
    e_s: f64,
    c_n: MatRef<'_, c64>,
) -> Result<Vec<c64>> {
    let rows = h.nrows();
    if y_prime.len() != rows {
        return Err(Error::dim("lmmse y'", rows, y_prime.len()));
    }
    if c_n.nrows() != rows || c_n.ncols() != rows {
        return Err(Error::dim("lmmse C_n", rows, c_n.nrows()));
    }
    if let Some(&bad) = data_indices.iter().find(|&&i| i >= h.ncols()) {
        return Err(Error::param(format!("data index {bad} out of range")));
    }
    let hd = Mat::from_fn(rows, data_indices.len(), |i, j| h[(i, data_indices[j])]);
    let mut a: Mat<c64> = &hd * hd.adjoint();
    for j in 0..rows {
        for i in 0..rows {
            a[(i, j)] = a[(i, j)] * e_s + c_n[(i, j)];
        }
    }
    let llt = a
        .llt(Side::Lower)
        .map_err(|e| Error::Numeric(format!("LMMSE system not positive definite: {e:?}")))?;
    let rhs = Mat::from_fn(rows, 1, |i, _| y_prime[i]);
    let z = llt.solve(&rhs);
    let x: Mat<c64> = hd.adjoint() * &z;
    Ok((0..x.nrows()).map(|i| x[(i, 0)] * e_s).collect())
}

/// Hard decisions and their bit labels.
pub fn demap(soft: &[c64], constellation: &Constellation) -> (Vec<u8>, Vec<c64>) {
    let mut bits = Vec::with_capacity(soft.len() * constellation.bits_per_symbol());
    let mut hard = Vec::with_capacity(soft.len());
    for &z in soft {
        let label = constellation.decide(z);
        bits.extend(constellation.label_bits(label));
        hard.push(constellation.points()[label]);
    }
    (bits, hard)
}

pub fn bit_error_rate(tx: &[u8], rx: &[u8]) -> Result<f64> {
    if tx.len() != rx.len() {
        return Err(Error::dim("bit_error_rate", tx.len(), rx.len()));
    }
    if tx.is_empty() {
        return Ok(0.0);
    }
    let errors = tx.iter().zip(rx).filter(|(a, b)| a != b).count();
    Ok(errors as f64 / tx.len() as f64)
}

/// Full detection: pilot cancellation, LMMSE, demapping and scoring.
#[allow(clippy::too_many_arguments)]
pub fn detect(
    y: &[c64],
    h: MatRef<'_, c64>,
    layout: &FrameLayout,
    x_p: c64,
    e_s: f64,
    c_n: MatRef<'_, c64>,
    constellation: &Constellation,
    tx_bits: &[u8],
) -> Result<DetectionResult> {
    let y_prime = cancel_pilot(y, h, layout, x_p)?;
    let soft = lmmse_equalize(&y_prime, h, &layout.data_indices(), e_s, c_n)?;
    // data cells carry sqrt(E_s)-scaled points
    let unit: Vec<c64> = soft.iter().map(|z| z / e_s.sqrt()).collect();
    let (bits, hard) = demap(&unit, constellation);
    let ber = bit_error_rate(tx_bits, &bits)?;
    Ok(DetectionResult {
        soft,
        hard,
        bits,
        ber,
    })
}

pub(crate) fn apply(h: MatRef<'_, c64>, x: &[c64]) -> Vec<c64> {
    mat_vec(h, x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qam4_gray_and_energy() {
        let c = Constellation::qam4();
        let e: f64 = c.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / 4.0;
        assert!((e - 1.0).abs() < 1e-15);
        for a in 0..4usize {
            for b in 0..4usize {
                let d = (c.points()[a] - c.points()[b]).norm();
                if (d - 2f64.sqrt()).abs() < 1e-12 {
                    assert_eq!((a ^ b).count_ones(), 1);
                }
            }
        }
    }

    #[test]
    fn demap_tie_and_exact() {
        let c = Constellation::qam4();
        let (bits, _) = demap(&[c64::new(0.0, 0.0)], &c);
        assert_eq!(bits, vec![0, 0]);
        for label in 0..4 {
            let (bits, _) = demap(&[c.points()[label]], &c);
            assert_eq!(bits, c.label_bits(label));
        }
    }

    #[test]
    fn ber_cases() {
        let a = vec![0u8, 1, 1, 0];
        assert_eq!(bit_error_rate(&a, &a).unwrap(), 0.0);
        let b: Vec<u8> = a.iter().map(|x| 1 - x).collect();
        assert_eq!(bit_error_rate(&a, &b).unwrap(), 1.0);
        let mut tx = vec![0u8; 694];
        let rx = tx.clone();
        tx[10] = 1;
        assert!((bit_error_rate(&tx, &rx).unwrap() - 1.0 / 694.0).abs() < 1e-15);
        assert!(bit_error_rate(&a, &a[..2]).is_err());
    }

    #[test]
    fn wiener_shrinkage() {
        let n = 6;
        let h = Mat::<c64>::identity(n, n);
        let s2 = 0.25;
        let cn = Mat::from_fn(n, n, |i, j| if i == j { c64::new(s2, 0.0) } else { c64::new(0.0, 0.0) });
        let y: Vec<c64> = (0..n).map(|i| c64::new(i as f64, 1.0)).collect();
        let idx: Vec<usize> = (0..n).collect();
        let x = lmmse_equalize(&y, h.as_ref(), &idx, 2.0, cn.as_ref()).unwrap();
        for i in 0..n {
            assert!((x[i] - y[i] * (2.0 / 2.25)).norm() < 1e-12);
        }
    }
}
