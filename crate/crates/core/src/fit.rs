//! Least-squares fitting helpers shared by the sweep and light-cone
//! analyses.

use crate::error::{Error, Result};

/// Ordinary least squares `y ≈ slope·x + intercept`.
#[derive(Clone, Copy, Debug)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InsufficientPoints {
            need: 2,
            got: xs.len().min(ys.len()),
        });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientPoints {
            need: 2,
            got: 1,
        });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - (slope * x + intercept);
            e * e
        })
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(LinearFit {
        slope,
        intercept,
        r2,
    })
}

/// Power law `y ≈ amplitude · x^exponent` by least squares in log-log
/// coordinates. All data must be strictly positive.
#[derive(Clone, Copy, Debug)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub log_amplitude: f64,
    pub amplitude: f64,
    pub r2: f64,
}

pub fn power_law_fit(xs: &[f64], ys: &[f64]) -> Result<PowerLawFit> {
    if xs.iter().any(|&x| x <= 0.0) || ys.iter().any(|&y| y <= 0.0) {
        return Err(Error::InvalidParameter(
            "power-law fit needs positive data".into(),
        ));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let f = linear_fit(&lx, &ly)?;
    Ok(PowerLawFit {
        exponent: f.slope,
        log_amplitude: f.intercept,
        amplitude: f.intercept.exp(),
        r2: f.r2,
    })
}

/// Smallest affine upper envelope `w ≤ intercept + slope·u` of a point
/// cloud, choosing the upper-convex-hull edge whose `u`-range contains
/// the mean abscissa (the LP solution minimizing the bound's average
/// height). Returns `(intercept, slope)`. Degenerate clouds (single
/// abscissa) get slope 0.
pub fn upper_envelope(us: &[f64], ws: &[f64]) -> Result<(f64, f64)> {
    if us.is_empty() || us.len() != ws.len() {
        return Err(Error::InsufficientPoints {
            need: 1,
            got: us.len().min(ws.len()),
        });
    }
    // collapse duplicate abscissas to their max ordinate
    let mut pts: Vec<(f64, f64)> = Vec::new();
    let mut order: Vec<usize> = (0..us.len()).collect();
    order.sort_by(|&i, &j| us[i].total_cmp(&us[j]));
    for &i in &order {
        match pts.last_mut() {
            Some((u, w)) if *u == us[i] => *w = w.max(ws[i]),
            _ => pts.push((us[i], ws[i])),
        }
    }
    if pts.len() == 1 {
        return Ok((pts[0].1, 0.0));
    }
    // upper convex hull, left to right
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for &p in &pts {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    if hull.len() == 1 {
        return Ok((hull[0].1, 0.0));
    }
    let mean_u = us.iter().sum::<f64>() / us.len() as f64;
    let (a, b) = hull
        .windows(2)
        .find(|e| e[0].0 <= mean_u && mean_u <= e[1].0)
        .map(|e| (e[0], e[1]))
        .unwrap_or((hull[hull.len() - 2], hull[hull.len() - 1]));
    let slope = if b.0 == a.0 {
        0.0
    } else {
        (b.1 - a.1) / (b.0 - a.0)
    };
    let intercept = a.1 - slope * a.0;
    Ok((intercept, slope))
}
