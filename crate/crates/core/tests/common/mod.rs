//! Shared test oracles, independent of the library's propagator paths.

#![allow(dead_code)]

/// Bessel function of the first kind `J_n(x)` by Miller's downward
/// recurrence with the `J_0 + 2ΣJ_{2k} = 1` normalization. Plenty for
/// the moderate arguments the free-propagator checks use.
pub fn bessel_j(n: i64, x: f64) -> f64 {
    let n_abs = n.unsigned_abs() as usize;
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let start = (n_abs + 20 + (1.5 * x.abs()) as usize).max(40);
    let mut jp = 0.0f64; // J_{k+1}
    let mut j = 1e-300f64; // J_k seed
    let mut result = 0.0f64;
    let mut norm = 0.0f64;
    for k in (0..=start).rev() {
        let jm = 2.0 * (k as f64 + 1.0) / x * j - jp; // J_k from J_{k+1}, J_{k+2}
        jp = j;
        j = jm;
        // after the step, jp holds J_{k+1}
        if k + 1 == n_abs {
            result = jp;
        }
        if (k + 1) % 2 == 0 {
            norm += 2.0 * jp;
        }
        // rescale to avoid overflow
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp *= 1e-250;
            result *= 1e-250;
            norm *= 1e-250;
        }
    }
    if n_abs == 0 {
        result = j;
    }
    norm += j;
    let value = result / norm;
    if n < 0 && n_abs % 2 == 1 {
        -value
    } else {
        value
    }
}

/// Free-lattice amplitude `⟨δ_n, e^{−itΔ} δ_0⟩ = (−i)^{|n|} J_{|n|}(2t)`.
pub fn free_amplitude(n: i64, t: f64) -> (f64, f64) {
    let j = bessel_j(n.abs(), 2.0 * t);
    // (−i)^k cycles 1, −i, −1, i
    match n.unsigned_abs() % 4 {
        0 => (j, 0.0),
        1 => (0.0, -j),
        2 => (-j, 0.0),
        _ => (0.0, j),
    }
}

pub fn fixture_free() -> blochlab_core::lattice::LatticeModel {
    blochlab_core::lattice::LatticeModel::from_integers(1, &[1], &[0]).unwrap()
}

pub fn fixture_m1() -> blochlab_core::lattice::LatticeModel {
    blochlab_core::lattice::LatticeModel::from_integers(1, &[2], &[0, 1]).unwrap()
}

pub fn fixture_m2() -> blochlab_core::lattice::LatticeModel {
    blochlab_core::lattice::LatticeModel::from_integers(1, &[3], &[0, 1, 2]).unwrap()
}

pub fn fixture_m3() -> blochlab_core::lattice::LatticeModel {
    blochlab_core::lattice::LatticeModel::from_integers(2, &[1, 2], &[0, 1]).unwrap()
}

pub fn fixture_m4() -> blochlab_core::lattice::LatticeModel {
    blochlab_core::lattice::LatticeModel::from_integers(2, &[2, 3], &[0, 1, 2, 3, 4, 5]).unwrap()
}
