//! Walsh functions and Walsh wave packets, evaluated exactly.
//!
//! W_n is the product of Rademacher signs selected by the binary digits of
//! n. On a dyadic cell of [0,1) the value is (−1)^{popcount(n & rev(i))},
//! where i is the cell index and rev reverses its binary digits — the k-th
//! digit of n pairs with the (k+1)-th binary digit of the point. The digit
//! convention is pinned by the trigonometric sign oracle in the tests, not
//! assumed.

use crate::dyadic::StepFunction;
use crate::error::{Error, Result};
use crate::plane::Tile;
use crate::scalar::ExactScalar;

/// Number of binary digits of n: the smallest µ with n < 2^µ.
pub fn bits_for(n: u64) -> u32 {
    64 - n.leading_zeros()
}

fn reverse_low_bits(x: u64, m: u32) -> u64 {
    if m == 0 {
        0
    } else {
        x.reverse_bits() >> (64 - m)
    }
}

/// The sign of W_n on the cell [i·2^{-m}, (i+1)·2^{-m}) of [0,1).
///
/// Fails if the cell is too coarse for W_n to be constant on it, i.e. if
/// n ≥ 2^m.
pub fn walsh_sign(n: u64, m: u32, cell: u64) -> Result<i32> {
    if m >= 64 || (m < 64 && n >= (1u64 << m)) {
        return Err(Error::CellTooCoarse { index: n, scale: -(m as i32) });
    }
    if cell >= (1u64 << m) {
        return Err(Error::Parse(format!("cell index {cell} outside [0, 2^{m})")));
    }
    let parity = (n & reverse_low_bits(cell, m)).count_ones() & 1;
    Ok(if parity == 0 { 1 } else { -1 })
}

/// W_n on [0,1) materialized on the grid of 2^m cells.
pub fn walsh_step(n: u64, m: u32) -> Result<StepFunction> {
    let cells = (0..(1u64 << m))
        .map(|i| Ok((i, ExactScalar::from_int(walsh_sign(n, m, i)? as i64))))
        .collect::<Result<Vec<_>>>()?;
    Ok(StepFunction::from_cells(-(m as i32), cells))
}

/// The Walsh index n_s = |I_s|·ℓ(ω_s) of a tile; with the scale convention
/// here this is just the frequency position.
pub fn tile_index(s: &Tile) -> u64 {
    s.freq.pos
}

/// The wave packet w_s, materialized on its minimal constancy grid. Cell
/// values are ±2^{-k/2} for |I_s| = 2^k, so ‖w_s‖₂ = 1 exactly.
pub fn wave_packet(s: &Tile) -> StepFunction {
    let n = tile_index(s);
    let mu = bits_for(n);
    let k = s.space.scale;
    let norm = ExactScalar::two_pow_half(-(k as i64));
    let base = s.space.pos << mu;
    let cells = (0..(1u64 << mu)).map(|i| {
        let sign = walsh_sign(n, mu, i).expect("constancy grid is fine enough");
        let v = if sign > 0 { norm.clone() } else { -norm.clone() };
        (base + i, v)
    });
    StepFunction::from_cells(k - mu as i32, cells)
}

/// The wave packet on a caller-specified (finer) grid.
pub fn wave_packet_at(s: &Tile, scale: i32) -> StepFunction {
    let w = wave_packet(s);
    if scale < w.cell_scale() {
        w.refine_to(scale)
    } else {
        w
    }
}

/// ⟨f, w_s⟩ computed by folding Walsh signs over the cells of f, without
/// materializing w_s.
///
/// A cell of f inside I_s of relative dyadic depth t meets w_s in a full
/// dyadic block; the integral of W_n over such a block vanishes unless
/// n < 2^t, in which case W_n is constant on it. So every cell of f
/// contributes in O(1).
pub fn packet_coeff(f: &StepFunction, s: &Tile) -> ExactScalar {
    let n = tile_index(s);
    let k = s.space.scale;
    if f.cell_scale() >= k {
        // one cell of f covers all of I_s; only W_0 has nonzero mean
        if n != 0 {
            return ExactScalar::zero();
        }
        let anc = match s.space.ancestor_at(f.cell_scale()) {
            Some(a) => a,
            None => unreachable!(),
        };
        let v = f.value_at_cell(anc.pos);
        // ∫_{I_s} w_s = 2^k · 2^{-k/2} = 2^{k/2}
        return v * ExactScalar::two_pow_half(k as i64);
    }
    let t = (k - f.cell_scale()) as u32;
    assert!(t < 64, "scale gap too large");
    if n >= (1u64 << t) {
        // f's cells are all too coarse for W_n to have nonzero mean on them
        // only if t < bits_for(n); here each individual cell integrates to 0
        return ExactScalar::zero();
    }
    let base = s.space.pos << t;
    let mut acc = ExactScalar::zero();
    for (pos, v) in f.cells_in(&s.space) {
        let i = pos - base;
        let sign = walsh_sign(n, t, i).expect("n < 2^t checked above");
        if sign > 0 {
            acc += v;
        } else {
            acc -= v.clone();
        }
    }
    let weight = ExactScalar::two_pow(f.cell_scale());
    acc.scale(&weight) * ExactScalar::two_pow_half(-(k as i64))
}
