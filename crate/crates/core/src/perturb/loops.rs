//! Loop and path combinatorics on the quotient multigraph.
//!
//! The hopping matrix `B(z)` defines a directed multigraph on the
//! fundamental cell: every monomial `c·z^k` of `B_{ab}` is an edge
//! `a → b` labeled by its winding vector `k`. The series coefficient
//! `η_n^{(r)}` is a sum over length-`r` loops at `n`, with weight
//! `f(γ,D)` depending only on the visited potential values; for an
//! irreducible loop (no interior visit to `n`) the weight is the
//! explicit product `Π_j (D_n − D_{n_j})^{-1}`. Reducible loops pick up
//! their weights from amalgamating shorter paths with loops. This module
//! reconstructs `η_n^{(r)}` from those rules alone, independently of the
//! recursion in the parent module, for use as an exact cross-check.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::floquet::decompose;
use crate::lattice::LatticeModel;
use crate::laurent::{LaurentPoly, Rat};

/// Default enumeration caps; beyond them the walk count explodes and
/// the oracle loses its purpose.
pub const MAX_LOOP_ORDER: usize = 8;
pub const MAX_LOOP_CELL: usize = 12;

/// One labeled edge of the quotient multigraph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub to: usize,
    pub winding: Vec<i64>,
    pub coeff: Rat,
}

/// Adjacency-list multigraph built from the hopping matrix.
#[derive(Clone, Debug)]
pub struct QuotientGraph {
    edges: Vec<Vec<Edge>>,
}

impl QuotientGraph {
    pub fn build(model: &LatticeModel) -> Result<Self> {
        let dec = decompose(model)?;
        let b = &dec.hopping;
        let p_count = b.dim();
        let mut edges = vec![Vec::new(); p_count];
        for a in 0..p_count {
            for to in 0..p_count {
                for (k, c) in b.at(a, to).terms() {
                    debug_assert!(c.is_real(), "hopping coefficients are real");
                    edges[a].push(Edge {
                        to,
                        winding: k.clone(),
                        coeff: c.re.clone(),
                    });
                }
            }
        }
        Ok(QuotientGraph { edges })
    }

    pub fn edges_from(&self, v: usize) -> &[Edge] {
        &self.edges[v]
    }

    /// Vertices `a` with at least one edge `a → b`.
    fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges[a].iter().any(|e| e.to == b)
    }
}

/// A walk on the multigraph with one concrete edge choice per step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoopRecord {
    /// Visited vertices `(n₀, …, n_ℓ)`.
    pub vertices: Vec<usize>,
    /// Net winding `Σ k` over the chosen edges.
    pub winding: Vec<i64>,
    /// Product of the chosen edge coefficients (the scalar part of `B_γ`).
    pub coeff: Rat,
    /// No interior vertex equals the endpoint.
    pub irreducible: bool,
    /// `f(γ,D)` for irreducible loops, from the explicit product formula.
    pub weight: Option<Rat>,
}

/// All length-`r` loops at cell offset `n`, one record per edge choice.
pub fn enumerate_loops(model: &LatticeModel, n: usize, r: usize) -> Result<Vec<LoopRecord>> {
    if r == 0 {
        return Err(Error::InvalidParameter("loop length must be ≥ 1".into()));
    }
    if r > MAX_LOOP_ORDER || model.cell_size() > MAX_LOOP_CELL {
        return Err(Error::CombinatorialBlowup(format!(
            "loop enumeration capped at r ≤ {MAX_LOOP_ORDER}, P ≤ {MAX_LOOP_CELL}"
        )));
    }
    let graph = QuotientGraph::build(model)?;
    let d = model.dims();
    let mut out = Vec::new();
    let mut vertices = vec![n];
    let mut winding = vec![0i64; d];
    let mut coeff = Rat::from_integer(1.into());
    dfs_loops(
        model, &graph, n, r, &mut vertices, &mut winding, &mut coeff, &mut out,
    );
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn dfs_loops(
    model: &LatticeModel,
    graph: &QuotientGraph,
    target: usize,
    remaining: usize,
    vertices: &mut Vec<usize>,
    winding: &mut Vec<i64>,
    coeff: &mut Rat,
    out: &mut Vec<LoopRecord>,
) {
    let here = *vertices.last().expect("non-empty walk");
    if remaining == 0 {
        if here != target {
            return;
        }
        let irreducible = !vertices[1..vertices.len() - 1].contains(&target);
        let weight = irreducible.then(|| {
            let mut f = Rat::from_integer(1.into());
            for &v in &vertices[1..vertices.len() - 1] {
                f *= (model.potential(target) - model.potential(v)).recip();
            }
            f
        });
        out.push(LoopRecord {
            vertices: vertices.clone(),
            winding: winding.clone(),
            coeff: coeff.clone(),
            irreducible,
            weight,
        });
        return;
    }
    for edge in graph.edges_from(here) {
        vertices.push(edge.to);
        for (w, k) in winding.iter_mut().zip(&edge.winding) {
            *w += k;
        }
        let saved = coeff.clone();
        *coeff *= &edge.coeff;
        dfs_loops(model, graph, target, remaining - 1, vertices, winding, coeff, out);
        *coeff = saved;
        for (w, k) in winding.iter_mut().zip(&edge.winding) {
            *w -= k;
        }
        vertices.pop();
    }
}

/// Weighted vertex-sequence tables: key is the full visited sequence,
/// value the accumulated rational weight.
type SeqTable = BTreeMap<Vec<usize>, Rat>;

fn add_weight(table: &mut SeqTable, seq: Vec<usize>, w: Rat) {
    let entry = table.entry(seq).or_insert_with(|| Rat::from_integer(0.into()));
    *entry += w;
    if entry.numer().bits() == 0 {
        // keep tables free of exact zeros
        let key: Vec<usize> = table
            .iter()
            .find(|(_, v)| v.numer().bits() == 0)
            .map(|(k, _)| k.clone())
            .expect("just inserted");
        table.remove(&key);
    }
}

/// Reconstruct `η_n^{(r)}` purely from path/loop weights and symbolic
/// edge products, by the amalgamation rules:
///
/// * length-1 paths `m → n` carry `g = 1/(D_n − D_m)`;
/// * prefixing an edge `m → m₁` divides by `(D_n − D_m)`;
/// * splicing a loop at `n` of length `s` onto a path of length `r−s`
///   contributes with weight `−f·g/(D_n − D_m)`;
/// * a loop is an edge `n → m` amalgamated with a path `m → n`, its
///   weight being the path weight.
pub fn eta_from_loops(model: &LatticeModel, n: usize, r: usize) -> Result<LaurentPoly> {
    if r > MAX_LOOP_ORDER || model.cell_size() > MAX_LOOP_CELL {
        return Err(Error::CombinatorialBlowup(format!(
            "loop reconstruction capped at r ≤ {MAX_LOOP_ORDER}, P ≤ {MAX_LOOP_CELL}"
        )));
    }
    let d = model.dims();
    if r == 0 {
        return Ok(LaurentPoly::constant_rat(d, model.potential(n).clone()));
    }
    if r == 1 {
        // B_{nn} = 0: no loops of length 1
        return Ok(LaurentPoly::zero(d));
    }
    let graph = QuotientGraph::build(model)?;
    let dec = decompose(model)?;
    let b = &dec.hopping;
    let p_count = model.cell_size();

    // paths[ℓ] maps vertex sequences (length ℓ+1, ending at n, starting
    // off n) to g-weights; loops[s] likewise for loops at n.
    let mut paths: Vec<SeqTable> = vec![SeqTable::new(); r];
    let mut loops: Vec<SeqTable> = vec![SeqTable::new(); r + 1];

    for m in 0..p_count {
        if m != n && graph.has_edge(m, n) {
            let g = (model.potential(n) - model.potential(m)).recip();
            add_weight(&mut paths[1], vec![m, n], g);
        }
    }

    for len in 2..=r {
        // loops of length `len`: edge n → m amalgamated with a path of
        // length len−1 from m
        let prev: Vec<(Vec<usize>, Rat)> = paths[len - 1]
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        for (seq, g) in &prev {
            let m = seq[0];
            if graph.has_edge(n, m) {
                let mut loop_seq = Vec::with_capacity(seq.len() + 1);
                loop_seq.push(n);
                loop_seq.extend_from_slice(seq);
                add_weight(&mut loops[len], loop_seq, g.clone());
            }
        }
        if len == r {
            break;
        }
        // paths of length `len`
        let mut next = SeqTable::new();
        for (seq, g) in &prev {
            let m1 = seq[0];
            for m in 0..p_count {
                if m == n || !graph.has_edge(m, m1) {
                    continue;
                }
                let denom = (model.potential(n) - model.potential(m)).recip();
                let mut new_seq = Vec::with_capacity(seq.len() + 1);
                new_seq.push(m);
                new_seq.extend_from_slice(seq);
                add_weight(&mut next, new_seq, g * &denom);
            }
        }
        for s in 2..len {
            let tail_len = len - s;
            let loop_entries: Vec<(Vec<usize>, Rat)> = loops[s]
                .iter()
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect();
            for (path_seq, g) in paths[tail_len].iter() {
                let m = path_seq[0];
                let denom = (model.potential(n) - model.potential(m)).recip();
                for (loop_seq, f) in &loop_entries {
                    let mut new_seq = Vec::with_capacity(path_seq.len() + loop_seq.len() - 1);
                    new_seq.extend_from_slice(path_seq);
                    new_seq.extend_from_slice(&loop_seq[1..]);
                    add_weight(&mut next, new_seq, -(f * g * &denom));
                }
            }
        }
        paths[len] = next;
    }

    // assemble η from the loop table: Σ f(γ,D) · B_γ with the symbolic
    // edge products taken entry-wise
    let mut eta = LaurentPoly::zero(d);
    for (seq, f) in loops[r].iter() {
        let mut prod = LaurentPoly::one(d);
        for step in seq.windows(2) {
            prod = prod.mul(b.at(step[0], step[1]))?;
        }
        eta = eta.add(&prod.scale(f))?;
    }
    Ok(eta)
}
