//! Bad-disc detection and lattice winding numbers.
//!
//! The far set `{dist(u, Γ) > δ2}` is covered by a maximal packing of
//! disjoint λε/4-discs inflated to λε; degrees come from winding the
//! projected phase around each disc boundary; discs closer than 4λε merge
//! into clusters. The multiplier λ starts from the measured gradient bound
//! `2 δ2 / (ε max|∇u|)` and grows geometrically until every winding loop
//! clears the far-from-curve region — on a grid the analytic choice is not
//! always loop-admissible.

use crate::curve::PlanarCurve;
use crate::error::AnalysisError;
use crate::field::FieldR2;
use crate::scalar::Scalar;
use crate::vec2::Vec2;
use serde::Serialize;

/// One elementary bad disc.
#[derive(Clone, Debug, Serialize)]
pub struct VortexDisc<S> {
    pub center: Vec2<S>,
    pub radius: S,
    pub degree: i32,
    /// dist(u, Γ) at the center node.
    pub depth: S,
}

/// Discs merged while closer than the merge radius 4λε.
#[derive(Clone, Debug, Serialize)]
pub struct VortexCluster<S> {
    /// Center of the deepest member disc.
    pub center: Vec2<S>,
    pub total_degree: i32,
    pub members: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VortexSet<S> {
    pub discs: Vec<VortexDisc<S>>,
    pub clusters: Vec<VortexCluster<S>>,
    pub lambda: S,
    pub eps: S,
    pub delta2: S,
}

impl<S: Scalar> VortexSet<S> {
    pub fn empty(eps: S, delta2: S, lambda: S) -> Self {
        Self {
            discs: Vec::new(),
            clusters: Vec::new(),
            lambda,
            eps,
            delta2,
        }
    }

    pub fn disc_radius(&self) -> S {
        self.lambda * self.eps
    }

    pub fn sum_degrees(&self) -> i32 {
        self.discs.iter().map(|d| d.degree).sum()
    }

    /// `Σ D_j²` over merged clusters.
    pub fn sum_d2(&self) -> i32 {
        self.clusters
            .iter()
            .map(|c| c.total_degree * c.total_degree)
            .sum()
    }

    pub fn in_any_disc(&self, p: Vec2<S>) -> bool {
        let r = self.disc_radius();
        self.discs.iter().any(|d| (p - d.center).norm() < r)
    }
}

/// Exact integer winding of `Π(u)` around an ordered closed node loop.
///
/// Increments of the projected arc-length phase are wrapped to (-π, π], so
/// the sum is an integer multiple of 2π up to roundoff; the result is the
/// rounded integer, with a hard error if the sum is not close to one.
pub fn winding_number<S: Scalar>(
    u: &FieldR2<S>,
    curve: &PlanarCurve<S>,
    loop_nodes: &[usize],
) -> Result<i32, AnalysisError> {
    let grid = u.grid();
    let mut phases = Vec::with_capacity(loop_nodes.len());
    for &idx in loop_nodes {
        let v = u.get(idx);
        match curve.project(v) {
            Ok(tc) => phases.push(tc.s),
            Err(_) => {
                let (i, j) = grid.coords(idx);
                return Err(AnalysisError::LoopFarFromCurve(i, j));
            }
        }
    }
    let mut total = S::zero();
    for k in 0..phases.len() {
        let next = phases[(k + 1) % phases.len()];
        total = total + (next - phases[k]).wrap_pi();
    }
    let turns = total / S::tau();
    let rounded = turns.round();
    if (turns - rounded).abs() > S::lit(1e-4) {
        return Err(AnalysisError::NonIntegerWinding(turns.to_f64()));
    }
    Ok(rounded.to_f64() as i32)
}

/// Closed loop of grid nodes approximating the circle of given center and
/// radius (consecutive duplicates removed).
pub fn circle_loop<S: Scalar>(
    grid: &crate::domain::Grid2D<S>,
    center: Vec2<S>,
    radius: S,
) -> Vec<usize> {
    let m = ((S::tau() * radius / grid.h()).to_f64().ceil() as usize * 2).max(16);
    let mut nodes = Vec::with_capacity(m);
    for k in 0..m {
        let th = S::tau() * S::from_index(k) / S::from_index(m);
        let p = center + Vec2::from_angle(th) * radius;
        let (i, j) = grid.nearest_node(p);
        let idx = grid.idx(i, j);
        if nodes.last() != Some(&idx) {
            nodes.push(idx);
        }
    }
    while nodes.len() > 1 && nodes.first() == nodes.last() {
        nodes.pop();
    }
    nodes
}

/// The boundary-adjacent ring, ordered by boundary angle.
pub fn boundary_loop<S: Scalar>(grid: &crate::domain::Grid2D<S>) -> Vec<usize> {
    grid.cut_nodes().iter().map(|cn| cn.idx as usize).collect()
}

/// Detects bad discs. `lambda` overrides the automatic multiplier.
pub fn bad_discs<S: Scalar>(
    u: &FieldR2<S>,
    curve: &PlanarCurve<S>,
    eps: S,
    delta2: S,
    lambda: Option<S>,
) -> Result<VortexSet<S>, AnalysisError> {
    let grid = u.grid().clone();
    let n = grid.n();
    let h = grid.h();

    // Nodewise distance to the curve, and the far set.
    let mut far: Vec<(usize, S)> = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let idx = grid.idx(i, j);
            if !grid.is_computational(idx) {
                continue;
            }
            let d = curve.distance(u.get(idx));
            if d > delta2 {
                far.push((idx, d));
            }
        }
    }
    if far.is_empty() {
        return Ok(VortexSet::empty(eps, delta2, lambda.unwrap_or(S::zero())));
    }
    far.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());

    let grad_const = (eps * u.max_grad_norm()).max(S::lit(1e-8));
    let lambda_auto = (S::two() * delta2 / grad_const).max(S::lit(3.0) * h / eps);
    let mut lam = lambda.unwrap_or(lambda_auto);
    let wind_threshold = S::lit(0.85) * curve.tube_radius();

    let mut rounds = 0usize;
    loop {
        rounds += 1;
        if rounds > 40 {
            return Err(AnalysisError::DiscInflationFailed(rounds));
        }
        let radius = lam * eps;
        let centers = maximal_packing(&grid, &far, radius * S::half());

        // Coverage of the far set by the inflated discs (maximality makes
        // every far node lie within λε/2 of a center; assert anyway).
        let covered = far.iter().all(|&(idx, _)| {
            let (i, j) = grid.coords(idx);
            let p = grid.point(i, j);
            centers
                .iter()
                .any(|&(cidx, _)| {
                    let (ci, cj) = grid.coords(cidx);
                    (grid.point(ci, cj) - p).norm() <= radius
                })
        });
        if !covered {
            lam = lam * S::lit(1.5);
            continue;
        }

        // Winding loops must stay in the projectable zone.
        let mut admissible = true;
        let mut out_of_domain: Option<(Vec2<S>, S)> = None;
        let mut discs = Vec::with_capacity(centers.len());
        for &(cidx, depth) in &centers {
            let (ci, cj) = grid.coords(cidx);
            let center = grid.point(ci, cj);
            let loop_nodes = circle_loop(&grid, center, radius);
            if loop_nodes.len() < 4 {
                admissible = false;
                break;
            }
            if loop_nodes.iter().any(|&idx| !grid.is_computational(idx)) {
                out_of_domain = Some((center, radius));
                break;
            }
            if loop_nodes
                .iter()
                .any(|&idx| curve.distance(u.get(idx)) > wind_threshold)
            {
                admissible = false;
                break;
            }
            let degree = winding_number(u, curve, &loop_nodes)?;
            discs.push(VortexDisc {
                center,
                radius,
                degree,
                depth,
            });
        }
        if let Some((c, r)) = out_of_domain {
            // Discs reaching the boundary contradict the interior-vortex
            // picture; report rather than silently shrink.
            return Err(AnalysisError::DiscTouchesBoundary {
                x: c.x.to_f64(),
                y: c.y.to_f64(),
                r: r.to_f64(),
            });
        }
        if !admissible {
            lam = lam * S::lit(1.5);
            continue;
        }

        let clusters = merge_clusters(&discs, S::lit(4.0) * radius);
        return Ok(VortexSet {
            discs,
            clusters,
            lambda: lam,
            eps,
            delta2,
        });
    }
}

/// Greedy maximal packing: scan the far set by descending depth, accept a
/// node when it is at least `min_gap` from every accepted center.
fn maximal_packing<S: Scalar>(
    grid: &crate::domain::Grid2D<S>,
    far: &[(usize, S)],
    min_gap: S,
) -> Vec<(usize, S)> {
    let cell = min_gap.max(grid.h());
    let key = |p: Vec2<S>| -> (i64, i64) {
        (
            (p.x / cell).floor().to_f64() as i64,
            (p.y / cell).floor().to_f64() as i64,
        )
    };
    let mut buckets: std::collections::HashMap<(i64, i64), Vec<Vec2<S>>> =
        std::collections::HashMap::new();
    let mut accepted = Vec::new();
    'next: for &(idx, depth) in far {
        let (i, j) = grid.coords(idx);
        let p = grid.point(i, j);
        let (kx, ky) = key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(list) = buckets.get(&(kx + dx, ky + dy)) {
                    if list.iter().any(|&q| (q - p).norm() < min_gap) {
                        continue 'next;
                    }
                }
            }
        }
        buckets.entry((kx, ky)).or_default().push(p);
        accepted.push((idx, depth));
    }
    accepted
}

/// Single-linkage merging of discs closer than `merge_radius`.
fn merge_clusters<S: Scalar>(discs: &[VortexDisc<S>], merge_radius: S) -> Vec<VortexCluster<S>> {
    let k = discs.len();
    let mut parent: Vec<usize> = (0..k).collect();
    fn find(parent: &mut Vec<usize>, mut a: usize) -> usize {
        while parent[a] != a {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        a
    }
    for a in 0..k {
        for b in (a + 1)..k {
            if (discs[a].center - discs[b].center).norm() < merge_radius {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra] = rb;
                }
            }
        }
    }
    let mut groups: std::collections::HashMap<usize, Vec<usize>> = std::collections::HashMap::new();
    for a in 0..k {
        let r = find(&mut parent, a);
        groups.entry(r).or_default().push(a);
    }
    let mut clusters: Vec<VortexCluster<S>> = groups
        .into_values()
        .map(|members| {
            let deepest = members
                .iter()
                .copied()
                .max_by(|&a, &b| discs[a].depth.partial_cmp(&discs[b].depth).unwrap())
                .unwrap();
            VortexCluster {
                center: discs[deepest].center,
                total_degree: members.iter().map(|&m| discs[m].degree).sum(),
                members,
            }
        })
        .collect();
    clusters.sort_by(|a, b| {
        (a.center.x, a.center.y)
            .partial_cmp(&(b.center.x, b.center.y))
            .unwrap()
    });
    clusters
}
