//! Closed convex sets with Euclidean projections.
//!
//! Boxes, halfspaces and hyperplanes project in closed form. A composite
//! set is the intersection of its members and is projected with cyclic
//! Dykstra, which converges to the exact projection onto a closed convex
//! intersection.

use thiserror::Error;

/// Default membership tolerance for [`SetSpec::contains`].
pub const DEFAULT_CONTAINS_TOL: f64 = 1e-6;
pub const DEFAULT_INNER_TOL: f64 = 1e-10;
pub const DEFAULT_INNER_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SetError {
    #[error("dimension mismatch: set has dimension {expected}, point has {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("composite projection did not converge in {iterations} sweeps (membership residual {residual:e})")]
    CompositeNoConverge { iterations: usize, residual: f64 },
    #[error("prox scale must be positive, got {0}")]
    NonpositiveScale(f64),
    #[error("box bounds are inconsistent at coordinate {0}")]
    InvalidBounds(usize),
    #[error("normal vector must be nonzero and finite")]
    ZeroNormal,
    #[error("composite set needs at least one member, all of equal dimension")]
    InvalidComposite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxSet {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxSet {
    pub fn lower(&self) -> &[f64] {
        &self.lower
    }
    pub fn upper(&self) -> &[f64] {
        &self.upper
    }
}

/// `{x : a.x <= b}` or `{x : a.x = b}` depending on the enclosing variant.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    normal: Vec<f64>,
    offset: f64,
    norm_sq: f64,
}

impl Affine {
    fn new(normal: Vec<f64>, offset: f64) -> Result<Self, SetError> {
        let norm_sq: f64 = normal.iter().map(|a| a * a).sum();
        if norm_sq == 0.0 || !norm_sq.is_finite() || !offset.is_finite() {
            return Err(SetError::ZeroNormal);
        }
        Ok(Affine {
            normal,
            offset,
            norm_sq,
        })
    }

    pub fn normal(&self) -> &[f64] {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    fn excess(&self, x: &[f64]) -> f64 {
        dot(&self.normal, x) - self.offset
    }

    fn shift(&self, x: &mut [f64], excess: f64) {
        let t = excess / self.norm_sq;
        for (xi, ai) in x.iter_mut().zip(&self.normal) {
            *xi -= t * ai;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Composite {
    members: Vec<SetSpec>,
    inner_tol: f64,
    inner_max_iter: usize,
}

impl Composite {
    pub fn members(&self) -> &[SetSpec] {
        &self.members
    }
    pub fn inner_tol(&self) -> f64 {
        self.inner_tol
    }
    pub fn inner_max_iter(&self) -> usize {
        self.inner_max_iter
    }
}

/// Declarative convex set.
#[derive(Debug, Clone, PartialEq)]
pub enum SetSpec {
    Box(BoxSet),
    Halfspace(Affine),
    Hyperplane(Affine),
    Composite(Composite),
}

impl SetSpec {
    /// Coordinatewise bounds; use `f64::INFINITY` / `f64::NEG_INFINITY` for
    /// one-sided or free coordinates.
    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, SetError> {
        if lower.len() != upper.len() {
            return Err(SetError::DimensionMismatch {
                expected: lower.len(),
                actual: upper.len(),
            });
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if l.is_nan() || u.is_nan() || l > u || *l == f64::INFINITY || *u == f64::NEG_INFINITY
            {
                return Err(SetError::InvalidBounds(i));
            }
        }
        Ok(SetSpec::Box(BoxSet { lower, upper }))
    }

    /// The whole space of dimension `dim`.
    pub fn unconstrained(dim: usize) -> Self {
        SetSpec::Box(BoxSet {
            lower: vec![f64::NEG_INFINITY; dim],
            upper: vec![f64::INFINITY; dim],
        })
    }

    pub fn halfspace(normal: Vec<f64>, offset: f64) -> Result<Self, SetError> {
        Affine::new(normal, offset).map(SetSpec::Halfspace)
    }

    pub fn hyperplane(normal: Vec<f64>, offset: f64) -> Result<Self, SetError> {
        Affine::new(normal, offset).map(SetSpec::Hyperplane)
    }

    /// Intersection with the default inner tolerance and sweep budget.
    pub fn composite(members: Vec<SetSpec>) -> Result<Self, SetError> {
        Self::composite_with(members, DEFAULT_INNER_TOL, DEFAULT_INNER_MAX_ITER)
    }

    pub fn composite_with(
        members: Vec<SetSpec>,
        inner_tol: f64,
        inner_max_iter: usize,
    ) -> Result<Self, SetError> {
        let dim = members.first().ok_or(SetError::InvalidComposite)?.dim();
        if members.iter().any(|m| m.dim() != dim) || inner_max_iter == 0 || !(inner_tol >= 0.0) {
            return Err(SetError::InvalidComposite);
        }
        Ok(SetSpec::Composite(Composite {
            members,
            inner_tol,
            inner_max_iter,
        }))
    }

    pub fn dim(&self) -> usize {
        match self {
            SetSpec::Box(b) => b.lower.len(),
            SetSpec::Halfspace(a) | SetSpec::Hyperplane(a) => a.normal.len(),
            SetSpec::Composite(c) => c.members[0].dim(),
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), SetError> {
        if x.len() != self.dim() {
            return Err(SetError::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// Euclidean projection of `x`.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>, SetError> {
        self.check_dim(x)?;
        let mut out = x.to_vec();
        self.project_in_place(&mut out)?;
        Ok(out)
    }

    pub(crate) fn project_in_place(&self, x: &mut [f64]) -> Result<(), SetError> {
        match self {
            SetSpec::Box(b) => {
                for ((xi, l), u) in x.iter_mut().zip(&b.lower).zip(&b.upper) {
                    *xi = xi.max(*l).min(*u);
                }
            }
            SetSpec::Halfspace(h) => {
                let e = h.excess(x);
                if e > 0.0 {
                    h.shift(x, e);
                }
            }
            SetSpec::Hyperplane(h) => {
                let e = h.excess(x);
                h.shift(x, e);
            }
            SetSpec::Composite(c) => dykstra(c, x)?,
        }
        Ok(())
    }

    /// `dist(x, C) = ||x - P_C(x)||`.
    pub fn dist(&self, x: &[f64]) -> Result<f64, SetError> {
        let p = self.project(x)?;
        Ok(distance(x, &p))
    }

    /// `dist(x, C) <= tol`.
    pub fn contains(&self, x: &[f64], tol: f64) -> Result<bool, SetError> {
        Ok(self.dist(x)? <= tol)
    }

    /// Proximity operator of `mu * dist(., C)^2 / 2`: `(x + mu P(x)) / (1 + mu)`.
    pub fn prox_scaled(&self, x: &[f64], mu: f64) -> Result<Vec<f64>, SetError> {
        if !(mu > 0.0) {
            return Err(SetError::NonpositiveScale(mu));
        }
        let p = self.project(x)?;
        Ok(x.iter()
            .zip(&p)
            .map(|(xi, pi)| (xi + mu * pi) / (1.0 + mu))
            .collect())
    }
}

/// Unsettled sweeps after which a polyhedral composite is handed to the
/// exact active-set solver.
const HANDOVER_SWEEPS: usize = 64;

fn dykstra(c: &Composite, x: &mut [f64]) -> Result<(), SetError> {
    let n = x.len();
    let m = c.members.len();
    let start = x.to_vec();
    let mut increments = vec![0.0; m * n];
    let mut prev = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for sweep in 1..=c.inner_max_iter {
        prev.copy_from_slice(x);
        // the iterate can sit still for a sweep while the increments are
        // still moving, so both have to settle
        let mut increment_change = 0.0;
        for (k, member) in c.members.iter().enumerate() {
            let p = &mut increments[k * n..(k + 1) * n];
            for i in 0..n {
                y[i] = x[i] + p[i];
            }
            x.copy_from_slice(&y);
            member.project_in_place(x)?;
            for i in 0..n {
                let next = y[i] - x[i];
                increment_change += (next - p[i]) * (next - p[i]);
                p[i] = next;
            }
        }
        if distance(x, &prev) <= c.inner_tol && increment_change.sqrt() <= c.inner_tol {
            residual = membership_residual(c, x)?;
            if residual <= c.inner_tol {
                return Ok(());
            }
        }
        // Dykstra can crawl for very many sweeps while large early
        // increments unwind
        if sweep == HANDOVER_SWEEPS {
            if let Some(exact) = Polyhedron::from_members(&c.members).and_then(|p| p.project(&start)) {
                if membership_residual(c, &exact)? <= c.inner_tol {
                    x.copy_from_slice(&exact);
                    return Ok(());
                }
            }
        }
    }
    if !residual.is_finite() {
        residual = membership_residual(c, x)?;
    }
    if residual <= c.inner_tol {
        // feasible to tolerance, but the sweep has not settled
        return Ok(());
    }
    Err(SetError::CompositeNoConverge {
        iterations: c.inner_max_iter,
        residual,
    })
}

/// A composite of primitive members written as rows `a.x <= b` (bounds
/// included) and `a.x = b`.
struct Polyhedron {
    dim: usize,
    rows: Vec<(Vec<f64>, f64)>,
    equalities: usize,
}

impl Polyhedron {
    fn from_members(members: &[SetSpec]) -> Option<Self> {
        let dim = members[0].dim();
        let mut eq = Vec::new();
        let mut ineq = Vec::new();
        for member in members {
            match member {
                SetSpec::Box(b) => {
                    for i in 0..dim {
                        let mut e = vec![0.0; dim];
                        if b.upper[i].is_finite() {
                            e[i] = 1.0;
                            ineq.push((e.clone(), b.upper[i]));
                        }
                        if b.lower[i].is_finite() {
                            e[i] = -1.0;
                            ineq.push((e, -b.lower[i]));
                        }
                    }
                }
                SetSpec::Halfspace(a) => ineq.push((a.normal.clone(), a.offset)),
                SetSpec::Hyperplane(a) => eq.push((a.normal.clone(), a.offset)),
                SetSpec::Composite(_) => return None,
            }
        }
        let equalities = eq.len();
        eq.extend(ineq);
        Some(Polyhedron {
            dim,
            rows: eq,
            equalities,
        })
    }

    /// Dual active-set method (Goldfarb and Idnani) for the identity
    /// Hessian: start from `z`, add the most violated row, step along its
    /// normal projected off the active rows, and drop a row whenever its
    /// multiplier would turn negative. `None` if the rows are inconsistent
    /// or the iteration cap is hit.
    fn project(&self, z: &[f64]) -> Option<Vec<f64>> {
        let n = self.dim;
        let scale = 1.0 + z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let norms: Vec<f64> = self.rows.iter().map(|(a, _)| dot(a, a).sqrt()).collect();
        let tol = 1e-12 * scale;
        let mut x = z.to_vec();
        // active rows with their multipliers; a negative sign flips an
        // equality row to `-a.x <= -b`
        let mut active: Vec<(usize, f64, f64)> = Vec::new();
        let cap = 50 * (self.rows.len() + 1);

        let violation = |x: &[f64], r: usize, sign: f64| sign * (dot(&self.rows[r].0, x) - self.rows[r].1);
        let mut pending_eq = 0;
        for _ in 0..cap {
            // next row to add: equalities first, then the worst inequality
            let (p, sign) = if pending_eq < self.equalities {
                let r = pending_eq;
                pending_eq += 1;
                let s = dot(&self.rows[r].0, &x) - self.rows[r].1;
                if s.abs() <= tol * norms[r] {
                    // still needs to stay fixed while other rows move x,
                    // unless the active rows already imply it
                    if !self.in_span(&active, r) {
                        active.push((r, 1.0, 0.0));
                    }
                    continue;
                }
                (r, s.signum())
            } else {
                let worst = (self.equalities..self.rows.len())
                    .map(|r| (r, violation(&x, r, 1.0) / norms[r]))
                    .filter(|&(r, v)| v > tol && !active.iter().any(|a| a.0 == r))
                    .max_by(|a, b| a.1.total_cmp(&b.1));
                match worst {
                    Some((r, _)) => (r, 1.0),
                    None => return Some(x),
                }
            };
            let np: Vec<f64> = self.rows[p].0.iter().map(|v| sign * v).collect();
            let mut u_p = 0.0;
            loop {
                // np = N r + d with d orthogonal to the active normals
                let (r, d) = if active.is_empty() {
                    (Vec::new(), np.clone())
                } else {
                    let cols = nalgebra::DMatrix::from_fn(n, active.len(), |i, k| {
                        active[k].1 * self.rows[active[k].0].0[i]
                    });
                    let pinv = cols.clone().pseudo_inverse(1e-12).ok()?;
                    let npv = nalgebra::DVector::from_column_slice(&np);
                    let r = &pinv * &npv;
                    let d = &npv - &cols * &r;
                    (r.as_slice().to_vec(), d.as_slice().to_vec())
                };
                let s = violation(&x, p, sign);
                let dd = dot(&d, &d);
                let full = if dd > 1e-20 * dot(&np, &np) { Some(s / dd) } else { None };
                let partial = active
                    .iter()
                    .zip(&r)
                    .enumerate()
                    .filter(|(_, (a, rk))| a.0 >= self.equalities && **rk > 0.0)
                    .map(|(k, (a, rk))| (k, a.2 / rk))
                    .min_by(|a, b| a.1.total_cmp(&b.1));
                let (t, drop) = match (full, partial) {
                    (None, None) => return None,
                    (Some(f), Some((k, t1))) if t1 < f => (t1, Some(k)),
                    (Some(f), _) => (f, None),
                    (None, Some((k, t1))) => (t1, Some(k)),
                };
                for i in 0..n {
                    x[i] -= t * d[i];
                }
                for (a, rk) in active.iter_mut().zip(&r) {
                    a.2 -= t * rk;
                }
                u_p += t;
                match drop {
                    None => {
                        active.push((p, sign, u_p));
                        break;
                    }
                    Some(k) => {
                        active.remove(k);
                    }
                }
            }
        }
        None
    }

    /// Whether row `r`'s normal lies in the span of the active normals.
    fn in_span(&self, active: &[(usize, f64, f64)], r: usize) -> bool {
        if active.is_empty() {
            return false;
        }
        let n = self.dim;
        let cols = nalgebra::DMatrix::from_fn(n, active.len(), |i, k| self.rows[active[k].0].0[i]);
        let a = nalgebra::DVector::from_column_slice(&self.rows[r].0);
        let Ok(pinv) = cols.clone().pseudo_inverse(1e-12) else {
            return false;
        };
        let residual = &a - &cols * (pinv * &a);
        residual.norm_squared() <= 1e-20 * a.norm_squared()
    }
}

fn membership_residual(c: &Composite, x: &[f64]) -> Result<f64, SetError> {
    let mut worst: f64 = 0.0;
    for member in &c.members {
        worst = worst.max(member.dist(x)?);
    }
    Ok(worst)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
