"""Tree-approximation analytics: degree models, recursion fixed points,
Jacobians of the linearized recursion, and cascade conditions.

All expectations are taken over truncated degree supports; every model
carries its truncated tail mass so the truncation error of an expectation
can be bounded by the caller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import stats
from scipy.special import gammaincc

__all__ = [
    "DegreeModel",
    "ModelEnsemble",
    "JacobianMatrix",
    "FixedPoint",
    "ExpectationResult",
    "truncated_expectation",
    "iterate_recursion",
    "build_jacobian",
    "lambda_max",
    "cascade_conditions",
    "CascadeConditions",
    "jacobian_m_er_closed_form",
    "build_jacobian_exogenous",
    "build_jacobian_undirected",
    "strict_count_below",
]

DEFAULT_TAIL_TOLERANCE = 1e-12


def strict_count_below(threshold: float) -> int:
    """Largest integer strictly below ``threshold`` (> 0)."""
    return math.ceil(threshold) - 1


@dataclass(frozen=True)
class DegreeModel:
    """A truncated probability law over degrees k = 0, 1, ..., K."""

    pmf: np.ndarray
    truncated_mass: float
    label: str = "empirical"

    def __post_init__(self):
        p = np.asarray(self.pmf, dtype=float)
        if p.ndim != 1 or p.size == 0 or (p < 0).any():
            raise ValueError("pmf must be a nonnegative 1-d array")
        object.__setattr__(self, "pmf", p)

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.pmf.size)

    @property
    def mean(self) -> float:
        return float(np.dot(self.support, self.pmf))

    @property
    def p0(self) -> float:
        return float(self.pmf[0])

    @classmethod
    def poisson(cls, mean: float, tail_tolerance: float = DEFAULT_TAIL_TOLERANCE) -> "DegreeModel":
        if mean < 0:
            raise ValueError("mean must be nonnegative")
        # cutoff: generous Gaussian-width bound or the tail-mass criterion,
        # whichever truncates later
        k_width = int(mean + 12.0 * math.sqrt(max(mean, 0.0)) + 20.0)
        k = k_width
        while stats.poisson.sf(k, mean) >= tail_tolerance:
            k += max(4, k // 4)
        pmf = stats.poisson.pmf(np.arange(k + 1), mean)
        return cls(pmf=pmf, truncated_mass=float(stats.poisson.sf(k, mean)),
                   label=f"poisson({mean:g})")

    @classmethod
    def empirical(cls, pmf, tail_tolerance: float = DEFAULT_TAIL_TOLERANCE) -> "DegreeModel":
        p = np.asarray(pmf, dtype=float)
        deficit = abs(1.0 - p.sum())
        if deficit > tail_tolerance:
            raise ValueError("pmf must sum to 1 within the tail tolerance")
        return cls(pmf=p, truncated_mass=deficit)

    @classmethod
    def from_degree_sequence(cls, degrees) -> "DegreeModel":
        degrees = np.asarray(degrees, dtype=np.int64)
        counts = np.bincount(degrees)
        return cls(pmf=counts / counts.sum(), truncated_mass=0.0,
                   label="realized-sequence")

    @classmethod
    def delta(cls, k: int) -> "DegreeModel":
        if k < 0:
            raise ValueError("degree must be nonnegative")
        pmf = np.zeros(k + 1)
        pmf[k] = 1.0
        return cls(pmf=pmf, truncated_mass=0.0, label=f"delta({k})")

    @classmethod
    def power_law_tail(cls, gamma: float, mean: float, cutoff: int) -> "DegreeModel":
        """Tail proportional to k**(-gamma) on 1..cutoff, with the remaining
        probability mass placed at degree 0 so the requested mean is met."""
        if gamma <= 2:
            raise ValueError("gamma must exceed 2")
        k = np.arange(1, cutoff + 1, dtype=float)
        tail = k ** (-gamma)
        tail /= tail.sum()
        tail_mean = float(np.dot(k, tail))
        a = mean / tail_mean
        if not 0.0 <= a <= 1.0:
            raise ValueError("mean not reachable with this tail and cutoff")
        pmf = np.zeros(cutoff + 1)
        pmf[0] = 1.0 - a
        pmf[1:] = a * tail
        return cls(pmf=pmf, truncated_mass=0.0,
                   label=f"powerlaw(gamma={gamma:g}, mean={mean:g})")

    def binomial_thinning(self, keep_prob: float) -> "DegreeModel":
        """Law of a Binomial(k, keep_prob) thinning of this degree law."""
        if not 0.0 <= keep_prob <= 1.0:
            raise ValueError("keep probability must lie in [0, 1]")
        kmax = self.pmf.size - 1
        out = np.zeros(kmax + 1)
        for k, pk in enumerate(self.pmf):
            if pk > 0:
                out[: k + 1] += pk * stats.binom.pmf(np.arange(k + 1), k, keep_prob)
        return DegreeModel(pmf=out, truncated_mass=self.truncated_mass,
                           label=f"thinned({self.label}, {keep_prob:g})")


@dataclass(frozen=True)
class ModelEnsemble:
    """Layer degree models plus the junior-most threshold.

    ``out_models`` has one entry per layer (junior first); ``in_models`` has
    one entry per layer except the most senior one, whose in-degree law never
    enters any implemented formula.
    """

    out_models: tuple
    in_models: tuple
    r1: float

    def __post_init__(self):
        if self.r1 <= 0:
            raise ValueError("threshold must be positive")
        if len(self.in_models) != len(self.out_models) - 1:
            raise ValueError("need one in-degree model per layer except the most senior")
        object.__setattr__(self, "out_models", tuple(self.out_models))
        object.__setattr__(self, "in_models", tuple(self.in_models))

    @property
    def num_layers(self) -> int:
        return len(self.out_models)

    @classmethod
    def duplex_poisson(cls, mean_junior: float, mean_senior: float, r1: float,
                       mean_junior_borrow: float | None = None) -> "ModelEnsemble":
        """Two uncorrelated ER layers; junior in-degree defaults to the junior
        out-degree mean, as in a directed ER layer."""
        if mean_junior_borrow is None:
            mean_junior_borrow = mean_junior
        return cls(out_models=(DegreeModel.poisson(mean_junior),
                               DegreeModel.poisson(mean_senior)),
                   in_models=(DegreeModel.poisson(mean_junior_borrow),),
                   r1=r1)

    @classmethod
    def m_layer_poisson(cls, means: Sequence[float], r1: float) -> "ModelEnsemble":
        means = list(means)
        return cls(out_models=tuple(DegreeModel.poisson(z) for z in means),
                   in_models=tuple(DegreeModel.poisson(z) for z in means[:-1]),
                   r1=r1)


class ExpectationResult(NamedTuple):
    value: float
    truncated_mass_bound: float


def truncated_expectation(ens: ModelEnsemble,
                          weight: Callable[..., np.ndarray],
                          with_borrow: bool = False) -> ExpectationResult:
    """Expectation of ``weight(l_1, ..., l_M[, b_1, ..., b_{M-1}])`` over the
    product of truncated degree supports.

    ``weight`` must broadcast over integer arrays. The reported bound is the
    total truncated probability mass; multiplying it by the sup of the weight
    on the truncated region bounds the absolute truncation error.
    """
    models = list(ens.out_models) + (list(ens.in_models) if with_borrow else [])
    sizes = [m.pmf.size for m in models]
    if math.prod(sizes) > 50_000_000:
        raise ValueError("truncated support too large to enumerate")
    grids = np.meshgrid(*[m.support for m in models], indexing="ij", sparse=True)
    joint = np.ones((1,) * len(models))
    for axis, m in enumerate(models):
        shape = [1] * len(models)
        shape[axis] = m.pmf.size
        joint = joint * m.pmf.reshape(shape)
    vals = np.asarray(weight(*grids), dtype=float)
    vals = np.broadcast_to(vals, joint.shape)
    if not np.isfinite(vals[joint > 0]).all():
        raise ValueError("weight is non-finite on the truncated support")
    bound = float(sum(m.truncated_mass for m in models))
    return ExpectationResult(float(np.sum(joint * vals)), bound)


def _restricted_pmf(model: DegreeModel, tmax: int) -> np.ndarray:
    p = np.zeros(tmax + 1)
    upto = min(tmax, model.pmf.size - 1)
    p[: upto + 1] = model.pmf[: upto + 1]
    return p


def _sum_pmf(models: Sequence[DegreeModel], tmax: int, skip: int | None = None) -> np.ndarray:
    """PMF of the sum of independent model degrees, truncated at ``tmax``."""
    acc = np.zeros(tmax + 1)
    acc[0] = 1.0
    for idx, m in enumerate(models):
        if idx == skip:
            continue
        acc = np.convolve(acc, _restricted_pmf(m, tmax))[: tmax + 1]
    return acc


def _degree_weighted_tail(models: Sequence[DegreeModel], j: int, tmax: int) -> float:
    """E[l_j * 1{sum of all layer out-degrees <= tmax}]."""
    if tmax < 0:
        return 0.0
    rest = _sum_pmf(models, tmax, skip=j)
    rest_cdf = np.cumsum(rest)
    pj = _restricted_pmf(models[j], tmax)
    k = np.arange(tmax + 1)
    return float(np.sum(k * pj * rest_cdf[tmax - k]))


@dataclass(frozen=True)
class JacobianMatrix:
    """Linearization of the cascade recursion at the all-solvent origin."""

    matrix: np.ndarray
    provenance: str = "generic"

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("Jacobian must be square")
        if (m < -1e-15).any():
            raise ValueError("Jacobian entries must be nonnegative")
        object.__setattr__(self, "matrix", m)

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix))

    def to_record(self) -> dict:
        return {"matrix": self.matrix.tolist(), "provenance": self.provenance}


_RANK_ONE_PROVENANCES = {"generic", "closed-form-er"}


def build_jacobian(ens: ModelEnsemble) -> JacobianMatrix:
    """Jacobian of the baseline model: entry (i, j) is the product of
    zero-borrowing probabilities on layers junior to i, times
    E[l_j * 1{total lending < 1/R1}]. The matrix is rank one by construction."""
    tmax = strict_count_below(1.0 / ens.r1)
    cols = np.array([_degree_weighted_tail(ens.out_models, j, tmax)
                     for j in range(ens.num_layers)])
    p0 = np.array([m.p0 for m in ens.in_models])
    rows = np.concatenate([[1.0], np.cumprod(p0)]) if p0.size else np.array([1.0])
    return JacobianMatrix(matrix=np.outer(rows, cols), provenance="generic")


def lambda_max(jac: JacobianMatrix) -> float:
    """Dominant eigenvalue. Rank-one baseline Jacobians use the trace; 2x2
    variants use the closed quadratic form; anything else falls back to a
    dense eigensolve."""
    m = jac.matrix
    if jac.provenance in _RANK_ONE_PROVENANCES:
        return jac.trace
    if m.shape == (2, 2):
        a, b = m[0]
        c, d = m[1]
        return float((a + d + math.sqrt((a - d) ** 2 + 4 * b * c)) / 2)
    return float(np.max(np.real(np.linalg.eigvals(m))))


@dataclass(frozen=True)
class CascadeConditions:
    multiplex: bool
    per_layer_only: tuple
    lambda_max: float
    diagonal: tuple


def cascade_conditions(ens: ModelEnsemble) -> CascadeConditions:
    jac = build_jacobian(ens)
    diag = np.diag(jac.matrix)
    lam = lambda_max(jac)
    return CascadeConditions(multiplex=bool(lam > 1),
                             per_layer_only=tuple(bool(d > 1) for d in diag),
                             lambda_max=lam,
                             diagonal=tuple(float(d) for d in diag))


def jacobian_m_er_closed_form(mean_degrees: Sequence[float], r1: float) -> JacobianMatrix:
    """Closed-form Jacobian for M independent ER layers.

    Entry (i, j) is <l_j> times the regularized upper incomplete gamma
    Gamma(s, z_total) / Gamma(s) with s = ceil(1/R1) - 1, times
    exp(-sum of means junior to layer i). The gamma ratio equals the
    probability that a Poisson(z_total) variable is at most s - 1.

    The row/column roles follow the general derivation (the zero-borrowing
    factor is governed by the row index); the published closed form swaps the
    index letters, and the direct construction arbitrates.
    """
    means = np.asarray(mean_degrees, dtype=float)
    if (means < 0).any():
        raise ValueError("mean degrees must be nonnegative")
    if r1 <= 0:
        raise ValueError("threshold must be positive")
    s = strict_count_below(1.0 / r1)
    if s < 1:
        raise ValueError("ceil(1/R1) must be at least 2 (gamma argument must be positive)")
    total = means.sum()
    q = float(gammaincc(s, total))
    row = np.exp(-np.concatenate([[0.0], np.cumsum(means[:-1])]))
    return JacobianMatrix(matrix=np.outer(row, means * q), provenance="closed-form-er")


def build_jacobian_exogenous(out_models: Sequence[DegreeModel],
                             r_junior: float, r_senior: float) -> JacobianMatrix:
    """Duplex variant with an exogenous senior threshold; generally full rank,
    so its dominant eigenvalue is not the trace."""
    if not 0 < r_junior <= r_senior <= 1:
        raise ValueError("need 0 < R_J <= R_S <= 1")
    if len(out_models) != 2:
        raise ValueError("exogenous variant is a duplex model")
    rows = []
    for r in (r_junior, r_senior):
        tmax = strict_count_below(1.0 / r)
        rows.append([_degree_weighted_tail(out_models, j, tmax) for j in range(2)])
    return JacobianMatrix(matrix=np.array(rows), provenance="exogenous")


def build_jacobian_undirected(degree_models: Sequence[DegreeModel],
                              r_junior: float) -> JacobianMatrix:
    """Duplex variant on undirected layers.

    A node reached along a layer-alpha edge has the excess degree law
    p_k * k / <k> in that layer; the diagonal entries count the (l - 1)
    remaining neighbors of the walked layer and the senior row carries the
    probability of zero junior degree.
    """
    if len(degree_models) != 2:
        raise ValueError("undirected variant is a duplex model")
    pj, ps = degree_models
    if pj.mean <= 0 or ps.mean <= 0:
        raise ValueError("excess degree law needs positive layer means")
    if r_junior <= 0:
        raise ValueError("threshold must be positive")
    tmax = strict_count_below(1.0 / r_junior)

    def excess(model: DegreeModel) -> np.ndarray:
        return model.support * model.pmf / model.mean

    def joint_expect(law_j: np.ndarray, law_s: np.ndarray,
                     weight: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> float:
        lj = np.arange(law_j.size)[:, None]
        ls = np.arange(law_s.size)[None, :]
        mask = (lj + ls) <= tmax
        return float(np.sum(law_j[:, None] * law_s[None, :] * weight(lj, ls) * mask))

    ej, es = excess(pj), excess(ps)
    jac = np.array([
        [joint_expect(ej, ps.pmf, lambda lj, ls: lj - 1),
         joint_expect(ej, ps.pmf, lambda lj, ls: ls + 0 * lj)],
        [pj.p0 * joint_expect(pj.pmf, es, lambda lj, ls: lj + 0 * ls),
         pj.p0 * joint_expect(pj.pmf, es, lambda lj, ls: ls - 1)],
    ])
    # the (l - 1) weights are nonnegative on the excess support (l >= 1);
    # clip roundoff residue
    jac = np.where((jac < 0) & (jac > -1e-15), 0.0, jac)
    return JacobianMatrix(matrix=jac, provenance="undirected")


@dataclass(frozen=True)
class FixedPoint:
    phi: np.ndarray
    iterations: int
    converged: bool

    def to_record(self) -> dict:
        return {"phi": [float(x) for x in self.phi],
                "iterations": int(self.iterations),
                "converged": bool(self.converged)}


def _binomial_rows(kmax: int, p: float) -> list:
    return [stats.binom.pmf(np.arange(l + 1), l, p) for l in range(kmax + 1)]


def iterate_recursion(ens: ModelEnsemble, phi0: Sequence[float],
                      tol: float = 1e-10, max_iter: int = 10_000,
                      prune: float = 1e-15) -> FixedPoint:
    """Iterate the tree recursion from the seed probabilities to a fixed point.

    The per-layer binomial loss counts are convolved into a total-loss
    distribution, whose tail is compared to the threshold shifted by the
    junior-borrowing total; this avoids enumerating loss vectors. Degree
    products with joint probability below ``prune`` are skipped.
    """
    phi0 = np.asarray(phi0, dtype=float)
    m = ens.num_layers
    if phi0.shape != (m,):
        raise ValueError("phi0 must have one entry per layer")
    if ((phi0 < 0) | (phi0 > 1)).any():
        raise ValueError("phi0 entries must lie in [0, 1]")
    if (np.diff(phi0) > 1e-15).any():
        raise ValueError("phi0 must be non-increasing with seniority")
    if tol <= 0:
        raise ValueError("tolerance must be positive")

    out_pmfs = [mod.pmf for mod in ens.out_models]
    sizes = [p.size for p in out_pmfs]
    # borrow-shift distribution for each level i >= 2: sum of b_1..b_{i-1}
    max_loss = sum(sizes) - m  # largest possible total lending on support
    borrow_dists = [np.array([1.0])]
    for in_model in ens.in_models:
        borrow_dists.append(np.convolve(
            borrow_dists[-1], _restricted_pmf(in_model, max_loss))[: max_loss + 1])

    phi = phi0.copy()
    for it in range(1, max_iter + 1):
        binom_rows = [_binomial_rows(sizes[s] - 1, phi[s]) for s in range(m)]
        g = np.zeros(m)
        stack = [(0, 1.0, np.array([1.0]), 0)]
        # depth-first over layer out-degrees, carrying the convolved loss pmf
        while stack:
            depth, weight, loss_pmf, total_l = stack.pop()
            if depth == m:
                if total_l == 0:
                    continue
                tail = np.concatenate([np.cumsum(loss_pmf[::-1])[::-1], [0.0]])
                t1 = math.floor(ens.r1 * total_l) + 1
                for i in range(m):
                    if i == 0:
                        g[0] += weight * (tail[t1] if t1 <= total_l else 0.0)
                    else:
                        q = borrow_dists[i]
                        nb = min(q.size, total_l - t1 + 1)
                        if nb > 0:
                            g[i] += weight * float(np.dot(q[:nb], tail[t1:t1 + nb]))
                continue
            pmf = out_pmfs[depth]
            for l in range(sizes[depth]):
                w = weight * pmf[l]
                if w < prune:
                    continue
                stack.append((depth + 1, w,
                              np.convolve(loss_pmf, binom_rows[depth][l]),
                              total_l + l))
        new_phi = phi0 + (1.0 - phi0) * g
        if np.max(np.abs(new_phi - phi)) < tol:
            return FixedPoint(phi=new_phi, iterations=it, converged=True)
        phi = new_phi
    return FixedPoint(phi=phi, iterations=max_iter, converged=False)
