"""Cascade-region mapping: mean-degree rasters, cascade windows along rays,
optimal seniority ratios, threshold sweeps, the M-layer splitting analysis,
and the heavy-tailed junior-fraction experiment.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.special import gammaincc
from skimage import measure as _skmeasure

from . import dynamics, netgen, theory

__all__ = [
    "GridSpec",
    "RegionScan",
    "CascadeWindow",
    "OptimalRatio",
    "ThresholdSweep",
    "MLayerRegions",
    "JuniorFractionResult",
    "duplex_er_lambda_max",
    "scan_region",
    "cascade_window",
    "optimal_seniority_ratio",
    "sweep_thresholds",
    "m_layer_split_regions",
    "junior_fraction_experiment",
]


@dataclass(frozen=True)
class GridSpec:
    x_range: tuple
    y_range: tuple
    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError("resolution must be positive")

    @property
    def x_values(self) -> np.ndarray:
        return np.linspace(*self.x_range, self.nx)

    @property
    def y_values(self) -> np.ndarray:
        return np.linspace(*self.y_range, self.ny)


def duplex_er_lambda_max(mean_junior, mean_senior, r1: float):
    """Dominant Jacobian eigenvalue for two uncorrelated ER layers
    (vectorized closed form; equals the trace of the rank-one Jacobian)."""
    s = theory.strict_count_below(1.0 / r1)
    if s < 1:
        return np.zeros(np.broadcast(np.asarray(mean_junior),
                                     np.asarray(mean_senior)).shape)
    lj = np.asarray(mean_junior, dtype=float)
    ls = np.asarray(mean_senior, dtype=float)
    q = gammaincc(s, lj + ls)
    return q * (lj + ls * np.exp(-lj))


@dataclass
class RegionScan:
    """Rasterized cascade conditions over a (<l_J>, <l_S>) grid."""

    grid: GridSpec
    r1: float
    lambda_max: np.ndarray          # shape (ny, nx)
    multiplex: np.ndarray
    junior_only: np.ndarray
    senior_only: np.ndarray
    metadata: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["mean_junior", "mean_senior", "lambda_max",
                         "multiplex", "junior_only", "senior_only"])
        xs, ys = self.grid.x_values, self.grid.y_values
        for iy, y in enumerate(ys):
            for ix, x in enumerate(xs):
                writer.writerow([format(x, ".17g"), format(y, ".17g"),
                                 format(float(self.lambda_max[iy, ix]), ".17g"),
                                 int(self.multiplex[iy, ix]),
                                 int(self.junior_only[iy, ix]),
                                 int(self.senior_only[iy, ix])])
        return buf.getvalue()


def scan_region(grid: GridSpec, r1: float, family: str = "poisson") -> RegionScan:
    """Evaluate the multiplex, junior-only, and senior-only cascade conditions
    cellwise over a mean-degree grid of two uncorrelated ER layers."""
    if family != "poisson":
        raise NotImplementedError("only the Poisson (ER) family is rasterized")
    if r1 <= 0:
        raise ValueError("threshold must be positive")
    lj, ls = np.meshgrid(grid.x_values, grid.y_values)
    s = theory.strict_count_below(1.0 / r1)
    if s < 1:
        q = np.zeros_like(lj)
    else:
        q = gammaincc(s, lj + ls)
    jjj = lj * q
    jss = ls * q * np.exp(-lj)
    lam = jjj + jss
    return RegionScan(grid=grid, r1=r1, lambda_max=lam,
                      multiplex=lam > 1, junior_only=jjj > 1, senior_only=jss > 1,
                      metadata={"family": family})


@dataclass(frozen=True)
class CascadeWindow:
    """Super-critical radial distances along a fixed seniority-ratio ray."""

    sigma: float
    measure: float
    segments: tuple

    def to_record(self) -> dict:
        return {"sigma": self.sigma, "measure": self.measure,
                "segments": [list(seg) for seg in self.segments]}


def _ray_lambda(sigma: float, r1: float):
    denom = math.sqrt(1.0 + sigma * sigma)

    def f(r):
        lj = np.asarray(r) / denom
        ls = np.asarray(r) * sigma / denom
        return duplex_er_lambda_max(lj, ls, r1) - 1.0
    return f


def cascade_window(sigma: float, r1: float, r_max: float = 12.0,
                   dr: float = 0.01) -> CascadeWindow:
    """Measure the set {r >= 0 : lambda_max >= 1} along the ray of slope sigma.

    Sign changes on the dr-grid are sharpened by bisection to dr * 1e-3. The
    trailing unit interval of the ray must be sub-critical, otherwise the
    super-critical set may be unbounded and an error is raised.
    """
    if sigma < 0:
        raise ValueError("seniority ratio must be nonnegative")
    if dr <= 0:
        raise ValueError("dr must be positive")
    f = _ray_lambda(sigma, r1)
    r = np.arange(0.0, r_max + dr / 2, dr)
    vals = f(r)
    tail = vals[r >= r_max - 1.0]
    if (tail >= 0).any():
        raise ValueError("r_max too small: the cascade region is not closed by r_max")
    sup = vals >= 0
    segments = []
    i = 0
    while i < r.size:
        if not sup[i]:
            i += 1
            continue
        j = i
        while j + 1 < r.size and sup[j + 1]:
            j += 1
        lo = r[i]
        if i > 0:
            lo = brentq(f, r[i - 1], r[i], xtol=dr * 1e-3)
        hi = r[j]
        if j + 1 < r.size:
            hi = brentq(f, r[j], r[j + 1], xtol=dr * 1e-3)
        segments.append((float(lo), float(hi)))
        i = j + 1
    measure = float(sum(hi - lo for lo, hi in segments))
    return CascadeWindow(sigma=float(sigma), measure=measure,
                         segments=tuple(segments))


@dataclass
class OptimalRatio:
    sigma_star: float
    degenerate: bool
    window_curve: list        # (sigma, measure) pairs on the search grid
    window_at_star: CascadeWindow | None

    def to_record(self) -> dict:
        return {"sigma_star": self.sigma_star,
                "degenerate": self.degenerate,
                "window_curve": [[s, w] for s, w in self.window_curve],
                "window_at_star": (self.window_at_star.to_record()
                                   if self.window_at_star else None)}


def optimal_seniority_ratio(r1: float, sigma_grid: Sequence[float] | None = None,
                            r_max: float = 12.0, dr: float = 0.01,
                            refine_rtol: float = 1e-3) -> OptimalRatio:
    """Minimize the cascade-window measure over the seniority ratio.

    A coarse grid scan is refined by golden-section search. When some ratio
    yields an empty window the minimizer is degenerate: the reported
    sigma_star is the midpoint of the first empty-window interval and the
    degenerate flag is raised for the caller to decide.
    """
    if sigma_grid is None:
        sigma_grid = np.linspace(0.0, 6.0, 121)
    sigma_grid = np.asarray(sigma_grid, dtype=float)
    if sigma_grid.max() < 5.0:
        raise ValueError("sigma grid should reach at least 5")
    windows = [cascade_window(s, r1, r_max, dr) for s in sigma_grid]
    measures = np.array([w.measure for w in windows])
    curve = list(zip(sigma_grid.tolist(), measures.tolist()))
    empty = measures == 0.0
    if empty.any():
        idx = np.flatnonzero(empty)
        first = np.split(idx, np.flatnonzero(np.diff(idx) > 1) + 1)[0]
        midpoint = float(0.5 * (sigma_grid[first[0]] + sigma_grid[first[-1]]))
        return OptimalRatio(sigma_star=midpoint, degenerate=True,
                            window_curve=curve, window_at_star=None)
    k = int(np.argmin(measures))
    if 0 < k < sigma_grid.size - 1:
        bracket = (sigma_grid[k - 1], sigma_grid[k], sigma_grid[k + 1])
        res = minimize_scalar(lambda s: cascade_window(s, r1, r_max, dr).measure,
                              bracket=bracket, method="golden",
                              options={"xtol": refine_rtol})
        sigma_star = float(res.x)
    else:
        sigma_star = float(sigma_grid[k])
    return OptimalRatio(sigma_star=sigma_star, degenerate=False,
                        window_curve=curve,
                        window_at_star=cascade_window(sigma_star, r1, r_max, dr))


@dataclass
class ThresholdSweep:
    r1_values: list
    results: list               # OptimalRatio per threshold
    jump_locations: list        # midpoints of adjacent thresholds with a jump

    def to_record(self) -> dict:
        return {"r1_values": self.r1_values,
                "sigma_star": [r.sigma_star for r in self.results],
                "degenerate": [r.degenerate for r in self.results],
                "jump_locations": self.jump_locations}


def sweep_thresholds(r1_values: Sequence[float], sigma_grid=None,
                     r_max: float = 20.0, dr: float = 0.01,
                     jump_threshold: float = 0.1) -> ThresholdSweep:
    """Optimal seniority ratio for each threshold, with jump detection
    between consecutive thresholds (sorted ascending)."""
    r1_sorted = sorted(float(r) for r in r1_values)
    if any(r <= 0 for r in r1_sorted):
        raise ValueError("thresholds must be positive")
    results = [optimal_seniority_ratio(r, sigma_grid, r_max, dr) for r in r1_sorted]
    jumps = []
    for (r_lo, res_lo), (r_hi, res_hi) in zip(zip(r1_sorted, results),
                                              zip(r1_sorted[1:], results[1:])):
        if abs(res_hi.sigma_star - res_lo.sigma_star) > jump_threshold:
            jumps.append(0.5 * (r_lo + r_hi))
    return ThresholdSweep(r1_values=r1_sorted, results=results, jump_locations=jumps)


@dataclass
class MLayerRegions:
    """Per-M cascade-region rasters over a (R1, z) grid for an ER graph split
    into M identically distributed layers."""

    m_values: list
    r1_values: np.ndarray
    z_values: np.ndarray
    traces: dict                # M -> (nz, nr) array of tr J
    membership: dict            # M -> boolean raster

    def to_csv(self, m: int) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["r1", "z", "trace", "in_region"])
        tr = self.traces[m]
        for iz, z in enumerate(self.z_values):
            for ir, r1 in enumerate(self.r1_values):
                writer.writerow([format(float(r1), ".17g"), format(float(z), ".17g"),
                                 format(float(tr[iz, ir]), ".17g"),
                                 int(self.membership[m][iz, ir])])
        return buf.getvalue()


def m_layer_split_regions(m_values: Sequence[int], r1_range: tuple, z_range: tuple,
                          resolution: tuple = (200, 200)) -> MLayerRegions:
    """Trace of the M-layer ER Jacobian over a (R1, z) grid, with each layer
    carrying mean degree z / M."""
    if any(m < 1 for m in m_values):
        raise ValueError("layer counts must be positive")
    if r1_range[0] <= 0:
        raise ValueError("thresholds must be positive")
    nr, nz = resolution
    r1_values = np.linspace(*r1_range, nr)
    z_values = np.linspace(*z_range, nz)
    s = np.array([theory.strict_count_below(1.0 / r) for r in r1_values], dtype=float)
    valid = s >= 1
    traces = {}
    membership = {}
    for m in m_values:
        z = z_values[:, None]
        per_layer = z / m
        q = np.zeros((nz, nr))
        if valid.any():
            q[:, valid] = gammaincc(s[valid][None, :], np.broadcast_to(z, (nz, nr))[:, valid])
        decay = np.sum(np.exp(-per_layer * np.arange(m)[None, :]), axis=1, keepdims=True)
        tr = per_layer * q * decay
        traces[m] = tr
        membership[m] = tr > 1.0
    return MLayerRegions(m_values=list(m_values), r1_values=r1_values,
                         z_values=z_values, traces=traces, membership=membership)


@dataclass
class JuniorFractionResult:
    """Heavy-tailed split experiment: simulation rasters plus the analytical
    cascade-region boundary computed from realized degree sequences."""

    fractions: np.ndarray
    z_values: np.ndarray
    sim_junior: np.ndarray | None       # (nz, nf) mean junior-default fraction
    sim_senior: np.ndarray | None
    theory_fractions: np.ndarray
    theory_z_values: np.ndarray
    theory_lambda: np.ndarray           # (nz_theory, nf_theory)
    boundary_height: np.ndarray         # per theory fraction: max super-critical z
    contours: list                      # marching-squares polylines in (fraction, z)

    @property
    def optimal_fraction(self) -> float:
        finite = np.isfinite(self.boundary_height)
        if not finite.any():
            return float("nan")
        idx = np.flatnonzero(finite)
        return float(self.theory_fractions[idx[np.argmin(self.boundary_height[idx])]])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["fraction", "z", "sim_junior", "sim_senior"])
        if self.sim_junior is not None:
            for iz, z in enumerate(self.z_values):
                for jf, f in enumerate(self.fractions):
                    writer.writerow([format(float(f), ".17g"), format(float(z), ".17g"),
                                     format(float(self.sim_junior[iz, jf]), ".17g"),
                                     format(float(self.sim_senior[iz, jf]), ".17g")])
        return buf.getvalue()

    def to_record(self) -> dict:
        rec = {
            "fractions": self.fractions.tolist(),
            "z_values": self.z_values.tolist(),
            "theory_fractions": self.theory_fractions.tolist(),
            "theory_z_values": self.theory_z_values.tolist(),
            "boundary_height": [None if not np.isfinite(h) else float(h)
                                for h in self.boundary_height],
            "optimal_fraction": self.optimal_fraction,
            "contours": [c.tolist() for c in self.contours],
        }
        if self.sim_junior is not None:
            rec["sim_junior"] = self.sim_junior.tolist()
            rec["sim_senior"] = self.sim_senior.tolist()
        return rec


def _split_lambda_max(out_pmf: theory.DegreeModel, in_pmf: theory.DegreeModel,
                      fraction: float, r1: float) -> float:
    """Dominant eigenvalue for a single graph whose edges are split into a
    junior layer (probability ``fraction``) and a senior layer.

    The split partitions each node's out-edges, so the indicator on total
    lending depends only on the pre-split out-degree; the junior and senior
    columns are exact Bernoulli-thinning expectations of the same weighted
    tail, and the zero-junior-borrowing probability is the thinning
    generating function of the in-degree law.
    """
    tmax = theory.strict_count_below(1.0 / r1)
    k = out_pmf.support
    weighted_tail = float(np.sum(np.where(k <= tmax, k, 0) * out_pmf.pmf))
    b = in_pmf.support
    p0_junior = float(np.sum(in_pmf.pmf * (1.0 - fraction) ** b))
    return weighted_tail * (fraction + (1.0 - fraction) * p0_junior)


def junior_fraction_experiment(gamma: float, z_values: Sequence[float],
                               fractions: Sequence[float], r1: float,
                               n: int = 2400, seed_count: int = 10,
                               replicas: int = 30, master_seed: int = 0,
                               theory_fractions: Sequence[float] | None = None,
                               theory_z_values: Sequence[float] | None = None,
                               run_simulation: bool = True) -> JuniorFractionResult:
    """Fig-style heavy-tailed experiment: static-model graphs split by a
    junior fraction, simulated cascades, and the analytical region boundary
    from the realized degree sequences."""
    z_values = np.asarray(list(z_values), dtype=float)
    fractions = np.asarray(list(fractions), dtype=float)
    theory_fractions = (fractions if theory_fractions is None
                        else np.asarray(list(theory_fractions), dtype=float))
    theory_z_values = (z_values if theory_z_values is None
                       else np.asarray(list(theory_z_values), dtype=float))

    root = np.random.SeedSequence(master_seed)
    sim_seq, theory_seq = root.spawn(2)

    sim_junior = sim_senior = None
    if run_simulation:
        sim_junior = np.zeros((z_values.size, fractions.size))
        sim_senior = np.zeros_like(sim_junior)
        z_streams = sim_seq.spawn(z_values.size)
        for iz, z in enumerate(z_values):
            rep_streams = z_streams[iz].spawn(replicas)
            acc = np.zeros((fractions.size, 2))
            for rep_seq in rep_streams:
                base_seq, *frac_seqs = rep_seq.spawn(1 + fractions.size)
                edges = netgen.sample_static_model_directed(n, gamma, z, base_seq)
                for jf, f in enumerate(fractions):
                    split_seq, seed_seq = frac_seqs[jf].spawn(2)
                    net = netgen.split_edges_by_seniority(
                        edges, netgen.SplitSpec(float(f)), split_seq, n=n)
                    res = dynamics.run_cascade(
                        net, r1, dynamics.SeedSpec.senior_count(seed_count, 2),
                        seed_seq)
                    acc[jf] += res.fractions
            sim_junior[iz] = acc[:, 0] / replicas
            sim_senior[iz] = acc[:, 1] / replicas

    theory_lambda = np.zeros((theory_z_values.size, theory_fractions.size))
    tz_streams = theory_seq.spawn(theory_z_values.size)
    for iz, z in enumerate(theory_z_values):
        edges = netgen.sample_static_model_directed(n, gamma, z, tz_streams[iz])
        net = netgen.MultiplexNetwork.from_layers(n, [edges])
        out_model = theory.DegreeModel.from_degree_sequence(net.out_degrees[0])
        in_model = theory.DegreeModel.from_degree_sequence(net.in_degrees[0])
        for jf, f in enumerate(theory_fractions):
            theory_lambda[iz, jf] = _split_lambda_max(out_model, in_model, float(f), r1)

    boundary = np.full(theory_fractions.size, -np.inf)
    for jf in range(theory_fractions.size):
        sup = np.flatnonzero(theory_lambda[:, jf] >= 1.0)
        if sup.size:
            boundary[jf] = theory_z_values[sup[-1]]
    contours = []
    if theory_lambda.shape[0] >= 2 and theory_lambda.shape[1] >= 2:
        contours = [np.column_stack([
            np.interp(c[:, 1], np.arange(theory_fractions.size), theory_fractions),
            np.interp(c[:, 0], np.arange(theory_z_values.size), theory_z_values)])
            for c in _skmeasure.find_contours(theory_lambda, 1.0)]
    return JuniorFractionResult(
        fractions=fractions, z_values=z_values,
        sim_junior=sim_junior, sim_senior=sim_senior,
        theory_fractions=theory_fractions, theory_z_values=theory_z_values,
        theory_lambda=theory_lambda, boundary_height=boundary, contours=contours)
