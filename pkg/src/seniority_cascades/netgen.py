"""Generation of multiplex directed networks for seniority-cascade experiments.

Layers are ordered by increasing seniority (layer 1 = most junior). An edge
(lender, borrower) represents one unit loan from the lender to the borrower.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

__all__ = [
    "MultiplexNetwork",
    "ErdosRenyiLayer",
    "ConfigurationLayer",
    "StaticModelLayer",
    "LayerSpec",
    "SplitSpec",
    "sample_er_directed_layer",
    "sample_configuration_layer",
    "sample_static_model_directed",
    "sample_layer",
    "generate_multiplex",
    "split_edges_by_seniority",
    "overlap_count",
]


def _as_edge_array(edges) -> np.ndarray:
    arr = np.asarray(edges, dtype=np.int64)
    if arr.size == 0:
        return arr.reshape(0, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("edge array must have shape (E, 2)")
    return arr


@dataclass(frozen=True)
class MultiplexNetwork:
    """Immutable multiplex directed network.

    ``layers[alpha]`` is an (E, 2) integer array of (lender, borrower) pairs;
    ``out_degrees[alpha, v]`` counts edges (v, .) in that layer and
    ``in_degrees[alpha, v]`` counts edges (., v).
    """

    n: int
    layers: tuple
    out_degrees: np.ndarray
    in_degrees: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_layers(cls, n: int, layers: Sequence, meta: dict | None = None) -> "MultiplexNetwork":
        if n < 1:
            raise ValueError("need at least one node")
        arrs = tuple(_as_edge_array(e) for e in layers)
        m = len(arrs)
        out_deg = np.zeros((m, n), dtype=np.int64)
        in_deg = np.zeros((m, n), dtype=np.int64)
        for a, edges in enumerate(arrs):
            if edges.size:
                if edges.min() < 0 or edges.max() >= n:
                    raise ValueError("edge endpoint out of range")
                out_deg[a] = np.bincount(edges[:, 0], minlength=n)
                in_deg[a] = np.bincount(edges[:, 1], minlength=n)
        return cls(n=n, layers=arrs, out_degrees=out_deg, in_degrees=in_deg,
                   meta=dict(meta or {}))

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    def recounted_degrees_match(self) -> bool:
        """Recount degrees from the edge lists and compare with the caches."""
        other = MultiplexNetwork.from_layers(self.n, self.layers)
        return (np.array_equal(other.out_degrees, self.out_degrees)
                and np.array_equal(other.in_degrees, self.in_degrees))

    def to_text(self) -> str:
        """Canonical serialization: header ``n M`` then sorted edge lines.

        Each edge line is ``layer lender borrower`` with 0-indexed nodes and
        1-indexed layers, sorted lexicographically.
        """
        lines = [f"{self.n} {self.num_layers}"]
        rows = []
        for a, edges in enumerate(self.layers, start=1):
            for u, v in edges:
                rows.append((a, int(u), int(v)))
        rows.sort()
        lines.extend(f"{a} {u} {v}" for a, u, v in rows)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "MultiplexNetwork":
        lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        n, m = (int(x) for x in lines[0].split())
        layers: list = [[] for _ in range(m)]
        for ln in lines[1:]:
            a, u, v = (int(x) for x in ln.split())
            if not 1 <= a <= m:
                raise ValueError(f"layer index {a} out of range")
            layers[a - 1].append((u, v))
        return cls.from_layers(n, layers)


@dataclass(frozen=True)
class ErdosRenyiLayer:
    mean_out_degree: float

    def __post_init__(self):
        if self.mean_out_degree < 0:
            raise ValueError("mean out-degree must be nonnegative")


@dataclass(frozen=True)
class ConfigurationLayer:
    out_seq: tuple
    in_seq: tuple

    def __post_init__(self):
        if sum(self.out_seq) != sum(self.in_seq):
            raise ValueError("out- and in-stub totals must match")


@dataclass(frozen=True)
class StaticModelLayer:
    gamma: float
    mean_out_degree: float

    def __post_init__(self):
        if self.gamma <= 2:
            raise ValueError("gamma must exceed 2 for a finite mean")
        if self.mean_out_degree < 0:
            raise ValueError("mean out-degree must be nonnegative")


LayerSpec = Union[ErdosRenyiLayer, ConfigurationLayer, StaticModelLayer]


@dataclass(frozen=True)
class SplitSpec:
    junior_fraction: float

    def __post_init__(self):
        if not 0.0 <= self.junior_fraction <= 1.0:
            raise ValueError("junior_fraction must lie in [0, 1]")


def _distinct_codes(rng: np.random.Generator, m: int, total: int,
                    existing: np.ndarray | None = None) -> np.ndarray:
    """First ``m`` distinct values of an i.i.d. uniform stream on [0, total)."""
    codes = np.empty(0, dtype=np.int64) if existing is None else existing
    while codes.size < m:
        extra = rng.integers(0, total, size=m - codes.size)
        codes = np.unique(np.concatenate([codes, extra]))
    return codes


def _decode_pairs(codes: np.ndarray, n: int) -> np.ndarray:
    # code = u * (n - 1) + r, with r skipping the self-loop slot
    u = codes // (n - 1)
    r = codes % (n - 1)
    v = r + (r >= u)
    return np.column_stack([u, v])


def sample_er_directed_layer(n: int, mean_out_degree: float, rng_seed) -> np.ndarray:
    """Directed G(n, p) with p = mean_out_degree / (n - 1); no self-loops."""
    if n < 2:
        raise ValueError("need n >= 2")
    if mean_out_degree < 0 or mean_out_degree > n - 1:
        raise ValueError("mean out-degree must lie in [0, n - 1]")
    rng = np.random.default_rng(rng_seed)
    total = n * (n - 1)
    p = mean_out_degree / (n - 1)
    m = int(rng.binomial(total, p))
    codes = _distinct_codes(rng, m, total)
    return _decode_pairs(codes, n)


def sample_configuration_layer(n: int, out_seq, in_seq, rng_seed,
                               max_retries: int = 100):
    """Uniform stub matching of a directed degree sequence.

    Self-loops and duplicate edges are repaired by swapping the offending
    in-stub with a uniformly chosen partner, up to ``max_retries`` passes;
    any remaining conflicts are erased. Returns ``(edges, n_erased)``.
    """
    out_seq = np.asarray(out_seq, dtype=np.int64)
    in_seq = np.asarray(in_seq, dtype=np.int64)
    if out_seq.shape != (n,) or in_seq.shape != (n,):
        raise ValueError("degree sequences must have length n")
    if (out_seq < 0).any() or (in_seq < 0).any():
        raise ValueError("degrees must be nonnegative")
    if out_seq.sum() != in_seq.sum():
        raise ValueError("out- and in-stub totals must match")
    rng = np.random.default_rng(rng_seed)
    src = np.repeat(np.arange(n), out_seq)
    tgt = np.repeat(np.arange(n), in_seq)
    rng.shuffle(tgt)
    e = src.size

    def bad_indices() -> np.ndarray:
        codes = src * np.int64(n) + tgt
        order = np.argsort(codes, kind="stable")
        sorted_codes = codes[order]
        dup = np.zeros(e, dtype=bool)
        dup[order[1:]] = sorted_codes[1:] == sorted_codes[:-1]
        return np.flatnonzero(dup | (src == tgt))

    bad = bad_indices()
    for _ in range(max_retries):
        if bad.size == 0:
            break
        for i in bad:
            j = int(rng.integers(0, e))
            tgt[i], tgt[j] = tgt[j], tgt[i]
        bad = bad_indices()
    keep = np.ones(e, dtype=bool)
    keep[bad] = False
    edges = np.column_stack([src[keep], tgt[keep]])
    return edges, int(bad.size)


def sample_static_model_directed(n: int, gamma: float, mean_out_degree: float,
                                 rng_seed, max_rounds: int = 200) -> np.ndarray:
    """Heavy-tailed directed graph via the static-model weight law.

    Node i = 1..n carries weight proportional to i**(-mu) with
    mu = 1 / (gamma - 1); edge sources are drawn from these weights so the
    out-degree tail decays like k**(-gamma). Targets are uniform among the
    other nodes (an assumption; the generating paperwork for in-degrees is
    not pinned down elsewhere). Duplicates and self-loops are redrawn.
    """
    if gamma <= 2:
        raise ValueError("gamma must exceed 2")
    if n < 2:
        raise ValueError("need n >= 2")
    if mean_out_degree < 0:
        raise ValueError("mean out-degree must be nonnegative")
    rng = np.random.default_rng(rng_seed)
    m = math.ceil(n * mean_out_degree)
    if m == 0:
        return np.empty((0, 2), dtype=np.int64)
    if m > n * (n - 1):
        raise ValueError("requested more edges than ordered pairs")
    mu = 1.0 / (gamma - 1.0)
    w = np.arange(1, n + 1, dtype=float) ** (-mu)
    w /= w.sum()
    codes = np.empty(0, dtype=np.int64)
    for _ in range(max_rounds):
        need = m - codes.size
        if need == 0:
            break
        src = rng.choice(n, size=need, p=w)
        r = rng.integers(0, n - 1, size=need)
        tgt = r + (r >= src)
        codes = np.unique(np.concatenate([codes, src * np.int64(n) + tgt]))
    else:
        raise RuntimeError("failed to draw enough distinct edges")
    u = codes // n
    v = codes % n
    return np.column_stack([u, v])


def sample_layer(spec: LayerSpec, n: int, rng_seed):
    """Dispatch on a layer spec; returns ``(edges, meta)``."""
    if isinstance(spec, ErdosRenyiLayer):
        return sample_er_directed_layer(n, spec.mean_out_degree, rng_seed), {}
    if isinstance(spec, ConfigurationLayer):
        edges, erased = sample_configuration_layer(n, spec.out_seq, spec.in_seq, rng_seed)
        return edges, {"erased": erased}
    if isinstance(spec, StaticModelLayer):
        return sample_static_model_directed(n, spec.gamma, spec.mean_out_degree, rng_seed), {}
    raise TypeError(f"unknown layer spec {spec!r}")


def generate_multiplex(n: int, layer_specs: Sequence[LayerSpec], rng_seed) -> MultiplexNetwork:
    """Independent layers from a single master seed (one child stream per layer)."""
    seq = rng_seed if isinstance(rng_seed, np.random.SeedSequence) \
        else np.random.SeedSequence(rng_seed)
    children = seq.spawn(len(layer_specs))
    layers = []
    meta: dict = {"layer_meta": []}
    for spec, child in zip(layer_specs, children):
        edges, layer_meta = sample_layer(spec, n, child)
        layers.append(edges)
        meta["layer_meta"].append(layer_meta)
    return MultiplexNetwork.from_layers(n, layers, meta=meta)


def split_edges_by_seniority(edges, spec: SplitSpec, rng_seed, n: int) -> MultiplexNetwork:
    """Assign each edge independently to the junior layer with the given
    probability; the rest become senior. Layers are disjoint by construction."""
    edges = _as_edge_array(edges)
    rng = np.random.default_rng(rng_seed)
    junior = rng.random(len(edges)) < spec.junior_fraction
    return MultiplexNetwork.from_layers(n, [edges[junior], edges[~junior]])


def overlap_count(net: MultiplexNetwork) -> int:
    """Number of ordered node pairs present in at least two layers."""
    if net.num_layers < 2:
        raise ValueError("overlap needs at least two layers")
    per_layer = [np.unique(e[:, 0] * np.int64(net.n) + e[:, 1]) for e in net.layers]
    codes = np.concatenate(per_layer) if per_layer else np.empty(0, dtype=np.int64)
    if codes.size == 0:
        return 0
    _, counts = np.unique(codes, return_counts=True)
    return int(np.count_nonzero(counts >= 2))
