"""The simulator core: exact exploration birth process plus an edge oracle.

``run_exploration`` grows a cluster one vertex at a time.  With j vertices
discovered the next birth happens after an Exp(total) waiting time, where
``total`` is the aggregate attraction weight of all undiscovered sites, and
the newborn is z with probability W(z)/total.  By memorylessness of the
exponential edge weights this reproduces, exactly in distribution, the order
and times at which first-passage percolation discovers the torus from the
source.

``EdgeWeightSample`` realizes one joint assignment of all edge weights
``norm(u - v)**alpha * E`` lazily through a counter-based hash, and the
Dijkstra / all-pairs oracles compute passage times on that realization as an
independent route to the same law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.sparse import csgraph

from . import rng, torus, weights
from .errors import ConfigError, InvariantViolation
from .torus import Site, TorusConfig
from .weights import WeightField

#: Caps for the dense oracle paths (O(n^2) edges, O(n^3) all-pairs work).
DIJKSTRA_CAP = 4096
ALL_PAIRS_CAP = 1024

#: Relative float slack allowed on the hard rate-sandwich assertion.
SANDWICH_RTOL = 1e-9


@dataclass(frozen=True)
class StopRule:
    """When to stop an exploration run."""

    kind: str  # "count" | "target" | "full" | "time"
    k: Optional[int] = None
    site: Optional[Site] = None
    t: Optional[float] = None

    @classmethod
    def count(cls, k: int) -> "StopRule":
        if k < 1:
            raise ConfigError(f"count must be >= 1, got {k}")
        return cls("count", k=k)

    @classmethod
    def target(cls, site: Site) -> "StopRule":
        return cls("target", site=site)

    @classmethod
    def full(cls) -> "StopRule":
        return cls("full")

    @classmethod
    def time(cls, t: float) -> "StopRule":
        if not (t >= 0.0):
            raise ConfigError(f"time horizon must be >= 0, got {t}")
        return cls("time", t=t)


@dataclass(frozen=True)
class ExplorationRecord:
    """Births of one exploration run: sites, times, and pre-birth rates.

    ``times[0] == 0`` is the source; ``rates[i]`` is the field total just
    before the i-th birth (``rates[0]`` is NaN).  A record with n births is a
    complete flooding.
    """

    cfg: TorusConfig
    source: Site
    site_indices: np.ndarray
    times: np.ndarray
    rates: np.ndarray
    horizon: str

    @property
    def n_born(self) -> int:
        return len(self.times)

    def site(self, i: int) -> Site:
        return torus.index_to_site(int(self.site_indices[i]), self.cfg)

    @property
    def births(self) -> List[Tuple[Site, float, float]]:
        return [
            (self.site(i), float(self.times[i]), float(self.rates[i]))
            for i in range(self.n_born)
        ]

    def tau(self, k: int) -> float:
        """Time of the k-th birth (cluster reaches size k + 1)."""
        if not (0 <= k < self.n_born):
            raise ConfigError(f"k = {k} out of range, record has {self.n_born} births")
        return float(self.times[k])

    def ball_size(self, t: float) -> int:
        """Number of sites discovered by time t (including the source)."""
        return int(np.searchsorted(self.times, t, side="right"))

    def flooding(self) -> float:
        if self.n_born != self.cfg.n:
            raise ConfigError("flooding time requires a complete run")
        return float(self.times[-1])


def _check_sandwich(cfg: TorusConfig, j: int, rate: float) -> None:
    lower, upper = weights.rate_bounds(cfg, j)
    slack = SANDWICH_RTOL * upper
    if rate > upper + slack or rate < lower - slack:
        raise InvariantViolation(
            f"rate sandwich violated at j={j}: {lower!r} <= {rate!r} <= {upper!r}"
        )


def _select_scan(field: WeightField, u: float) -> int:
    """Newborn by cumulative scan in deterministic site order (O(n))."""
    cum = np.cumsum(field.values)
    mass = cum[-1]
    if not (mass > 0.0):
        raise InvariantViolation("selection requested from an exhausted field")
    idx = int(np.searchsorted(cum, u * mass, side="right"))
    # Float ties land on zero-weight (discovered) slots at most at boundaries;
    # advance in site order, which is the documented tie-break.
    while idx < len(field.values) and field.values[idx] <= 0.0:
        idx += 1
    if idx >= len(field.values):
        idx = int(np.max(np.nonzero(field.values > 0.0)[0]))
    return idx


def _select_rejection(field: WeightField, gen: np.random.Generator) -> int:
    """Newborn by uniform proposal / accept with W(z)/W_max (flagged path)."""
    w_max = float(field.values.max())
    if not (w_max > 0.0):
        raise InvariantViolation("selection requested from an exhausted field")
    while True:
        idx = int(gen.integers(field.cfg.n))
        w = float(field.values[idx])
        if w <= 0.0:
            continue
        if gen.random() * w_max < w:
            return idx


def run_exploration(
    source: Site,
    stop: StopRule,
    cfg: TorusConfig,
    seed: rng.SeedLike,
    selection: str = "scan",
) -> ExplorationRecord:
    """Simulate the exploration birth process from ``source`` until ``stop``.

    ``selection`` chooses the newborn sampler: "scan" (cumulative scan,
    default) or "rejection" (uniform proposal accepted with W(z)/W_max); the
    two agree in distribution.  Every step asserts the deterministic rate
    sandwich; a violation raises InvariantViolation.
    """
    if selection not in ("scan", "rejection"):
        raise ConfigError(f"unknown selection mode {selection!r}")
    if stop.kind == "count" and stop.k > cfg.n - 1:
        raise ConfigError(f"count {stop.k} exceeds n - 1 = {cfg.n - 1}")
    if stop.kind == "target":
        tgt: Optional[int] = torus.site_to_index(stop.site, cfg)
    else:
        tgt = None

    src = torus.site_to_index(source, cfg)
    if tgt is not None and tgt == src:
        return ExplorationRecord(
            cfg=cfg,
            source=source,
            site_indices=np.array([src], dtype=np.int64),
            times=np.zeros(1),
            rates=np.array([math.nan]),
            horizon="target",
        )

    gen = rng.generator(seed, rng.STREAM_EXPLORE)
    field = WeightField.initial(source, cfg)
    sites = [src]
    times = [0.0]
    rates = [math.nan]
    t = 0.0
    horizon = "exhausted"

    while True:
        if stop.kind == "count" and len(sites) - 1 >= stop.k:
            horizon = "count"
            break
        if len(sites) == cfg.n:
            horizon = "full"
            break

        j = field.n_discovered
        rate = field.total
        if not (rate > 0.0):
            break
        _check_sandwich(cfg, j, rate)

        t += -math.log(1.0 - gen.random()) / rate
        if stop.kind == "time" and t > stop.t:
            horizon = "time"
            break

        if selection == "scan":
            z = _select_scan(field, gen.random())
        else:
            z = _select_rejection(field, gen)
        field.discover_index(z)
        sites.append(z)
        times.append(t)
        rates.append(rate)

        if tgt is not None and z == tgt:
            horizon = "target"
            break

    return ExplorationRecord(
        cfg=cfg,
        source=source,
        site_indices=np.array(sites, dtype=np.int64),
        times=np.array(times),
        rates=np.array(rates),
        horizon=horizon,
    )


def transmission_time(u: Site, v: Site, cfg: TorusConfig, seed: rng.SeedLike) -> float:
    """Passage time from u to v: birth time of v when exploring from u."""
    record = run_exploration(u, StopRule.target(v), cfg, seed)
    return float(record.times[-1])


def flooding_time(u: Site, cfg: TorusConfig, seed: rng.SeedLike) -> float:
    """Time to discover every site from u: final birth time of a full run."""
    record = run_exploration(u, StopRule.full(), cfg, seed)
    return record.flooding()


# ---------------------------------------------------------------------------
# Edge-weight realization and shortest-path oracle
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EdgeWeightSample:
    """One deterministic realization of all edge weights, O(1) memory.

    The weight of {u, v} is norm(u - v)**alpha * E, with E a rate-one
    exponential obtained by hashing (seed, sorted pair) to a uniform in (0,1)
    and inverting the CDF.  Symmetric, strictly positive, reproducible; with
    alpha = 0 the weights are plain exponentials.
    """

    cfg: TorusConfig
    key: Tuple[int, int]

    @classmethod
    def from_seed(cls, cfg: TorusConfig, seed: rng.SeedLike) -> "EdgeWeightSample":
        return cls(cfg=cfg, key=rng.hash_key(seed, rng.STREAM_EDGES))

    def _norm_power(self) -> np.ndarray:
        table = torus.norm_table(self.cfg)
        if self.cfg.alpha == 0.0:
            out = np.ones_like(table)
            out[torus.origin_index(self.cfg)] = 0.0
            return out
        return table**self.cfg.alpha

    def weight(self, u: Site, v: Site) -> float:
        iu = torus.site_to_index(u, self.cfg)
        iv = torus.site_to_index(v, self.cfg)
        if iu == iv:
            raise ConfigError("edge weights are defined for distinct sites")
        u01 = rng.pair_uniform(np.array([iu]), np.array([iv]), self.key)[0]
        diff = torus.pair_difference_index(
            np.array([iu]), np.array([iv]), self.cfg
        )[0]
        return float(self._norm_power()[diff] * -math.log(u01))

    def weights_from(self, u: Site) -> np.ndarray:
        """Row of weights from u to every site (0.0 in the self slot)."""
        iu = torus.site_to_index(u, self.cfg)
        return self._row(iu, self._norm_power())

    def _row(self, iu: int, norm_pow: np.ndarray) -> np.ndarray:
        n = self.cfg.n
        others = np.arange(n, dtype=np.int64)
        u01 = rng.pair_uniform(np.full(n, iu, dtype=np.int64), others, self.key)
        diff = torus.pair_difference_index(np.full(n, iu, dtype=np.int64), others, self.cfg)
        row = norm_pow[diff] * -np.log(u01)
        row[iu] = 0.0
        return row

    def dense_matrix(self) -> np.ndarray:
        """Full symmetric weight matrix (diagonal 0); n <= DIJKSTRA_CAP."""
        n = self.cfg.n
        if n > DIJKSTRA_CAP:
            raise ConfigError(f"dense edge matrix capped at n <= {DIJKSTRA_CAP}")
        iu, ju = np.triu_indices(n, k=1)
        u01 = rng.pair_uniform(iu, ju, self.key)
        diff = torus.pair_difference_index(iu, ju, self.cfg)
        w = self._norm_power()[diff] * -np.log(u01)
        mat = np.zeros((n, n), dtype=np.float64)
        mat[iu, ju] = w
        mat[ju, iu] = w
        return mat


def dijkstra_oracle(u: Site, cfg: TorusConfig, seed: rng.SeedLike) -> Dict[Site, float]:
    """Single-source passage times on one edge realization (priority-queue).

    Independent oracle for the exploration law: exact shortest-path distances
    under EdgeWeightSample on the complete graph.  Dense, so n <= 4096.
    """
    if cfg.n > DIJKSTRA_CAP:
        raise ConfigError(f"dijkstra oracle capped at n <= {DIJKSTRA_CAP}")
    dist = _oracle_distances(u, cfg, seed)
    return {
        torus.index_to_site(i, cfg): float(dist[i]) for i in range(cfg.n)
    }


def _oracle_distances(u: Site, cfg: TorusConfig, seed: rng.SeedLike) -> np.ndarray:
    sample = EdgeWeightSample.from_seed(cfg, seed)
    mat = sample.dense_matrix()
    src = torus.site_to_index(u, cfg)
    # Strictly positive weights, so the zero diagonal is never read as an edge.
    return csgraph.dijkstra(mat, directed=False, indices=src)


def oracle_transmission_time(
    u: Site, v: Site, cfg: TorusConfig, seed: rng.SeedLike
) -> float:
    """Oracle-side sample of the u-to-v passage time (fresh realization)."""
    dist = _oracle_distances(u, cfg, seed)
    return float(dist[torus.site_to_index(v, cfg)])


def distance_matrix(cfg: TorusConfig, seed: rng.SeedLike) -> np.ndarray:
    """All-pairs passage times on one shared edge realization.

    Equivalent to running the single-source oracle from every site on the
    same realization; n <= 1024 (cubic work).
    """
    if cfg.n > ALL_PAIRS_CAP:
        raise ConfigError(f"all-pairs oracle capped at n <= {ALL_PAIRS_CAP}")
    sample = EdgeWeightSample.from_seed(cfg, seed)
    mat = sample.dense_matrix()
    return csgraph.floyd_warshall(mat, directed=True)


def diameter_exact(cfg: TorusConfig, seed: rng.SeedLike) -> float:
    """Max passage time over all pairs on one shared edge realization."""
    return float(distance_matrix(cfg, seed).max())
