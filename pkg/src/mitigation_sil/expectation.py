"""Failure-degree models for subsystems and their expected values.

A subsystem's degree of failure ``Q`` is a random variable on ``[0, 1]``: 0 is
a perfect response, 1 a complete failure.  Binary components are the special
case where ``Q`` only takes the values 0 and 1, so ``E[Q]`` is simply their
probability of failure on demand.

Random draws come from :class:`CounterStream`, a counter-based generator
(numpy's Philox4x64) keyed by ``(seed, subsystem index, ...)``.  Draw ``i`` of a
stream is always the ``i``-th uniform of that key, so Monte Carlo runs give
the same numbers however the work is chunked.
"""

from __future__ import annotations

import heapq
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, Sequence, Union

import numpy as np
from scipy import special, stats

from .errors import (
    DensityNotNormalizedError,
    InvalidModelError,
    PmfNotNormalizedError,
    QuadratureNonConvergenceError,
    SamplingUnsupportedError,
)

if TYPE_CHECKING:
    from .model import Scenario

PMF_TOLERANCE = 1e-9
QUADRATURE_TOLERANCE = 1e-10
MAX_INTERVALS = 10**6
MAX_SEED = 2**64 - 1


# ---------------------------------------------------------------------------
# Failure models
# ---------------------------------------------------------------------------


def _unit_interval(name: str, value) -> list[str]:
    try:
        v = float(value)
    except (TypeError, ValueError):
        return [f"{name} must be a number, got {value!r}"]
    if not (0.0 <= v <= 1.0):
        return [f"{name} = {value!r} is outside [0, 1]"]
    return []


@dataclass(frozen=True)
class Binary:
    """Component that either works (Q = 0) or fails completely (Q = 1)."""

    pfd: float
    kind = "binary"

    def problems(self) -> list[str]:
        return _unit_interval("pfd", self.pfd)


@dataclass(frozen=True)
class PointMass:
    """Deterministic degree of failure."""

    q: float
    kind = "point_mass"

    def problems(self) -> list[str]:
        return _unit_interval("q", self.q)


@dataclass(frozen=True)
class Proportional:
    """Failure measured as a ratio of a physical quantity to its limit.

    The response-time sensor is the usual example: ``Q = T / T_max``, so the
    model is characterised by ``expected_fraction = E[T] / T_max``.  Setting
    ``params = {"distribution": "beta", "alpha": a, "beta": b}`` gives the ratio
    a Beta spread for sampling; the mean must then match ``expected_fraction``.
    """

    expected_fraction: float
    measure: str = "fraction"
    params: dict = field(default_factory=dict)
    kind = "proportional"

    def spread(self) -> BetaDensity | None:
        if self.params.get("distribution") == "beta":
            return BetaDensity(float(self.params["alpha"]), float(self.params["beta"]))
        return None

    def problems(self) -> list[str]:
        out = _unit_interval("expected_fraction", self.expected_fraction)
        dist = self.params.get("distribution")
        if dist is None:
            return out
        if dist != "beta":
            return out + [f"unsupported proportional distribution {dist!r}"]
        if "alpha" not in self.params or "beta" not in self.params:
            return out + ["beta spread requires 'alpha' and 'beta' params"]
        spread = self.spread()
        out += spread.problems()
        if not out:
            mean = spread.alpha / (spread.alpha + spread.beta)
            if abs(mean - float(self.expected_fraction)) > PMF_TOLERANCE:
                out.append(
                    f"beta spread mean {mean:.6g} does not match "
                    f"expected_fraction {self.expected_fraction:.6g}"
                )
        return out


@dataclass(frozen=True)
class ModularBinomial:
    """A unit of identical independent modules, e.g. a multi-leaf damper.

    Degree of failure is the fraction of modules that fail, so ``E[Q]`` equals
    the per-module failure probability whatever the module count.  The count
    is only needed for sampling.
    """

    module_pfd: float
    module_count: int | None = None
    kind = "modular_binomial"

    def problems(self) -> list[str]:
        out = _unit_interval("module_pfd", self.module_pfd)
        n = self.module_count
        if n is not None and (isinstance(n, bool) or not isinstance(n, int) or n < 1):
            out.append(f"module_count must be a positive integer, got {n!r}")
        return out


@dataclass(frozen=True)
class BetaDensity:
    alpha: float
    beta: float
    kind = "beta"

    def problems(self) -> list[str]:
        out = []
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v) or v <= 0:
                out.append(f"{name} must be a positive finite number, got {v!r}")
        return out

    def pdf(self, x):
        return stats.beta.pdf(x, self.alpha, self.beta)

    def reflected_pdf(self, y):
        """Density at ``1 - y``, evaluated without cancellation."""
        return stats.beta.pdf(y, self.beta, self.alpha)


@dataclass(frozen=True)
class Empirical:
    """Discrete pmf over degrees of failure, as ``((value, probability), ...)``."""

    support: tuple[tuple[float, float], ...]
    kind = "empirical"

    def __post_init__(self):
        object.__setattr__(
            self, "support", tuple((float(v), float(p)) for v, p in self.support)
        )

    def problems(self) -> list[str]:
        if not self.support:
            return ["empirical support is empty"]
        out = []
        for i, (v, p) in enumerate(self.support):
            out += _unit_interval(f"support[{i}].value", v)
            out += _unit_interval(f"support[{i}].probability", p)
        total = math.fsum(p for _, p in self.support)
        if abs(total - 1.0) > PMF_TOLERANCE:
            out.append(f"probabilities sum to {total!r}, not 1")
        return out


@dataclass(frozen=True)
class Series:
    """Independent parts that must all work, e.g. a fan behind a damper.

    ``1 - Q = prod(1 - Q_i)`` over the named components.
    """

    components: tuple[tuple[str, "FailureModel"], ...]
    kind = "series"

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(tuple(c) for c in self.components))

    def problems(self) -> list[str]:
        if not self.components:
            return ["series needs at least one component"]
        out = []
        names = [name for name, _ in self.components]
        if len(set(names)) != len(names):
            out.append(f"duplicate component names in {names}")
        for name, model in self.components:
            out += [f"{name}: {p}" for p in model.problems()]
        return out


FailureModel = Union[Binary, PointMass, Proportional, ModularBinomial, BetaDensity, Empirical, Series]
MODEL_TYPES = (Binary, PointMass, Proportional, ModularBinomial, BetaDensity, Empirical, Series)


def check_model(model: FailureModel) -> None:
    if not isinstance(model, MODEL_TYPES):
        raise InvalidModelError(f"not a failure model: {model!r}")
    problems = model.problems()
    if problems:
        raise InvalidModelError(f"invalid {model.kind} model: " + "; ".join(problems))


# ---------------------------------------------------------------------------
# Expected values
# ---------------------------------------------------------------------------


def expect_discrete(pmf: Sequence[tuple[float, float]]) -> float:
    """Return ``sum(Pr(x_i) * x_i)`` for a list of ``(value, probability)`` pairs."""
    values = [float(v) for v, _ in pmf]
    probs = [float(p) for _, p in pmf]
    if any(p < 0.0 for p in probs):
        raise PmfNotNormalizedError("negative probability in pmf")
    total = math.fsum(probs)
    if abs(total - 1.0) > PMF_TOLERANCE:
        raise PmfNotNormalizedError(f"pmf sums to {total!r}, not 1")
    return math.fsum(p * v for v, p in zip(values, probs))


# QUADPACK 15-point Kronrod nodes on [-1, 1] (non-negative half) and weights;
# the 7-point Gauss rule uses every other node.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KRONROD_W = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GAUSS_W = np.zeros(15)
_GAUSS_W[1:7:2] = _WG[:3]
_GAUSS_W[7] = _WG[3]
_GAUSS_W[9:15:2] = _WG[2::-1]


def _gk15(func, a: float, b: float) -> tuple[float, float]:
    half = 0.5 * (b - a)
    x = 0.5 * (a + b) + half * _NODES
    # non-finite values are reported below, so numpy's warnings add nothing
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        fx = np.asarray(func(x), dtype=float)
    if not np.all(np.isfinite(fx)):
        raise QuadratureNonConvergenceError(
            f"integrand is not finite on [{a:.3g}, {b:.3g}]"
        )
    kronrod = half * float(fx @ _KRONROD_W)
    gauss = half * float(fx @ _GAUSS_W)
    return kronrod, abs(kronrod - gauss)


def adaptive_quadrature(
    func: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    tol: float = QUADRATURE_TOLERANCE,
    max_intervals: int = MAX_INTERVALS,
) -> tuple[float, float]:
    """Globally adaptive Gauss-Kronrod (7/15) integration of a vectorised ``func``.

    Bisects the interval with the largest error estimate until the summed
    estimate is at most ``tol``.  Returns ``(integral, error_estimate)``.
    """
    value, err = _gk15(func, a, b)
    heap = [(-err, a, b, value)]
    total_err = err
    count = 1
    while total_err > tol:
        if count >= max_intervals:
            raise QuadratureNonConvergenceError(
                f"error estimate {total_err:.3g} above {tol:.3g} after {count} intervals"
            )
        neg_err, lo, hi, val = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if not (lo < mid < hi):
            raise QuadratureNonConvergenceError(
                f"cannot subdivide [{lo!r}, {hi!r}] further; error {total_err:.3g}"
            )
        left, left_err = _gk15(func, lo, mid)
        right, right_err = _gk15(func, mid, hi)
        heapq.heappush(heap, (-left_err, lo, mid, left))
        heapq.heappush(heap, (-right_err, mid, hi, right))
        count += 1
        # re-sum rather than update incrementally so round-off cannot drift
        if count % 64 == 0:
            total_err = math.fsum(-e for e, *_ in heap)
        else:
            total_err += neg_err + left_err + right_err
        if total_err <= tol:
            total_err = math.fsum(-e for e, *_ in heap)
    return math.fsum(v for *_, v in heap), total_err


def _smoothstep(t):
    return t * t * (3.0 - 2.0 * t)


def _unit_integral(left: Callable, right: Callable, tol: float) -> float:
    # x = t^2 (3 - 2t) flattens the endpoint, which absorbs x^(-1/2)-type
    # density singularities.  [0, 1/2] is integrated in x and (1/2, 1] in
    # y = 1 - x, so both halves keep full floating-point resolution at
    # their singular end; ``right(y)`` is the integrand at x = 1 - y.
    def folded(t):
        x = _smoothstep(t)
        return (left(x) + right(x)) * 6.0 * t * (1.0 - t)

    value, _ = adaptive_quadrature(folded, 0.0, 0.5, tol)
    return value


def expect_continuous(
    density: Callable[[np.ndarray], np.ndarray],
    tol: float = QUADRATURE_TOLERANCE,
    reflected: Callable[[np.ndarray], np.ndarray] | None = None,
) -> float:
    """Return ``integral of x * f(x)`` over ``[0, 1]`` for a density ``f``.

    ``density`` must accept numpy arrays.  ``reflected(y)``, when given, must
    equal ``density(1 - y)``; it lets densities that are singular at 1 be
    evaluated without the round-off of forming ``1 - y``.  The density is
    checked to integrate to one within ``tol`` before the mean is computed.
    """
    def f(x):
        return np.asarray(density(x), dtype=float)

    if reflected is None:
        def g(y):
            return f(1.0 - y)
    else:
        def g(y):
            return np.asarray(reflected(y), dtype=float)

    norm = _unit_integral(f, g, tol)
    if abs(norm - 1.0) > tol:
        raise DensityNotNormalizedError(f"density integrates to {norm!r} on [0, 1]")
    return _unit_integral(lambda x: x * f(x), lambda y: (1.0 - y) * g(y), tol)


def expect_failure(model: FailureModel) -> float:
    """E[Q] for a subsystem failure model."""
    check_model(model)
    match model:
        case Binary(pfd=p):
            return float(p)
        case PointMass(q=q):
            return float(q)
        case Proportional(expected_fraction=frac):
            return float(frac)
        case ModularBinomial(module_pfd=p):
            return float(p)
        case BetaDensity():
            return expect_continuous(model.pdf, reflected=model.reflected_pdf)
        case Empirical(support=support):
            return expect_discrete(support)
        case Series(components=components):
            return 1.0 - math.prod(1.0 - expect_failure(m) for _, m in components)


def retarget(model: FailureModel, expected: float) -> FailureModel:
    """Return a model of the same kind whose expected failure is ``expected``.

    Beta spreads keep their concentration ``alpha + beta``.  Empirical and
    series models have no unique re-parametrisation and are rejected.
    """
    if not 0.0 <= expected <= 1.0:
        raise InvalidModelError(f"expected failure {expected!r} outside [0, 1]")
    match model:
        case Binary():
            return Binary(expected)
        case PointMass():
            return PointMass(expected)
        case ModularBinomial(module_count=n):
            return ModularBinomial(expected, n)
        case BetaDensity(alpha=a, beta=b):
            if not 0.0 < expected < 1.0:
                return PointMass(expected)
            return BetaDensity(expected * (a + b), (1.0 - expected) * (a + b))
        case Proportional(measure=measure, params=params):
            spread = model.spread()
            if spread is None or not 0.0 < expected < 1.0:
                return Proportional(expected, measure)
            kappa = spread.alpha + spread.beta
            new = dict(params, alpha=expected * kappa, beta=(1.0 - expected) * kappa)
            return Proportional(expected, measure, new)
    raise InvalidModelError(f"cannot retarget a {model.kind} model")


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CounterStream:
    """Deterministic uniform stream addressed by ``(seed, key, draw index)``."""

    seed: int
    key: tuple[int, ...] = ()

    def __post_init__(self):
        if isinstance(self.seed, bool) or not isinstance(self.seed, (int, np.integer)):
            raise TypeError(f"seed must be an integer, got {self.seed!r}")
        if not 0 <= int(self.seed) <= MAX_SEED:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    def child(self, index: int) -> CounterStream:
        return CounterStream(self.seed, self.key + (int(index),))

    def uniforms(self, start: int, count: int) -> np.ndarray:
        """Uniforms on ``[0, 1)`` for draw indices ``start .. start + count - 1``."""
        bitgen = np.random.Philox(np.random.SeedSequence(int(self.seed), spawn_key=self.key))
        # Philox emits 4 x 64-bit words per counter step; one double per word
        block, offset = divmod(int(start), 4)
        bitgen.advance(block)
        return np.random.Generator(bitgen).random(count + offset)[offset:]


def _binomial_fraction(u: np.ndarray, n: int, p: float) -> np.ndarray:
    cdf = stats.binom.cdf(np.arange(n + 1), n, p)
    failed = np.minimum(np.searchsorted(cdf, u, side="right"), n)
    return failed / n


def _sample_array(model: FailureModel, stream: CounterStream, start: int, size: int) -> np.ndarray:
    match model:
        case Binary(pfd=p):
            return (stream.uniforms(start, size) < p).astype(float)
        case PointMass(q=q):
            return np.full(size, float(q))
        case Proportional(expected_fraction=frac):
            spread = model.spread()
            if spread is None:
                return np.full(size, float(frac))
            return _sample_array(spread, stream, start, size)
        case ModularBinomial(module_pfd=p, module_count=n):
            if n is None:
                raise SamplingUnsupportedError(
                    "modular binomial model needs module_count to be sampled"
                )
            return _binomial_fraction(stream.uniforms(start, size), n, p)
        case BetaDensity(alpha=a, beta=b):
            return special.betaincinv(a, b, stream.uniforms(start, size))
        case Empirical(support=support):
            values = np.array([v for v, _ in support])
            cum = np.cumsum([p for _, p in support])
            idx = np.searchsorted(cum, stream.uniforms(start, size), side="right")
            return values[np.minimum(idx, len(values) - 1)]
        case Series(components=components):
            success = np.ones(size)
            for i, (_, part) in enumerate(components):
                success *= 1.0 - _sample_array(part, stream.child(i), start, size)
            return 1.0 - success
    raise InvalidModelError(f"not a failure model: {model!r}")


def sample_failure(
    model: FailureModel,
    stream: CounterStream | int,
    size: int | None = None,
    start: int = 0,
):
    """Draw degrees of failure from ``model``.

    Returns a float when ``size`` is None, otherwise an array of ``size`` draws
    taken at draw indices ``start, start + 1, ...`` of ``stream``.
    """
    check_model(model)
    if not isinstance(stream, CounterStream):
        stream = CounterStream(stream)
    n = 1 if size is None else int(size)
    draws = _sample_array(model, stream, start, n)
    return float(draws[0]) if size is None else draws


def sampleable(model: FailureModel) -> bool:
    match model:
        case ModularBinomial(module_count=None):
            return False
        case Series(components=components):
            return all(sampleable(m) for _, m in components)
    return True


# ---------------------------------------------------------------------------
# Monte Carlo oracle
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    stderr: float
    samples: int
    seed: int


def mc_expected_consequence(
    scenario: Scenario,
    samples: int,
    seed: int,
    *,
    models: Sequence[FailureModel] | None = None,
    chunk_size: int = 1 << 16,
    workers: int = 1,
) -> MCEstimate:
    """Estimate E[C] by sampling every subsystem independently.

    ``models`` overrides the scenario's subsystem models (same order).  Chunks
    may run on ``workers`` threads; each chunk reads its own counter range and
    the reduction is an exact sum over all draws in order, so the estimate does
    not depend on ``chunk_size`` or ``workers``.
    """
    from .risk import consequence_batch

    if isinstance(samples, bool) or not isinstance(samples, (int, np.integer)):
        raise TypeError("samples must be an integer")
    if samples < 1000:
        raise ValueError(f"need at least 1000 samples, got {samples}")
    models = list(models) if models is not None else [s.model for s in scenario.subsystems]
    if len(models) != len(scenario.subsystems):
        raise ValueError("one model per subsystem is required")
    for sub, model in zip(scenario.subsystems, models):
        check_model(model)
        if not sampleable(model):
            raise SamplingUnsupportedError(f"subsystem {sub.id!r} cannot be sampled")
    root = CounterStream(seed)
    streams = [root.child(j) for j in range(len(models))]

    def run_chunk(start: int) -> np.ndarray:
        size = min(chunk_size, samples - start)
        q = np.column_stack(
            [_sample_array(m, st, start, size) for m, st in zip(models, streams)]
        )
        return consequence_batch(q, scenario)

    starts = range(0, samples, chunk_size)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(run_chunk, starts))
    else:
        chunks = [run_chunk(s) for s in starts]
    values = np.concatenate(chunks)
    mean = math.fsum(values) / samples
    var = math.fsum((values - mean) ** 2) / (samples - 1)
    return MCEstimate(mean, math.sqrt(var / samples), int(samples), int(seed))
