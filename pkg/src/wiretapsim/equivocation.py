"""Exact and Monte-Carlo conditional entropies of the keystream and the key.

Two modes:

* exact -- enumerate the joint distribution of (K or X, A, U, V) over all
  rounds, derive Z and the decode flag, and compute any ``H(T | C)`` as
  ``H(T, C) - H(C)``.  Limited to ``2**26`` joint states.
* monte_carlo -- sample (key, session), compute the exact posterior over all
  keys for the realised observations, average its entropy.  Because each
  per-sample posterior is exact, the mean is unbiased for ``H(K | obs)``.

Entropies are in bits and follow the ``0 log 0 = 0`` convention.
"""

from __future__ import annotations

import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from .channel import binary_entropy, weight_probs
from .keystream import ENUMERATION_CAP, stream_table
from .system import AdversaryStrategy, InvariantViolation, SystemParams, TransmissionRecord, draw_session

__all__ = [
    "EXACT_STATE_CAP",
    "CapExceeded",
    "DegeneratePosterior",
    "ObservationSet",
    "EquivocationReport",
    "BoundReport",
    "ThresholdResult",
    "JointDistribution",
    "posterior_over_keys",
    "conditional_entropy_exact",
    "conditional_entropy_mc",
    "equivocation_curves",
    "delta_ecc",
    "map_decode_error_rate",
    "lemma_bound",
    "lemma_check",
    "chain_rule_identity_check",
    "find_threshold",
]

EXACT_STATE_CAP = 1 << 26
CHUNK = 250


class CapExceeded(ValueError):
    """Exact enumeration would exceed the state-space cap."""


class DegeneratePosterior(ValueError):
    """Every key has zero likelihood for the given observations."""


def _entropy(p: np.ndarray) -> float:
    p = p[p > _kernels.PROB_FLOOR]
    return float(-(p * np.log2(p)).sum())


# ---------------------------------------------------------------- posterior


@dataclass(frozen=True)
class ObservationSet:
    """What the adversary holds: per-round ``a``, ``z``, its own ``v_star`` and
    optionally the receiver flag.  Vectors are packed words."""

    params: SystemParams
    a: np.ndarray
    z: np.ndarray
    v_star: np.ndarray
    f_d: np.ndarray | None = None

    def __post_init__(self):
        tau = len(self.a)
        if len(self.z) != tau or len(self.v_star) != tau:
            raise ValueError("a, z and v_star must cover the same rounds")
        if self.f_d is not None and len(self.f_d) != tau:
            raise ValueError("f_d must be given for all rounds or none")

    @property
    def rounds(self) -> int:
        return len(self.a)

    @classmethod
    def from_records(
        cls, params: SystemParams, records: Sequence[TransmissionRecord], with_flag: bool = False
    ) -> "ObservationSet":
        return cls(
            params,
            np.array([r.a.bits for r in records], dtype=np.int64),
            np.array([r.z.bits for r in records], dtype=np.int64),
            np.array([r.v_star.bits for r in records], dtype=np.int64),
            np.array([bool(r.f_d) for r in records]) if with_flag else None,
        )


class _PosteriorContext:
    """Tables shared by every posterior evaluation for one parameter set."""

    def __init__(self, params: SystemParams, tau_max: int):
        if not params.keystream.is_keyed:
            raise ValueError("key posteriors need the keyed keystream model")
        if params.key_bits > ENUMERATION_CAP:
            raise CapExceeded(
                f"{params.key_bits}-bit keys exceed the enumeration cap of {ENUMERATION_CAP}"
            )
        self.params = params
        self.tau_max = tau_max
        self.stream = stream_table(params.keystream, params.key_bits, max(tau_max, 1), params.n)
        self.pw = weight_probs(params.channel.p, params.n)
        self.ucode = params.u_code
        self.genie = params.flag_mode == "genie"
        self._flag_tab = None

    @property
    def flag_tab(self) -> np.ndarray:
        if self._flag_tab is None:
            self._flag_tab = self.params.flag_table
        return self._flag_tab

    def logliks(self, a, z, v_star, f_d=None) -> np.ndarray:
        tau = len(a)
        base = self.params.a_code[a] ^ v_star
        use_flag = f_d is not None
        return _kernels.round_logliks(
            np.ascontiguousarray(z, dtype=np.int64),
            np.ascontiguousarray(self.stream[:, :tau]),
            np.ascontiguousarray(base, dtype=np.int64),
            self.ucode,
            self.pw,
            self.flag_tab if use_flag else np.zeros(1, dtype=np.int64),
            np.ascontiguousarray(a, dtype=np.int64),
            np.asarray(f_d, dtype=np.bool_) if use_flag else np.zeros(tau, dtype=np.bool_),
            use_flag,
            self.genie,
        )


def posterior_over_keys(obs: ObservationSet) -> np.ndarray:
    """``P(k | obs)`` for every key in lexicographic order.

    The per-round likelihood marginalises the coset randomness ``u`` exactly;
    the noise term is closed form, so ``v`` is never enumerated.
    """
    params = obs.params
    if obs.rounds == 0:
        if params.key_bits > ENUMERATION_CAP:
            raise CapExceeded(f"{params.key_bits}-bit keys exceed the enumeration cap")
        return np.full(1 << params.key_bits, 1.0 / (1 << params.key_bits))
    ctx = _PosteriorContext(params, obs.rounds)
    post = _kernels.posterior_from_logliks(ctx.logliks(obs.a, obs.z, obs.v_star, obs.f_d))
    if post is None:
        raise DegeneratePosterior("no key is consistent with the observations")
    return post


# ------------------------------------------------------------------ reports


@dataclass(frozen=True)
class EquivocationReport:
    quantity: str
    value_bits: float
    stderr_bits: float
    mode: str
    samples: int
    tau: int
    params: dict = field(default_factory=dict)
    model: str = ""
    flag_mode: str = ""
    seed: int | None = None
    extra: dict = field(default_factory=dict)

    def to_record(self) -> dict[str, object]:
        return {
            "quantity": self.quantity,
            "value_bits": self.value_bits,
            "stderr_bits": self.stderr_bits,
            "mode": self.mode,
            "samples": self.samples,
            "tau": self.tau,
            "p": self.params.get("p"),
            "key_bits": self.params.get("key_bits"),
            "model": self.model,
            "flag_mode": self.flag_mode,
            "seed": self.seed,
        }

    def format(self) -> str:
        """Structured text: one ``field=value`` per line, floats with 17 digits."""
        lines = []
        for k, v in self.to_record().items():
            lines.append(f"{k}={v!r}" if isinstance(v, float) else f"{k}={v}")
        return "\n".join(lines)


@dataclass(frozen=True)
class BoundReport:
    bound_bits: float
    terms: dict
    satisfied: bool | None = None
    exact_bits: float | None = None


@dataclass(frozen=True)
class ThresholdResult:
    tau_thres: int | None
    curve: list[tuple[int, EquivocationReport]]
    threshold_bits: float

    @property
    def reached(self) -> bool:
        return self.tau_thres is not None


def _model_name(params: SystemParams) -> str:
    return params.keystream.spec()


# ------------------------------------------------------------ exact joints

_LABELS = {"A", "U", "X", "V", "V'", "Z", "K", "F"}


def _parse_quantity(quantity: str) -> tuple[list[str], list[str]]:
    m = re.fullmatch(r"\s*H\((.*?)(?:\|(.*))?\)\s*", quantity)
    if not m:
        raise ValueError(f"cannot parse quantity {quantity!r}")

    def names(text):
        if not text:
            return []
        out = []
        for raw in text.split(","):
            raw = raw.strip()
            raw = {"Fd": "F", "F_d": "F", "Vp": "V'", "V_prime": "V'"}.get(raw, raw)
            if raw not in _LABELS:
                raise ValueError(f"unknown variable {raw!r} in {quantity!r}")
            out.append(raw)
        return out

    return names(m.group(1)), names(m.group(2))


class JointDistribution:
    """Exact joint law of one session of ``tau`` rounds.

    ``model`` ideal: each round's keystream block is uniform and independent.
    ``model`` keyed: ``X = f(K)`` with ``K`` uniform.  ``v_star`` is a constant
    injected every round.
    """

    def __init__(self, params: SystemParams, tau: int = 1, v_star: int = 0, cap: int = EXACT_STATE_CAP):
        n, l, ub = params.n, params.l, params.u_bits
        keyed = params.keystream.is_keyed
        p = params.channel.p
        v_support = np.arange(1, dtype=np.int64) if p == 0.0 else np.arange(1 << n, dtype=np.int64)
        per_round = (1 << l) * (1 << ub) * len(v_support) * (1 if keyed else 1 << n)
        total = (1 << params.key_bits if keyed else 1) * per_round**tau
        if total > cap:
            raise CapExceeded(
                f"exact enumeration needs {total} joint states (cap {cap}); "
                "use the Monte-Carlo estimator instead"
            )
        self.params = params
        self.tau = tau
        self.states = total
        idx = np.arange(total, dtype=np.int64)
        pw = weight_probs(p, n)
        prob = np.ones(total)
        cols: dict[str, list[tuple[np.ndarray, int]]] = {k: [] for k in _LABELS}

        def take(size):
            nonlocal idx
            val = idx % size
            idx = idx // size
            return val

        if keyed:
            k = take(1 << params.key_bits)
            stream = stream_table(params.keystream, params.key_bits, tau, n)
            cols["K"].append((k, params.key_bits))
            prob /= 1 << params.key_bits
        for t in range(tau):
            a = take(1 << l)
            u = take(1 << ub)
            v = v_support[take(len(v_support))]
            if keyed:
                x = stream[k, t]
            else:
                x = take(1 << n)
                prob /= 1 << n
            prob = prob / ((1 << l) * (1 << ub)) * pw[np.bitwise_count(v)]
            z = params.a_code[a] ^ params.u_code[u] ^ x ^ v ^ v_star
            f = params.flags(z ^ x, a).astype(np.int64)
            for name, val, width in (
                ("A", a, l), ("U", u, ub), ("X", x, n), ("V", v, n),
                ("V'", v ^ v_star, n), ("Z", z, n), ("F", f, 1),
            ):
                cols[name].append((val, width))
        self.prob = prob
        self._cols = cols
        self._cache: dict[frozenset, float] = {}

    def entropy(self, names: Sequence[str]) -> float:
        key = frozenset(names)
        if key not in self._cache:
            self._cache[key] = self._entropy(sorted(key))
        return self._cache[key]

    def _entropy(self, names: list[str]) -> float:
        parts = [c for nm in names for c in self._cols[nm] if c[1] > 0]
        if not parts:
            return 0.0
        width = sum(w for _, w in parts)
        if width <= 62:
            code = np.zeros(len(self.prob), dtype=np.int64)
            off = 0
            for val, w in parts:
                code |= val << off
                off += w
            _, inv = np.unique(code, return_inverse=True)
        else:
            _, inv = np.unique(np.stack([v for v, _ in parts], axis=1), axis=0, return_inverse=True)
        return _entropy(np.bincount(inv.ravel(), weights=self.prob))

    def cond(self, target: Sequence[str], given: Sequence[str] = ()) -> float:
        """``H(target | given)`` in bits."""
        return self.entropy([*target, *given]) - self.entropy(given)

    def H(self, quantity: str) -> float:
        target, given = _parse_quantity(quantity)
        return self.cond(target, given)


def _clamp(value: float, upper: float) -> float:
    if -1e-9 < value < 0.0:
        return 0.0
    if upper < value < upper + 1e-9:
        return upper
    return value


def _prior_entropy(params: SystemParams, target: list[str], tau: int) -> float:
    widths = {"A": params.l, "U": params.u_bits, "X": params.n, "V": params.n, "V'": params.n,
              "Z": params.n, "F": 1}
    total = sum(widths[t] * tau for t in set(target) if t != "K")
    if "K" in target:
        total += params.key_bits
    return float(total)


def conditional_entropy_exact(
    params: SystemParams,
    quantity: str,
    tau: int = 1,
    v_star: int = 0,
    joint: JointDistribution | None = None,
) -> EquivocationReport:
    """Exact ``H(target | conditioning)``, e.g. ``"H(X|A,Z)"`` or ``"H(K|A,Z,Fd)"``."""
    target, _ = _parse_quantity(quantity)
    if "K" in target and not params.keystream.is_keyed:
        raise ValueError("H(K|...) needs the keyed keystream model")
    if joint is None:
        joint = JointDistribution(params, tau, v_star)
    value = _clamp(joint.H(quantity), _prior_entropy(params, target, joint.tau))
    return EquivocationReport(
        quantity=quantity,
        value_bits=value,
        stderr_bits=0.0,
        mode="exact",
        samples=joint.states,
        tau=joint.tau,
        params=params.describe(),
        model=_model_name(params),
        flag_mode=params.flag_mode,
    )


def chain_rule_identity_check(
    params: SystemParams, *, flag: bool = False, tau: int = 1, v_star: int = 0,
    joint: JointDistribution | None = None,
) -> float:
    """Residual of the two-decomposition identity for the keystream equivocation.

    Without the flag::

        H(X|A,Z) = H(U|A,Z) + H(V'|A,U,Z) - H(U|A,X,Z)

    With the flag every term gains ``F`` in its conditioning, including the
    left-hand side ``H(X|A,Z,F)``.
    """
    if joint is None:
        joint = JointDistribution(params, tau, v_star)
    f = ["F"] if flag else []
    lhs = joint.cond(["X"], ["A", "Z", *f])
    rhs = (
        joint.cond(["U"], ["A", "Z", *f])
        + joint.cond(["V'"], ["A", "U", "Z", *f])
        - joint.cond(["U"], ["A", "X", "Z", *f])
    )
    return abs(lhs - rhs)


# ----------------------------------------------------------- Fano / bounds


def delta_ecc(m_minus_l: int, p_e: float) -> float:
    """Fano correction ``h(P_e) + P_e log2(2**(m-l) - 1)``."""
    if not 0.0 <= p_e <= 1.0:
        raise ValueError(f"error probability must lie in [0, 1], got {p_e}")
    if m_minus_l < 1:
        return binary_entropy(p_e)
    return binary_entropy(p_e) + p_e * math.log2((1 << m_minus_l) - 1)


def map_decode_error_rate(
    params: SystemParams,
    mode: str = "exact",
    n_trials: int = 0,
    rng: np.random.Generator | None = None,
) -> float:
    """Error probability of MAP-recovering ``u`` from ``g(u) xor v``.

    ``g`` is the coset part of the combined generator; the data part is
    assumed known, so it drops out.
    """
    g = params.u_code
    if len(g) == 1:
        return 0.0
    pw = weight_probs(params.channel.p, params.n)
    if mode == "exact":
        if params.n > 20:
            raise CapExceeded("exact MAP error rate needs n <= 20")
        y = np.arange(1 << params.n, dtype=np.int64)
        like = pw[np.bitwise_count(y[:, None] ^ g[None, :])]
        p_correct = like.max(axis=1).sum() / len(g)
        return float(max(0.0, 1.0 - p_correct))
    if mode != "sampled":
        raise ValueError(f"unknown mode {mode!r}")
    if rng is None or n_trials < 1:
        raise ValueError("sampled mode needs n_trials >= 1 and a generator")
    u = rng.integers(0, len(g), size=n_trials, dtype=np.int64)
    bits = (rng.random((n_trials, params.n)) < params.channel.p).astype(np.int64)
    v = (bits << np.arange(params.n, dtype=np.int64)).sum(axis=1)
    y = g[u] ^ v
    u_hat = np.argmax(pw[np.bitwise_count(y[:, None] ^ g[None, :])], axis=1)
    return float(np.mean(u_hat != u))


def lemma_bound(
    H_U: float, H_V: float, H_X: float, delta: float, exact: float | None = None
) -> BoundReport:
    """``min{H_U, H_X + H_V} + min{H_V, H_X} - delta``.

    Pass ``H(V|F_d)`` as ``H_V`` for the flagged variant.  A negative value is
    a vacuous bound and is reported as is.
    """
    bound = min(H_U, H_X + H_V) + min(H_V, H_X) - delta
    satisfied = None if exact is None else bool(exact >= bound - 1e-9)
    return BoundReport(
        bound_bits=bound,
        terms={"H_U": H_U, "H_V": H_V, "H_X": H_X, "delta": delta},
        satisfied=satisfied,
        exact_bits=exact,
    )


def lemma_check(
    params: SystemParams, *, flag: bool = False, v_star: int = 0,
    joint: JointDistribution | None = None,
) -> BoundReport:
    """Exact keystream equivocation against its lower bound, single round.

    ``H(X)`` is ``n`` for the ideal model and ``|K|`` for the keyed model; the
    Fano term uses the exact MAP error rate.
    """
    if joint is None:
        joint = JointDistribution(params, 1, v_star)
    H_U = float(params.u_bits)
    H_X = float(params.n) if not params.keystream.is_keyed else float(params.key_bits)
    if flag:
        H_V = joint.cond(["V"], ["F"])
        exact = joint.cond(["X"], ["A", "Z", "F"])
    else:
        H_V = params.n * binary_entropy(params.channel.p)
        exact = joint.cond(["X"], ["A", "Z"])
    delta = delta_ecc(params.u_bits, map_decode_error_rate(params))
    return lemma_bound(H_U, H_V, H_X, delta, exact)


# ------------------------------------------------------------- Monte Carlo

QUANTITIES = ("H(K|A,Z)", "H(K|A,Z,Fd)")


@dataclass(frozen=True)
class CurveEstimate:
    """Per-``tau`` sample means for ``tau = 1..tau_max``."""

    quantity: str
    mean: np.ndarray
    stderr: np.ndarray
    samples: int
    key_error: np.ndarray

    def fano(self, key_bits: int) -> np.ndarray:
        """Fano upper bound on ``H(K|obs)`` from the key-decoding error rate."""
        return np.array([delta_ecc(key_bits, float(e)) for e in self.key_error])


def _chunk_run(ctx, strategy, source, quantities, sizes_rng):
    size, rng = sizes_rng
    params = ctx.params
    tau = ctx.tau_max
    out = {q: np.empty((size, tau)) for q in quantities}
    err = {q: np.empty((size, tau), dtype=bool) for q in quantities}
    n_keys = 1 << params.key_bits
    for s in range(size):
        key = int(rng.integers(0, n_keys))
        arr = draw_session(params, ctx.stream[key], strategy, rng, source)
        for q in quantities:
            ll = ctx.logliks(arr.a, arr.z, arr.v_star, arr.f_d if q.endswith("Fd)") else None)
            h = _kernels.prefix_entropies(ll)
            if np.isnan(h).any():
                raise InvariantViolation("true key received zero likelihood")
            out[q][s] = h
            err[q][s] = np.argmax(np.cumsum(ll, axis=1), axis=0) != key
    return out, err


def equivocation_curves(
    params: SystemParams,
    tau_max: int,
    n_samples: int,
    strategy: AdversaryStrategy | None,
    rng: np.random.Generator,
    quantities: Sequence[str] = ("H(K|A,Z)",),
    source=None,
    workers: int = 1,
) -> dict[str, CurveEstimate]:
    """Nested-prefix estimates of ``H(K | A^tau, Z^tau [, F_d])`` for all ``tau``.

    Samples are split into fixed chunks of 250, each with its own spawned
    generator, so the result does not depend on ``workers``.
    """
    for q in quantities:
        if q not in QUANTITIES:
            raise ValueError(f"Monte-Carlo quantity must be one of {QUANTITIES}, got {q!r}")
    if n_samples < 1 or tau_max < 1:
        raise ValueError("need n_samples >= 1 and tau_max >= 1")
    if strategy is None:
        strategy = AdversaryStrategy.passive(params.n)
    ctx = _PosteriorContext(params, tau_max)
    if any(q.endswith("Fd)") for q in quantities):
        ctx.flag_tab  # build once before threads share it
    n_chunks = -(-n_samples // CHUNK)
    sizes = [min(CHUNK, n_samples - i * CHUNK) for i in range(n_chunks)]
    jobs = list(zip(sizes, rng.spawn(n_chunks)))

    def run(job):
        return _chunk_run(ctx, strategy, source, quantities, job)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, jobs))
    else:
        parts = [run(j) for j in jobs]
    result = {}
    for q in quantities:
        h = np.concatenate([p[0][q] for p in parts], axis=0)
        e = np.concatenate([p[1][q] for p in parts], axis=0)
        mean = h.mean(axis=0)
        se = h.std(axis=0, ddof=1) / math.sqrt(n_samples) if n_samples > 1 else np.zeros(tau_max)
        result[q] = CurveEstimate(q, mean, se, n_samples, e.mean(axis=0))
    return result


def _mc_report(params, quantity, tau, curve: CurveEstimate, seed) -> EquivocationReport:
    i = tau - 1
    return EquivocationReport(
        quantity=quantity,
        value_bits=float(curve.mean[i]),
        stderr_bits=float(curve.stderr[i]),
        mode="monte_carlo",
        samples=curve.samples,
        tau=tau,
        params=params.describe(),
        model=_model_name(params),
        flag_mode=params.flag_mode,
        seed=seed,
        extra={
            "key_error_rate": float(curve.key_error[i]),
            "fano_bound_bits": float(curve.fano(params.key_bits)[i]),
        },
    )


def conditional_entropy_mc(
    params: SystemParams,
    quantity: str,
    tau: int,
    n_samples: int,
    strategy: AdversaryStrategy | None,
    rng: np.random.Generator,
    *,
    seed: int | None = None,
    source=None,
    workers: int = 1,
) -> EquivocationReport:
    if tau == 0:
        if quantity not in QUANTITIES:
            raise ValueError(f"Monte-Carlo quantity must be one of {QUANTITIES}")
        return EquivocationReport(
            quantity, float(params.key_bits), 0.0, "monte_carlo", n_samples, 0,
            params.describe(), _model_name(params), params.flag_mode, seed,
        )
    curves = equivocation_curves(params, tau, n_samples, strategy, rng, (quantity,), source, workers)
    return _mc_report(params, quantity, tau, curves[quantity], seed)


def find_threshold(
    params: SystemParams,
    strategy: AdversaryStrategy | None,
    epsilon_frac: float = 0.05,
    tau_max: int = 64,
    n_samples: int = 2000,
    rng: np.random.Generator | None = None,
    *,
    quantity: str | None = None,
    seed: int | None = None,
    source=None,
    workers: int = 1,
) -> ThresholdResult:
    """Smallest ``tau`` whose estimate drops below ``epsilon_frac * |K|``.

    The quantity defaults to ``H(K|A,Z)`` for a passive adversary and
    ``H(K|A,Z,Fd)`` otherwise.  ``tau_thres`` is ``None`` if never reached.
    """
    if rng is None:
        raise ValueError("find_threshold needs a seeded generator")
    if strategy is None:
        strategy = AdversaryStrategy.passive(params.n)
    if quantity is None:
        quantity = QUANTITIES[0] if strategy.kind == "passive" else QUANTITIES[1]
    curves = equivocation_curves(params, tau_max, n_samples, strategy, rng, (quantity,), source, workers)
    return threshold_from_curve(params, curves[quantity], epsilon_frac, seed)


def threshold_from_curve(params, curve: CurveEstimate, epsilon_frac: float = 0.05, seed=None) -> ThresholdResult:
    limit = epsilon_frac * params.key_bits
    reports = [(t, _mc_report(params, curve.quantity, t, curve, seed)) for t in range(1, len(curve.mean) + 1)]
    below = np.nonzero(curve.mean < limit)[0]
    return ThresholdResult(int(below[0]) + 1 if len(below) else None, reports, limit)
