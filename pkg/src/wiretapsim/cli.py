"""Experiment runner.

Every run writes a CSV whose ``#`` header echoes the effective configuration,
the RNG algorithm and the package version, followed by plot-ready rows.
Settings come from defaults, then an optional ``key = value`` config file,
then command-line flags.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime as _dt
import io
import re
import sys
from dataclasses import dataclass, fields
from pathlib import Path

from . import __version__, _kernels
from .channel import RNG_ALGORITHM, ChannelParams, make_rng
from .coding import (
    CodeError,
    LinearBlockCode,
    WiretapCode,
    build_wiretap,
    default_inner_generator,
    make_from_generator,
    make_hamming_7_4,
    make_repetition,
)
from .equivocation import (
    CapExceeded,
    JointDistribution,
    chain_rule_identity_check,
    equivocation_curves,
    lemma_check,
    threshold_from_curve,
)
from .gf2 import BitVector, parse_matrix
from .keystream import KeystreamModel, key_from_index, parse_keystream
from .system import AdversaryStrategy, InvariantViolation, SystemParams, run_session, write_trace

SCENARIOS = ("passive", "active", "noisefree", "lemma1-check", "chainrule-check", "threshold-sweep")
SWEEP_COLUMNS = ("tau", "quantity", "value_bits", "stderr_bits", "samples", "scenario", "p", "key_bits", "seed")
RESIDUAL_TOL = 1e-9


class UsageError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    scenario: str = "passive"
    l: int = 2
    m: int = 4
    ecc: str | None = None
    wiretap: str = "default"
    keystream: str | None = None
    p: float = 0.1
    key_bits: int = 8
    tau: str = "1..64"
    samples: int = 2000
    seed: int = 42
    epsilon_frac: float = 0.05
    flag_mode: str = "genie"
    vstar: str | None = None
    workers: int = 1
    out: str = "-"
    trace: str | None = None

    def effective(self) -> "ExperimentConfig":
        cfg = dataclasses.replace(self)
        if cfg.ecc is None:
            cfg.ecc = f"rep:k={cfg.m},r=3"
        if cfg.keystream is None:
            try:
                cfg.keystream = KeystreamModel.lfsr(cfg.key_bits).spec()
            except ValueError as exc:
                raise UsageError(f"{exc}; pass --keystream lfsr:bits=N,taps=...") from exc
        if cfg.scenario == "noisefree":
            cfg.p = 0.0
        return cfg

    @property
    def tau_range(self) -> tuple[int, int]:
        return parse_tau(self.tau)


def parse_tau(text: str) -> tuple[int, int]:
    m = re.fullmatch(r"\s*(\d+)\s*(?:\.\.\s*(\d+))?\s*", str(text))
    if not m:
        raise UsageError(f"--tau must be N or A..B, got {text!r}")
    lo = int(m.group(1))
    hi = int(m.group(2)) if m.group(2) else lo
    if lo < 1 or hi < lo:
        raise UsageError(f"tau range must satisfy 1 <= A <= B, got {text!r}")
    return lo, hi


def parse_ecc(text: str) -> LinearBlockCode:
    text = text.strip()
    if text == "hamming74":
        return make_hamming_7_4()
    if text.startswith("rep:"):
        opts = dict(part.split("=", 1) for part in text[4:].split(",") if part)
        try:
            return make_repetition(int(opts["k"]), int(opts["r"]))
        except KeyError as exc:
            raise UsageError(f"repetition spec {text!r} needs k= and r=") from exc
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    if text.startswith("matrix:"):
        return make_from_generator(parse_matrix(text[7:]), name=text)
    raise UsageError(f"unknown ecc spec {text!r}")


def parse_wiretap(text: str, l: int, m: int) -> WiretapCode | None:
    """``default``, ``none`` or ``coset:l=2,inner=matrix:10;01|10;01``."""
    text = text.strip()
    if text == "none":
        return None
    if text == "default":
        return build_wiretap(l, default_inner_generator(l, m))
    if not text.startswith("coset:"):
        raise UsageError(f"unknown wiretap spec {text!r}")
    mm = re.fullmatch(r"coset:l=(\d+),inner=matrix:([01;]+)\|([01;]+)", text)
    if not mm:
        raise UsageError(f"malformed wiretap spec {text!r}")
    wl = int(mm.group(1))
    left = parse_matrix(mm.group(2))
    right = parse_matrix(mm.group(3))
    return build_wiretap(wl, left.hstack(right))


def default_vstar(n: int) -> BitVector:
    """Weight-2 perturbation: first bit and the bit at ``n // 2``."""
    return BitVector((1 << 0) | (1 << (n // 2)), n)


def build_params(cfg: ExperimentConfig) -> SystemParams:
    try:
        ecc = parse_ecc(cfg.ecc)
        wiretap = parse_wiretap(cfg.wiretap, cfg.l, cfg.m)
        keystream = parse_keystream(cfg.keystream)
        channel = ChannelParams(cfg.p)
        if wiretap is not None and (wiretap.l, wiretap.m) != (cfg.l, cfg.m):
            raise UsageError(f"wiretap spec has l={wiretap.l}, m={wiretap.m}; flags say l={cfg.l}, m={cfg.m}")
        if wiretap is None and ecc.k != cfg.m:
            raise UsageError(f"ecc message length {ecc.k} != m={cfg.m}")
        return SystemParams(ecc, channel, keystream, cfg.key_bits, wiretap, cfg.flag_mode)
    except (CodeError, ValueError) as exc:
        if isinstance(exc, UsageError):
            raise
        raise UsageError(str(exc)) from exc


def _read_config_file(path: str) -> dict[str, str]:
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _coerce(cfg_fields, raw: dict[str, str], origin: str) -> dict[str, object]:
    types = {f.name: f.type for f in cfg_fields}
    out = {}
    for key, value in raw.items():
        if key not in types:
            raise UsageError(f"unknown key {key!r} in {origin}")
        t = types[key]
        try:
            if t == "int":
                out[key] = int(value)
            elif t == "float":
                out[key] = float(value)
            else:
                out[key] = value
        except ValueError as exc:
            raise UsageError(f"bad value {value!r} for {key}") from exc
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wiretapsim", description=__doc__.splitlines()[0])
    S = argparse.SUPPRESS
    ap.add_argument("--config", help="key = value file; flags override it")
    ap.add_argument("--scenario", choices=SCENARIOS, default=S)
    ap.add_argument("--l", type=int, default=S, help="data bits per block")
    ap.add_argument("--m", type=int, default=S, help="wire-tap block length")
    ap.add_argument("--ecc", default=S, help="rep:k=4,r=3 | hamming74 | matrix:<rows>")
    ap.add_argument("--wiretap", default=S, help="default | none | coset:l=2,inner=matrix:10;01|10;01")
    ap.add_argument("--keystream", default=S, help="ideal | lfsr:bits=8,taps=8,6,5,4")
    ap.add_argument("--p", type=float, default=S, help="crossover probability in [0, 0.5)")
    ap.add_argument("--key-bits", dest="key_bits", type=int, default=S)
    ap.add_argument("--tau", default=S, help="N or A..B")
    ap.add_argument("--samples", type=int, default=S)
    ap.add_argument("--seed", type=int, default=S)
    ap.add_argument("--epsilon-frac", dest="epsilon_frac", type=float, default=S)
    ap.add_argument("--flag-mode", dest="flag_mode", choices=("genie", "detected"), default=S)
    ap.add_argument("--vstar", default=S, help="injected bitstring for the active scenario")
    ap.add_argument("--workers", type=int, default=S)
    ap.add_argument("--out", default=S, help="output CSV path, '-' for stdout")
    ap.add_argument("--trace", default=S, help="also write one session trace CSV here")
    return ap


def parse_config(argv: list[str] | None = None) -> ExperimentConfig:
    ns = vars(build_parser().parse_args(argv))
    cfg_path = ns.pop("config", None)
    values: dict[str, object] = {}
    if cfg_path:
        values.update(_coerce(fields(ExperimentConfig), _read_config_file(cfg_path), cfg_path))
    values.update(ns)
    cfg = ExperimentConfig(**values)
    if cfg.scenario not in SCENARIOS:
        raise UsageError(f"unknown scenario {cfg.scenario!r}")
    if not 0.0 <= cfg.p < 0.5:
        raise UsageError(f"--p must lie in [0, 0.5), got {cfg.p}")
    if cfg.samples < 1 or cfg.workers < 1:
        raise UsageError("--samples and --workers must be positive")
    if not 0.0 < cfg.epsilon_frac < 1.0:
        raise UsageError("--epsilon-frac must lie in (0, 1)")
    parse_tau(cfg.tau)
    cfg = cfg.effective()
    build_params(cfg)
    return cfg


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, bool):
        return "1" if v else "0"
    return str(v)


def _strategy(cfg: ExperimentConfig, params: SystemParams) -> AdversaryStrategy:
    if cfg.vstar is None:
        return AdversaryStrategy.constant(default_vstar(params.n))
    v = BitVector.from_str(cfg.vstar)
    if v.length != params.n:
        raise UsageError(f"--vstar must have {params.n} bits")
    return AdversaryStrategy.constant(v)


def _sweep(cfg, params, strategy, quantities, header, body) -> int:
    lo, hi = cfg.tau_range
    curves = equivocation_curves(
        params, hi, cfg.samples, strategy, make_rng(cfg.seed), quantities, workers=cfg.workers
    )
    body.append(SWEEP_COLUMNS)
    for q in quantities:
        res = threshold_from_curve(params, curves[q], cfg.epsilon_frac, cfg.seed)
        header.append(f"tau_thres[{q}] = {res.tau_thres if res.reached else 'not reached'}")
        for t, rep in res.curve:
            if t < lo:
                continue
            body.append((t, q, rep.value_bits, rep.stderr_bits, rep.samples, cfg.scenario,
                         params.channel.p, params.key_bits, cfg.seed))
    return 0


def _bound_check(cfg, params, header, body) -> int:
    tau = cfg.tau_range[0]
    if tau != 1:
        header.append("bounds are single-round; using tau = 1")
    v = 0 if cfg.vstar is None else BitVector.from_str(cfg.vstar).bits
    joint = JointDistribution(params, 1, v)
    body.append(("scenario", "quantity", "exact_bits", "bound_bits", "H_U", "H_V", "H_X", "delta",
                 "satisfied", "p", "model"))
    status = 0
    for flag, q in ((False, "H(X|A,Z)"), (True, "H(X|A,Z,Fd)")):
        b = lemma_check(params, flag=flag, v_star=v, joint=joint)
        t = b.terms
        body.append((cfg.scenario, q, b.exact_bits, b.bound_bits, t["H_U"], t["H_V"], t["H_X"],
                     t["delta"], b.satisfied, params.channel.p, params.keystream.spec()))
        # the bound is only guaranteed when the keystream block is uniform
        if not b.satisfied and not params.keystream.is_keyed:
            status = 1
    return status


def _chainrule(cfg, params, header, body) -> int:
    tau = cfg.tau_range[0]
    v = 0 if cfg.vstar is None else BitVector.from_str(cfg.vstar).bits
    joint = JointDistribution(params, tau, v)
    body.append(("scenario", "identity", "tau", "residual", "p", "model", "flag_mode"))
    status = 0
    for flag, name in ((False, "H(X|A,Z)"), (True, "H(X|A,Z,Fd)")):
        r = chain_rule_identity_check(params, flag=flag, joint=joint)
        body.append((cfg.scenario, name, tau, r, params.channel.p, params.keystream.spec(), params.flag_mode))
        if r > RESIDUAL_TOL:
            status = 1
    return status


def run_experiment(cfg: ExperimentConfig, stdout=None) -> int:
    """Execute one scenario and write its CSV.  Returns the exit status."""
    stdout = stdout or sys.stdout
    params = build_params(cfg)
    header = [
        f"wiretapsim {__version__}",
        f"generated {_dt.datetime.now(_dt.timezone.utc).isoformat(timespec='seconds')}",
        f"rng {RNG_ALGORITHM}",
        f"kernel backend {_kernels.BACKEND}",
    ]
    header += [f"{f.name} = {getattr(cfg, f.name)}" for f in fields(cfg)]
    body: list[tuple] = []

    passive = AdversaryStrategy.passive(params.n)
    if cfg.scenario in ("passive", "noisefree"):
        status = _sweep(cfg, params, passive, ("H(K|A,Z)",), header, body)
        strategy = passive
    elif cfg.scenario == "active":
        strategy = _strategy(cfg, params)
        header.append(f"v_star = {strategy.v_star_template}")
        status = _sweep(cfg, params, strategy, ("H(K|A,Z)", "H(K|A,Z,Fd)"), header, body)
    elif cfg.scenario == "threshold-sweep":
        # one set of sessions; z is shifted by the known v_star, so the
        # unflagged posterior equals the passive one
        strategy = _strategy(cfg, params)
        header.append(f"v_star = {strategy.v_star_template}")
        status = _sweep(cfg, params, strategy, ("H(K|A,Z)", "H(K|A,Z,Fd)"), header, body)
    elif cfg.scenario == "lemma1-check":
        strategy = passive
        status = _bound_check(cfg, params, header, body)
    else:
        strategy = passive
        status = _chainrule(cfg, params, header, body)

    text = io.StringIO()
    for line in header:
        text.write(f"# {line}\n")
    writer = csv.writer(text, lineterminator="\n")
    for row in body:
        writer.writerow([_fmt(v) for v in row])
    if cfg.out == "-":
        stdout.write(text.getvalue())
    else:
        Path(cfg.out).write_text(text.getvalue())

    if cfg.trace:
        rng = make_rng(cfg.seed)
        key = key_from_index(int(rng.integers(0, 1 << params.key_bits)), params.key_bits)
        recs = run_session(params, key, cfg.tau_range[1], None, strategy, rng)
        with open(cfg.trace, "w", newline="") as fh:
            write_trace(recs, fh)
    return status


def main(argv: list[str] | None = None) -> int:
    try:
        cfg = parse_config(argv)
        return run_experiment(cfg)
    except UsageError as exc:
        print(f"wiretapsim: error: {exc}", file=sys.stderr)
        return 2
    except CapExceeded as exc:
        print(f"wiretapsim: error: {exc}", file=sys.stderr)
        return 2
    except InvariantViolation as exc:
        print(f"wiretapsim: invariant violated: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
