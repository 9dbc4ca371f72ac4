"""Compare the numba and numpy kernels on the default experiment sizes.

    python3 benchmarks/bench_kernels.py [--repeat 20] [--samples 500]

Kernel timings call both implementations directly.  The end-to-end timing
runs one passive sweep per backend in a fresh interpreter, with
WIRETAPSIM_NO_NUMBA toggling the backend.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from wiretapsim import _kernels
from wiretapsim.channel import ChannelParams, make_rng, weight_probs
from wiretapsim.coding import build_wiretap, default_inner_generator, make_repetition
from wiretapsim.keystream import KeystreamModel, stream_table
from wiretapsim.system import AdversaryStrategy, SystemParams, draw_session
from wiretapsim.gf2 import BitVector

E2E = """
import sys, time
from wiretapsim import _kernels
from wiretapsim.channel import ChannelParams, make_rng
from wiretapsim.coding import build_wiretap, default_inner_generator, make_repetition
from wiretapsim.keystream import KeystreamModel
from wiretapsim.system import SystemParams
from wiretapsim.equivocation import equivocation_curves
p = SystemParams(make_repetition(4, 3), ChannelParams(0.1), KeystreamModel.lfsr(8), 8,
                 build_wiretap(2, default_inner_generator(2, 4)))
equivocation_curves(p, 4, 2, None, make_rng(0))  # warm up / compile
t = time.perf_counter()
equivocation_curves(p, 64, int(sys.argv[1]), None, make_rng(42), ("H(K|A,Z)", "H(K|A,Z,Fd)"))
print(_kernels.BACKEND, time.perf_counter() - t)
"""


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--samples", type=int, default=500)
    ap.add_argument("--tau", type=int, default=64)
    args = ap.parse_args()

    params = SystemParams(make_repetition(4, 3), ChannelParams(0.1), KeystreamModel.lfsr(8), 8,
                          build_wiretap(2, default_inner_generator(2, 4)))
    stream = stream_table(params.keystream, 8, args.tau, params.n)
    rng = make_rng(1)
    s = draw_session(params, stream[17], AdversaryStrategy.constant(BitVector(0b100000100000, 12)), rng)
    kargs = (s.z, stream, params.a_code[s.a] ^ s.v_star, params.u_code, weight_probs(0.1, 12),
             params.flag_table, s.a, s.f_d, True, True)

    if not _kernels.HAVE_NUMBA:
        print("numba not installed: only the numpy path is available")
    # first call compiles
    ll = _kernels.round_logliks_loop(*kargs)
    _kernels.prefix_entropies_loop(ll)
    assert np.allclose(ll, _kernels.round_logliks_numpy(*kargs), equal_nan=True)

    print(f"kernels: 256 keys x {args.tau} rounds, best of {args.repeat}")
    rows = [
        ("round_logliks", lambda: _kernels.round_logliks_loop(*kargs), lambda: _kernels.round_logliks_numpy(*kargs)),
        ("prefix_entropies", lambda: _kernels.prefix_entropies_loop(ll), lambda: _kernels.prefix_entropies_numpy(ll)),
    ]
    label = "numba" if _kernels.HAVE_NUMBA else "loop (python)"
    print(f"{'kernel':<18}{label:>14}{'numpy':>12}{'speedup':>10}")
    for name, fast, ref in rows:
        a, b = best_of(fast, args.repeat), best_of(ref, args.repeat)
        print(f"{name:<18}{a * 1e3:>12.3f}ms{b * 1e3:>10.3f}ms{b / a:>9.1f}x")

    print(f"\nend to end: {args.samples} sessions, tau = 1..64, both quantities")
    for flag in ("0", "1"):
        env = dict(os.environ, WIRETAPSIM_NO_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", E2E, str(args.samples)], env=env,
                             capture_output=True, text=True, check=True)
        backend, secs = out.stdout.split()
        print(f"  {backend:<6} {float(secs):8.2f} s")


if __name__ == "__main__":
    main()
