import numpy as np
import pytest

from conftest import default_params, small_params
from wiretapsim import _kernels
from wiretapsim.channel import make_rng, weight_probs
from wiretapsim.keystream import stream_table
from wiretapsim.system import draw_session, AdversaryStrategy
from wiretapsim.gf2 import BitVector


def kernel_inputs(params, tau, seed, use_flag, v_star=0):
    rng = make_rng(seed)
    stream = stream_table(params.keystream, params.key_bits, tau, params.n)
    key = int(rng.integers(0, len(stream)))
    strat = AdversaryStrategy.constant(BitVector(v_star, params.n)) if v_star else AdversaryStrategy.passive(params.n)
    s = draw_session(params, stream[key], strat, rng)
    return (
        s.z, np.ascontiguousarray(stream), params.a_code[s.a] ^ s.v_star, params.u_code,
        weight_probs(params.channel.p, params.n), params.flag_table, s.a, s.f_d,
        use_flag, params.flag_mode == "genie",
    )


@pytest.mark.parametrize("use_flag", [False, True])
@pytest.mark.parametrize("make,v_star", [(lambda: default_params(0.1), 0b100000100000),
                                         (lambda: small_params(0.2, flag_mode="detected"), 0b000011),
                                         (lambda: default_params(0.0), 0)])
def test_loglik_backends_agree(make, v_star, use_flag):
    args = kernel_inputs(make(), 20, 4, use_flag, v_star)
    a = _kernels.round_logliks_loop(*args)
    b = _kernels.round_logliks_numpy(*args)
    assert np.array_equal(np.isneginf(a), np.isneginf(b))
    fin = np.isfinite(a)
    assert np.allclose(a[fin], b[fin], rtol=0, atol=1e-12)


@pytest.mark.parametrize("seed", range(4))
def test_prefix_entropy_backends_agree(seed):
    args = kernel_inputs(default_params(0.1), 30, seed, True, 0b100000100000)
    ll = _kernels.round_logliks_numpy(*args)
    a = _kernels.prefix_entropies_loop(ll)
    b = _kernels.prefix_entropies_numpy(ll)
    assert np.allclose(a, b, rtol=0, atol=1e-12)


def test_dead_prefix_is_nan():
    ll = np.array([[0.0, -np.inf], [-1.0, -np.inf]])
    for f in (_kernels.prefix_entropies_loop, _kernels.prefix_entropies_numpy):
        out = f(ll)
        assert out[0] == pytest.approx(0.9182958340544896)
        assert np.isnan(out[1])


def test_posterior_from_logliks():
    post = _kernels.posterior_from_logliks(np.array([[0.0], [1.0], [-np.inf]]))
    assert np.allclose(post, [1 / 3, 2 / 3, 0.0])
    assert _kernels.posterior_from_logliks(np.full((2, 1), -np.inf)) is None


def test_backend_label():
    assert _kernels.BACKEND in ("numba", "numpy")
    if not _kernels.HAVE_NUMBA:
        assert _kernels.BACKEND == "numpy"


def test_env_flag_selects_numpy_backend():
    import os
    import subprocess
    import sys

    env = dict(os.environ, WIRETAPSIM_NO_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c", "from wiretapsim import _kernels; print(_kernels.BACKEND)"],
        capture_output=True, text=True, env=env, check=True,
    )
    assert out.stdout.strip() == "numpy"
