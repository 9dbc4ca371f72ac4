import pytest

from wiretapsim.channel import ChannelParams
from wiretapsim.coding import build_wiretap, default_inner_generator, make_repetition
from wiretapsim.gf2 import parse_matrix
from wiretapsim.keystream import KeystreamModel
from wiretapsim.system import SystemParams

REP_COSET_GH = "0010;0001;1010;0101"


@pytest.fixture
def rep_coset():
    return build_wiretap(2, parse_matrix("10;01").hstack(parse_matrix("10;01")))


def small_params(p=0.1, model="keyed", flag_mode="genie"):
    """l=1, m=2, rep-3 (n=6); keyed model uses a 3-bit register."""
    wt = build_wiretap(1, default_inner_generator(1, 2))
    ks = KeystreamModel.lfsr(3) if model == "keyed" else KeystreamModel.ideal()
    return SystemParams(make_repetition(2, 3), ChannelParams(p), ks, 3, wt, flag_mode)


def default_params(p=0.1, flag_mode="genie"):
    wt = build_wiretap(2, default_inner_generator(2, 4))
    return SystemParams(make_repetition(4, 3), ChannelParams(p), KeystreamModel.lfsr(8), 8, wt, flag_mode)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
