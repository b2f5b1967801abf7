import contextlib
import random

import hypothesis
import pytest
from hypothesis import strategies as st

from indirect_dht.dht import SimulatedDht, LatencyModel
from indirect_dht.entries import DirectEntry, HostAddress, HostEntry, IndirectEntry, NetworkLocation
from indirect_dht.gateway import GatewayClient, GatewayServer
from indirect_dht.identifiers import Identifier

hypothesis.settings.register_profile("ci", max_examples=200, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=20, deadline=None)
hypothesis.settings.load_profile("ci")


# strategies shared across modules

identifiers = st.binary(min_size=20, max_size=20).map(Identifier)

_text_chars = st.characters(blacklist_categories=("Cs",))
paths = st.text(_text_chars, max_size=40).map(lambda s: "/" + s)
hosts = st.text(
    st.characters(blacklist_categories=("Cs", "Cc", "Zs", "Zl", "Zp")), min_size=1, max_size=30
).filter(lambda h: "/" not in h and not any(c.isspace() for c in h))
ports = st.integers(1, 65535)
addresses = st.builds(HostAddress, hosts, ports)
locations = st.builds(NetworkLocation, addresses, paths)
entries = st.one_of(
    st.builds(DirectEntry, locations),
    st.builds(IndirectEntry, identifiers, paths),
    st.builds(HostEntry, addresses),
)


def random_path(rng: random.Random) -> str:
    alphabet = "abcdefghijklmnopqrstuvwxyz0123456789-_./ é漢"
    return "/" + "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 24)))


def random_address(rng: random.Random) -> HostAddress:
    return HostAddress(f"10.{rng.randint(0, 255)}.{rng.randint(0, 255)}.{rng.randint(1, 254)}", rng.randint(1, 65535))


# backends

@pytest.fixture(scope="session")
def gateway_server():
    with GatewayServer() as server:
        yield server


@pytest.fixture
def sim():
    return SimulatedDht(LatencyModel(c_g=30, c_p=50, c_r=200, c_q=500))


@pytest.fixture(params=["simulated", "gateway"])
def backend(request):
    """Every resolver-level test runs against both backends."""
    if request.param == "simulated":
        yield SimulatedDht(LatencyModel(c_g=30, c_p=50, c_r=200, c_q=500))
    else:
        server = request.getfixturevalue("gateway_server")
        with GatewayClient(server.address, window=100) as client:
            yield client


# acceptance reporting

_CRITERIA: list[tuple[str, str, str]] = []


@pytest.fixture
def criterion():
    @contextlib.contextmanager
    def record(label):
        try:
            yield
        except BaseException as exc:
            _CRITERIA.append((label, "FAIL", str(exc).splitlines()[0][:120] if str(exc) else type(exc).__name__))
            raise
        _CRITERIA.append((label, "PASS", ""))

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label, verdict, detail in _CRITERIA:
        terminalreporter.write_line(f"{verdict}  {label}" + (f"  -- {detail}" if detail else ""))
