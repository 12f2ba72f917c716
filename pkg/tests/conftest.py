import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pluginaudit.config import AuditConfig
from pluginaudit.fixture_server import FixtureServer
from pluginaudit.fixtures import FixtureSpec, generate_store

# Small store exercising every role: leaks, mismatches, all three API
# exposures, share/timeout/unrelated hosts, one unstable endpoint, and a
# full legal mix.
SMALL_SPEC = FixtureSpec(
    seed=7,
    plugin_count=24,
    e1=10,
    e2_name=2,
    e2_desc=1,
    e2_legal=2,
    e3=3,
    e4=1,
    e5=1,
    share_platform_count=2,
    timeout_count=1,
    unrelated_page_count=3,
    legal_tos=8,
    legal_privacy=5,
    legal_other=3,
    legal_unrelated=5,
    legal_inaccessible=3,
    unstable_endpoint_count=1,
)


@pytest.fixture(scope="session")
def small_store(tmp_path_factory):
    out = tmp_path_factory.mktemp("small-store")
    plan = generate_store(SMALL_SPEC, out)
    return out, plan


@pytest.fixture(scope="session")
def small_server(small_store):
    store_dir, plan = small_store
    server = FixtureServer(store_dir, stall_seconds=1.0).start()
    yield server, plan
    server.stop()


def fast_config(server, **overrides) -> AuditConfig:
    settings = dict(
        timeout=0.3,
        attempts=3,
        per_host_interval=0.02,
        backoff_initial=0.02,
        workers=8,
        resolve=server.resolve_map(),
    )
    settings.update(overrides)
    return AuditConfig(**settings)
