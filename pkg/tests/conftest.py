"""Pytest configuration and fixtures"""

import tempfile
from pathlib import Path

import pytest

from cojoin.config.schema import EngineConfig
from cojoin.data.relation import Relation, gen_probe, gen_skewed, gen_uniform
from cojoin.engine.device import canned_profiles


@pytest.fixture
def temp_dir():
    """Create a temporary directory for tests"""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


@pytest.fixture
def clean_env(monkeypatch):
    """Clear engine-related environment variables"""
    env_vars = [
        "COJOIN_BLOCK_SIZE",
        "COJOIN_ARENA_BYTES",
        "COJOIN_DELTA",
        "COJOIN_GROUPS",
        "COJOIN_HANDOFF_CAP",
        "COJOIN_PASS_BITS",
        "COJOIN_PASSES",
        "COJOIN_SEED",
        "COJOIN_ARCH",
        "COJOIN_TABLE_MODE",
        "COJOIN_DEBUG_LOG",
    ]
    for var in env_vars:
        monkeypatch.delenv(var, raising=False)
    yield


@pytest.fixture
def isolated_home(temp_dir: Path, monkeypatch, clean_env):
    """Point the user and project config lookups at an empty directory"""
    home = temp_dir / "home"
    home.mkdir()
    work = temp_dir / "work"
    work.mkdir()
    monkeypatch.setenv("HOME", str(home))
    monkeypatch.setattr(Path, "home", classmethod(lambda cls: home))
    monkeypatch.chdir(work)
    yield home


@pytest.fixture
def profiles():
    """Canned (cpu, gpu) device profiles"""
    return canned_profiles()


@pytest.fixture
def config() -> EngineConfig:
    """Engine configuration tuned for small inputs"""
    cfg = EngineConfig()
    cfg.scheduler.delta = 0.1
    cfg.scheduler.dispatch_items = 64
    cfg.scheduler.handoff_cap = 64
    cfg.partition.pass_bits = 3
    cfg.partition.passes = 2
    return cfg


@pytest.fixture
def small_join() -> tuple[Relation, Relation]:
    """Build relation with duplicate keys and a half-matching probe relation"""
    R = gen_skewed(1500, 20, seed=7, key_range=(0, 50_000))
    S = gen_probe(R, 2000, 0.5, seed=8)
    return R, S


@pytest.fixture
def uniform_join() -> tuple[Relation, Relation]:
    """Uniform build relation fully matched by its probe relation"""
    R = gen_uniform(4096, seed=11)
    S = gen_probe(R, 4096, 1.0, seed=12)
    return R, S


@pytest.fixture
def nested_loop():
    """Nested-loop join oracle returning a sorted list of (r_rid, s_rid)"""

    def oracle(R: Relation, S: Relation) -> list[tuple[int, int]]:
        pairs = []
        r_keys = R.keys.tolist()
        r_rids = R.rids.tolist()
        for s_rid, s_key in zip(S.rids.tolist(), S.keys.tolist()):
            for r_rid, r_key in zip(r_rids, r_keys):
                if r_key == s_key:
                    pairs.append((r_rid, s_rid))
        return sorted(pairs)

    return oracle

