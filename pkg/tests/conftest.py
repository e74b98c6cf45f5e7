import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from aircomp import runner
from aircomp.cli import resolve_scenario


@pytest.fixture(scope="session")
def replica_spec():
    return resolve_scenario("paper_replica")


@pytest.fixture(scope="session")
def replica_sweep(tmp_path_factory, replica_spec):
    """The full reference sweep, run once and shared by the acceptance tests."""
    out = tmp_path_factory.mktemp("replica_sweep")
    rows, results, paths = runner.run_experiment(replica_spec, str(out), jobs=2)
    by_axes = {}
    for res in results:
        by_axes.setdefault(tuple(res.axes), []).append(res)
    row_index = {(r["users"], r["uavs"]): r for r in rows}
    return {
        "rows": rows,
        "row_index": row_index,
        "results": results,
        "by_axes": by_axes,
        "paths": paths,
        "spec": replica_spec,
    }
