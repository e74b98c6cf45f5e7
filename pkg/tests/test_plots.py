from collections import OrderedDict

import pytest

from aircomp.plots import MissingColumn, render_plots
from aircomp.reporting import aggregate, write_csv
from test_reporting import APPS, synthetic


def sample_csv(tmp_path):
    rows = []
    for users in (80, 100):
        for uavs in (0, 5, 10):
            res = synthetic(success=0.4 + 0.02 * uavs - 0.001 * users)
            res.uav_util = 0.6 - 0.02 * uavs if uavs else None
            rows.append(aggregate(OrderedDict([("users", users), ("uavs", uavs)]),
                                  [res, res], APPS))
    path = tmp_path / "results.csv"
    write_csv(str(path), rows, {"root_seed": 7})
    return str(path)


def test_full_figure_set_is_rendered(tmp_path):
    csv = sample_csv(tmp_path)
    paths = render_plots(csv, str(tmp_path / "figs"))
    assert len(paths) == 5
    names = {p.rsplit("/", 1)[-1] for p in paths}
    assert names == {"success_rate.png", "service_time.png", "utilization.png",
                     "offload_shares.png", "app_success.png"}
    for p in paths:
        assert open(p, "rb").read(8) == b"\x89PNG\r\n\x1a\n"


def test_rendering_twice_is_byte_identical(tmp_path):
    csv = sample_csv(tmp_path)
    first = render_plots(csv, str(tmp_path / "a"))
    second = render_plots(csv, str(tmp_path / "b"))
    for p1, p2 in zip(first, second):
        assert open(p1, "rb").read() == open(p2, "rb").read()


def test_missing_column_is_reported(tmp_path):
    csv = sample_csv(tmp_path)
    lines = open(csv).read().splitlines()
    header_i, header = next((i, l) for i, l in enumerate(lines) if not l.startswith("#"))
    cols = header.split(",")
    drop = cols.index("success_rate")
    lines[header_i] = ",".join(c for i, c in enumerate(cols) if i != drop)
    for i in range(header_i + 1, len(lines)):
        cells = lines[i].split(",")
        lines[i] = ",".join(c for j, c in enumerate(cells) if j != drop)
    broken = tmp_path / "broken.csv"
    broken.write_text("\n".join(lines) + "\n")
    with pytest.raises(MissingColumn, match="success_rate"):
        render_plots(str(broken), str(tmp_path / "figs2"))
