"""Figures from sweep CSVs produced by the `hybrid` binary."""

import json
import os
import subprocess
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

import plot_sweep as ps

ROOT = Path(__file__).resolve().parent.parent
BIN = Path(os.environ.get("HYBRID_BIN", ROOT / "target" / "debug" / "hybrid"))


def sweep(tmp_path, *args):
    if not BIN.exists():
        pytest.skip(f"{BIN} not built (cargo build -p hybrid-cli)")
    out = tmp_path / "sweep.csv"
    subprocess.run([str(BIN), "ecp", "sweep", *args, "--output", str(out)], check=True, capture_output=True)
    return out


def meta(png):
    return json.loads(Image.open(png).text["Description"])


def test_lines_three_series_zeros_at_p_zero_rows(tmp_path):
    csv = sweep(tmp_path, "--axis", "theta1")
    t = ps.load(csv)
    m = ps.plot_lines(t, tmp_path / "lines.png")
    assert m["series"] == 3
    for a, zs in m["zeros"].items():
        sel = (t.columns["alpha"] == float(a)) & (t.columns["P_closed"] == 0.0)
        assert sorted(zs) == sorted(t.columns["theta1"][sel].tolist())
        assert np.allclose(zs, [0, np.pi / 2, np.pi])
    assert meta(tmp_path / "lines.png") == m


def test_rerender_has_identical_metadata(tmp_path):
    csv = sweep(tmp_path, "--axis", "theta2", "--points", "37")
    a = ps.plot_lines(ps.load(csv), tmp_path / "a.png")
    b = ps.plot_lines(ps.load(csv), tmp_path / "b.png")
    assert a == b == meta(tmp_path / "b.png")


def test_contour_grid(tmp_path):
    csv = sweep(tmp_path, "--axis", "theta1,theta2", "--points", "31", "--alphas", "1")
    t = ps.load(csv)
    m = ps.plot_contour(t, tmp_path / "c.png")
    assert m["shape"] == [31, 31]
    assert m["p_max"] == pytest.approx(t.columns["P_closed"].max())


def test_contour_missing_rows(tmp_path):
    csv = sweep(tmp_path, "--axis", "theta1,theta2", "--points", "5", "--alphas", "1")
    lines = csv.read_text().splitlines()
    csv.write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(ps.TableError):
        ps.plot_contour(ps.load(csv), tmp_path / "c.png")


def test_bad_inputs_write_nothing(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text(",".join(ps.HEADER) + "\n")
    bad = tmp_path / "bad.csv"
    bad.write_text("theta1,theta2,theta3,alpha,P,P_sim\n0,0,0,1,0,0\n")
    for f in (empty, bad):
        out = tmp_path / f"{f.stem}.png"
        assert ps.main(["lines", str(f), str(out)]) == 2
        assert not out.exists()
