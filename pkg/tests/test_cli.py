import csv
import json
import logging

import jsonschema
import numpy as np
import pytest

from fencelab import output
from fencelab.cli import RunConfig, bench, config_from_mapping, main
from fencelab.fields import GridSpec, Partition, read_fld, write_fld
from fencelab.shapes import ShapeSpec, rasterize

FAST = ["--grid", "64", "--max-iter", "6"]


def run_cli(tmp_path, name, *extra):
    out = tmp_path / name
    out.mkdir()
    code = main(["run", *FAST, "--out", str(out), *extra])
    return code, out


def test_run_writes_artifacts(tmp_path):
    code, out = run_cli(tmp_path, "a", "--method", "two", "--c", "0.5,0.5", "--seed", "1", "--render")
    assert code == 0
    with open(out / "trace.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == list(output.TRACE_COLUMNS)
    assert [int(r[0]) for r in rows[1:]] == list(range(len(rows) - 1))
    # 12 significant digits
    assert all(len(r[2].replace("-", "").replace(".", "").lstrip("0").split("e")[0]) <= 12 for r in rows[1:])
    metrics = json.loads((out / "metrics.json").read_text())
    jsonschema.validate(metrics, output.METRICS_SCHEMA)
    assert list(metrics) == list(output.METRICS_KEYS)
    assert metrics["grid"] == [64, 64] and metrics["seed"] == 1 and metrics["iterations"] == 6
    snaps = sorted(p.name for p in (out / "snapshots").iterdir())
    assert snaps == ["iter_0000.fld", "iter_0005.fld", "iter_0006.fld"]
    assert sorted(p.name for p in (out / "images").iterdir()) == [s.replace(".fld", ".ppm") for s in snaps]
    last = read_fld(out / "snapshots" / "iter_0006.fld")
    assert int((last > 0).sum()) == metrics["volume_cells"]


def test_rerun_is_byte_identical(tmp_path):
    _, a = run_cli(tmp_path, "a", "--seed", "3")
    _, b = run_cli(tmp_path, "b", "--seed", "3")
    assert (a / "trace.csv").read_bytes() == (b / "trace.csv").read_bytes()
    for f in (a / "snapshots").iterdir():
        assert f.read_bytes() == (b / "snapshots" / f.name).read_bytes()
    ma = json.loads((a / "metrics.json").read_text())
    mb = json.loads((b / "metrics.json").read_text())
    ma.pop("wall_seconds"), mb.pop("wall_seconds")
    assert ma == mb


def test_snapshot_cadence(tmp_path):
    _, out = run_cli(tmp_path, "a", "--snapshot-every", "2", "--method", "two")
    assert sorted(p.name for p in (out / "snapshots").iterdir()) == [f"iter_{k:04d}.fld" for k in (0, 2, 4, 6)]


def test_missing_output_directory(tmp_path, caplog):
    missing = tmp_path / "nope"
    with caplog.at_level(logging.ERROR):
        code = main(["run", *FAST, "--out", str(missing)])
    assert code != 0
    assert str(missing) in caplog.text


def test_config_file_and_flag_override(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"method": "two", "grid": 64, "seed": 5, "max-iter": 2, "tau": "3dx", "lambda": 4}))
    out = tmp_path / "o"
    out.mkdir()
    assert main(["run", "--config", str(cfg_path), "--seed", "6", "--out", str(out)]) == 0
    m = json.loads((out / "metrics.json").read_text())
    assert m["method"] == "two" and m["seed"] == 6 and m["iterations"] == 2
    rc = config_from_mapping(json.loads(cfg_path.read_text()))
    grid, scfg, _ = rc.build()
    assert scfg.tau == pytest.approx(3 * grid.dx) and scfg.lam == 4


def test_config_rejects_unknown_key():
    with pytest.raises(ValueError):
        config_from_mapping({"bogus": 1})


def test_auction_flag_parsing():
    rc = config_from_mapping({"auction": "50,1e-5,2,0.5", "grid": 64})
    _, scfg, _ = rc.build()
    assert (scfg.auction.m, scfg.auction.eps_min, scfg.auction.alpha, scfg.auction.eps0) == (50, 1e-5, 2.0, 0.5)


def coverage(img, n):
    """Per-phase alpha recovered from the blended colours, ``(n, h, w)``."""
    rel = img.reshape(-1, 3).astype(float) / 255 - output.BACKGROUND
    basis = (output.PALETTE[:n] - output.BACKGROUND).T
    alpha, *_ = np.linalg.lstsq(basis, rel.T, rcond=None)
    return alpha.reshape(n, *img.shape[:2])


def test_render_blank_field(tmp_path):
    write_fld(tmp_path / "z.fld", np.zeros((64, 64), dtype=np.uint8))
    outdir = tmp_path / "img"
    outdir.mkdir()
    assert main(["render", str(tmp_path / "z.fld"), "--out", str(outdir)]) == 0
    img = output.read_ppm(outdir / "z.ppm")
    assert img.shape == (64, 64, 3) and (img == 255).all()


def test_render_disc_bisection_pixel_counts(tmp_path):
    g = GridSpec(2, 128)
    disc = rasterize(ShapeSpec("disc", {"radius": np.pi / 2}), g)
    x = g.coords()[0]
    part = Partition(g, 2, np.where(disc.values, (x >= 0).astype(int), -1))
    output.write_snapshot(tmp_path / "d.fld", part)
    [path] = output.render_files([tmp_path / "d.fld"], tmp_path)
    # hard 0.5-thresholding would shrink each half-disc by ~tau/r; coverage is mass-exact
    alpha = coverage(output.read_ppm(path), 2)
    for i in range(2):
        assert alpha[i].sum() == pytest.approx(part.counts[i], rel=0.02)
    # y points up, x to the right: phase 0 (x < 0) fills the left half of the picture
    # smoothing leaks about 4 sqrt(tau/pi) / (pi r) ~ 10% of each half across the seam
    leak = 4 * np.sqrt(g.dx / np.pi) / (np.pi * np.pi / 2)
    assert alpha[0][:, :64].sum() == pytest.approx((1 - leak) * alpha[0].sum(), rel=0.02)
    assert alpha[1][:, 64:].sum() == pytest.approx((1 - leak) * alpha[1].sum(), rel=0.02)


def test_render_ball_slices(tmp_path):
    g = GridSpec(3, 32)
    r = 2.0
    ball = rasterize(ShapeSpec("ball", {"radius": r}), g)
    part = Partition.from_phases([ball])
    output.write_snapshot(tmp_path / "b.fld", part)
    paths = output.render_files([tmp_path / "b.fld"], tmp_path)
    assert [p.name for p in paths] == ["b_x.ppm", "b_y.ppm", "b_z.ppm"]
    for p in paths:
        inside = coverage(output.read_ppm(p), 1)[0] > 0.5
        ys, xs = np.nonzero(inside)
        cy, cx = ys.mean(), xs.mean()
        # the origin cell (16, 16) lands on row 15 once y is flipped to point up
        assert abs(cy - 15) < 0.5 and abs(cx - 16) < 0.5
        # a disc: the pixel set equals the disc of the same area about its centroid
        rad = np.sqrt(inside.sum() / np.pi)
        yy, xx = np.mgrid[:32, :32]
        disc = (yy - cy) ** 2 + (xx - cx) ** 2 < rad**2
        assert (disc ^ inside).sum() <= 0.1 * inside.sum()
        assert 0.6 * r / g.dx < rad <= r / g.dx


def test_render_rejects_malformed(tmp_path):
    bad = tmp_path / "bad.fld"
    bad.write_bytes(b"garbage")
    outdir = tmp_path / "img"
    outdir.mkdir()
    assert main(["render", str(bad), "--out", str(outdir)]) != 0


def test_bench_single_row(tmp_path):
    report = tmp_path / "bench.csv"
    matrix = json.dumps([{"method": "two", "grid": 64, "max_iter": 3}])
    assert main(["bench", "--matrix", matrix, "--out", str(report)]) == 0
    with open(report) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 1
    assert list(rows[0]) == ["method", "n_partitions", "iterations", "wall_seconds", "final_e_tilde", "iso_ratio"]
    assert rows[0]["method"] == "two" and rows[0]["n_partitions"] == "2" and rows[0]["iterations"] == "3"


def test_bench_energy_grows_with_phase_count(tmp_path):
    base = RunConfig(method="two", grid=(64,), shape="disc")
    configs = [config_from_mapping({"c": ",".join([repr(1 / n)] * (n - 1) + [repr(1 - (n - 1) / n)])}, base) for n in (2, 6, 9)]
    rows = bench(configs, tmp_path / "b.csv")
    energies = [r["final_e_tilde"] for r in rows]
    assert [r["n_partitions"] for r in rows] == [2, 6, 9]
    assert energies[0] < energies[1] < energies[2]


def test_bench_requires_configs(tmp_path):
    with pytest.raises(ValueError):
        bench([], tmp_path / "x.csv")
