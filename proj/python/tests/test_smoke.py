import math
import subprocess

import numpy as np
import pytest

import viewgraph as vg


def test_sphere_points_pinned_and_unit():
    p = vg.sphere_points(24, seed=0)
    assert p.shape == (24, 3)
    np.testing.assert_allclose(np.linalg.norm(p, axis=1), 1.0, atol=1e-9)
    np.testing.assert_array_equal(p[:3], np.eye(3))


def test_tetrahedron_energy():
    p = vg.sphere_points(4, pinned=False)
    assert vg.coulomb_energy(p) == pytest.approx(4.5, abs=0.01)


def test_delaunay_euler_counts():
    p = vg.sphere_points(16, seed=3)
    tri, edges = vg.delaunay(p)
    assert tri.shape == (2 * 16 - 4, 3)
    assert edges.shape == (3 * 16 - 6, 2)


def test_view_graph_matrices():
    p = vg.sphere_points(12, pinned=False)
    adj, hops = vg.view_graph(p, "complete", "inverse")
    assert hops.max() == 3
    np.testing.assert_array_equal(adj, adj.T)
    mask = hops > 0
    np.testing.assert_allclose(adj[mask], 1.0 / hops[mask])
    local, _ = vg.view_graph(p, "local", "uniform")
    assert int((local > 0).sum()) == 60


def test_weights_and_metrics():
    assert vg.hop_weight(2, 4, "inverse") == 0.5
    assert vg.hop_weight(3, 4, "inverse_square") == 1.0 / 9.0
    assert vg.auroc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == 0.75
    assert vg.mcc([1, 1, 0, 1, 0, 0], [1, 1, 1, 0, 0, 0]) == pytest.approx(1 / 3)
    assert vg.f1([1, 1, 0, 1, 0, 0], [1, 1, 1, 0, 0, 0]) == pytest.approx(2 / 3)


def test_folds_balanced():
    labels = [i % 2 for i in range(50)]
    folds = np.array(vg.stratified_folds(labels, 5, 1))
    for c in (0, 1):
        counts = np.bincount(folds[np.array(labels) == c], minlength=5)
        assert counts.max() - counts.min() <= 1


def test_errors_are_typed():
    with pytest.raises(vg.ArgumentError):
        vg.hop_weight(1, 4, "cubic")
    with pytest.raises(vg.IoError):
        vg.load_nrrd("/nonexistent/volume.nrrd")
    with pytest.raises(vg.ConfigError):
        vg.run_benchmark({"epochs": "many"})


def test_config_keys_listed():
    keys = vg.config_keys()
    assert keys["epochs"] == "300"
    assert "z_spacing" in keys


def test_slice_round_trip(tmp_path):
    cli = pytest.importorskip("shutil").which("viewgraph")
    if cli is None:
        pytest.skip("viewgraph CLI not on PATH")
    subprocess.run([cli, "synth", "-n", "2", "--set", "grid=40", "--out", str(tmp_path)], check=True)
    vol, spacing, _ = vg.load_nrrd(str(tmp_path / "phantom_000_volume.nrrd"))
    assert vol.shape == (40, 40, 40)
    np.testing.assert_allclose(spacing, 1.0)
    stack = vg.slice_volume(str(tmp_path / "phantom_000_volume.nrrd"), str(tmp_path / "phantom_000_mask.nrrd"),
                            "omni", 8, vg.sphere_points(8), 24)
    assert stack.shape == (8, 24, 24)
    assert math.isfinite(float(stack.sum()))


def test_tiny_benchmark():
    rows = vg.run_benchmark({"n_phantoms": "12", "grid": "40", "folds": "3", "epochs": "6",
                             "warmup_epochs": "2", "views": "8", "slice_size": "16", "encoder_dim": "8"})
    assert len(rows) == 4
    for r in rows:
        assert 0.0 <= r["auroc_mean"] <= 1.0
        assert r["folds"] == 3
