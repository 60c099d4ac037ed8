"""Metric axioms and tracking-extractor behavior."""
from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trajvid.config import SimConfig
from trajvid.errors import DimMismatch
from trajvid.evalsuite import extract_generated_trajectory, psnr, ssim, trajectory_error
from trajvid.synthworld import make_scene, rollout_scripted
from trajvid.trajrep import Trajectory


def _traj(pts):
    return Trajectory(points=tuple((int(x), int(y), 0.0) for x, y in pts))


# --- trajectory_error ---------------------------------------------------------

def test_trajectory_error_zero_iff_equal():
    a = _traj([(1, 2), (3, 4)])
    assert trajectory_error(a, a) == 0.0


def test_trajectory_error_constant_offset():
    a = _traj([(10, 10), (20, 20), (30, 30)])
    b = _traj([(13, 14), (23, 24), (33, 34)])
    assert trajectory_error(a, b) == pytest.approx(7.0)


def test_trajectory_error_length_mismatch():
    with pytest.raises(DimMismatch):
        trajectory_error(_traj([(0, 0)]), _traj([(0, 0), (1, 1)]))


coords = st.lists(st.tuples(st.integers(0, 63), st.integers(0, 63)), min_size=1, max_size=8)


@settings(max_examples=50)
@given(coords, coords, coords)
def test_trajectory_error_metric_axioms(pa, pb, pc):
    n = min(len(pa), len(pb), len(pc))
    a, b, c = _traj(pa[:n]), _traj(pb[:n]), _traj(pc[:n])
    dab = trajectory_error(a, b)
    dba = trajectory_error(b, a)
    assert dab == dba  # symmetry
    assert dab >= 0.0
    if pa[:n] == pb[:n]:
        assert dab == 0.0
    else:
        assert (dab == 0.0) == all(x[:2] == y[:2] for x, y in zip(a.points, b.points))
    # triangle inequality
    assert trajectory_error(a, c) <= dab + trajectory_error(b, c) + 1e-12


# --- psnr / ssim ----------------------------------------------------------------

def test_psnr_identity_cap_and_offset():
    a = np.random.default_rng(0).random((4, 1, 16, 16))
    assert psnr(a, a) == 100.0
    base = np.full((2, 16, 16), 0.4)
    assert psnr(base, base + 0.1) == pytest.approx(20.0)


def test_psnr_symmetry_and_dim_check():
    rng = np.random.default_rng(1)
    a, b = rng.random((3, 8, 8)), rng.random((3, 8, 8))
    assert psnr(a, b) == pytest.approx(psnr(b, a))
    with pytest.raises(DimMismatch):
        psnr(a, b[:2])


def test_ssim_identity_exact_one():
    a = np.random.default_rng(2).random((3, 24, 24))
    assert ssim(a, a) == 1.0


def test_ssim_symmetric():
    rng = np.random.default_rng(3)
    a, b = rng.random((2, 24, 24)), rng.random((2, 24, 24))
    assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-12)


def test_ssim_random_pairs_near_zero():
    rng = np.random.default_rng(4)
    vals = [ssim(rng.random((24, 24)), rng.random((24, 24))) for _ in range(10)]
    assert max(abs(v) for v in vals) < 0.2


def test_ssim_degrades_with_noise():
    rng = np.random.default_rng(5)
    a = rng.random((24, 24))
    noisy = np.clip(a + rng.normal(0, 0.1, a.shape), 0, 1)
    assert 0.2 < ssim(a, noisy) < 1.0


# --- tracking -------------------------------------------------------------------

def test_tracking_matches_ground_truth_on_simulator_video():
    cfg = SimConfig()
    errs = []
    for seed in range(10):
        ep = rollout_scripted(make_scene(seed, cfg), cfg)
        k = ep.scene.target_index
        got = extract_generated_trajectory(
            ep.rgb, ep.scene.objects[k].color, start_point=tuple(ep.traj_gt[0][:2])
        )
        errs.append(trajectory_error(ep.traj_gt, got))
    assert float(np.mean(errs)) <= 1.5


def test_tracking_fallback_constant_when_object_erased():
    video = np.full((5, 3, 32, 32), 0.1, dtype=np.float32)
    t = extract_generated_trajectory(video, (0.9, 0.1, 0.1), start_point=(7, 9))
    assert all(p[:2] == (7, 9) for p in t.points)


def test_tracking_ignores_distractor_colors():
    video = np.full((3, 3, 32, 32), 0.1, dtype=np.float32)
    # distractor (green) at top-left, target (red) at bottom-right
    video[:, :, 2:6, 2:6] = np.array([0.1, 0.8, 0.15], dtype=np.float32)[:, None, None]
    video[:, :, 20:24, 20:24] = np.array([0.9, 0.1, 0.1], dtype=np.float32)[:, None, None]
    t = extract_generated_trajectory(video, (0.9, 0.1, 0.1))
    assert all(p[:2] == (22, 22) for p in t.points)  # centroid 21.5 rounds half-up
