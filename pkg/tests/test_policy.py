"""Policy model contracts: shapes, affine-zero behavior, gradients, ablation."""
from __future__ import annotations

import numpy as np
import pytest
import torch

from trajvid.config import PolicyConfig, SimConfig, TrainConfig
from trajvid.diffusion import prepare_episode
from trajvid.errors import NanLoss
from trajvid.latentcodec import DefaultCodec
from trajvid.policy import PolicyEvalItem, PolicyModel, closed_loop_eval, replay_joints, train_policy
from trajvid.synthworld import evaluate_success, make_scene, rollout_scripted
from trajvid.trajrep import ConditionMode

TOY = PolicyConfig(
    hidden_dim=16, num_heads=2, spatial_blocks=1, temporal_blocks=1,
    decoder_blocks=2, latent_channels=2, latent_frames=2, latent_size=4,
)


def test_policy_shape_contract():
    torch.manual_seed(0)
    m = PolicyModel(TOY)
    z = torch.randn(3, 2, 2, 4, 4)
    out = m(z, z.clone(), n_frames=7)
    assert out.shape == (3, 7, 4)
    assert torch.all(out[..., 3] > 0) and torch.all(out[..., 3] < 1)


def test_policy_zero_latents_constant_over_batch():
    torch.manual_seed(1)
    m = PolicyModel(TOY)
    z = torch.zeros(2, 2, 2, 4, 4)
    out = m(z, z, n_frames=4)
    assert torch.allclose(out[0], out[1])


def test_policy_gradient_flows_from_both_streams():
    torch.manual_seed(2)
    m = PolicyModel(TOY).double()
    zr = torch.randn(1, 2, 2, 4, 4, dtype=torch.float64, requires_grad=True)
    zd = torch.randn(1, 2, 2, 4, 4, dtype=torch.float64, requires_grad=True)
    out = m(zr, zd, n_frames=4).sum()
    gr, gd = torch.autograd.grad(out, (zr, zd))
    assert gr.abs().sum() > 0
    assert gd.abs().sum() > 0


def test_policy_gradients_vs_finite_differences():
    torch.manual_seed(3)
    m = PolicyModel(TOY).double()
    zr = torch.randn(1, 2, 2, 4, 4, dtype=torch.float64)
    zd = torch.randn(1, 2, 2, 4, 4, dtype=torch.float64)
    w = torch.randn(1, 4, 4, dtype=torch.float64)

    def f(z):
        return (m(z, zd, n_frames=4) * w).sum()

    x = zr.clone().requires_grad_(True)
    (grad,) = torch.autograd.grad(f(x), x)
    rng = np.random.default_rng(0)
    flat = zr.flatten()
    gflat = grad.flatten()
    for i in rng.choice(flat.numel(), size=8, replace=False):
        h = 1e-6 * max(1.0, abs(float(flat[i])))
        xp, xm = flat.clone(), flat.clone()
        xp[i] += h
        xm[i] -= h
        with torch.no_grad():
            num = float((f(xp.reshape(zr.shape)) - f(xm.reshape(zr.shape))) / (2 * h))
        ana = float(gflat[i])
        assert abs(num - ana) / max(abs(num), abs(ana), 1e-8) < 1e-4


def test_policy_rgb_only_ignores_depth_input():
    torch.manual_seed(4)
    cfg = PolicyConfig(**{**TOY.__dict__, "rgb_only": True})
    m = PolicyModel(cfg)
    z = torch.randn(1, 2, 2, 4, 4)
    d1 = torch.randn(1, 2, 2, 4, 4)
    d2 = torch.randn(1, 2, 2, 4, 4)
    assert torch.equal(m(z, d1, n_frames=4), m(z, d2, n_frames=4))


def test_policy_depth_pathway_carries_information():
    torch.manual_seed(5)
    m = PolicyModel(TOY)
    z = torch.randn(1, 2, 2, 4, 4)
    d1 = torch.randn(1, 2, 2, 4, 4)
    d2 = d1 + 1.0
    assert not torch.equal(m(z, d1, n_frames=4), m(z, d2, n_frames=4))


def test_policy_train_empty_dataset_and_nan_guard():
    torch.manual_seed(6)
    m = PolicyModel(TOY)
    with pytest.raises(ValueError):
        train_policy(m, [], TrainConfig(steps=1))
    # nan guard
    cfg = SimConfig()
    codec = DefaultCodec()
    eps = [rollout_scripted(make_scene(s, cfg), cfg) for s in range(2)]
    prepared = [prepare_episode(e, ConditionMode.TRAJ_3D, codec) for e in eps]
    m2 = PolicyModel(PolicyConfig())
    with torch.no_grad():
        m2.head.weight[0, 0] = float("nan")
    with pytest.raises(NanLoss):
        train_policy(m2, prepared, TrainConfig(steps=2, batch_size=2))


def test_policy_train_lr_zero_constant_loss():
    cfg = SimConfig()
    codec = DefaultCodec()
    eps = [rollout_scripted(make_scene(s, cfg), cfg) for s in range(2)]
    prepared = [prepare_episode(e, ConditionMode.TRAJ_3D, codec) for e in eps]
    torch.manual_seed(7)
    m1 = PolicyModel(PolicyConfig())
    c1 = train_policy(m1, prepared, TrainConfig(steps=3, batch_size=2, lr=0.0, seed=3))
    torch.manual_seed(7)
    m2 = PolicyModel(PolicyConfig())
    c2 = train_policy(m2, prepared, TrainConfig(steps=3, batch_size=2, lr=0.0, seed=3))
    assert [l for _, l in c1] == [l for _, l in c2]


def test_oracle_replay_hits_destination():
    cfg = SimConfig()
    for seed in range(5):
        ep = rollout_scripted(make_scene(seed, cfg), cfg)
        final = replay_joints(ep.scene, ep.joints.astype(np.float64), cfg)
        assert evaluate_success(final, ep.scene, 3.0)


def test_closed_loop_eval_random_policy_near_zero():
    cfg = SimConfig()
    codec = DefaultCodec()
    eps = [rollout_scripted(make_scene(s, cfg), cfg) for s in range(12)]
    prepared = [prepare_episode(e, ConditionMode.TRAJ_3D, codec) for e in eps]
    torch.manual_seed(8)
    m = PolicyModel(PolicyConfig())
    items = [PolicyEvalItem(p.z_rgb, p.z_depth, p.scene) for p in prepared]
    rep = closed_loop_eval(m, items, cfg)
    assert rep["success_rate"] <= 10.0
    assert len(rep["per_episode"]) == 12
