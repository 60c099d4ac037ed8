"""Diffusion: schedule invariants, forward-process statistics, loss oracles,
the scalar DDIM recursion oracle, and short training-loop contracts."""
from __future__ import annotations

import numpy as np
import pytest
import torch

from trajvid.config import DiTConfig, SimConfig, TrainConfig
from trajvid.diffusion import (
    NoiseSchedule,
    add_noise,
    assemble_batch,
    prepare_episode,
    sample,
    sample_loop,
    sample_timesteps,
    train,
    training_loss,
)
from trajvid.dit import Denoiser
from trajvid.errors import ModeMismatch, NanLoss
from trajvid.latentcodec import DefaultCodec
from trajvid.synthworld import make_scene, rollout_scripted
from trajvid.trajrep import ConditionMode

TOY = DiTConfig(
    hidden_dim=8, num_blocks=1, num_heads=2, text_dim=8, text_heads=2,
    feature_channels=3, timestep_dim=8, latent_channels=2, latent_frames=2,
    latent_size=4, image_size=64,
)


# --- schedule -----------------------------------------------------------------

def test_schedule_invariants():
    s = NoiseSchedule()
    assert s.T == 1000
    assert s.betas[0] == pytest.approx(1e-4) and s.betas[-1] == pytest.approx(2e-2)
    assert np.all(s.betas > 0) and np.all(s.betas < 1)
    assert np.all(np.diff(s.betas) > 0)
    assert np.all(np.diff(s.alpha_bars) < 0)
    assert s.alpha_bars[0] == pytest.approx(1.0, abs=1e-3)


def test_add_noise_endpoints():
    s = NoiseSchedule()
    rng = np.random.default_rng(0)
    z0 = rng.normal(size=(4, 4))
    eps = rng.normal(size=(4, 4))
    zt = add_noise(z0, eps, 0, s)
    assert np.abs(zt - z0).max() <= np.sqrt(1 - s.alpha_bars[0]) * np.abs(eps).max() + 1e-9
    assert np.allclose(add_noise(z0, np.zeros_like(z0), 500, s), np.sqrt(s.alpha_bars[500]) * z0)


def test_add_noise_variance_montecarlo():
    """Var(z_t) = alpha_bar + (1 - alpha_bar) = 1 for unit-variance signal+noise."""
    s = NoiseSchedule()
    rng = np.random.default_rng(1)
    n = 10_000
    for t in (10, 400, 900):
        z0 = rng.normal(size=n)
        eps = rng.normal(size=n)
        zt = add_noise(z0, eps, t, s)
        var = zt.var()
        # chi-square concentration: sd of the sample variance ~ sqrt(2/n)
        assert abs(var - 1.0) < 3 * np.sqrt(2.0 / n)


# --- loss ----------------------------------------------------------------------

def _toy_batch(mode, seed=0, n_eps=2):
    cfg = SimConfig()
    codec = DefaultCodec()
    model = Denoiser(DiTConfig())
    eps = [rollout_scripted(make_scene(s, cfg), cfg) for s in range(n_eps)]
    prepared = [prepare_episode(e, mode, codec) for e in eps]
    sched = NoiseSchedule()
    rng = np.random.default_rng(seed)
    gen = torch.Generator().manual_seed(seed)
    batch = assemble_batch(prepared, list(range(n_eps)), mode, model, sched, rng, gen, 0.0)
    return model, batch, sched, prepared


def test_loss_perfect_oracle_is_zero():
    mode = ConditionMode.TRAJ_3D
    model, batch, sched, _ = _toy_batch(mode)

    class Oracle:
        def __call__(self, z_ref, z_rgb, z_depth, t, **kw):
            C = batch.z_rgb.shape[1]
            return batch.eps[:, :C], batch.eps[:, C:]

    loss = training_loss(Oracle(), batch, mode, sched)
    assert float(loss) == 0.0


def test_loss_zero_model_unit_gaussian_is_one():
    """Zero prediction on unit Gaussian noise: E[eps^2] = 1 within 3 sigma."""
    mode = ConditionMode.TRAJ_3D
    model, batch, sched, _ = _toy_batch(mode)

    class Zero:
        def __call__(self, z_ref, z_rgb, z_depth, t, **kw):
            return torch.zeros_like(z_rgb), torch.zeros_like(z_depth)

    loss = float(training_loss(Zero(), batch, mode, sched))
    n = batch.eps.numel()
    assert abs(loss - 1.0) < 3 * np.sqrt(2.0 / n)


def test_loss_mode_mismatch():
    mode = ConditionMode.FIRST_FRAME_RGB
    model, batch, sched, _ = _toy_batch(mode)
    with pytest.raises(ModeMismatch):
        training_loss(model, batch, ConditionMode.FIRST_FRAME_MULTIMODAL, sched)
    mode2 = ConditionMode.TRAJ_2D
    model2, batch2, sched2, _ = _toy_batch(mode2)
    with pytest.raises(ModeMismatch):
        training_loss(model2, batch2, ConditionMode.FIRST_FRAME_RGB, sched2)


def test_loss_masking_ref_gradient_exactly_zero():
    """The loss excludes the reference segment: the model's output tokens at
    REF positions receive exactly zero gradient (they are discarded)."""
    mode = ConditionMode.TRAJ_3D
    model, batch, sched, _ = _toy_batch(mode)
    grads = []
    orig_head = model.head.forward

    def head_fwd(x):
        out = orig_head(x)
        out.register_hook(lambda g: grads.append(g.detach().clone()))
        return out

    model.head.forward = head_fwd
    loss = training_loss(model, batch, mode, sched)
    loss.backward()
    model.head.forward = orig_head
    g = grads[0]
    n_ref = model.grid_ref[0] * model.grid_ref[1] * model.grid_ref[2]
    assert torch.all(g[:, :n_ref] == 0)
    assert g[:, n_ref:].abs().sum() > 0


def test_joint_noising_same_t_for_both_streams():
    mode = ConditionMode.TRAJ_3D
    model, batch, sched, _ = _toy_batch(mode)
    # assemble_batch draws one t per item, shared across streams by design
    assert batch.t.shape == (batch.z_rgb.shape[0],)


# --- sampler -------------------------------------------------------------------

def test_sample_timesteps_uniform_stride():
    taus = sample_timesteps(1000, 50)
    assert taus[0] == 0 and taus[-1] == 999
    assert len(taus) == 50
    diffs = np.diff(taus)
    assert diffs.min() >= 19 and diffs.max() <= 21


def test_sampler_matches_scalar_recursion_oracle():
    """Linear model eps(z, t) = a*z: the eta-0 loop has a closed-form scalar
    recursion; run it independently and compare."""
    sched = NoiseSchedule(T=50)
    a = 0.3

    def denoise_fn(z_rgb, z_depth, t):
        return a * z_rgb, None

    z, _ = sample_loop(denoise_fn, (1, 4), None, steps=50, schedule=sched, seed=7)

    gen = torch.Generator().manual_seed(7)
    z0 = torch.randn((1, 4), generator=gen, dtype=torch.float32).numpy().astype(np.float64)
    taus = list(sample_timesteps(50, 50))
    cur = z0.copy()
    for i in range(len(taus) - 1, -1, -1):
        ab_t = sched.alpha_bars[taus[i]]
        ab_p = sched.alpha_bars[taus[i - 1]] if i > 0 else 1.0
        factor = np.sqrt(ab_p / ab_t) * (1 - np.sqrt(1 - ab_t) * a) + np.sqrt(1 - ab_p) * a
        cur = cur * factor
    assert np.allclose(z.numpy(), cur, rtol=1e-4, atol=1e-6)


def test_sampler_step_count_consistency_linear_model():
    """1000-step vs 500-step eta-0 sampling agree for the linear toy model.

    The stride gap is first order in the model coefficient, so the toy
    problem uses |a| <= 0.04 (the 1e-3 tolerance bounds the discretization
    error of the schedule, not of an arbitrarily stiff model).
    """
    sched = NoiseSchedule(T=1000)
    a = torch.tensor([-0.04, -0.02, 0.0, 0.01, 0.02, 0.03, 0.035, 0.04])

    def denoise_fn(z_rgb, z_depth, t):
        return a * z_rgb, None

    z_full, _ = sample_loop(denoise_fn, (1, 8), None, steps=1000, schedule=sched, seed=3)
    z_half, _ = sample_loop(denoise_fn, (1, 8), None, steps=500, schedule=sched, seed=3)
    rel = ((z_full - z_half).abs() / z_full.abs().clamp(min=1e-6)).max()
    assert float(rel) < 1e-3


def test_sample_deterministic_and_guidance_scale_one_skips_uncond():
    cfg = SimConfig()
    codec = DefaultCodec()
    torch.manual_seed(0)
    model = Denoiser(TOY)
    sched = NoiseSchedule(T=100)

    # tiny prepared episode matching TOY dims: fabricate directly
    from trajvid.diffusion import PreparedEpisode

    rng = np.random.default_rng(0)
    prep = PreparedEpisode(
        z_ref=rng.normal(size=(2, 1, 4, 4)).astype(np.float32),
        z_rgb=rng.normal(size=(2, 2, 4, 4)).astype(np.float32),
        z_depth=rng.normal(size=(2, 2, 4, 4)).astype(np.float32),
        caption="the robotic arm moves to the red triangle , picks it up , and then moves it",
        feat_patch=None,
        feat_footprint=None,
        traj=None,
        image_size=(64, 64),
    )
    calls = {"n": 0}
    orig = model.forward

    def counting(*a, **k):
        calls["n"] += 1
        return orig(*a, **k)

    model.forward = counting
    r1, d1 = sample(model, prep, ConditionMode.TRAJ_3D, steps=10, guidance_scale=1.0, seed=5, schedule=sched)
    n_cond_only = calls["n"]
    r2, d2 = sample(model, prep, ConditionMode.TRAJ_3D, steps=10, guidance_scale=1.0, seed=5, schedule=sched)
    assert np.array_equal(r1.values, r2.values)
    assert np.array_equal(d1.values, d2.values)
    assert n_cond_only == 10  # one forward per step, never the uncond branch
    calls["n"] = 0
    sample(model, prep, ConditionMode.TRAJ_3D, steps=10, guidance_scale=2.0, seed=5, schedule=sched)
    assert calls["n"] == 20
    model.forward = orig


# --- training loop ----------------------------------------------------------------

def _mini_prepared(mode, n=2):
    cfg = SimConfig()
    codec = DefaultCodec()
    eps = [rollout_scripted(make_scene(s, cfg), cfg) for s in range(n)]
    return [prepare_episode(e, mode, codec) for e in eps]


def test_train_lr_zero_constant_loss():
    mode = ConditionMode.TRAJ_2D
    prepared = _mini_prepared(mode)
    torch.manual_seed(0)
    model = Denoiser(DiTConfig())
    h = TrainConfig(lr=0.0, steps=3, batch_size=2, seed=4)
    c1 = train(model, prepared, mode, h)
    torch.manual_seed(0)
    model2 = Denoiser(DiTConfig())
    c2 = train(model2, prepared, mode, h)
    assert [l for _, l in c1] == [l for _, l in c2]
    # lr=0 keeps parameters frozen: rebuilding the same batches gives the
    # exact same losses again
    torch.manual_seed(0)
    model3 = Denoiser(DiTConfig())
    h2 = TrainConfig(lr=0.0, steps=6, batch_size=2, seed=4)
    c3 = train(model3, prepared, mode, h2)
    assert [l for _, l in c3[:3]] == [l for _, l in c1]


def test_train_nan_guard():
    mode = ConditionMode.TRAJ_2D
    prepared = _mini_prepared(mode)
    torch.manual_seed(0)
    model = Denoiser(DiTConfig())
    with torch.no_grad():
        model.patch_proj.weight[0, 0] = float("nan")
    with pytest.raises(NanLoss) as e:
        train(model, prepared, mode, TrainConfig(steps=3, batch_size=2))
    assert e.value.step == 0


def test_train_seed_reproducible_curve():
    mode = ConditionMode.POINT
    prepared = _mini_prepared(mode)
    torch.set_num_threads(1)
    try:
        torch.manual_seed(1)
        m1 = Denoiser(TOY_TRAIN)
        c1 = train(m1, _shrink(prepared), mode, TrainConfig(steps=5, batch_size=2, seed=9))
        torch.manual_seed(1)
        m2 = Denoiser(TOY_TRAIN)
        c2 = train(m2, _shrink(prepared), mode, TrainConfig(steps=5, batch_size=2, seed=9))
        assert c1 == c2
    finally:
        torch.set_num_threads(2)


TOY_TRAIN = DiTConfig(
    hidden_dim=16, num_blocks=1, num_heads=2, text_dim=8, text_heads=2,
    feature_channels=3, timestep_dim=8, latent_channels=48, latent_frames=4,
    latent_size=4, image_size=64,
)


def _shrink(prepared):
    """Crop prepared latents to the TOY_TRAIN dims (4 frames, 4x4 cells)."""
    import dataclasses

    out = []
    for p in prepared:
        out.append(
            dataclasses.replace(
                p,
                z_ref=p.z_ref[:, :, :4, :4],
                z_rgb=p.z_rgb[:, :4, :4, :4],
                z_depth=p.z_depth[:, :4, :4, :4],
            )
        )
    return out
