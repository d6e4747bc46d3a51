"""Acceptance gate: every shipped guarantee checked at its stated tolerance.

Each test evaluates one quantitative guarantee end to end and registers a
one-line verdict that :mod:`conftest` prints in the ``acceptance criteria``
terminal section.  Heavy artifacts (the 64x64 desk scene and the smoke
training runs) are shared through module-scoped fixtures.
"""

import time

import numpy as np
import pytest
import torch
from conftest import record_criterion

from unmixlab import (
    AbundanceMap,
    LcguConfig,
    MineStatistics,
    MixGenerator,
    MixingModelSpec,
    PatchAutoencoder,
    PatchDiscriminator,
    SceneRecipe,
    TrainingConfig,
    UnmixGenerator,
    aad,
    add_noise,
    aid,
    estimate_mutual_information,
    evaluate_cycle,
    fcls,
    fit_mlm,
    fit_ppnm,
    mix_cube,
    normalize_cube,
    re,
    sad,
    sample_dirichlet,
    synthesize_scene,
    synthetic_endmembers,
    train,
    unmix_cube,
)
from unmixlab.losses import (
    cycle_loss,
    gan_loss_abundance,
    gan_loss_image,
    semantic_losses,
)

NAMES = ("a", "b", "c")


@pytest.fixture(scope="module")
def desk_scene():
    """Noiseless 64x64 linear scene with 3 endmembers over 64 bands."""
    recipe = SceneRecipe(64, 64, NAMES, block_size=16, smoothing_radius=4, seed=11)
    library = synthetic_endmembers(NAMES, num_bands=64, seed=3)
    cube, truth = synthesize_scene(recipe, library, MixingModelSpec(kind="lmm"))
    return library, truth, cube


def _smoke_config(bidirectional):
    # The abundance prior must match the scene's spatial statistics
    # (near-pure Dirichlet draws on scene-scale blocks), otherwise the
    # abundance discriminator pushes estimates toward the wrong mixing
    # level.  A batch of four gives the DV bound too few samples, so the
    # information term runs in its RMSE form at this scale.
    return TrainingConfig(
        epochs=25,
        learning_rate=5e-4,
        batch_size=4,
        patch_size=8,
        ae_epochs=10,
        dirichlet_alpha=(0.01, 0.01, 0.01),
        prior_grid_step=16,
        prior_smoothing_radius=3,
        seed=0,
        loss=LcguConfig(
            weights=(0.3, 0.3, 3.0, 3.0, 1.0, 10.0),
            bidirectional=bidirectional,
            mi_mode="rmse",
        ),
    )


@pytest.fixture(scope="module")
def smoke_runs():
    """Bidirectional, uni-directional, and repeat trainings on the toy scene."""
    recipe = SceneRecipe(64, 64, NAMES, block_size=16, smoothing_radius=4, seed=11)
    library = synthetic_endmembers(NAMES, num_bands=16, seed=3)
    cube, truth = synthesize_scene(recipe, library, MixingModelSpec(kind="lmm"))
    cube = normalize_cube(cube)
    start = time.perf_counter()
    state, log = train(cube, library, _smoke_config(True))
    estimate = unmix_cube(cube, state)
    uni_state, uni_log = train(cube, library, _smoke_config(False))
    elapsed = time.perf_counter() - start
    rerun_state, rerun_log = train(cube, library, _smoke_config(True))
    rerun_estimate = unmix_cube(cube, rerun_state)
    return {
        "cube": cube,
        "truth": truth,
        "state": state,
        "log": log,
        "estimate": estimate,
        "uni_state": uni_state,
        "uni_log": uni_log,
        "elapsed": elapsed,
        "rerun_log": rerun_log,
        "rerun_estimate": rerun_estimate,
    }


class TestMixingGuarantees:
    def test_nonlinear_models_collapse_to_linear(self):
        start = time.perf_counter()
        points = sample_dirichlet((1.0, 1.0, 1.0), 1000, seed=1)
        amap = AbundanceMap(points.reshape(40, 25, 3))
        library = synthetic_endmembers(NAMES, num_bands=32, seed=2)
        base = mix_cube(amap, library, MixingModelSpec(kind="lmm")).data
        collapsed = {
            "gbm": MixingModelSpec(kind="gbm", gamma=(0.0, 0.0, 0.0), per_pixel=False),
            "pnmm": MixingModelSpec(kind="pnmm", b=0.0),
            "mlm": MixingModelSpec(kind="mlm", p=0.0, per_pixel=False),
        }
        worst = max(
            float(np.abs(mix_cube(amap, library, spec).data - base).max())
            for spec in collapsed.values()
        )
        elapsed = time.perf_counter() - start
        ok = worst <= 1e-12 and elapsed < 5.0
        record_criterion(1, "model-collapse suite", ok, f"max dev {worst:.1e}, {elapsed:.1f}s")
        assert worst <= 1e-12
        assert elapsed < 5.0

    def test_fcls_exact_on_noiseless_linear_scene(self, desk_scene):
        library, truth, cube = desk_scene
        start = time.perf_counter()
        result = fcls(cube, library)
        recon = mix_cube(result.abundance, library, MixingModelSpec(kind="lmm"))
        elapsed = time.perf_counter() - start
        angle = aad(truth, result.abundance)
        error = re(cube, recon)
        ok = angle < 1e-4 and error < 1e-6 and elapsed < 60.0
        record_criterion(
            2, "fcls exactness", ok, f"AAD {angle:.1e}, RE {error:.1e}, {elapsed:.1f}s"
        )
        assert angle < 1e-4
        assert error < 1e-6
        assert elapsed < 60.0

    def test_fcls_accuracy_under_noise(self, desk_scene):
        library, truth, cube = desk_scene
        angles = {}
        for snr_db, bound in ((30.0, 0.15), (15.0, 0.45)):
            noisy = add_noise(cube, snr_db, seed=4)
            angles[snr_db] = (aad(truth, fcls(noisy, library).abundance), bound)
        ok = all(angle <= bound for angle, bound in angles.values())
        detail = ", ".join(
            f"{snr:g}dB AAD {angle:.4f} (<= {bound})" for snr, (angle, bound) in angles.items()
        )
        record_criterion(3, "fcls noise sanity", ok, detail)
        for angle, bound in angles.values():
            assert angle <= bound

    def test_model_mismatch_degrades_fcls(self, desk_scene):
        library, truth, cube = desk_scene
        start = time.perf_counter()
        scattering = mix_cube(truth, library, MixingModelSpec(kind="mlm", seed=9))
        linear_angle = aad(truth, fcls(add_noise(cube, 30.0, seed=4), library).abundance)
        mismatch_angle = aad(
            truth, fcls(add_noise(scattering, 30.0, seed=4), library).abundance
        )
        elapsed = time.perf_counter() - start
        ratio = mismatch_angle / linear_angle
        ok = ratio >= 3.0 and elapsed < 300.0
        record_criterion(
            4,
            "model-mismatch ordering",
            ok,
            f"AAD {mismatch_angle:.3f} vs {linear_angle:.3f}, ratio {ratio:.1f}, {elapsed:.0f}s",
        )
        assert ratio >= 3.0
        assert elapsed < 300.0

    def test_nonlinear_fit_recovery(self):
        # The alternating solvers hard-assert a non-increasing objective
        # internally, so completing 100-pixel fits is itself the
        # monotonicity check; recovery bounds are asserted on top.
        points = sample_dirichlet((1.0, 1.0, 1.0), 100, seed=6)
        amap = AbundanceMap(points.reshape(10, 10, 3))
        library = synthetic_endmembers(NAMES, num_bands=32, seed=2)
        curved = mix_cube(amap, library, MixingModelSpec(kind="pnmm", b=0.3))
        ppnm_fit = fit_ppnm(curved, library)
        b_error = abs(float(np.mean(ppnm_fit.nonlinearity)) - 0.3)
        ppnm_angle = aad(amap, ppnm_fit.abundance)
        scattering = mix_cube(
            amap, library, MixingModelSpec(kind="mlm", p=0.4, per_pixel=False)
        )
        mlm_fit = fit_mlm(scattering, library)
        mlm_angle = aad(amap, mlm_fit.abundance)
        ok = b_error <= 0.05 and ppnm_angle < 0.05 and mlm_angle < 0.1
        record_criterion(
            5,
            "nonlinear fit oracles",
            ok,
            f"b err {b_error:.3f}, AAD {ppnm_angle:.3f}/{mlm_angle:.3f}, objective monotone",
        )
        assert b_error <= 0.05
        assert ppnm_angle < 0.05
        assert mlm_angle < 0.1


def _fd_relative_error(closure, network):
    """Relative gap between autograd and a central difference, probed at
    the largest-magnitude gradient element over the whole network so the
    comparison is well-conditioned (first layers can be ReLU-dead)."""
    parameters = [p for p in network.parameters() if p.requires_grad]
    grads = torch.autograd.grad(closure(), parameters, allow_unused=True)
    best = None
    for param, grad in zip(parameters, grads):
        if grad is None:
            continue
        flat = grad.reshape(-1)
        index = int(flat.abs().argmax())
        if best is None or abs(float(flat[index])) > abs(best[2]):
            best = (param, index, float(flat[index]))
    assert best is not None, "term has no gradient into the probed network"
    param, index, auto = best
    values = param.data.view(-1)
    original = float(values[index])
    # Cross-network paths attenuate gradients to ~1e-7 at these widths,
    # so a larger step keeps the difference above double-precision noise;
    # truncation stays negligible because the terms are locally smooth.
    step = 1e-4 * max(1.0, abs(original))
    with torch.no_grad():
        values[index] = original + step
        plus = float(closure())
        values[index] = original - step
        minus = float(closure())
        values[index] = original
    finite = (plus - minus) / (2.0 * step)
    return abs(auto - finite) / max(abs(finite), 1e-8)


class TestObjectiveGuarantees:
    def test_loss_gradients_match_finite_differences(self):
        start = time.perf_counter()
        torch.manual_seed(0)
        bands, size, widths = 6, 4, (4, 6, 8)
        library = synthetic_endmembers(NAMES, num_bands=bands, seed=4)
        g_unmix = UnmixGenerator(bands, len(NAMES), widths=widths).double()
        g_mix = MixGenerator(library, size, widths=widths).double()
        d_a = PatchDiscriminator(len(NAMES), size, widths=widths).double()
        d_y = PatchDiscriminator(bands, size, widths=widths).double()
        ae = PatchAutoencoder(bands, widths=widths).double()
        ae.mark_pretrained()
        config = LcguConfig(mi_mode="mine", subpatch_size=2)
        mine_net = MineStatistics(bands * 4, bands * 4, hidden=8).double()
        y = torch.rand(2, bands, size, size, dtype=torch.float64)
        a = torch.softmax(torch.randn(2, len(NAMES), size, size, dtype=torch.float64), dim=1)

        def semantic():
            pinned = torch.Generator().manual_seed(7)
            return semantic_losses(g_unmix(y), library, y, ae, mine_net, config, pinned)

        checks = {
            "gan_abundance/gen": (lambda: gan_loss_abundance(d_a, a, g_unmix(y))[0], g_unmix),
            "gan_abundance/disc": (lambda: gan_loss_abundance(d_a, a, g_unmix(y))[1], d_a),
            "gan_image/gen": (lambda: gan_loss_image(d_y, y, g_mix(a))[0], g_mix),
            "gan_image/disc": (lambda: gan_loss_image(d_y, y, g_mix(a))[1], d_y),
            "cycle_image": (lambda: cycle_loss(y, a, g_unmix, g_mix)[1], g_unmix),
            "cycle_abundance": (lambda: cycle_loss(y, a, g_unmix, g_mix)[2], g_mix),
            "semantic_recon": (lambda: semantic()[0], g_unmix),
            "semantic_mi": (lambda: semantic()[1], mine_net),
        }
        errors = {name: _fd_relative_error(*check) for name, check in checks.items()}
        elapsed = time.perf_counter() - start
        worst = max(errors, key=errors.get)
        ok = all(error <= 1e-4 for error in errors.values()) and elapsed < 120.0
        record_criterion(
            6,
            "gradient finite differences",
            ok,
            f"worst {worst} rel err {errors[worst]:.1e}, {elapsed:.0f}s",
        )
        for name, error in errors.items():
            assert error <= 1e-4, f"{name}: relative error {error:.2e}"
        assert elapsed < 120.0

    def test_mi_estimate_matches_gaussian_analytic(self):
        start = time.perf_counter()
        rho = 0.9
        analytic = -0.5 * np.log(1.0 - rho**2)
        rng = np.random.default_rng(0)
        x = rng.standard_normal(100_000)
        y = rho * x + np.sqrt(1.0 - rho**2) * rng.standard_normal(100_000)
        estimate = estimate_mutual_information(x, y, seed=0)
        elapsed = time.perf_counter() - start
        gap = abs(estimate - analytic)
        ok = gap <= 0.1 and elapsed < 120.0
        record_criterion(
            7,
            "mi gaussian oracle",
            ok,
            f"estimate {estimate:.3f} vs {analytic:.3f}, {elapsed:.0f}s",
        )
        assert gap <= 0.1
        assert elapsed < 120.0

    def test_dirichlet_sampler_statistics(self):
        samples = sample_dirichlet((2.0, 1.0, 1.0), 100_000, seed=8)
        mean_gap = float(np.abs(samples.mean(axis=0) - (0.5, 0.25, 0.25)).max())
        simplex = samples.min() >= 0.0 and float(np.abs(samples.sum(axis=1) - 1.0).max()) < 1e-9
        ok = mean_gap < 0.01 and simplex
        record_criterion(
            8, "dirichlet statistics", ok, f"mean gap {mean_gap:.4f}, simplex valid"
        )
        assert mean_gap < 0.01
        assert simplex


class TestTrainingGuarantees:
    def test_smoke_training_learns_unmixing(self, smoke_runs):
        log = smoke_runs["log"]

        def cycle(epoch):
            return log.epoch_mean("cycle_image", epoch) + log.epoch_mean(
                "cycle_abundance", epoch
            )

        ratio = cycle(25) / cycle(1)
        final = aad(smoke_runs["truth"], smoke_runs["estimate"])
        uniform = np.full(smoke_runs["truth"].data.shape, 1.0 / 3.0)
        baseline = aad(smoke_runs["truth"], uniform)
        bidir = evaluate_cycle(smoke_runs["state"], smoke_runs["cube"], seed=123)
        uni = evaluate_cycle(smoke_runs["uni_state"], smoke_runs["cube"], seed=123)
        elapsed = smoke_runs["elapsed"]
        ok = (
            ratio < 0.25
            and final < 0.3
            and final < baseline
            and uni["cycle_total"] >= bidir["cycle_total"]
            and elapsed < 900.0
        )
        record_criterion(
            9,
            "smoke training",
            ok,
            f"cycle ratio {ratio:.3f}, AAD {final:.3f} (uniform {baseline:.3f}), "
            f"uni cycle {uni['cycle_total']:.3f} >= bidir {bidir['cycle_total']:.3f}, "
            f"{elapsed:.0f}s",
        )
        assert ratio < 0.25
        assert final < 0.3
        assert final < baseline
        assert uni["cycle_total"] >= bidir["cycle_total"]
        assert elapsed < 900.0

    def test_smoke_training_reproducible(self, smoke_runs):
        first = smoke_runs["log"].rows[0]
        rerun_first = smoke_runs["rerun_log"].rows[0]
        bitwise = first == rerun_first
        final = aad(smoke_runs["truth"], smoke_runs["estimate"])
        rerun_final = aad(smoke_runs["truth"], smoke_runs["rerun_estimate"])
        gap = abs(final - rerun_final)
        ok = bitwise and gap <= 1e-9
        record_criterion(
            10, "smoke determinism", ok, f"step-1 bitwise {bitwise}, AAD gap {gap:.1e}"
        )
        assert bitwise
        assert gap <= 1e-9


class TestMetricGuarantees:
    def test_metric_hand_values(self):
        half = np.array([0.5, 0.5])
        checks = {
            "aad identity": aad([[half]], [[half]]),
            "aad orthogonal": abs(aad([[[1.0, 0.0]]], [[[0.0, 1.0]]]) - np.pi / 2),
            "aad hand case": abs(
                aad([[half]], [[[0.8, 0.2]]]) - np.arccos(0.5 / np.sqrt(0.34))
            ),
            "aid identity": aid([[half]], [[half]]),
            "aid hand case": abs(aid([[half]], [[[0.9, 0.1]]]) - 0.4 * np.log(9.0)),
            "aid symmetry": abs(
                aid([[half]], [[[0.9, 0.1]]]) - aid([[[0.9, 0.1]]], [[half]])
            ),
            "sad identity": sad([[half]], [[half]]),
            "sad scale invariance": sad([[half]], [[half * 2.0]]),
            "sad orthogonal": abs(sad([[[1.0, 0.0]]], [[[0.0, 1.0]]]) - np.pi / 2),
            "re identity": re([[half]], [[half]]),
            "re constant offset": abs(re([[half]], [[half + 0.1]]) - 0.1),
            "re half checker": abs(
                re([[[0.0, 0.0]]], [[[1.0, 0.0]]]) - np.sqrt(0.5)
            ),
        }
        worst = max(checks, key=checks.get)
        ok = all(gap <= 1e-9 for gap in checks.values())
        record_criterion(
            11, "metric hand values", ok, f"worst {worst} gap {checks[worst]:.1e}"
        )
        for name, gap in checks.items():
            assert gap <= 1e-9, f"{name}: off by {gap:.2e}"
