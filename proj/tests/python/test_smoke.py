import numpy as np
import pytest

import spellattack as sa


def test_itr_values():
    assert sa.itr(1.0, 36, 1.0) == pytest.approx(np.log2(36))
    assert sa.itr(1.0 / 36, 36, 1.0) == 0.0
    with pytest.raises(sa.ParameterError):
        sa.itr(0.5, 1, 1.0)


def test_spd_mean_and_distance():
    m = sa.spd_mean([np.diag([4.0, 9.0]), np.eye(2)])
    np.testing.assert_allclose(m, np.diag([2.0, 3.0]), atol=1e-9)
    assert sa.airm_distance(np.eye(2), np.eye(2)) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(sa.Error):
        sa.airm_distance(np.eye(2), -np.eye(2))


def test_cca_recovers_frequency():
    fs, n = 250.0, 312
    freqs = sa.benchmark_frequencies()
    rng = np.random.default_rng(0)
    y = sa.reference_signal(freqs[17], 2, n, fs)
    x = rng.standard_normal((3, 2)) @ y[:2] + 0.1 * rng.standard_normal((3, n))
    assert sa.cca_decode(x, fs) == 17
    assert sa.cca_rho(y, y) == pytest.approx(1.0)


def test_ssvep_objective_gradient():
    fs, n = 250.0, 100
    rng = np.random.default_rng(1)
    windows = [rng.standard_normal((3, n)) for _ in range(2)]
    r = 0.1 * rng.standard_normal((3, n))
    v, g = sa.ssvep_objective(r, windows, 10.0, fs, n_harmonics=2)
    d = rng.standard_normal((3, n))
    h = 1e-6
    vp, _ = sa.ssvep_objective(r + h * d, windows, 10.0, fs, n_harmonics=2)
    vm, _ = sa.ssvep_objective(r - h * d, windows, 10.0, fs, n_harmonics=2)
    assert (vp - vm) / (2 * h) == pytest.approx(float(np.sum(g * d)), rel=1e-4)


def test_p300_pipeline(tmp_path):
    data = tmp_path / "p300"
    sa.synth_p300(data, n_train=20, n_test=4, repeats=5)
    assert sa.dataset_paradigm(data) == "p300"
    model = tmp_path / "model.bin"
    sa.train_p300(data, model)
    assert sa.p300_accuracy(model, data, 5) == 1.0
    pattern = sa.craft_p300(model, data, str(tmp_path / "tmpl"))
    assert pattern.shape[0] == 16
    rep = sa.score_p300(model, data, pattern, "AB", repeats=[5])
    assert [r["attacker"] for r in rep[0]["rows"]] == ["A", "B"]
    assert rep[0]["aggregate"]["attacker"] == "mean"


def test_ssvep_craft(tmp_path):
    data = tmp_path / "ssvep"
    sa.synth_ssvep(data, blocks=1)
    windows, targets = sa.ssvep_windows(data, 0)
    assert len(windows) == 40 and list(targets) == list(range(40))
    delta, info = sa.craft_ssvep(windows, 8.0, 250.0)
    assert delta.shape == windows[0].shape
    assert info["final_spr_db"] < 25.0


def test_corrupt_dataset_raises_format_error(tmp_path):
    data = tmp_path / "p300"
    sa.synth_p300(data, n_train=2, n_test=1, repeats=1)
    payload = data / "trials" / "00000.f32"
    payload.write_bytes(payload.read_bytes()[:-3])
    with pytest.raises(sa.FormatError):
        sa.train_p300(data, tmp_path / "m.bin")
