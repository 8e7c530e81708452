import math

import numpy as np
import pytest

import mmsechan as mc


def unit_spec(bd_ts):
    return mc.DopplerSpec(1.0, 299792458.0, bd_ts)


def test_jakes_matches_bessel():
    s = unit_spec(0.08)
    r = mc.jakes_covariance(s, 5)
    for k in range(5):
        assert r[k].real == pytest.approx(mc.bessel_j0(2 * math.pi * 0.08 * k))


def test_predictor_row_matches_direct_prediction():
    s = unit_spec(0.1)
    r = mc.covariance_from_paths(mc.sample_paths(4, s, 3), 6, s)
    y = np.exp(1j * np.arange(4.0))
    row = mc.predictor_row(r, 4, 2, 0.3)
    assert abs(row @ y - mc.lmmse_predict(r, 4, 2, 0.3, y)) < 1e-12


def test_single_sample_grid_is_lmmse():
    s = unit_spec(0.1)
    r = mc.covariance_from_paths(mc.sample_paths(3, s, 1), 5, s)
    bank = mc.make_filter_bank([r], 4, 1, 0.2)
    y = np.array([1, 1j, -1, 0.5 + 0.5j])
    assert abs(mc.gridded_predict(bank, y, 0.2) - mc.lmmse_predict(r, 4, 1, 0.2, y)) < 1e-12


def test_nn_init_and_snapshot():
    s = unit_spec(0.08)
    Q = mc.make_q("toeplitz", 4)
    _, bank = mc.build_prior_grid(Q.K, s, 4, 1, 0.1)
    sp = mc.structured_params(bank, Q)
    nn = mc.init_from_structured(sp)
    y = np.array([0.3 - 1j, 1.0, 0.2j, -0.7])
    c = mc.chat(y, Q, 0.1)
    assert abs(mc.nn_predict(nn, c, y) - mc.structured_predict(sp, c, y)) < 1e-12
    back = mc.NNParams.from_bytes(nn.to_bytes())
    assert np.array_equal(back.A1, nn.A1)
    with pytest.raises(mc.DecodeError):
        mc.NNParams.from_bytes(b"XXXX")


def test_cnn_from_nolearn():
    Q = mc.make_q("circulant", 8)
    nl = mc.nolearn_params(8, "circulant", 0.5)
    cnn = mc.CNNParams.from_nolearn(nl)
    y = mc.ula_steering(8, 0.4)
    assert np.allclose(mc.cnn_estimate(cnn, Q, y, 0.5), mc.estimate_nolearn(nl, Q, y, 0.5), atol=1e-12)


def test_omp_recovers_one_atom():
    atoms = mc.steering_dictionary(8, 4)
    y = 2.0 * atoms[:, 5]
    rec, support = mc.omp(y, atoms, 1)
    assert support == [5]
    assert np.allclose(rec, y)
    _, s, err = mc.genie_omp(y, atoms, y, 4)
    assert s == 1 and err < 1e-20


def test_channel_file_round_trip(tmp_path):
    h = mc.synthesize_ula_channels(10, 16, seed=2)
    assert h.shape == (10, 16)
    assert np.array_equal(mc.decode_channels(mc.encode_channels(h)), h)
    path = str(tmp_path / "h.chn")
    mc.save_channels(path, h)
    assert np.array_equal(mc.load_channels(path), h)


def test_small_experiment(tmp_path):
    cfg = mc.ExperimentConfig.predict_defaults()
    cfg.split = (10, 10, 5, 10)
    cfg.epochs = 1
    cfg.snr_override = [0.0]
    cfg.methods = ["lmmse-jakes", "nn-toep"]
    cfg.use_cache = False
    cfg.output = str(tmp_path / "out.csv")
    rows = mc.run_experiment(cfg)
    assert [r[1] for r in rows] == ["lmmse-jakes", "nn-toep"]
    assert all(r[2] > 0 for r in rows)
    assert mc.format_results(rows).startswith("snr_db,method,nmse,seed\n")
    assert mc.ExperimentConfig.parse(cfg.format()).format() == cfg.format()

    cfg.methods = []
    with pytest.raises(mc.ConfigError):
        cfg.validate()
