import math

import numpy as np
import pytest
from scipy.special import expit

from mixedmc import seeds
from mixedmc.simbench import (ALL_ORDINAL, CSV_HEADER, HALF_CONTINUOUS,
                              ORDINAL_TRIALS, PROCEDURE_LABELS, RunResult,
                              SimSetting, column_families, generate_observation,
                              generate_truth, read_results_csv,
                              rep_stream_tags, run_procedure, run_procedures,
                              scaled_clone, settings_registry,
                              write_results_csv)


# --- registry ----------------------------------------------------------------

def test_registry_shape_and_ids():
    reg = settings_registry()
    assert len(reg) == 24
    assert [s.setting_id for s in reg] == list(range(1, 25))


def test_registry_spot_rows():
    reg = {s.setting_id: s for s in settings_registry()}
    assert reg[1] == SimSetting(1, 400, 200, 3, 0.6, ALL_ORDINAL)
    assert reg[5] == SimSetting(5, 800, 400, 3, 0.2, ALL_ORDINAL)
    assert reg[6] == SimSetting(6, 1600, 800, 3, 0.2, ALL_ORDINAL)
    assert reg[19] == SimSetting(19, 400, 200, 5, 0.6, HALF_CONTINUOUS)
    assert reg[24] == SimSetting(24, 1600, 800, 5, 0.2, HALF_CONTINUOUS)


def test_registry_covers_full_grid():
    combos = {(s.r, s.layout, s.obs_prob, s.n, s.p) for s in settings_registry()}
    want = {(r, lay, pi, n, p)
            for r, lay in ((3, ALL_ORDINAL), (3, HALF_CONTINUOUS),
                           (5, ALL_ORDINAL), (5, HALF_CONTINUOUS))
            for pi in (0.6, 0.2)
            for n, p in ((400, 200), (800, 400), (1600, 800))}
    assert combos == want


def test_scaled_clone():
    s = settings_registry()[0]
    small = scaled_clone(s, 0.25)
    assert (small.n, small.p) == (100, 50)
    assert small.setting_id == s.setting_id and small.r == s.r
    tiny = scaled_clone(s, 0.001)
    assert tiny.n >= 4 and tiny.p >= 4 and tiny.p % 2 == 0
    with pytest.raises(ValueError):
        scaled_clone(s, 0.0)


def test_column_families_layouts():
    s = SimSetting(1, 10, 6, 2, 0.5, ALL_ORDINAL)
    fams = column_families(s)
    assert all(f.kind == 1 and f.k == ORDINAL_TRIALS for f in fams)
    s2 = SimSetting(2, 10, 6, 2, 0.5, HALF_CONTINUOUS)
    fams2 = column_families(s2)
    assert all(f.kind == 1 and f.k == ORDINAL_TRIALS for f in fams2[:3])
    assert all(f.kind == 0 for f in fams2[3:])


# --- generators --------------------------------------------------------------

def test_truth_bounds_order_and_determinism():
    s = SimSetting(1, 50, 30, 3, 0.6, ALL_ORDINAL)
    pair, m = generate_truth(s, np.random.default_rng(11))
    assert np.abs(pair.theta).max() <= 0.9 and np.abs(pair.a).max() <= 0.9
    assert np.array_equal(m, pair.theta @ pair.a.T)
    # theta consumes the stream first, then a
    rng = np.random.default_rng(11)
    want_theta = rng.uniform(-0.9, 0.9, size=(50, 3))
    want_a = rng.uniform(-0.9, 0.9, size=(30, 3))
    assert np.array_equal(pair.theta, want_theta)
    assert np.array_equal(pair.a, want_a)


def test_observation_fraction_and_support():
    s = SimSetting(2, 200, 100, 3, 0.6, HALF_CONTINUOUS)
    _, m = generate_truth(s, np.random.default_rng(12))
    data = generate_observation(m, s, np.random.default_rng(13))
    assert abs(data.observed_fraction - 0.6) < 0.02
    # from_dense validated support already; check the binomial range directly
    half = s.p // 2
    bin_mask = data.cols < half
    assert data.vals[bin_mask].min() >= 0
    assert data.vals[bin_mask].max() <= ORDINAL_TRIALS


def test_observation_means_track_truth():
    s = SimSetting(1, 2000, 4, 2, 1.0, ALL_ORDINAL)
    rng = np.random.default_rng(14)
    m = np.full((2000, 4), 0.5)
    data = generate_observation(m, s, rng)
    # binomial(5) mean at m=0.5 is 5*sigmoid(0.5) ~ 3.112
    for j in range(4):
        _, vals = data.col_slice(j)
        assert abs(vals.mean() - 5 * expit(0.5)) < 0.1


def test_observation_deterministic():
    s = SimSetting(3, 40, 20, 2, 0.5, ALL_ORDINAL)
    _, m = generate_truth(s, np.random.default_rng(15))
    d1 = generate_observation(m, s, np.random.default_rng(16))
    d2 = generate_observation(m, s, np.random.default_rng(16))
    assert d1.checksum() == d2.checksum()


def test_observation_shape_mismatch():
    s = SimSetting(3, 40, 20, 2, 0.5, ALL_ORDINAL)
    with pytest.raises(ValueError):
        generate_observation(np.zeros((5, 5)), s, np.random.default_rng(0))


# --- procedures --------------------------------------------------------------

def test_procedure_labels():
    assert PROCEDURE_LABELS == {1: "nbe", 2: "nbe+m1", 3: "nbe+m2",
                                4: "nbe+m2prime", 5: "cjmle", 6: "cjmle+m1",
                                7: "cjmle+m2", 8: "cjmle+m2prime"}


def test_run_procedure_rejects_unknown():
    s = scaled_clone(settings_registry()[0], 0.05)
    _, m = generate_truth(s, np.random.default_rng(17))
    data = generate_observation(m, s, np.random.default_rng(18))
    with pytest.raises(ValueError):
        run_procedure(9, data, s.r, np.random.default_rng(0))


def small_setting():
    # 20x10, r=3, ordinal, fully dense enough to keep all procedures healthy
    return SimSetting(1, 20, 10, 3, 0.9, ALL_ORDINAL)


def test_run_procedures_canonical_order_and_reuse():
    res = run_procedures(small_setting(), [5, 1], reps=2, base_seed=7)
    key = [(r.procedure_id, r.replication) for r in res]
    assert key == [(1, 0), (1, 1), (5, 0), (5, 1)]
    assert all(r.seed == 7 and r.setting_id == 1 for r in res)
    assert all(r.status == "ok" for r in res)
    # a procedure's rows do not depend on which other procedures ran
    solo = run_procedures(small_setting(), [5], reps=2, base_seed=7)
    for a, b in zip(solo, [r for r in res if r.procedure_id == 5]):
        assert (a.frob_scaled, a.max_norm, a.status) == \
            (b.frob_scaled, b.max_norm, b.status)


def test_run_procedures_repeat_identical():
    r1 = run_procedures(small_setting(), [1, 2], reps=2, base_seed=3)
    r2 = run_procedures(small_setting(), [1, 2], reps=2, base_seed=3)
    for a, b in zip(r1, r2):
        assert (a.frob_scaled, a.max_norm, a.status) == \
            (b.frob_scaled, b.max_norm, b.status)


def test_run_procedures_error_row_continues():
    # hunt a seed whose draw leaves some column empty: cjmle then fails,
    # nbe still succeeds, and the run keeps going
    s = SimSetting(1, 10, 6, 2, 0.2, ALL_ORDINAL)
    for base_seed in range(60):
        truth_rng = seeds.stream(base_seed, s.setting_id, 0, seeds.ROLE_TRUTH)
        obs_rng = seeds.stream(base_seed, s.setting_id, 0, seeds.ROLE_OBSERVATION)
        _, m = generate_truth(s, truth_rng)
        data = generate_observation(m, s, obs_rng)
        if (data.col_counts() == 0).any() and (data.row_counts() > 0).all():
            break
    else:
        pytest.skip("no draw with an empty column found in 60 seeds")
    res = run_procedures(s, [1, 5], reps=1, base_seed=base_seed)
    by_pid = {r.procedure_id: r for r in res}
    assert by_pid[1].status == "ok"
    assert by_pid[5].status.startswith("error:EmptyColumn")
    assert math.isnan(by_pid[5].frob_scaled)


def test_run_procedures_validation():
    with pytest.raises(ValueError):
        run_procedures(small_setting(), [0], reps=1, base_seed=0)
    with pytest.raises(ValueError):
        run_procedures(small_setting(), [1], reps=0, base_seed=0)


def test_rep_stream_tags_unique():
    tags = []
    for sid in (1, 2):
        for rep in range(3):
            tags.extend(rep_stream_tags(0, sid, rep))
    assert len(tags) == len(set(tags))


# --- CSV contract -------------------------------------------------------------

def test_results_csv_round_trip(tmp_path):
    res = run_procedures(small_setting(), [1], reps=2, base_seed=1)
    path = tmp_path / "res.csv"
    write_results_csv(path, res, timings=True)
    back = read_results_csv(path)
    assert len(back) == 2
    for a, b in zip(res, back):
        assert a == b


def test_results_csv_zeroes_timings_by_default(tmp_path):
    res = run_procedures(small_setting(), [1], reps=1, base_seed=1)
    path = tmp_path / "res.csv"
    write_results_csv(path, res)
    text = path.read_text().splitlines()
    assert text[0] == CSV_HEADER
    assert text[0] == "setting,procedure,rep,seed,frob_scaled,max_norm,wall_ms,status"
    assert text[1].split(",")[6] == "0"


def test_results_csv_nan_row_round_trip(tmp_path):
    row = RunResult(setting_id=1, procedure_id=5, replication=0, seed=0,
                    frob_scaled=float("nan"), max_norm=float("nan"),
                    wall_ms=12, status="error:EmptyColumnError")
    path = tmp_path / "res.csv"
    write_results_csv(path, [row], timings=True)
    back = read_results_csv(path)[0]
    assert math.isnan(back.frob_scaled) and math.isnan(back.max_norm)
    assert back.status == "error:EmptyColumnError"
    assert back.wall_ms == 12


def test_results_csv_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("nope\n")
    with pytest.raises(ValueError):
        read_results_csv(path)
