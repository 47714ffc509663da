import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import make_segment
from infopos.core import CutKind, MetricKind
from infopos.features import (
    DATASET_HEADER,
    R2_FLOOR,
    Dataset,
    EmptyDataset,
    KeyMismatch,
    Provenance,
    SchemaMismatch,
    assemble_dataset,
    concat_datasets,
    extract_row,
    gof,
    read_dataset,
    write_dataset,
)
from infopos.passport import Passport, PassportKey, RegressionSignature, build_mean_passport, fit_signature
from oracles import brute_gof

# hand computation: u = 0, .25, .5, .75; line 2u+1 gives 1, 1.5, 2, 2.5;
# residuals 0, 1.5, 0, 2.5 -> SS_res = 8.5, RMSE = sqrt(8.5/4) = sqrt(17/8);
# mean 2.75 -> SS_tot = 8.75, R2 = 1 - 8.5/8.75 = 1/35
TOY_RMSE = math.sqrt(17 / 8)
TOY_R2 = 1 / 35


def passport_for(seg, sig):
    return Passport(PassportKey(seg.phase_type, seg.metric, seg.cut, sig.degree), sig, 1)


def test_exact_curve_scores_perfectly():
    t = np.arange(50) / 50
    seg = make_segment(t, 0.5 * t ** 2 - t + 2, 0.0, 1.0)
    r2, rmse = gof(seg, RegressionSignature(2, 0.5, -1, 2))
    assert r2 == pytest.approx(1, abs=1e-12) and rmse == pytest.approx(0, abs=1e-12)


def test_constant_segment_own_fit():
    seg = make_segment(np.arange(6.0), np.full(6, 4.0))
    assert gof(seg, fit_signature(seg, 1)).r2 == 1.0
    assert gof(seg, RegressionSignature(1, 0, 0, 5.0)).r2 == R2_FLOOR


def test_toy_rmse_hand_value():
    seg = make_segment([0.0, 1.0, 2.0, 3.0], [1.0, 3.0, 2.0, 5.0], 0.0, 4.0)
    r2, rmse = gof(seg, RegressionSignature(1, 0, 2, 1))
    assert rmse == pytest.approx(TOY_RMSE, rel=1e-15)
    assert r2 == pytest.approx(TOY_R2, rel=1e-12)
    assert (r2, rmse) == pytest.approx(brute_gof([0, 1, 2, 3], [1, 3, 2, 5], 0, 4, (0, 2, 1)))


def test_passport_curve_gives_zero_diffs():
    t = np.arange(40) / 40
    sig = RegressionSignature(1, 0, 1.5, 0.5, 1.0)
    seg = make_segment(t, 1.5 * t + 0.5, 0.0, 1.0)
    row = extract_row(seg, sig, passport_for(seg, sig))
    assert row.R2_absolute_diff == 0 and row.RMSE_absolute_diff == 0


def test_amplitude_doubled_increases_rmse_diff():
    t = np.arange(10) / 10
    unit = make_segment(t, np.sin(3 * t) + 1, 0.0, 1.0)
    double = unit.replace(values=2 * unit.values)
    pp = build_mean_passport([unit], 1)
    row = extract_row(double, fit_signature(double, 1), pp)
    own = fit_signature(double, 1)
    _, rmse_own = brute_gof(t.tolist(), double.values.tolist(), 0, 1, own.coefficients)
    _, rmse_pass = brute_gof(t.tolist(), double.values.tolist(), 0, 1, pp.signature.coefficients)
    assert rmse_pass - rmse_own > 0
    assert row.RMSE_absolute_diff == pytest.approx(rmse_pass - rmse_own, rel=1e-9)
    assert row.RMSE_absolute_diff > 0


def test_key_mismatch():
    t = np.arange(10) / 10
    seg = make_segment(t, t, 0.0, 1.0, phase="neural-op")
    other = Passport(PassportKey("image-op", MetricKind.CURRENT, CutKind.FULL, 1),
                     RegressionSignature(1, 0, 1, 0), 1)
    with pytest.raises(KeyMismatch):
        extract_row(seg, fit_signature(seg, 1), other)


@given(st.integers(0, 10**6), st.sampled_from([1, 2]))
def test_diff_features_nonnegative_and_ols_optimal(seed, degree):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(5, 60))
    t = np.arange(n) / n
    seg = make_segment(t, rng.normal(0, 1, n) + rng.normal() * t, 0.0, 1.0)
    pp = Passport(PassportKey(seg.phase_type, seg.metric, seg.cut, degree),
                  RegressionSignature(degree, rng.normal() if degree == 2 else 0.0,
                                      rng.normal(), rng.normal()), 3)
    own = fit_signature(seg, degree)
    row = extract_row(seg, own, pp)
    assert row.R2_absolute_diff >= 0 and row.RMSE_absolute_diff >= 0
    assert gof(seg, own).r2 >= gof(seg, pp.signature).r2 - 1e-12
    same = extract_row(seg, own, Passport(pp.key, own, 1))
    assert same.R2_absolute_diff == 0 and same.RMSE_absolute_diff == 0


def test_column_order():
    assert DATASET_HEADER == ("execution_time", "coefficient_2", "coefficient_1", "intercept",
                              "R2", "R2_absolute_diff", "RMSE", "RMSE_absolute_diff", "label")


def test_linear_rows_have_zero_coefficient_2():
    t = np.arange(10) / 10
    seg = make_segment(t, t ** 2, 0.0, 1.0)
    row = extract_row(seg, fit_signature(seg, 1), build_mean_passport([seg], 1))
    assert row.coefficient_2 == 0.0


def rows_for(labels, degree=1):
    t = np.arange(12) / 12
    out = []
    for i, lab in enumerate(labels):
        seg = make_segment(t, np.cos(t * (i + 1)), 0.0, 1.0, label=lab, scenario=f"s{i}")
        pp = build_mean_passport([seg.replace(label="Normal")], degree)
        out.append(extract_row(seg, fit_signature(seg, degree), pp))
    return out


def test_class_counts():
    ds = assemble_dataset(rows_for(["Normal", "NoFan"]))
    assert ds.class_counts == {"NoFan": 1, "Normal": 1}


def test_concat_adds_rows():
    a = assemble_dataset(rows_for(["Normal", "NoFan"]))
    b = assemble_dataset(rows_for(["UnderVolt", "Normal", "Normal"]))
    assert len(concat_datasets([a, b])) == 5


def test_mixed_policy_rejected():
    with pytest.raises(SchemaMismatch):
        assemble_dataset(rows_for(["Normal"], 1) + rows_for(["NoFan"], 2))
    with pytest.raises(EmptyDataset):
        assemble_dataset([])


def test_dataset_round_trip_random(tmp_path):
    rng = np.random.default_rng(11)
    X = rng.normal(0, 1e3, (100, 8)) * rng.choice([1e-9, 1.0, 1e9], (100, 8))
    labels = tuple(rng.choice(["Normal", "NoFan", "UnderVolt"], 100).tolist())
    prov = tuple(Provenance(f"s{i}", "neural-op", CutKind.MID, MetricKind.POWER, 2, i)
                 for i in range(100))
    ds = Dataset(X, labels, prov)
    write_dataset(ds, tmp_path / "d.csv")
    back = read_dataset(tmp_path / "d.csv")
    assert back == ds
    assert np.array_equal(back.X, X)
    assert back.provenance == prov
    assert (tmp_path / "d.csv").read_text().splitlines()[0] == ",".join(DATASET_HEADER)


def test_dataset_rejects_non_finite():
    with pytest.raises(SchemaMismatch):
        Dataset(np.full((1, 8), np.nan), ("Normal",))
