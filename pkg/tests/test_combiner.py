import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from metacomb import synth
from metacomb.combiner import (
    CombinerModel,
    TrainingConfig,
    bce_loss_grad,
    predict_combined,
    train_br_combiners,
    train_class_combiner,
    weight_diagnostics,
)
from metacomb.core import CombinerParams
from metacomb.data_io import CAD_CLASSES, GoldLabels, PredictionTable
from metacomb.errors import DataError, DegenerateDataError, ParameterError

SIGMOID_0_7 = 0.66818777216816610653


def _fd_grad(X, y, w, b, l2, h=1e-5):
    def f(wv, bv):
        return bce_loss_grad(X, y, wv, bv, l2)[0]

    gw = np.empty_like(w)
    for k in range(w.size):
        e = np.zeros_like(w)
        e[k] = h
        gw[k] = (f(w + e, b) - f(w - e, b)) / (2 * h)
    gb = (f(w, b + h) - f(w, b - h)) / (2 * h)
    return gw, gb


def _binary_data(seed, n=400, K=3):
    spec = synth.binary_spec(n_samples=n, seed=seed, models=synth.mixed_quality_models(("Hateful",), dict(list(synth.MIXED_QUALITY.items())[:K])))
    d = synth.generate(spec)
    X = np.column_stack([t.column("Hateful") for t in d.tables.values()])
    return X, d.gold.column("Hateful").astype(float), d


class TestLossGradient:
    def test_gradient_at_origin(self):
        loss, gw, gb = bce_loss_grad([1.0, 0.0], [1, 0], np.zeros(1), 0.0)
        assert loss == pytest.approx(math.log(2), abs=1e-15)
        assert gw.tolist() == [-0.25]
        assert gb == 0.0

    def test_origin_loss_is_ln2_on_any_data(self, rng):
        X = rng.random((37, 4))
        y = (rng.random(37) < 0.3).astype(float)
        assert bce_loss_grad(X, y, np.zeros(4), 0.0, 1e-6)[0] == pytest.approx(math.log(2), abs=1e-12)

    @given(st.integers(0, 2**32 - 1))
    def test_matches_finite_differences(self, seed):
        r = np.random.Generator(np.random.PCG64(seed))
        X = r.random((50, 3))
        y = (r.random(50) < 0.4).astype(float)
        w = r.normal(0, 3, 3)
        b = float(r.normal(0, 3))
        _, gw, gb = bce_loss_grad(X, y, w, b, 1e-3)
        fw, fb = _fd_grad(X, y, w, b, 1e-3)
        scale = max(np.abs(np.append(gw, gb)).max(), 1e-3)
        assert np.max(np.abs(np.append(gw - fw, gb - fb))) / scale < 1e-6

    def test_no_overflow_at_large_logits(self):
        X = np.array([[1.0], [0.0]])
        with np.errstate(over="raise", invalid="raise"):
            loss, gw, gb = bce_loss_grad(X, [0, 1], np.array([800.0]), -400.0)
        assert math.isfinite(loss) and loss > 100


class TestTrainClassCombiner:
    def test_separable(self):
        X = np.array([[0.1], [0.2], [0.3], [0.7], [0.8], [0.9]])
        y = np.array([0, 0, 0, 1, 1, 1])
        p, meta = train_class_combiner(X, y)
        pred = 1 / (1 + np.exp(-(X @ p.weights + p.bias))) >= 0.5
        assert (pred == y.astype(bool)).all()
        assert meta.final_loss < math.log(2)

    def test_single_label_gold(self):
        with pytest.raises(DegenerateDataError):
            train_class_combiner([[0.1], [0.9]], [1, 1])

    def test_nan_input(self):
        with pytest.raises(DataError):
            train_class_combiner([[0.1], [float("nan")]], [0, 1])

    def test_too_few_samples(self):
        with pytest.raises(DataError):
            train_class_combiner([[0.1]], [1])

    def test_non_binary_gold(self):
        with pytest.raises(DataError):
            train_class_combiner([[0.1], [0.2]], [0, 2])

    def test_trace_non_increasing(self):
        X, y, _ = _binary_data(1)
        _, meta = train_class_combiner(X, y, TrainingConfig(max_epochs=500))
        trace = np.array(meta.loss_trace)
        assert trace[0] == pytest.approx(math.log(2), abs=1e-12)
        assert np.all(np.diff(trace) <= 0)
        assert meta.final_loss == trace[-1]

    def test_converges(self):
        X, y, _ = _binary_data(2)
        p, meta = train_class_combiner(X, y)
        assert meta.converged and meta.final_grad_norm <= 1e-8
        _, gw, gb = bce_loss_grad(X, y, p.weights, p.bias, 1e-6)
        assert math.sqrt(gw @ gw + gb * gb) <= 1e-8

    def test_beats_single_model_probes(self):
        X, y, _ = _binary_data(3)
        l2 = 1e-6
        p, meta = train_class_combiner(X, y, TrainingConfig(l2_penalty=l2))
        for k in range(X.shape[1]):
            probe = np.zeros(X.shape[1])
            probe[k] = 1.0
            assert meta.final_loss <= bce_loss_grad(X, y, probe, 0.0, l2)[0]

    def test_bit_identical_retraining(self):
        X, y, _ = _binary_data(4)
        a, ma = train_class_combiner(X, y)
        b, mb = train_class_combiner(X, y)
        assert a.weights.tobytes() == b.weights.tobytes() and a.bias == b.bias
        assert ma == mb


class TestConfig:
    @pytest.mark.parametrize(
        "kw", [{"learning_rate": 0}, {"max_epochs": 0}, {"grad_tolerance": -1}, {"l2_penalty": -0.1}, {"max_epochs": 1.5}]
    )
    def test_validation(self, kw):
        with pytest.raises(ParameterError):
            TrainingConfig(**kw)

    def test_from_dict_ignores_unknown(self):
        assert TrainingConfig.from_dict({"learning_rate": 0.2, "other": 1}).learning_rate == 0.2


def _tables(d):
    return {m: t.select(d.gold.sample_ids) for m, t in d.tables.items()}


class TestBinaryRelevance:
    def test_single_hateful_combiner(self):
        d = synth.generate(synth.binary_spec(n_samples=600, seed=7))
        model = train_br_combiners(_tables(d), d.gold, TrainingConfig(max_epochs=300))
        assert model.classes == ("Hateful",)
        assert model.model_ids == ("M1", "M2", "M3", "M4", "M5")

    def test_five_class_taxonomy(self):
        d = synth.generate(synth.cad_spec(n_samples=3000, seed=1))
        model = train_br_combiners(_tables(d), d.gold, TrainingConfig(max_epochs=200))
        assert model.classes == CAD_CLASSES
        assert all(model.per_class[c].K == 5 for c in CAD_CLASSES)

    def test_identical_class_data_identical_params(self, rng):
        ids = tuple(f"s{i}" for i in range(80))
        col = rng.random(80)
        lab = (col + rng.normal(0, 0.3, 80) > 0.5).astype(np.int8)
        tab = PredictionTable(ids, ("a", "b"), np.column_stack([col, col]), "M1")
        gold = GoldLabels(ids, ("a", "b"), np.column_stack([lab, lab]))
        model = train_br_combiners({"M1": tab}, gold, TrainingConfig(max_epochs=400))
        assert model.per_class["a"].weights.tobytes() == model.per_class["b"].weights.tobytes()
        assert model.per_class["a"].bias == model.per_class["b"].bias

    def test_class_order_independent(self):
        d = synth.generate(synth.cad_spec(n_samples=2000, seed=3))
        cfg = TrainingConfig(max_epochs=200)
        fwd = train_br_combiners(_tables(d), d.gold, cfg)
        rev = train_br_combiners(_tables(d), d.gold, cfg, classes=tuple(reversed(CAD_CLASSES)))
        for c in CAD_CLASSES:
            assert fwd.per_class[c].weights.tobytes() == rev.per_class[c].weights.tobytes()

    def test_error_names_class(self):
        ids = ("a", "b", "c")
        tab = PredictionTable(ids, ("x", "y"), np.array([[0.1, 0.2], [0.5, 0.6], [0.9, 0.4]]), "M1")
        gold = GoldLabels(ids, ("x", "y"), np.array([[0, 1], [1, 1], [1, 1]], dtype=np.int8))
        with pytest.raises(DegenerateDataError, match="'y'"):
            train_br_combiners({"M1": tab}, gold)

    def test_misaligned_tables(self):
        d = synth.generate(synth.binary_spec(n_samples=100, seed=0))
        tables = _tables(d)
        tables["M1"] = tables["M1"].select(tuple(reversed(d.gold.sample_ids)))
        with pytest.raises(DataError):
            train_br_combiners(tables, d.gold)


def _fixed_model(weights, bias, ids=("A", "B")):
    p = CombinerParams(weights, bias)
    return CombinerModel(ids[: len(p.weights)], ("Hateful",), {"Hateful": p}, {})


def _one_row(model_scores):
    return {m: PredictionTable(("s0",), ("Hateful",), np.array([[v]]), m) for m, v in model_scores.items()}


class TestPredictCombined:
    def test_worked_value(self):
        out = predict_combined(_fixed_model([0.5, 0.5], 0.0), _one_row({"A": 0.6, "B": 0.8}))
        assert out.scores[0, 0] == pytest.approx(SIGMOID_0_7, abs=1e-15)
        assert out.source_model == "MLT"

    def test_zero_weights_give_half(self, rng):
        model = _fixed_model([0.0, 0.0], 0.0)
        ids = tuple(f"s{i}" for i in range(10))
        tabs = {m: PredictionTable(ids, ("Hateful",), rng.random((10, 1)), m) for m in "AB"}
        assert np.all(predict_combined(model, tabs).scores == 0.5)

    def test_model_permutation_symmetry(self):
        a = predict_combined(_fixed_model([0.3, 1.7], -0.4), _one_row({"A": 0.2, "B": 0.9}))
        b = predict_combined(_fixed_model([1.7, 0.3], -0.4, ids=("B", "A")), _one_row({"A": 0.2, "B": 0.9}))
        assert a.scores[0, 0] == pytest.approx(b.scores[0, 0], abs=1e-15)

    def test_missing_table(self):
        with pytest.raises(DataError, match="B"):
            predict_combined(_fixed_model([0.5, 0.5], 0.0), _one_row({"A": 0.6}))


class TestDiagnostics:
    def test_two_model_weight_fixture(self):
        d = weight_diagnostics(_fixed_model([1.246, 0.885], -1.0))["Hateful"]
        assert d["W"] == pytest.approx(2.131, abs=1e-12)
        assert d["sign_homogeneous"] and d["b_sign_consistent"]

    def test_unit_weight(self):
        d = weight_diagnostics(_fixed_model([1.0], -0.2))["Hateful"]
        assert d == {"W": 1.0, "sign_homogeneous": True, "b_sign_consistent": True}


class TestModelJson:
    def test_round_trip(self):
        d = synth.generate(synth.binary_spec(n_samples=300, seed=5))
        model = train_br_combiners(_tables(d), d.gold, TrainingConfig(max_epochs=50))
        back = CombinerModel.from_dict(model.to_dict())
        assert back.to_dict() == model.to_dict()
        p, q = model.per_class["Hateful"], back.per_class["Hateful"]
        assert p.weights.tobytes() == q.weights.tobytes() and p.bias == q.bias

    def test_weight_count_checked(self):
        doc = _fixed_model([0.5, 0.5], 0.0).to_dict()
        doc["combiners"]["Hateful"]["weights"] = [1.0]
        with pytest.raises(DataError):
            CombinerModel.from_dict(doc)
