import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from metacomb import synth
from metacomb.data_io import (
    BINARY_CLASSES,
    CAD_CLASSES,
    GoldLabels,
    PredictionTable,
    align_tables,
    binary_mapping,
    dumps,
    load_gold,
    load_json,
    load_predictions,
    save_gold,
    save_json,
    save_predictions,
)
from metacomb.errors import DataError, MappingError


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8", newline="")
    return p


def _cad_row(**on):
    return [1 if c in on.values() else 0 for c in CAD_CLASSES]


class TestLoadPredictions:
    def test_small_file(self, tmp_path):
        t = load_predictions(_write(tmp_path, "M1.csv", "sample_id,Hateful\na,0.2\nb,0.9\n"))
        assert (t.n, len(t.class_names)) == (2, 1)
        assert t.scores[:, 0].tolist() == [0.2, 0.9]
        assert t.source_model == "M1"

    def test_crlf_and_scientific(self, tmp_path):
        t = load_predictions(_write(tmp_path, "m.csv", "sample_id,x\r\na,1e-3\r\nb,.5\r\n"))
        assert t.scores[:, 0].tolist() == [0.001, 0.5]

    @pytest.mark.parametrize(
        "body,where",
        [
            ("a,1.2\n", ":2, column 'x'"),
            ("a,0.1\nb,-0.5\n", ":3, column 'x'"),
            ("a,nan\n", ":2"),
            ("a,0,5\n", ":2"),
            ("a,abc\n", ":2"),
            ("a,0.1\na,0.2\n", ":3"),
        ],
    )
    def test_malformed(self, tmp_path, body, where):
        with pytest.raises(DataError, match=where):
            load_predictions(_write(tmp_path, "m.csv", "sample_id,x\n" + body))

    def test_missing_header_column(self, tmp_path):
        with pytest.raises(DataError):
            load_predictions(_write(tmp_path, "m.csv", "id,x\na,0.1\n"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="not found"):
            load_predictions(tmp_path / "nope.csv")

    @given(st.lists(st.floats(0, 1), min_size=1, max_size=30))
    def test_round_trip_exact(self, tmp_path_factory, values):
        d = tmp_path_factory.mktemp("rt")
        ids = tuple(f"s{i}" for i in range(len(values)))
        t = PredictionTable(ids, ("a",), np.array(values)[:, None], "M")
        save_predictions(t, d / "M.csv")
        back = load_predictions(d / "M.csv")
        assert back == t
        assert back.scores.tobytes() == t.scores.tobytes()

    def test_table_invariants(self):
        with pytest.raises(DataError):
            PredictionTable(("a", "a"), ("x",), np.array([[0.1], [0.2]]))
        with pytest.raises(DataError):
            PredictionTable(("a",), ("x",), np.array([[1.5]]))
        t = PredictionTable(("a",), ("x",), np.array([[0.5]]))
        with pytest.raises(ValueError):
            t.scores[0, 0] = 0.1


class TestLoadGold:
    def test_groups_and_splits(self, tmp_path):
        g = load_gold(_write(tmp_path, "g.csv", "sample_id,H,N,group,split\na,1,0,x,dev\nb,0,1,y,test\n"))
        assert g.class_names == ("H", "N")
        assert g.group == ("x", "y") and g.split == ("dev", "test")
        assert g.for_split("dev").sample_ids == ("a",)

    def test_multilabel_row_is_legal(self, tmp_path):
        g = load_gold(_write(tmp_path, "g.csv", "sample_id,Neutral,Identity-directed Abuse\na,1,1\n"))
        assert g.label_cardinality() == 2.0

    def test_non_binary_cell(self, tmp_path):
        with pytest.raises(DataError, match=":3"):
            load_gold(_write(tmp_path, "g.csv", "sample_id,H\na,1\nb,2\n"))

    def test_unknown_split(self, tmp_path):
        with pytest.raises(DataError, match="validation"):
            load_gold(_write(tmp_path, "g.csv", "sample_id,H,split\na,1,validation\n"))

    def test_round_trip(self, tmp_path):
        d = synth.generate(synth.binary_spec(n_samples=200, seed=3, groups=("p", "q")))
        save_gold(d.gold, tmp_path / "g.csv")
        assert load_gold(tmp_path / "g.csv") == d.gold

    def test_cad_distribution(self, tmp_path):
        d = synth.generate(synth.cad_spec(n_samples=20000, seed=0))
        save_gold(d.gold, tmp_path / "g.csv")
        dist = load_gold(tmp_path / "g.csv").class_distribution()
        for c, target in zip(CAD_CLASSES, (0.798, 0.099, 0.050, 0.040, 0.008)):
            assert abs(dist[c] - target) < 0.01


class TestBinaryMapping:
    def _gold(self, rows):
        ids = tuple(f"s{i}" for i in range(len(rows)))
        return GoldLabels(ids, CAD_CLASSES, np.array(rows, dtype=np.int8))

    def test_identity_abuse(self):
        out = binary_mapping(self._gold([_cad_row(a="Identity-directed Abuse")]))
        assert out.class_names == BINARY_CLASSES
        assert out.labels.tolist() == [[1, 0]]

    def test_counter_speech(self):
        assert binary_mapping(self._gold([_cad_row(a="Counter Speech")])).labels.tolist() == [[0, 1]]

    def test_overlap_any_abuse(self):
        out = binary_mapping(self._gold([_cad_row(a="Neutral", b="Person-directed Abuse")]))
        assert out.labels.tolist() == [[1, 0]]

    def test_unmapped_class(self):
        g = GoldLabels(("a",), ("Neutral", "Slur"), np.array([[1, 0]], dtype=np.int8))
        with pytest.raises(MappingError):
            binary_mapping(g)

    def test_drop_list(self):
        g = GoldLabels(("a", "b"), ("Neutral", "Slur"), np.array([[1, 0], [0, 1]], dtype=np.int8))
        out = binary_mapping(g, drop=("Slur",))
        assert out.sample_ids == ("a",)

    @given(st.lists(st.lists(st.integers(0, 1), min_size=5, max_size=5), min_size=1, max_size=40))
    def test_complementary_and_id_preserving(self, rows):
        g = self._gold(rows)
        out = binary_mapping(g)
        assert out.sample_ids == g.sample_ids
        assert np.all(out.labels.sum(axis=1) == 1)

    def test_synthetic_cad_gives_minority_hateful(self):
        d = synth.generate(synth.cad_spec(n_samples=20000, seed=2))
        rate = binary_mapping(d.gold).class_distribution()["Hateful"]
        assert abs(rate - 0.2) < 0.02


class TestAlignAndJson:
    def test_align_reorders(self):
        gold = GoldLabels(("a", "b"), ("x",), np.array([[1], [0]], dtype=np.int8))
        t = PredictionTable(("b", "a"), ("x",), np.array([[0.2], [0.9]]))
        assert align_tables({"M": t}, gold)["M"].scores[:, 0].tolist() == [0.9, 0.2]

    def test_align_rejects_id_mismatch(self):
        gold = GoldLabels(("a", "b"), ("x",), np.array([[1], [0]], dtype=np.int8))
        t = PredictionTable(("a", "c"), ("x",), np.array([[0.2], [0.9]]))
        with pytest.raises(DataError, match="'M'"):
            align_tables({"M": t}, gold)

    def test_json_is_deterministic(self, tmp_path):
        doc = {"b": 1.0 / 3.0, "a": [1, 2]}
        save_json(doc, tmp_path / "d.json")
        assert (tmp_path / "d.json").read_text() == dumps(doc)
        assert load_json(tmp_path / "d.json") == doc

    def test_json_rejects_nan(self):
        with pytest.raises(ValueError):
            dumps({"x": float("nan")})

    def test_bad_json(self, tmp_path):
        with pytest.raises(DataError):
            load_json(_write(tmp_path, "x.json", "{nope"))
