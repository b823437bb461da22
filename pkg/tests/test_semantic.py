import itertools
import json
import math

import numpy as np
import pytest

from lingdiv import DispersionConfig, EmbeddingSet, SchemaError, div_sem, load_embeddings


def write_jsonl(path, rows):
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n")


class TestLoadEmbeddings:
    def test_shape_preserved(self, tmp_path):
        path = tmp_path / "e.jsonl"
        write_jsonl(path, [
            {"id": "a#0", "sent": "one", "vec": [1.0, 0.0, 0.0, 1.0]},
            {"id": "a#1", "sent": "two", "vec": [0.0, 1.0, 0.0, 1.0]},
            {"id": "b#0", "sent": "three", "vec": [0.5, 0.5, 0.5, 0.5]},
        ])
        emb = load_embeddings(path)
        assert emb.matrix.shape == (3, 4)
        assert emb.ids == ("a#0", "a#1", "b#0")

    def test_dimension_mismatch_names_line(self, tmp_path):
        path = tmp_path / "e.jsonl"
        write_jsonl(path, [
            {"id": "a", "sent": "x", "vec": [1.0, 0.0, 0.0, 1.0]},
            {"id": "b", "sent": "y", "vec": [1.0, 0.0, 0.0, 1.0, 3.0]},
        ])
        with pytest.raises(SchemaError) as err:
            load_embeddings(path)
        assert err.value.line == 2

    def test_nan_rejected(self, tmp_path):
        path = tmp_path / "e.jsonl"
        path.write_text('{"id": "a", "sent": "x", "vec": [1.0, NaN]}\n')
        with pytest.raises(SchemaError):
            load_embeddings(path)

    def test_zero_vector_rejected(self, tmp_path):
        path = tmp_path / "e.jsonl"
        write_jsonl(path, [{"id": "a", "sent": "x", "vec": [0.0, 0.0]}])
        with pytest.raises(SchemaError):
            load_embeddings(path)

    def test_missing_vec_rejected(self, tmp_path):
        path = tmp_path / "e.jsonl"
        write_jsonl(path, [{"id": "a", "sent": "x"}])
        with pytest.raises(SchemaError):
            load_embeddings(path)


class TestDivSem:
    def exhaustive(self):
        return DispersionConfig(exhaustive=True)

    def test_identical_rows(self):
        emb = EmbeddingSet(matrix=np.ones((3, 4)), ids=("a", "b", "c"))
        assert div_sem(emb, self.exhaustive()) == pytest.approx(0.0, abs=1e-12)

    def test_orthogonal_pair(self):
        emb = EmbeddingSet(matrix=np.eye(2), ids=("a", "b"))
        assert div_sem(emb, self.exhaustive()) == pytest.approx(50.0)

    def test_four_row_fixture_matches_bruteforce(self):
        rows = np.array([
            [1.0, 0.2, 0.0],
            [0.3, 1.0, 0.1],
            [0.0, 0.4, 1.0],
            [0.6, 0.6, 0.6],
        ])

        def cos_d(u, v):
            return 1 - float(np.dot(u, v) / (np.linalg.norm(u) * np.linalg.norm(v)))

        pairs = list(itertools.combinations(range(4), 2))
        expected = 100.0 * (sum(cos_d(rows[i], rows[j]) for i, j in pairs) / len(pairs)) / 2.0
        emb = EmbeddingSet(matrix=rows, ids=("a", "b", "c", "d"))
        assert div_sem(emb, self.exhaustive()) == pytest.approx(expected, rel=1e-12)

    def test_row_rescaling_invariance(self):
        rng = np.random.default_rng(0)
        rows = rng.normal(size=(6, 5)) + 2.0
        scaled = rows.copy()
        scaled[2] *= 17.0
        a = div_sem(EmbeddingSet(matrix=rows, ids=tuple("abcdef")), self.exhaustive())
        b = div_sem(EmbeddingSet(matrix=scaled, ids=tuple("abcdef")), self.exhaustive())
        assert a == pytest.approx(b, abs=1e-9)

    def test_requires_two_rows(self):
        emb = EmbeddingSet(matrix=np.ones((1, 3)), ids=("a",))
        with pytest.raises(ValueError):
            div_sem(emb)

    def test_range_and_zero_iff_collinear(self):
        rng = np.random.default_rng(1)
        rows = np.abs(rng.normal(size=(8, 4))) + 0.1
        val = div_sem(EmbeddingSet(matrix=rows, ids=tuple("abcdefgh")), self.exhaustive())
        assert 0.0 <= val <= 100.0
        collinear = np.outer(np.arange(1, 5, dtype=float), rows[0])
        assert div_sem(
            EmbeddingSet(matrix=collinear, ids=tuple("abcd")), self.exhaustive()
        ) == pytest.approx(0.0, abs=1e-9)
