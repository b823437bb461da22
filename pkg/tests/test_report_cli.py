import json

import pytest

from lingdiv import Corpus, DispersionConfig, DiversityReport, Document, save_corpus
from lingdiv.cli import main
from lingdiv.report import measure, parse_report_json, render

from test_recursion import TEXTS


@pytest.fixture
def corpus_path(tmp_path):
    corpus = Corpus(tuple(Document(id=f"d{i:02d}", text=t) for i, t in enumerate(TEXTS)))
    path = tmp_path / "corpus.jsonl"
    save_corpus(corpus, path)
    return path


@pytest.fixture
def conllu_path(tmp_path):
    blocks = []
    for i in range(4):
        blocks.append(
            f"# sent_id = d{i:02d}#0\n"
            "1\tThe\tthe\tDET\tDT\t_\t2\tdet\t_\t_\n"
            f"2\tword{i}\tword\tNOUN\tNN\t_\t0\troot\t_\t_\n"
            f"3\tmoves\tmove\tVERB\tVBZ\t_\t2\t{'nsubj' if i % 2 else 'obj'}\t_\t_\n"
        )
    path = tmp_path / "parses.conllu"
    path.write_text("\n".join(blocks) + "\n")
    return path


@pytest.fixture
def embeddings_path(tmp_path):
    rows = [
        {"id": f"d{i:02d}#0", "sent": "s", "vec": [1.0 + i, float(i % 3), 1.0, 0.5 * i + 0.1]}
        for i in range(5)
    ]
    path = tmp_path / "embs.jsonl"
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
    return path


class TestMeasure:
    def test_all_columns_populated(self, corpus_path, conllu_path, embeddings_path, tmp_path):
        from lingdiv import NGramLanguageModel, tokenize

        model = NGramLanguageModel(order=2, alpha=0.1).fit(
            [list(tokenize(t, "surface")) for t in TEXTS]
        )
        model_path = tmp_path / "model.json"
        model.save(model_path)
        report = measure(
            corpus_path,
            conllu_path=conllu_path,
            embeddings_path=embeddings_path,
            model_path=model_path,
            profile="story",
            disp=DispersionConfig(exhaustive=True),
        )
        for name in ("ppl", "ttr", "distinct2", "distinct3", "one_minus_self_bleu", "div_syn", "div_sem"):
            assert getattr(report, name) is not None

    def test_missing_adapter_files_leave_columns_absent(self, corpus_path, caplog):
        with caplog.at_level("WARNING"):
            report = measure(
                corpus_path,
                conllu_path="/nonexistent/p.conllu",
                embeddings_path="/nonexistent/e.jsonl",
                profile="story",
            )
        assert report.div_syn is None and report.div_sem is None
        assert report.ttr is not None
        assert len([r for r in caplog.records if "missing" in r.message]) == 2

    def test_deterministic(self, corpus_path):
        a = measure(corpus_path, profile="story", disp=DispersionConfig(seed=3))
        b = measure(corpus_path, profile="story", disp=DispersionConfig(seed=3))
        assert a.to_payload() == b.to_payload()

    def test_provenance_recorded(self, corpus_path):
        report = measure(corpus_path, profile="abstract")
        assert report.provenance["profile"] == "abstract"
        assert "config_hash" in report.provenance


class TestRender:
    def human_news_row(self):
        return DiversityReport(
            label="Human", ppl=None, ttr=7.36, distinct2=48.1, distinct3=81.1,
            one_minus_self_bleu=73.3, div_syn=3.17, div_sem=46.6,
        )

    def test_paper_row_formatting(self):
        text = render([self.human_news_row()], "tsv").decode()
        header, row = text.strip().split("\n")
        assert header.split("\t") == [
            "Iter", "PPL", "TTR", "Distinct-2", "Distinct-3", "1-Self-BLEU", "Div_syn", "Div_sem",
        ]
        assert row.split("\t") == ["Human", "--", "7.36", "48.1", "81.1", "73.3", "3.17", "46.6"]

    def test_empty_report_list_is_header_only(self):
        assert render([], "tsv").decode().strip().count("\n") == 0

    def test_json_roundtrip_fixpoint(self):
        reports = [self.human_news_row()]
        blob = render(reports, "json")
        parsed = parse_report_json(blob)
        assert render(parsed, "json") == blob
        assert parsed[0] == reports[0]

    def test_three_sig_digits_below_ten(self):
        rep = DiversityReport(label="x", div_syn=0.8234, ppl=12.52)
        row = render([rep], "tsv").decode().strip().split("\n")[1].split("\t")
        assert row[1] == "12.5"  # ppl
        assert row[6] == "0.823"  # div_syn

    def test_unknown_format_rejected(self):
        with pytest.raises(ValueError):
            render([], "xml")


class TestSimulateCli:
    def write_config(self, tmp_path, corpus_path, **extra):
        payload = {
            "corpus": str(corpus_path),
            "profile": {"name": "custom", "truncation_length": 20, "top_p": 0.9,
                        "temperature": 0.7, "max_new_tokens": 25},
            "iterations": 1,
            "order": 2,
            "alpha": 0.05,
            "seed": 11,
            "holdout_fraction": 0.15,
            "probes": {"self_bleu_pool": 200, "dispersion_sample": 100, "dispersion_repeats": 2},
        }
        payload.update(extra)
        path = tmp_path / "config.json"
        path.write_text(json.dumps(payload))
        return path

    def test_single_iteration_emits_one_record(self, tmp_path, corpus_path):
        config = self.write_config(tmp_path, corpus_path)
        out = tmp_path / "results.jsonl"
        assert main(["simulate", "--config", str(config), "--out", str(out)]) == 0
        lines = out.read_text().strip().split("\n")
        assert len(lines) == 1
        record = json.loads(lines[0])
        assert record["iteration"] == 1
        assert "seconds" not in record  # wall time must not break byte-identity

    def test_rerun_is_byte_identical(self, tmp_path, corpus_path):
        config = self.write_config(tmp_path, corpus_path)
        out1, out2 = tmp_path / "r1.jsonl", tmp_path / "r2.jsonl"
        assert main(["simulate", "--config", str(config), "--out", str(out1)]) == 0
        assert main(["simulate", "--config", str(config), "--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_filter_and_mix_bookkeeping(self, tmp_path, corpus_path):
        config = self.write_config(
            tmp_path, corpus_path, iterations=2,
            filter={"drop_fraction": 0.2},
            mix={"synthetic_fraction": 0.4, "fresh_subsets": 2},
        )
        out = tmp_path / "results.jsonl"
        assert main(["simulate", "--config", str(config), "--out", str(out)]) == 0
        records = [json.loads(line) for line in out.read_text().strip().split("\n")]
        import math

        pool = 20 - math.ceil(0.15 * 20)  # 17 train docs
        gen_n = math.ceil(0.4 * pool)  # 7 generation-side docs
        fresh_total = pool - gen_n  # 10 fresh docs in 2 subsets of 5
        kept = math.ceil(0.8 * gen_n)
        assert [r["dataset_size"] for r in records] == [kept + 5, kept + 5]

    def test_invalid_config_fails_before_work(self, tmp_path, corpus_path):
        config = self.write_config(tmp_path, corpus_path, iterations=0)
        out = tmp_path / "results.jsonl"
        assert main(["simulate", "--config", str(config), "--out", str(out)]) == 1
        assert not out.exists()

    def test_checkpoint_resume(self, tmp_path, corpus_path):
        config = self.write_config(tmp_path, corpus_path, iterations=2)
        ckpt = tmp_path / "ckpt"
        full = tmp_path / "full.jsonl"
        assert main(["simulate", "--config", str(config), "--out", str(full)]) == 0
        # run once with checkpoints, then force a resume from iteration 1
        first = tmp_path / "first.jsonl"
        assert main(["simulate", "--config", str(config), "--out", str(first),
                     "--checkpoint", str(ckpt)]) == 0
        state = json.loads((ckpt / "checkpoint.json").read_text())
        state["iteration"] = 1
        state["records"] = state["records"][:1]
        (ckpt / "checkpoint.json").write_text(json.dumps(state, sort_keys=True))
        resumed = tmp_path / "resumed.jsonl"
        assert main(["simulate", "--config", str(config), "--out", str(resumed),
                     "--checkpoint", str(ckpt), "--resume"]) == 0
        assert resumed.read_bytes() == full.read_bytes()


class TestCliMeasure:
    def test_tsv_to_stdout(self, corpus_path, capsys):
        assert main(["measure", "--corpus", str(corpus_path), "--exhaustive"]) == 0
        out = capsys.readouterr().out
        assert out.startswith("Iter\tPPL\tTTR")

    def test_flags_override_config(self, tmp_path, corpus_path, capsys):
        config = tmp_path / "m.json"
        config.write_text(json.dumps({"corpus": str(corpus_path), "label": "FromConfig"}))
        assert main(["measure", "--config", str(config), "--label", "FromFlag"]) == 0
        assert "FromFlag" in capsys.readouterr().out

    def test_config_supplies_corpus(self, tmp_path, corpus_path, capsys):
        config = tmp_path / "m.json"
        config.write_text(json.dumps({"corpus": str(corpus_path)}))
        assert main(["measure", "--config", str(config)]) == 0

    def test_usage_error_without_corpus(self):
        assert main(["measure"]) == 1

    def test_data_error_on_bad_jsonl(self, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text("{nope\n")
        assert main(["measure", "--corpus", str(bad)]) == 2

    def test_json_format(self, corpus_path, capsys):
        assert main(["measure", "--corpus", str(corpus_path), "--format", "json"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert isinstance(payload, list) and payload[0]["ttr"] is not None


class TestCliTools:
    def test_wl_inspect(self, conllu_path, capsys):
        assert main(["wl-inspect", "--conllu", str(conllu_path), "--sentence", "1"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["n_nodes"] == 3
        assert payload["h"] == 2
        level0 = [f for f in payload["features"] if f["iteration"] == 0]
        assert sum(f["count"] for f in level0) == 3

    def test_wl_inspect_bad_index(self, conllu_path):
        assert main(["wl-inspect", "--conllu", str(conllu_path), "--sentence", "99"]) == 1

    def test_export_vectors_conllu(self, conllu_path, tmp_path):
        out = tmp_path / "vecs.jsonl"
        assert main(["export-vectors", "--conllu", str(conllu_path), "--out", str(out)]) == 0
        rows = [json.loads(line) for line in out.read_text().strip().split("\n")]
        assert len(rows) == 4
        assert all(row["dim"] == rows[0]["dim"] for row in rows)

    def test_export_vectors_embeddings(self, embeddings_path, tmp_path):
        out = tmp_path / "vecs.jsonl"
        assert main(["export-vectors", "--embeddings", str(embeddings_path), "--out", str(out)]) == 0
        rows = [json.loads(line) for line in out.read_text().strip().split("\n")]
        assert len(rows) == 5 and len(rows[0]["vec"]) == 4
