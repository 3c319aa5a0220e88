import json

import numpy as np
import pytest

from sketchharp.cli import main
from sketchharp.corpus import load_corpus

CLI_CONFIG = {
    "model": {
        "embed_dim": 8,
        "enc_hidden": 8,
        "dec_hidden": 12,
        "rel_blocks": 2,
        "rel_ffn": 16,
        "mixture_components": 3,
        "img_channels": [4, 4, 4, 4, 1],
    },
    "train": {"batch_size": 4, "steps": 4, "checkpoint_every": 4, "log_every": 1},
}


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    corpus = root / "corpus.ndjson"
    config = root / "config.json"
    config.write_text(json.dumps(CLI_CONFIG))
    assert main([
        "convert", "--synthetic", "12", "--categories", "face,house",
        "--normalize", "--seed", "0", "--out", str(corpus),
    ]) == 0
    assert main([
        "train", "--corpus", str(corpus), "--config", str(config),
        "--out", str(root / "run"), "--seed", "1",
    ]) == 0
    ckpt = root / "run" / "checkpoint_000004.harpz"
    assert ckpt.exists()
    return {"root": root, "corpus": corpus, "config": config, "ckpt": ckpt}


class TestConvert:
    def test_corpus_written_and_normalized(self, workspace):
        records = load_corpus(workspace["corpus"])
        assert len(records) == 12
        comps = np.concatenate(
            [s.stroke.data[:, :2].ravel() for r in records for s in r.strokes]
        )
        assert np.std(comps) == pytest.approx(1.0, abs=1e-6)

    def test_npz_path_requires_args(self, workspace, capsys):
        assert main(["convert", "--out", str(workspace["root"] / "x.ndjson")]) == 2


class TestTrainArtifacts:
    def test_loss_log_columns(self, workspace):
        header = (workspace["root"] / "run" / "loss_log.csv").read_text().splitlines()[0]
        assert header == "step,seq,pos,stp,sok,img,total"


class TestGenerate:
    def test_generate_into_ndjson(self, workspace):
        out = workspace["root"] / "gen.ndjson"
        assert main([
            "generate", "--checkpoint", str(workspace["ckpt"]), "--corpus",
            str(workspace["corpus"]), "--index", "0", "--seed", "5", "--out", str(out),
        ]) == 0
        assert out.exists()

    def test_generate_deterministic(self, workspace, tmp_path):
        outs = []
        for name in ("a.ndjson", "b.ndjson"):
            path = tmp_path / name
            main([
                "generate", "--checkpoint", str(workspace["ckpt"]), "--seed", "7",
                "--out", str(path),
            ])
            outs.append(path.read_text())
        assert outs[0] == outs[1]

    def test_generate_svg(self, workspace, tmp_path):
        path = tmp_path / "sketch.svg"
        main([
            "generate", "--checkpoint", str(workspace["ckpt"]), "--corpus",
            str(workspace["corpus"]), "--index", "1", "--seed", "3", "--out", str(path),
        ])
        text = path.read_text()
        assert text.startswith("<svg") and "</svg>" in text


class TestReconstruct:
    def test_reconstructions_written(self, workspace, tmp_path):
        assert main([
            "reconstruct", "--checkpoint", str(workspace["ckpt"]), "--corpus",
            str(workspace["corpus"]), "--out", str(tmp_path), "--limit", "3",
        ]) == 0
        recs = load_corpus(tmp_path / "reconstructions.ndjson")
        assert len(recs) == 3


class TestManipulate:
    def test_script_replay(self, workspace, tmp_path):
        script = tmp_path / "events.jsonl"
        script.write_text(
            "\n".join(
                json.dumps(e)
                for e in [
                    {"kind": "step"},
                    {"kind": "erase"},
                    {"kind": "insert", "actions": [[0, 0, 0], [3, 1, 0], [1, 2, 1]]},
                    {"kind": "finish"},
                ]
            )
            + "\n"
        )
        out = tmp_path / "result.ndjson"
        transcript = tmp_path / "applied.jsonl"
        assert main([
            "manipulate", "--checkpoint", str(workspace["ckpt"]), "--corpus",
            str(workspace["corpus"]), "--index", "0", "--script", str(script),
            "--seed", "2", "--out", str(out), "--transcript", str(transcript),
        ]) == 0
        assert out.exists()
        applied = [json.loads(x) for x in transcript.read_text().splitlines()]
        assert applied[0]["kind"] == "step"

    def test_script_replay_is_deterministic(self, workspace, tmp_path):
        script = tmp_path / "events.jsonl"
        script.write_text(json.dumps({"kind": "finish"}) + "\n")
        texts = []
        for name in ("r1.ndjson", "r2.ndjson"):
            out = tmp_path / name
            main([
                "manipulate", "--checkpoint", str(workspace["ckpt"]), "--corpus",
                str(workspace["corpus"]), "--index", "0", "--script", str(script),
                "--seed", "2", "--out", str(out),
            ])
            texts.append(out.read_text())
        assert texts[0] == texts[1]


class TestEval:
    def test_report_schema(self, workspace, tmp_path):
        out = tmp_path / "report.json"
        assert main([
            "eval", "--checkpoint", str(workspace["ckpt"]), "--corpus",
            str(workspace["corpus"]), "--out", str(out), "--limit", "6",
            "--clf-epochs", "2",
        ]) == 0
        report = json.loads(out.read_text())
        assert set(report) == {"chamfer_mean", "rec", "ret_at", "n", "metadata"}
        assert 0.0 <= report["rec"] <= 1.0
        assert report["n"] > 0


class TestExportSvg:
    def test_svg_written(self, workspace, tmp_path):
        out = tmp_path / "c.svg"
        assert main([
            "export-svg", "--corpus", str(workspace["corpus"]), "--index", "2",
            "--out", str(out),
        ]) == 0
        assert "<polyline" in out.read_text()
