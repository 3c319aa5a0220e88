import numpy as np
import pytest
import torch

from sketchharp.checkpoint import load_checkpoint, save_checkpoint
from sketchharp.config import TrainConfig
from sketchharp.errors import CheckpointError
from sketchharp.model import HarpModel
from sketchharp.training import collate, teacher_forced_forward, train

from conftest import TINY, make_tiny_records


class TestArchive:
    def test_round_trip_reproduces_losses(self, tiny_model, tiny_records, tiny_train_cfg, tmp_path):
        path = tmp_path / "ck.harpz"
        save_checkpoint(path, tiny_model, step=7, train_cfg=tiny_train_cfg)
        bundle = load_checkpoint(path)
        assert bundle.step == 7
        assert bundle.model.dtype == torch.float64
        batch = collate(tiny_records[:3], TINY, torch.float64)
        tiny_model.eval()
        bundle.model.eval()
        _, a = teacher_forced_forward(tiny_model, batch, tiny_train_cfg)
        _, b = teacher_forced_forward(bundle.model, batch, tiny_train_cfg)
        assert a == b

    def test_manifest_lists_every_key(self, tiny_model, tmp_path):
        import json
        import zipfile

        path = tmp_path / "ck.harpz"
        save_checkpoint(path, tiny_model, step=0)
        with zipfile.ZipFile(path) as zf:
            manifest = json.loads(zf.read("manifest.json"))
            archived = {n for n in zf.namelist() if n.startswith("arrays/model/")}
        assert set(manifest["keys"]) == set(tiny_model.state_dict().keys())
        assert archived == {f"arrays/model/{k}.npy" for k in manifest["keys"]}

    def test_missing_key_rejected(self, tiny_model, tmp_path):
        import json
        import zipfile

        src = tmp_path / "ck.harpz"
        dst = tmp_path / "broken.harpz"
        save_checkpoint(src, tiny_model, step=0)
        with zipfile.ZipFile(src) as zin, zipfile.ZipFile(dst, "w") as zout:
            for item in zin.namelist():
                if "q_pos" in item:
                    continue
                zout.writestr(item, zin.read(item))
        with pytest.raises(CheckpointError):
            load_checkpoint(dst)

    def test_unreadable_archive_rejected(self, tmp_path):
        path = tmp_path / "junk.harpz"
        path.write_bytes(b"not a zip at all")
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "absent.harpz")


class TestResume:
    def test_resumed_run_matches_uninterrupted(self, tmp_path):
        records = make_tiny_records(6, seed=2)
        base = dict(batch_size=3, lr=1e-3, lr_decay=1.0, seed=4, log_every=1)

        full_cfg = TrainConfig(steps=6, checkpoint_every=100, **base)
        full = train(records, TINY, full_cfg, out_dir=tmp_path / "full", dtype=torch.float64)
        full_model = load_checkpoint(full.checkpoint_path).model

        half_cfg = TrainConfig(steps=3, checkpoint_every=3, **base)
        half = train(records, TINY, half_cfg, out_dir=tmp_path / "half", dtype=torch.float64)
        resumed = train(
            records, TINY, TrainConfig(steps=6, checkpoint_every=100, **base),
            out_dir=tmp_path / "resumed", resume_from=half.checkpoint_path,
        )
        resumed_model = load_checkpoint(resumed.checkpoint_path).model

        for key, tensor in full_model.state_dict().items():
            assert torch.equal(tensor, resumed_model.state_dict()[key]), key

    def test_resume_restores_optimizer_moments(self, tmp_path):
        records = make_tiny_records(4, seed=3)
        cfg = TrainConfig(batch_size=2, steps=2, checkpoint_every=2, seed=1, lr=1e-3)
        result = train(records, TINY, cfg, out_dir=tmp_path, dtype=torch.float64)
        bundle = load_checkpoint(result.checkpoint_path)
        assert bundle.opt_arrays  # moments present
        model = bundle.model
        opt = torch.optim.Adam(model.parameters(), lr=cfg.lr)
        bundle.restore_optimizer(opt)
        names = dict(model.named_parameters())
        some = next(iter(bundle.opt_arrays))
        assert "exp_avg" in bundle.opt_arrays[some]
        state = opt.state[names[some]]
        assert np.allclose(state["exp_avg"].numpy(), bundle.opt_arrays[some]["exp_avg"])
