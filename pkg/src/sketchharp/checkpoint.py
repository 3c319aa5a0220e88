"""Checkpoint archives: a zip of named numeric arrays plus a JSON manifest.

Layout:
    manifest.json                      format version, configs, step, rng state
    arrays/model/<state_dict_key>.npy  every model tensor (weights and buffers)
    arrays/opt/<param>/<field>.npy     optimizer moments per parameter
    arrays/rng/torch.npy               torch global RNG state bytes
"""

from __future__ import annotations

import io
import json
import zipfile
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import torch

from .config import ModelConfig, TrainConfig
from .errors import CheckpointError
from .model import HarpModel

FORMAT_VERSION = 1

_DTYPES = {"float32": torch.float32, "float64": torch.float64}


def _write_array(zf: zipfile.ZipFile, name: str, arr: np.ndarray) -> None:
    buf = io.BytesIO()
    np.save(buf, arr)
    zf.writestr(name, buf.getvalue())


def _read_array(zf: zipfile.ZipFile, name: str) -> np.ndarray:
    with zf.open(name) as fh:
        return np.load(io.BytesIO(fh.read()))


def _jsonable_rng_state(state: dict) -> dict:
    out = {}
    for key, value in state.items():
        if isinstance(value, dict):
            out[key] = _jsonable_rng_state(value)
        elif isinstance(value, np.integer):
            out[key] = int(value)
        else:
            out[key] = value
    return out


def save_checkpoint(
    path,
    model: HarpModel,
    optimizer: Optional[torch.optim.Optimizer] = None,
    *,
    step: int = 0,
    model_cfg: Optional[ModelConfig] = None,
    train_cfg: Optional[TrainConfig] = None,
    sampler_state: Optional[dict] = None,
    torch_rng: Optional[torch.Tensor] = None,
) -> None:
    model_cfg = model_cfg or model.cfg
    state = model.state_dict()
    keys = sorted(state.keys())
    manifest = {
        "format_version": FORMAT_VERSION,
        "step": step,
        "dtype": str(model.dtype).removeprefix("torch."),
        "model_config": model_cfg.to_dict(),
        "train_config": train_cfg.to_dict() if train_cfg else None,
        "keys": keys,
        "sampler_state": _jsonable_rng_state(sampler_state) if sampler_state else None,
        "has_optimizer": optimizer is not None,
    }
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_DEFLATED) as zf:
        for key in keys:
            _write_array(zf, f"arrays/model/{key}.npy", state[key].detach().cpu().numpy())
        if optimizer is not None:
            named = dict(model.named_parameters())
            by_id = {id(p): name for name, p in named.items()}
            for group in optimizer.param_groups:
                for param in group["params"]:
                    pstate = optimizer.state.get(param)
                    if not pstate:
                        continue
                    name = by_id[id(param)]
                    for field, value in pstate.items():
                        arr = value.detach().cpu().numpy() if isinstance(value, torch.Tensor) else np.asarray(value)
                        _write_array(zf, f"arrays/opt/{name}/{field}.npy", arr)
        if torch_rng is not None:
            _write_array(zf, "arrays/rng/torch.npy", torch_rng.numpy())
        zf.writestr("manifest.json", json.dumps(manifest, indent=1))


@dataclass
class LoadedCheckpoint:
    model: HarpModel
    model_cfg: ModelConfig
    train_cfg: Optional[TrainConfig]
    step: int
    sampler_state: Optional[dict]
    torch_rng: Optional[torch.Tensor]
    opt_arrays: dict

    def restore_optimizer(self, optimizer: torch.optim.Optimizer) -> None:
        """Put saved moments back into a freshly constructed optimizer."""
        named = dict(self.model.named_parameters())
        for name, fields in self.opt_arrays.items():
            param = named.get(name)
            if param is None:
                raise CheckpointError(f"optimizer state for unknown parameter {name}")
            optimizer.state[param] = {
                field: torch.as_tensor(arr) for field, arr in fields.items()
            }


def load_checkpoint(path) -> LoadedCheckpoint:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"no checkpoint at {path}")
    try:
        zf = zipfile.ZipFile(path)
    except zipfile.BadZipFile as exc:
        raise CheckpointError(f"unreadable archive: {exc}") from exc
    with zf:
        names = set(zf.namelist())
        if "manifest.json" not in names:
            raise CheckpointError("archive has no manifest.json")
        manifest = json.loads(zf.read("manifest.json"))
        if manifest.get("format_version") != FORMAT_VERSION:
            raise CheckpointError(f"unsupported format version {manifest.get('format_version')}")
        model_cfg = ModelConfig.from_dict(manifest["model_config"])
        dtype = _DTYPES.get(manifest.get("dtype", "float32"), torch.float32)
        model = HarpModel(model_cfg, dtype=dtype)

        state = {}
        for key in manifest["keys"]:
            entry = f"arrays/model/{key}.npy"
            if entry not in names:
                raise CheckpointError(f"manifest key {key} missing from archive")
            state[key] = torch.as_tensor(_read_array(zf, entry))
        missing = set(model.state_dict().keys()) - set(state.keys())
        if missing:
            raise CheckpointError(f"checkpoint lacks model keys: {sorted(missing)[:4]}")
        model.load_state_dict(state)

        opt_arrays: dict[str, dict[str, np.ndarray]] = {}
        for entry in names:
            if entry.startswith("arrays/opt/") and entry.endswith(".npy"):
                rel = entry[len("arrays/opt/") : -len(".npy")]
                pname, field = rel.rsplit("/", 1)
                opt_arrays.setdefault(pname, {})[field] = _read_array(zf, entry)

        torch_rng = None
        if "arrays/rng/torch.npy" in names:
            torch_rng = torch.as_tensor(_read_array(zf, "arrays/rng/torch.npy"))

    train_cfg = TrainConfig.from_dict(manifest["train_config"]) if manifest.get("train_config") else None
    return LoadedCheckpoint(
        model=model, model_cfg=model_cfg, train_cfg=train_cfg, step=manifest["step"],
        sampler_state=manifest.get("sampler_state"), torch_rng=torch_rng, opt_arrays=opt_arrays,
    )
