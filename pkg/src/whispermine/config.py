"""Layered run configuration: defaults < config file (INI) < environment
< command-line flags; plus provenance records written next to outputs."""

from __future__ import annotations

import configparser
import hashlib
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

ENV_PREFIX = "WHISPERMINE"

DEFAULTS = {
    "framing": {"window_ms": 40.0, "hop_ms": 20.0},
    "corpus": {
        "snrs": "10,5,0",
        "per_combo": 50,
        "seed": 0,
        "train_males": 15,
        "train_females": 12,
        "test_males": 5,
        "test_females": 4,
        "val_fraction": 0.2,
    },
    "model": {
        "kind": "lstm",
        "seed": 0,
        "learning_rate": 1e-3,
        "batch_size": 32,
        "max_epochs": 50,
        "patience": 5,
        "seq_len": 30,
        "seq_stride": 3,
        "svm_lambda": 1e-4,
        "svm_epochs": 5,
    },
    "detector": {
        "min_segment_ms": 200.0,
        "merge_gap_ms": 100.0,
        "exit_scale": 0.8,
        "harvest_margin_s": 0.5,
        "harvest_min_s": 1.0,
        "finetune_lr": 1e-4,
        "finetune_epochs": 10,
    },
    "labeller": {
        "snippet_ms": 500,
        "perplexity": 30.0,
        "tsne_iters": 1000,
        "host": "127.0.0.1",
        "port": 8765,
        "sessions_dir": "labeller-sessions",
    },
}


@dataclass
class RunConfig:
    values: dict = field(default_factory=dict)

    def get(self, section: str, key: str):
        return self.values[section][key]

    def set(self, section: str, key: str, raw) -> None:
        default = DEFAULTS[section][key]
        self.values.setdefault(section, {})
        self.values[section][key] = type(default)(raw) if raw is not None else default

    def snrs(self) -> tuple:
        return tuple(float(v) for v in str(self.get("corpus", "snrs")).split(","))

    def to_ini(self) -> str:
        parser = configparser.ConfigParser()
        for section in sorted(self.values):
            parser[section] = {k: str(v) for k, v in sorted(self.values[section].items())}
        import io

        out = io.StringIO()
        parser.write(out)
        return out.getvalue()

    def sha256(self) -> str:
        return hashlib.sha256(self.to_ini().encode()).hexdigest()


def load_config(path=None, env=None) -> RunConfig:
    """Resolve the layered configuration. `env` defaults to os.environ;
    flags are applied by the CLI afterwards via RunConfig.set."""
    cfg = RunConfig(values={s: dict(kv) for s, kv in DEFAULTS.items()})
    if path is not None:
        parser = configparser.ConfigParser()
        read = parser.read(path)
        if not read:
            from .errors import MissingInputError

            raise MissingInputError(f"config file not found: {path}")
        for section in parser.sections():
            if section not in DEFAULTS:
                raise ValueError(f"unknown config section [{section}]")
            for key, raw in parser[section].items():
                if key not in DEFAULTS[section]:
                    raise ValueError(f"unknown config key {section}.{key}")
                cfg.set(section, key, raw)
    env = os.environ if env is None else env
    for section, kv in DEFAULTS.items():
        for key in kv:
            var = f"{ENV_PREFIX}_{section.upper()}_{key.upper()}"
            if var in env:
                cfg.set(section, key, env[var])
    return cfg


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_provenance(out_path, command: str, cfg: RunConfig, inputs=(),
                     seeds=None, extra=None) -> None:
    """Record everything needed to reproduce a run next to its output."""
    from . import __version__

    record = {
        "command": command,
        "argv": sys.argv,
        "version": __version__,
        "config_sha256": cfg.sha256(),
        "config": cfg.values,
        "seeds": seeds or {},
        "inputs": {str(p): file_digest(p) for p in inputs if Path(p).is_file()},
    }
    path = Path(out_path)
    path.write_text(json.dumps(record, indent=2) + "\n")
