"""Service configuration: file-based (TOML or JSON) with env overrides.

Defaults are fully self-contained, so the service boots with no config
file at all. Recognized environment variables:

* ``PRESENZIA_CONFIG`` - path to a TOML or JSON config file
* ``PRESENZIA_ADDR``   - listen address, ``host:port``
* ``PRESENZIA_STORE``  - sqlite database path
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

from ..gallery import RecognitionConfig
from ..metric import MiningConfig
from ..tracking import TrackingConfig


@dataclass(frozen=True)
class ServiceConfig:
    listen_addr: str = "127.0.0.1:8000"
    store_path: str = "presenzia.db"
    recognition: RecognitionConfig = field(default_factory=RecognitionConfig)
    tracking: TrackingConfig = field(default_factory=TrackingConfig)
    mining: MiningConfig = field(default_factory=MiningConfig)
    detector_backend: str = "reference"
    embedder_backend: str = "reference"
    admin_token: str = "admin-dev-token"
    auditor_token: str = "auditor-dev-token"
    alert_log: str = "alerts.log"
    frames_dir: str | None = None
    ui_dir: str | None = None
    max_frame_bytes: int = 8 * 1024 * 1024

    @property
    def host(self) -> str:
        return self.listen_addr.rsplit(":", 1)[0]

    @property
    def port(self) -> int:
        return int(self.listen_addr.rsplit(":", 1)[1])


def _parse_file(path: Path) -> dict:
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".json":
        return json.loads(text)
    try:
        import tomllib  # Python >= 3.11
    except ModuleNotFoundError:
        import tomli as tomllib
    return tomllib.loads(text)


def config_from_dict(data: dict) -> ServiceConfig:
    recognition = RecognitionConfig(**data.get("recognition", {}))
    tracking = TrackingConfig(**data.get("tracking", {}))
    mining = MiningConfig(**data.get("mining", {}))
    top = {
        k: v
        for k, v in data.items()
        if k not in ("recognition", "tracking", "mining")
    }
    return ServiceConfig(
        recognition=recognition, tracking=tracking, mining=mining, **top
    )


def load_config(path: str | Path | None = None, env: dict | None = None) -> ServiceConfig:
    """Resolve config: explicit path > PRESENZIA_CONFIG file > built-in defaults,
    then PRESENZIA_ADDR / PRESENZIA_STORE overrides on top."""
    env = os.environ if env is None else env
    file_path = path or env.get("PRESENZIA_CONFIG")
    config = config_from_dict(_parse_file(Path(file_path))) if file_path else ServiceConfig()
    if env.get("PRESENZIA_ADDR"):
        config = replace(config, listen_addr=env["PRESENZIA_ADDR"])
    if env.get("PRESENZIA_STORE"):
        config = replace(config, store_path=env["PRESENZIA_STORE"])
    return config
