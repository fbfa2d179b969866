"""Parser for flat ``section.key = value`` experiment files.

Example::

    # Gaussian pair, dense network
    seed = 7
    output_dir = runs/gaussian
    dataset.kind = gaussian
    dataset.shift = 1.0
    model.kind = dense
    model.hidden_dims = 64, 32, 16, 8
    training.epochs = 50

Values stay strings; the pydantic models coerce them and reject unknown keys.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Optional

from pydantic import ValidationError

from .errors import ConfigurationError
from .models import ExperimentConfig

logger = logging.getLogger(__name__)


def parse_config_text(text: str, source: str = "<string>") -> dict[str, Any]:
    """Turn ``key = value`` lines into a nested dict keyed by dotted sections."""
    tree: dict[str, Any] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{source}:{number}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigurationError(f"{source}:{number}: missing key")
        *sections, leaf = key.split(".")
        node = tree
        for section in sections:
            child = node.setdefault(section, {})
            if not isinstance(child, dict):
                raise ConfigurationError(f"{source}:{number}: {section!r} is both a value and a section")
            node = child
        if leaf in node:
            raise ConfigurationError(f"{source}:{number}: duplicate key {key!r}")
        node[leaf] = value
    return tree


def _describe(error: ValidationError) -> str:
    lines = []
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"]) or "<root>"
        lines.append(f"  {location}: {item['msg']}")
    return "\n".join(lines)


def build_config(tree: dict[str, Any], source: str = "<string>") -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(tree)
    except ValidationError as e:
        raise ConfigurationError(f"{source}: invalid configuration\n{_describe(e)}") from e


def load_config(
    path: Path,
    seed: Optional[int] = None,
    output_dir: Optional[str] = None,
) -> ExperimentConfig:
    """Read and validate a config file; ``seed`` and ``output_dir`` override the file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise ConfigurationError(f"cannot read config {path}: {e}") from e
    tree = parse_config_text(text, str(path))
    if seed is not None:
        tree["seed"] = seed
    if output_dir is not None:
        tree["output_dir"] = output_dir
    config = build_config(tree, str(path))
    logger.debug("Loaded config %s: %s", path, config.model_dump())
    return config


def dump_config(config: ExperimentConfig) -> str:
    """Render a config back to the flat file format."""
    lines = []
    for key, value in config.model_dump().items():
        if isinstance(value, dict):
            for leaf, item in value.items():
                if item is None:
                    continue
                if isinstance(item, bool):
                    item = str(item).lower()
                elif isinstance(item, list):
                    item = ", ".join(str(v) for v in item)
                lines.append(f"{key}.{leaf} = {item}")
        else:
            lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
