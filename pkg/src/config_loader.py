"""
Loading and cross-field validation of run configurations.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

from pydantic import ValidationError

from .errors import ConfigError
from .models import RunConfig
from .source import psi_issues

logger = logging.getLogger(__name__)

CONFORMITY_RTOL = 1e-9
RESOLVED_CONFIG_NAME = "resolved_config.json"


def _divides(length: float, step: float) -> bool:
    n = round(length / step)
    return n >= 1 and abs(n * step - length) <= CONFORMITY_RTOL * length


def cross_field_issues(config: RunConfig) -> List[Tuple[str, str]]:
    """Consistency rules that span several fields."""
    issues: List[Tuple[str, str]] = []

    if not _divides(config.L, config.epsilon):
        issues.append(("epsilon", f"epsilon={config.epsilon} does not divide L={config.L}"))
    for i, eps in enumerate(config.epsilons):
        if not 0 < eps < 1 or not _divides(config.L, eps):
            issues.append((f"epsilons[{i}]", f"epsilon={eps} must lie in (0, 1) and divide L={config.L}"))
    if not _divides(config.L, config.h_macro):
        issues.append(("h_macro", f"h_macro={config.h_macro} does not divide L={config.L}"))
    if not _divides(config.T, config.dt):
        issues.append(("dt", f"dt={config.dt} does not divide T={config.T}"))

    if round(config.zerod.T / config.zerod.dt) < 1:
        issues.append(("zerod.dt", f"dt={config.zerod.dt} is longer than T={config.zerod.T}"))

    kernel = config.kernel
    if kernel.diffusion == "list":
        # zerod builds its own kernels at zerod.n_max
        needed = max(config.n_max, config.zerod.n_max)
        if not kernel.d_list or len(kernel.d_list) < needed:
            issues.append((
                "kernel.d_list",
                f"needs at least {needed} values (n_max={config.n_max}, zerod.n_max={config.zerod.n_max})",
            ))
        elif any(v <= 0 for v in kernel.d_list):
            issues.append(("kernel.d_list", "diffusion constants must be positive"))

    for name in ("p", "q"):
        factor = getattr(config.psi, name)
        if factor.axis >= config.dim:
            issues.append((f"psi.{name}.axis", f"axis {factor.axis} out of range for dim={config.dim}"))
    issues.extend(psi_issues(config.psi))
    return issues


def validate_config_data(data: Dict[str, Any]) -> RunConfig:
    """
    Validate a parsed config mapping.

    Raises:
        ConfigError: With every offending key
    """
    try:
        config = RunConfig.model_validate(data)
    except ValidationError as e:
        issues = [(".".join(str(part) for part in err["loc"]) or "config", err["msg"]) for err in e.errors()]
        raise ConfigError(issues) from e

    issues = cross_field_issues(config)
    if issues:
        raise ConfigError(issues)
    return config


def load_config(path: Union[str, Path]) -> RunConfig:
    """Read and validate a JSON run configuration."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError([("config", f"file not found: {path}")])
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError([("config", f"invalid JSON: {e}")]) from e
    if not isinstance(data, dict):
        raise ConfigError([("config", "top level must be a JSON object")])

    config = validate_config_data(data)
    logger.debug("Loaded config %s", path)
    return config


def write_resolved_config(config: RunConfig, out_dir: Union[str, Path]) -> Path:
    """Echo the config with every default materialized."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / RESOLVED_CONFIG_NAME
    path.write_text(config.model_dump_json(indent=2) + "\n")
    return path
