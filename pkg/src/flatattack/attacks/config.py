"""Attack hyperparameters.

Defaults follow the usual image-attack settings: eps = 16/255, ten outer
iterations, twenty inner samples. Four fields are derived from others when
they are not given explicitly:

    alpha      = eps / steps
    lambda_f   = alpha * beta_f
    xi         = 3 * eps
    gamma_mcas = 0.15 * eps

``derived_fields`` remembers which of them were filled in, so ``updated``
can change eps (or steps, beta_f) and have the dependants follow.
"""

from enum import Enum
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, model_validator

DEFAULT_EPS = 16.0 / 255.0


class FiniteDifferenceScheme(str, Enum):
    """How gradient differences between probe points are formed."""

    FDM = "fdm"  # forward
    BDM = "bdm"  # backward
    CDM = "cdm"  # central


class AttackConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, use_enum_values=False)

    eps: float = Field(default=DEFAULT_EPS, gt=0)
    steps: int = Field(default=10, ge=1)
    alpha: float = Field(default=0.0, gt=0)
    eta: float = Field(default=1.0, ge=0)

    n_samples: int = Field(default=20, ge=1)
    xi: float = Field(default=0.0, ge=0)
    sample_around_clean: bool = False

    mcas_enabled: bool = True
    gamma_mcas: float = Field(default=0.0, ge=0)
    eta_mcas: float = Field(default=0.9, ge=0, le=1)
    mcas_reset_per_iteration: bool = True

    beta_f: float = Field(default=0.5, ge=0, le=1)
    lambda_f: float = Field(default=0.0, ge=0)
    neighbor_ascent: bool = True
    scheme: FiniteDifferenceScheme = FiniteDifferenceScheme.FDM

    seed: int = Field(default=0, ge=0)

    derived_fields: tuple[str, ...] = Field(default=(), exclude=True)

    @model_validator(mode="before")
    @classmethod
    def _derive_defaults(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        data = {k: v for k, v in data.items() if v is not None and k != "derived_fields"}
        eps = float(data.get("eps", DEFAULT_EPS))
        steps = int(data.get("steps", 10))
        beta_f = float(data.get("beta_f", 0.5))
        derived = []
        if "alpha" not in data and steps >= 1:
            data["alpha"] = eps / steps
            derived.append("alpha")
        if "lambda_f" not in data and "alpha" in data:
            data["lambda_f"] = float(data["alpha"]) * beta_f
            derived.append("lambda_f")
        if "xi" not in data:
            data["xi"] = 3.0 * eps
            derived.append("xi")
        if "gamma_mcas" not in data:
            data["gamma_mcas"] = 0.15 * eps
            derived.append("gamma_mcas")
        data["derived_fields"] = tuple(derived)
        return data

    def updated(self, **changes: Any) -> "AttackConfig":
        """Copy with changes applied; derived fields are recomputed unless given."""
        raw = self.model_dump()
        for name in self.derived_fields:
            raw.pop(name, None)
        raw.update(changes)
        return AttackConfig(**raw)

    def effective(self) -> dict[str, Any]:
        """JSON-ready dump of every field, as echoed into manifests."""
        return self.model_dump(mode="json")
