"""Common interfaces and base classes for pydisco."""

import dataclasses
from dataclasses import dataclass, fields
from typing import Any, Dict, List, Mapping, Type, TypeVar

from .errors import ConfigError

C = TypeVar('C', bound='BaseConfig')


@dataclass
class BaseConfig:
    """Base data container for typed configuration blocks.

    Subclasses declare their keys as dataclass fields and override
    ``validate`` to check invariants.
    """

    def validate(self) -> None:
        """Check invariants; raise ConfigError or ParameterError."""

    @classmethod
    def keys(cls) -> List[str]:
        """Get the names of all configuration keys."""
        return [f.name for f in fields(cls)]

    @classmethod
    def from_mapping(cls: Type[C], mapping: Mapping[str, Any], strict: bool = True) -> C:
        """Build a validated config from a flat mapping.

        With ``strict`` set, keys that are not fields of the config are rejected.
        """
        known = set(cls.keys())
        if strict:
            for key in mapping:
                if key not in known:
                    raise ConfigError(f"Unknown configuration key '{key}' for {cls.__name__}", key=key)
        config = cls(**{k: v for k, v in mapping.items() if k in known})
        config.validate()
        return config

    def replace(self: C, **changes: Any) -> C:
        """Copy with some values changed, re-validated."""
        config = dataclasses.replace(self, **changes)
        config.validate()
        return config

    def to_dict(self) -> Dict[str, Any]:
        """Get the config as a plain dictionary."""
        return dataclasses.asdict(self)
