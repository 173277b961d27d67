from typing import Iterable, Optional


class ConfigError(Exception):
    """Invalid or unknown configuration key or value."""

    def __init__(self, message: str, valid_keys: Optional[Iterable[str]] = None):
        self.valid_keys = sorted(valid_keys) if valid_keys is not None else []
        if self.valid_keys:
            message = f"{message} (valid keys: {', '.join(self.valid_keys)})"
        super().__init__(message)
