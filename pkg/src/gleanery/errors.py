"""Common error machinery.

Every domain error carries a stable ``code`` used verbatim in the JSON API
error envelope; by default the code is the class name.
"""

from __future__ import annotations


class GleaneryError(Exception):
    """Base class for all domain errors."""

    code: str = "Error"

    def __init_subclass__(cls, **kwargs) -> None:
        super().__init_subclass__(**kwargs)
        if "code" not in cls.__dict__:
            cls.code = cls.__name__


class NotFound(GleaneryError):
    pass


class Forbidden(GleaneryError):
    pass
