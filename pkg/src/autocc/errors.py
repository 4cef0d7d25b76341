"""Shared exception hierarchy. Concrete errors live with the code that raises them."""


class AutoccError(Exception):
    """Base class for all package errors; carries a stable machine-readable code."""

    code = "error"

    def to_json(self) -> dict:
        return {"error": self.code, "message": str(self)}
