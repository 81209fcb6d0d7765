"""Chart rendering for nkdelib aggregate CSV files."""

from .render import (
    FACET_KEYS,
    FIGURE_KINDS,
    EmptyInputError,
    FigureSpec,
    SchemaError,
    read_aggregate_rows,
    render,
)

__version__ = "0.1.0"

__all__ = [
    "FACET_KEYS",
    "FIGURE_KINDS",
    "EmptyInputError",
    "FigureSpec",
    "SchemaError",
    "read_aggregate_rows",
    "render",
]
