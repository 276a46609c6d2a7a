"""Figure specification and CSV input handling."""

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

KINDS = ("violin", "heatmap", "variance_curves", "score_scatter", "score_density")
FORMATS = ("png", "svg")


class SchemaError(ValueError):
    """An input file does not match the expected column schema."""


@dataclass(frozen=True)
class FigureSpec:
    """What to draw, from which CSVs, to which file.

    ``inputs`` meaning by kind:
      violin            benchmark results CSV
      heatmap           mean-surface CSV
      variance_curves   variance-explained CSV
      score_scatter     scores CSV, subjects CSV
      score_density     scores CSV, subjects CSV
    ``options`` carries kind-specific filters (metric, variable, component,
    group_by, ...).
    """

    kind: str
    inputs: tuple
    output: str
    image_format: str = "svg"
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")
        if self.image_format not in FORMATS:
            raise SchemaError(f"unknown image format {self.image_format!r}")
        if not self.inputs:
            raise SchemaError("spec needs at least one input CSV")
        object.__setattr__(self, "inputs", tuple(str(p) for p in self.inputs))


def load_spec(path) -> FigureSpec:
    raw = json.loads(Path(path).read_text())
    return FigureSpec(
        kind=raw.get("kind", ""),
        inputs=tuple(raw.get("inputs", ())),
        output=raw["output"],
        image_format=raw.get("image_format", "svg"),
        options=raw.get("options", {}),
    )


def read_table(path, required_columns) -> list:
    """Rows of a CSV as dicts; missing columns raise with the column name."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in required_columns:
            if col not in header:
                raise SchemaError(f"{path}: missing required column {col!r}")
        return list(reader)
