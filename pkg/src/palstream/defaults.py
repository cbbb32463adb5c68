"""Loaders for the datasets bundled under ``palstream/data``.

``history.csv`` holds the compression measurements the palette-size model was
trained on, ``reference_model.csv`` the fitted coefficients, and
``estimation_table.csv`` the size-estimation table derived from the history.
"""

from __future__ import annotations

from importlib import resources

from . import qos, regression

__all__ = ["default_history", "reference_model", "default_table", "read_data_file"]


def read_data_file(name: str) -> str:
    return (resources.files(__package__) / "data" / name).read_text(encoding="ascii")


def default_history() -> list[regression.CompressionRecord]:
    return regression.load_history_csv(read_data_file("history.csv"))


def reference_model() -> regression.LinearModel:
    return regression.model_from_csv(read_data_file("reference_model.csv"))


def default_table() -> qos.EstimationTable:
    return qos.load_table_csv(read_data_file("estimation_table.csv"))
