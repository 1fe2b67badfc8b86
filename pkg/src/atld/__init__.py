"""Model checking of strategic logics with action updates, with and without
imperfect information."""
from atld.formula import parse_formula, parse_update, render_formula, render_update
from atld.model import (
    Model, apply_epistemic, apply_grant, apply_remove, apply_update, dump_model,
    load_model, tag_states, upd_set, validate,
)
from atld.mc_perfect import check, pre

__version__ = "0.1.0"

__all__ = [
    "Model", "parse_formula", "parse_update", "render_formula", "render_update",
    "apply_epistemic", "apply_grant", "apply_remove", "apply_update", "dump_model",
    "load_model", "tag_states", "upd_set", "validate", "check", "pre",
]
