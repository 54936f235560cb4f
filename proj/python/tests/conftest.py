"""Test bootstrap: prefer an installed frisam, else use the CMake build tree."""

import importlib.util
import sys
from pathlib import Path

_root = Path(__file__).resolve().parents[2]
sys.path.insert(0, str(_root / "python"))

if "frisam._core" not in sys.modules:
    _candidates = sorted((_root / "build").glob("_core*.so")) + sorted(
        (_root / "python" / "frisam").glob("_core*.so")
    )
    if _candidates:
        _spec = importlib.util.spec_from_file_location(
            "frisam._core", _candidates[0]
        )
        _mod = importlib.util.module_from_spec(_spec)
        _spec.loader.exec_module(_mod)
        sys.modules["frisam._core"] = _mod
