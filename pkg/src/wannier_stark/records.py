"""CSV/JSON writers and run manifests."""
from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

from . import __version__
from ._accel import backend


def fmt(v) -> str:
    """Round-trip decimal text for floats; plain str otherwise."""
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return repr(v)
    return str(v)


def jsonable(obj):
    import numpy as np

    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, np.generic):
        return jsonable(obj.item())
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def write_csv(path: Path, header, rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(float(v)) if _is_real(v) else fmt(v) for v in row])
    return path


def _is_real(v) -> bool:
    import numpy as np

    return isinstance(v, (float, np.floating))


def write_json(path: Path, obj) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out_dir: Path, config: dict, outputs, duration: float, extra=None) -> Path:
    manifest = {
        "config": config,
        "tool": "wannier_stark",
        "version": __version__,
        "backend": backend(),
        "duration_s": duration,
        "outputs": {Path(p).name: sha256(p) for p in outputs},
    }
    if extra:
        manifest.update(extra)
    return write_json(Path(out_dir) / "manifest.json", manifest)
