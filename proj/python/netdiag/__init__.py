"""Python access to the netdiag C++ core."""

import json

from ._netdiag import (
    NetdiagError,
    SvmModel,
    catalog_version,
    extract_signature,
    feature_names,
    minmax_scale,
    t_statistic,
    train_svm,
)
from . import _netdiag

__all__ = [
    "NetdiagError",
    "SvmModel",
    "catalog_version",
    "diagnose",
    "extract_signature",
    "feature_names",
    "minmax_scale",
    "simulate",
    "t_statistic",
    "train_svm",
]


def simulate(link=None, client=None, bytes=2 << 20, seed=1):
    """Run one download/upload pair. Returns (down_csv, up_csv, stats)."""
    scenario = {"link": link or {}, "client": client or {}, "bytes": bytes, "seed": seed}
    down, up, down_stats, up_stats = _netdiag.simulate(json.dumps(scenario))
    return down, up, {"download": json.loads(down_stats), "upload": json.loads(up_stats)}


def diagnose(bundle_dir, down, up):
    """Verdict dict for a trace pair on disk."""
    return json.loads(_netdiag.diagnose(str(bundle_dir), str(down), str(up)))
