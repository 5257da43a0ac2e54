"""
Result tables for the command line: rankings, two-measure comparisons,
attenuation sweeps, and deterministic CSV/JSON emission.
"""

import logging
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.stats import kendalltau

from config import FLOAT_FORMAT, SIGNIFICANT_DIGITS
from errors import ValidationError

logger = logging.getLogger(__name__)

OUTPUT_FORMATS = ("csv", "json")


def _ordered(labels: Sequence[str], scores) -> pd.DataFrame:
    # descending score, ties broken by label
    frame = pd.DataFrame({"node": list(labels), "score": np.asarray(scores, dtype=float)})
    frame = frame.sort_values(["score", "node"], ascending=[False, True], kind="mergesort")
    frame["rank"] = np.arange(1, len(frame) + 1)
    return frame.reset_index(drop=True)


def rank_table(labels: Sequence[str], scores, measure: str, top: Optional[int] = None) -> pd.DataFrame:
    frame = _ordered(labels, scores)
    frame.insert(1, "measure", measure)
    return frame.head(top) if top else frame


def compare_table(labels: Sequence[str], first: Tuple[str, np.ndarray], second: Tuple[str, np.ndarray],
                  top: Optional[int] = None) -> Tuple[pd.DataFrame, float]:
    """
    Side-by-side scores and ranks of two measures, restricted to the union of
    both top-k sets when top is given. Kendall tau is computed over all nodes.
    """
    (name_a, scores_a), (name_b, scores_b) = first, second
    a = _ordered(labels, scores_a).set_index("node")
    b = _ordered(labels, scores_b).set_index("node")
    frame = pd.DataFrame({
        f"score_{name_a}": a["score"],
        f"rank_{name_a}": a["rank"],
        f"score_{name_b}": b["score"],
        f"rank_{name_b}": b["rank"],
    })
    frame.index.name = "node"
    k = top or len(frame)
    frame[f"top_{name_a}"] = frame[f"rank_{name_a}"] <= k
    frame[f"top_{name_b}"] = frame[f"rank_{name_b}"] <= k
    if top:
        frame = frame[frame[f"top_{name_a}"] | frame[f"top_{name_b}"]]
    frame = frame.reset_index().sort_values([f"rank_{name_a}", "node"], kind="mergesort")

    tau = np.nan
    if len(labels) >= 2:
        tau = float(kendalltau(np.asarray(scores_a, dtype=float), np.asarray(scores_b, dtype=float)).statistic)
    logger.debug("compare %s vs %s: kendall tau %.6g", name_a, name_b, tau)
    return frame.reset_index(drop=True), tau


def sweep_table(labels: Sequence[str], grid: Sequence[Tuple[float, float]],
                score_fn: Callable[[float], np.ndarray], prominent: Optional[int] = None) -> pd.DataFrame:
    """
    Long-form (t, fraction, node, score, normalized) rows for (fraction, t)
    grid points. Scores are divided by their maximum at each t; prominent
    keeps the nodes with the largest scores at the largest t.
    """
    parts = []
    for fraction, t in sorted(grid, key=lambda p: p[1]):
        scores = np.asarray(score_fn(t), dtype=float)
        top = scores.max() if scores.size else 0.0
        parts.append(pd.DataFrame({
            "t": t,
            "fraction": fraction,
            "node": list(labels),
            "score": scores,
            "normalized": scores / top if top > 0 else scores,
        }))
    columns = ["t", "fraction", "node", "score", "normalized"]
    if not parts:
        return pd.DataFrame(columns=columns)
    frame = pd.concat(parts, ignore_index=True)

    if prominent:
        last = frame[frame["t"] == frame["t"].max()]
        keep = _ordered(last["node"], last["score"]).head(prominent)["node"]
        frame = frame[frame["node"].isin(set(keep))]
    return frame.sort_values(["t", "node"], kind="mergesort").reset_index(drop=True)[columns]


def _round_significant(value):
    if np.isfinite(value):
        return float(FLOAT_FORMAT % value)
    return value


def write_table(frame: pd.DataFrame, fmt: str, stream) -> None:
    """CSV with 12 significant digits, or JSON records rounded the same way."""
    if fmt == "csv":
        frame.to_csv(stream, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        return
    if fmt != "json":
        raise ValidationError(f"unknown output format {fmt!r} (use one of {OUTPUT_FORMATS})")
    rounded = frame.copy()
    for column in rounded.select_dtypes(include="float").columns:
        rounded[column] = rounded[column].map(_round_significant)
    stream.write(rounded.to_json(orient="records", double_precision=15) + "\n")
    logger.debug("wrote %d rows as json (%d significant digits)", len(frame), SIGNIFICANT_DIGITS)
