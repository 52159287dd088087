"""Combine confidence and distribution weights into interpolation coefficients.

The full rule normalizes the per-sample product w_s * w_g by its dataset
maximum. Ablation modes either normalize a single weight family the same way
or pin every sample to a constant.
"""

import csv
from dataclasses import dataclass

import numpy as np

FULL = "full"
ONLY_WC = "only-wc"
ONLY_WD = "only-wd"
ONLY_WG = "only-wg"
CONST_0 = "const-0"
CONST_05 = "const-0.5"
CONST_1 = "const-1"

COMBINE_MODES = (FULL, ONLY_WC, ONLY_WD, ONLY_WG, CONST_0, CONST_05, CONST_1)
_CONSTANTS = {CONST_0: 0.0, CONST_05: 0.5, CONST_1: 1.0}

AUDIT_COLUMNS = ("index", "pseudo_class", "w_c", "w_d", "w_s", "h_hat", "w_g", "w_combined")


@dataclass
class SampleWeightRecord:
    """Everything the weighting pipeline learned about one sample."""

    sample_index: int
    pseudo_class: int
    w_c: float
    w_d: float
    w_s: float
    h_hat: float
    w_g: float
    w_combined: float


def _normalized(values):
    v = np.asarray(values, dtype=np.float64)
    top = v.max()
    if top <= 0.0:
        return np.zeros_like(v)
    return v / top


def combine(w_s, w_g, mode=FULL, w_c=None, w_d=None):
    """Per-sample combined weights under the chosen mode.

    Modes: "full" normalizes w_s * w_g by its maximum; "only-wc" / "only-wd" /
    "only-wg" normalize that single weight family (w_c and w_d must be passed
    for their modes); "const-0" / "const-0.5" / "const-1" ignore the inputs
    and return the constant. An all-zero product yields all-zero weights.
    """
    if mode not in COMBINE_MODES:
        raise ValueError(f"unknown weight mode {mode!r}; valid modes: {COMBINE_MODES}")
    w_s = np.asarray(w_s, dtype=np.float64)
    w_g = np.asarray(w_g, dtype=np.float64)
    if w_s.shape != w_g.shape:
        raise ValueError(f"w_s and w_g are misaligned: {w_s.shape} vs {w_g.shape}")
    if mode in _CONSTANTS:
        return np.full(w_s.shape, _CONSTANTS[mode])
    if mode == FULL:
        return _normalized(w_s * w_g)
    if mode == ONLY_WG:
        return _normalized(w_g)
    chosen = w_c if mode == ONLY_WC else w_d
    if chosen is None:
        raise ValueError(f"mode {mode!r} requires the corresponding weight sequence")
    chosen = np.asarray(chosen, dtype=np.float64)
    if chosen.shape != w_s.shape:
        raise ValueError(f"weight sequence for {mode!r} is misaligned: {chosen.shape}")
    return _normalized(chosen)


def build_records(pseudo_classes, w_c, w_d, w_s, h_hat, w_g, w_combined):
    """Zip aligned per-sample arrays into SampleWeightRecord rows."""
    arrays = [np.asarray(a) for a in (pseudo_classes, w_c, w_d, w_s, h_hat, w_g, w_combined)]
    n = len(arrays[0])
    if any(len(a) != n for a in arrays):
        raise ValueError("weight record arrays are misaligned")
    return [
        SampleWeightRecord(
            sample_index=i,
            pseudo_class=int(arrays[0][i]),
            w_c=float(arrays[1][i]),
            w_d=float(arrays[2][i]),
            w_s=float(arrays[3][i]),
            h_hat=float(arrays[4][i]),
            w_g=float(arrays[5][i]),
            w_combined=float(arrays[6][i]),
        )
        for i in range(n)
    ]


def write_weight_audit(records, path):
    """Write per-sample weight records as comma-separated text with a header."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(AUDIT_COLUMNS)
        for rec in records:
            writer.writerow(
                [
                    rec.sample_index,
                    rec.pseudo_class,
                    f"{rec.w_c:.17g}",
                    f"{rec.w_d:.17g}",
                    f"{rec.w_s:.17g}",
                    f"{rec.h_hat:.17g}",
                    f"{rec.w_g:.17g}",
                    f"{rec.w_combined:.17g}",
                ]
            )


def load_weight_audit(path):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != AUDIT_COLUMNS:
            raise ValueError(f"unexpected audit header {header!r}")
        return [
            SampleWeightRecord(
                sample_index=int(row[0]),
                pseudo_class=int(row[1]),
                w_c=float(row[2]),
                w_d=float(row[3]),
                w_s=float(row[4]),
                h_hat=float(row[5]),
                w_g=float(row[6]),
                w_combined=float(row[7]),
            )
            for row in reader
        ]
