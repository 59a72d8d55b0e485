"""Flood-impact label schemes: normalized claims or inundation, split at percentiles."""
from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass

import numpy as np

from .core import ZoneId
from .errors import DataError, DegenerateError


class ImpactKind(str, enum.Enum):
    CLAIMS = "claims"
    INUNDATION = "inundation"


# percentiles applied to all values (claims) or to the positive values (inundation)
_CUTS = {
    (ImpactKind.CLAIMS, 2): (50.0,),
    (ImpactKind.CLAIMS, 3): (33.0, 66.0),
    (ImpactKind.CLAIMS, 4): (25.0, 50.0, 75.0),
    (ImpactKind.INUNDATION, 2): (),
    (ImpactKind.INUNDATION, 3): (50.0,),
    (ImpactKind.INUNDATION, 4): (33.0, 66.0),
}


@dataclass(frozen=True)
class LabelScheme:
    kind: ImpactKind
    n_classes: int

    def __post_init__(self):
        object.__setattr__(self, "kind", ImpactKind(self.kind))
        if self.n_classes not in (2, 3, 4):
            raise ValueError("n_classes must be 2, 3 or 4")

    @property
    def percentiles(self) -> tuple[float, ...]:
        return _CUTS[(self.kind, self.n_classes)]

    @property
    def zero_class(self) -> bool:
        return self.kind is ImpactKind.INUNDATION

    @property
    def name(self) -> str:
        return f"{self.kind.value}_{self.n_classes}"


def all_schemes(kinds=tuple(ImpactKind), classes=(2, 3, 4)) -> list[LabelScheme]:
    return [LabelScheme(k, n) for k in kinds for n in classes]


def normalize_claims(n_claims: int, population: int) -> float:
    if population <= 0:
        raise DataError(f"population must be > 0, got {population}")
    if n_claims < 0:
        raise DataError(f"n_claims must be >= 0, got {n_claims}")
    return n_claims / population


def claims_measure(claims: dict[ZoneId, int], population: dict[ZoneId, int]) -> dict[ZoneId, float]:
    missing = sorted(set(claims) - set(population))
    if missing:
        raise DataError(f"no population for zones: {', '.join(missing)}")
    return {z: normalize_claims(c, population[z]) for z, c in claims.items()}


def thresholds(values, scheme: LabelScheme) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    pool = v[v > 0] if scheme.zero_class else v
    need = scheme.n_classes - 1 if scheme.zero_class else scheme.n_classes
    if np.unique(pool).size < need:
        raise DegenerateError(
            f"{scheme.name}: need at least {need} distinct "
            f"{'positive ' if scheme.zero_class else ''}values, got {np.unique(pool).size}"
        )
    if not scheme.percentiles:
        return np.empty(0)
    return np.percentile(pool, scheme.percentiles, method="linear")


def classify_by_percentiles(values: dict[ZoneId, float], scheme: LabelScheme) -> dict[ZoneId, int]:
    """Class = number of cuts strictly below the value, so a value sitting on a cut
    takes the lower class. Inundation schemes reserve class 0 for exact zeros."""
    zones = sorted(values)
    v = np.array([values[z] for z in zones], dtype=float)
    cuts = thresholds(v, scheme)
    cls = (v[:, None] > cuts[None, :]).sum(axis=1)
    if scheme.zero_class:
        cls = np.where(v > 0, cls + 1, 0)
    return {z: int(c) for z, c in zip(zones, cls)}


def labels_to_csv(labels: dict[ZoneId, int]) -> str:
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["zone", "class_index"])
    for z in sorted(labels):
        w.writerow([z, labels[z]])
    return buf.getvalue()


def read_labels_csv(text: str) -> dict[ZoneId, int]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != ["zone", "class_index"]:
        raise DataError("labels file must have header zone,class_index")
    return {r[0]: int(r[1]) for r in rows[1:] if r}
