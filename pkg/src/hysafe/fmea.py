"""Risk priority numbers, ranking, and detection-improving mitigations."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .model import (
    RATING_MIN,
    Diagnostic,
    DomainError,
    FmeaEntry,
    HazardProject,
    RiskRating,
    taxonomy_diagnostics,
)


class MitigationConflictError(DomainError):
    """Two selected mitigations adjust the same FMEA entry."""


def compute_rpn(rating: RiskRating) -> int:
    problems = rating.problems()
    if problems:
        raise DomainError("; ".join(problems))
    return rating.severity * rating.occurrence * rating.detection


@dataclass(frozen=True)
class RankedEntry:
    entry: FmeaEntry
    rpn: int
    rank: int


@dataclass(frozen=True)
class RankedFmea:
    entries: tuple[RankedEntry, ...]

    def rpns(self) -> list[int]:
        return [r.rpn for r in self.entries]


def _rank_key(entry: FmeaEntry):
    r = entry.rating
    return (-compute_rpn(r), -r.severity, -r.occurrence, entry.id)


def rank_fmea(project: HazardProject) -> RankedFmea:
    """Order entries by RPN descending.

    Ties go to the higher severity, then the higher occurrence, then the
    lexicographically smaller entry id, so the order never depends on input
    order.
    """
    ordered = sorted(project.fmea, key=_rank_key)
    return RankedFmea(tuple(RankedEntry(e, compute_rpn(e.rating), i) for i, e in enumerate(ordered, 1)))


def check_taxonomy(project: HazardProject) -> list[Diagnostic]:
    return sorted(taxonomy_diagnostics(project), key=Diagnostic.sort_key)


@dataclass(frozen=True)
class DeltaRow:
    entry_id: str
    mitigation_id: str
    d_before: int
    d_after: int
    rpn_before: int
    rpn_after: int

    @property
    def d_delta(self) -> int:
        return self.d_after - self.d_before

    @property
    def rpn_delta(self) -> int:
        return self.rpn_after - self.rpn_before


@dataclass(frozen=True)
class FmeaDeltaReport:
    rows: tuple[DeltaRow, ...]


def apply_fmea_mitigations(project: HazardProject, mitigation_ids) -> tuple[FmeaDeltaReport, HazardProject]:
    """Lower detection ratings per the selected mitigations.

    Returns the delta report (rows in pre-mitigation rank order, untargeted
    entries omitted) and a new project carrying the post-mitigation ratings.
    The input project is left untouched.
    """
    chosen = []
    for mid in sorted(set(mitigation_ids)):
        m = project.mitigation(mid)
        if m is None:
            raise DomainError(f"unknown mitigation '{mid}'")
        chosen.append(m)

    by_entry: dict[str, tuple[str, int]] = {}
    for m in chosen:
        for tgt in m.fmea_targets:
            if tgt.entry in by_entry:
                other = by_entry[tgt.entry][0]
                raise MitigationConflictError(
                    f"mitigations '{other}' and '{m.id}' both target fmea entry '{tgt.entry}'")
            if project.entry(tgt.entry) is None:
                raise DomainError(f"mitigation '{m.id}' targets unknown fmea entry '{tgt.entry}'")
            if tgt.detection_delta >= 0:
                raise DomainError(f"mitigation '{m.id}': detection delta must be negative, got {tgt.detection_delta}")
            by_entry[tgt.entry] = (m.id, tgt.detection_delta)

    rows = []
    new_entries = []
    ranked = {r.entry.id: r.rank for r in rank_fmea(project).entries}
    for e in project.fmea:
        if e.id not in by_entry:
            new_entries.append(e)
            continue
        mid, delta = by_entry[e.id]
        d_after = e.rating.detection + delta
        if d_after < RATING_MIN:
            raise DomainError(
                f"fmea entry '{e.id}': detection {e.rating.detection}{delta:+d} falls below {RATING_MIN}")
        new_rating = dataclasses.replace(e.rating, detection=d_after)
        rows.append(DeltaRow(e.id, mid, e.rating.detection, d_after, compute_rpn(e.rating), compute_rpn(new_rating)))
        new_entries.append(dataclasses.replace(e, rating=new_rating))

    rows.sort(key=lambda r: ranked[r.entry_id])
    return FmeaDeltaReport(tuple(rows)), dataclasses.replace(project, fmea=tuple(new_entries))
