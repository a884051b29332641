"""Rotosensor — exports CSV (RFC-4180) et JSON (« format »: 1).

CSV : ligne d'en-tête, séparateur décimal '.', 12 chiffres significatifs.
Les nombres sont formatés ici, jamais recalculés.
"""

import csv
import io
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

from roto_fidelity import AngularTable
from roto_search import CriticalAngle, SearchConfig, SweepRecord
from roto_state import AnticoherenceProfile, SpinState, profile

SCHEMA_VERSION = 1


def fmt(x: float) -> str:
    return f"{float(x):.12g}"


# ── Lignes CSV ──────────────────────────────────────────────────────────────

def sweep_rows(records: list[SweepRecord]) -> tuple[list[str], list[list[str]]]:
    floor_j = records[0].profile.j.floor_j if records else 0
    header = ["eta", "best_value"] + [f"A_{t}" for t in range(1, floor_j + 1)] + ["restarts_hitting_best"]
    rows = [
        [fmt(r.eta), fmt(r.best_value)]
        + [fmt(a) for a in r.profile.measures]
        + [str(r.restarts_hitting_best)]
        for r in records
    ]
    return header, rows


def table_rows(table: AngularTable) -> tuple[list[str], list[list[str]]]:
    return (
        ["t", "k", "numerator", "denominator"],
        [[str(v) for v in row] for row in table.rows()],
    )


def curve_rows(etas, curves: dict[str, list[float]]) -> tuple[list[str], list[list[str]]]:
    """Une courbe : eta,value ; plusieurs routes : eta,value,route (format long)."""
    if len(curves) == 1:
        values = next(iter(curves.values()))
        return ["eta", "value"], [[fmt(e), fmt(v)] for e, v in zip(etas, values)]
    rows = [
        [fmt(e), fmt(v), route]
        for route, values in curves.items()
        for e, v in zip(etas, values)
    ]
    return ["eta", "value", "route"], rows


def critical_rows(angles: list[CriticalAngle]) -> tuple[list[str], list[list[str]]]:
    header = ["eta_star", "bracket_lo", "bracket_hi", "residual", "left", "right"]
    rows = [
        [
            fmt(a.eta_star), fmt(a.bracket[0]), fmt(a.bracket[1]), fmt(a.residual),
            " ".join(fmt(x) for x in a.left_profile.measures),
            " ".join(fmt(x) for x in a.right_profile.measures),
        ]
        for a in angles
    ]
    return header, rows


def verify_rows(results: dict[str, list[str]]) -> tuple[list[str], list[list[str]]]:
    """Un contrôle par ligne ; first_failure vide si le contrôle passe."""
    header = ["check", "passed", "n_failures", "first_failure"]
    rows = [
        [name, "1" if not failures else "0", str(len(failures)), failures[0] if failures else ""]
        for name, failures in results.items()
    ]
    return header, rows


def to_csv(header: list[str], rows: list[list[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def write_csv(header: list[str], rows: list[list[str]], path: str | None = None) -> None:
    """Écrit sur stdout si path est None (le log [EXPORT] part sur stderr)."""
    text = to_csv(header, rows)
    if path is None:
        sys.stdout.write(text)
        return
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8", newline="")
    print(f"[EXPORT] {out} — {len(rows)} lignes", file=sys.stderr)


# ── JSON ────────────────────────────────────────────────────────────────────

def _profile_dict(prof: AnticoherenceProfile) -> dict:
    return {"measures": list(prof.measures), "purities": list(prof.purities)}


def build_record(record: SweepRecord) -> dict:
    return {
        "eta":                   record.eta,
        "best_value":            record.best_value,
        "restarts_hitting_best": record.restarts_hitting_best,
        "converged":             record.converged,
        "n_evaluations":         record.n_evaluations,
        "profile":               _profile_dict(record.profile),
        "state":                 record.best_state.to_dict(),
    }


def build_sweep_export(
    j,
    records: list[SweepRecord],
    cfg: SearchConfig,
    mode: str = "min",
    angles: list[CriticalAngle] | None = None,
    unresolved: list[tuple[float, float]] | None = None,
) -> dict:
    spin = records[0].best_state.j if records else None
    payload: dict = {
        "format": SCHEMA_VERSION,
        "meta": {
            "exported_at": datetime.now(timezone.utc).isoformat(),
            "j":           str(spin if spin is not None else j),
            "two_j":       spin.two_j if spin is not None else None,
            "mode":        mode,
            "seed":        cfg.seed,
            "restarts":    cfg.restarts,
            "max_iter":    cfg.max_iter,
            "warm_start":  cfg.warm_start,
            "source":      "roto_search.sweep",
        },
        "records": [build_record(r) for r in records],
    }
    if angles is not None:
        payload["critical_angles"] = [
            {"eta_star": a.eta_star, "bracket": list(a.bracket), "residual": a.residual,
             "left": list(a.left_profile.measures), "right": list(a.right_profile.measures)}
            for a in angles
        ]
    if unresolved is not None:
        payload["unresolved"] = [list(b) for b in unresolved]
    return payload


def build_verify_export(results: dict[str, list[str]], caps: dict) -> dict:
    """Rapport de verify : plafonds utilisés, échecs par contrôle."""
    return {
        "format": SCHEMA_VERSION,
        "meta": {
            "exported_at": datetime.now(timezone.utc).isoformat(),
            "source":      "roto_verify.run_checks",
            **{key: str(value) for key, value in caps.items()},
        },
        "passed": not any(results.values()),
        "checks": [
            {"name": name, "passed": not failures, "failures": failures}
            for name, failures in results.items()
        ],
    }


def read_sweep_export(path: str) -> tuple[dict, list[SweepRecord]]:
    """Relit un export JSON ; profils recalculés à partir des états."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if data.get("format") != SCHEMA_VERSION:
        raise ValueError(f"Format d'export non supporté : {data.get('format')!r}")
    records = []
    for item in data.get("records", []):
        state = SpinState.from_dict(item["state"])
        records.append(SweepRecord(
            eta=item["eta"],
            best_value=item["best_value"],
            best_state=state,
            profile=profile(state),
            restarts_hitting_best=item["restarts_hitting_best"],
            converged=item.get("converged", True),
            n_evaluations=item.get("n_evaluations", 0),
            mode=data["meta"].get("mode", "min"),
        ))
    return data["meta"], records


def write_export(data: dict, path: str, pretty: bool = False) -> None:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    indent = 2 if pretty else None
    out.write_text(json.dumps(data, ensure_ascii=False, indent=indent), encoding="utf-8")
    size_kb = out.stat().st_size / 1024
    print(f"[EXPORT] {out} — {size_kb:.1f} KB, {len(data.get('records', []))} points",
          file=sys.stderr)
